#ifndef IMMFIT_EXPERIMENTS_HPP
#define IMMFIT_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "immfit/metrics.hpp"
#include "immfit/optimizer.hpp"
#include "immfit/simulator.hpp"

namespace immfit {

// One ablation configuration: dataset shape, which parameter groups train,
// and the training hyperparameters. Parameters outside the trained groups
// are initialized with the dataset's true values.
struct AblationSpec {
    int n_datasets = 20;
    int modes = 2;
    bool train_motion = true;
    bool train_meas = true;
    std::uint64_t base_seed = 1;
    int n_trajectories = 60;
    int trajectory_length = 120;
    TrainConfig train_config;
    int jobs = 1;

    void validate() const {
        if (n_datasets < 1) throw ConfigError("n_datasets must be >= 1");
        if (modes != 1 && modes != 2) throw ConfigError("ablation modes must be 1 or 2");
        if (!train_motion && !train_meas) {
            throw ConfigError("at least one parameter group must be trained");
        }
        train_config.validate();
    }

    std::string config_label() const;
};

struct Aggregate {
    double median = 0.0;
    double mean = 0.0;
};

struct MetricAggregate {
    std::string metric;
    Aggregate vs_untrained;
    Aggregate vs_true;
    std::vector<double> vs_untrained_samples;  // per completed dataset
    std::vector<double> vs_true_samples;
};

struct AblationRow {
    AblationSpec spec;
    int completed = 0;
    std::vector<std::string> failures;  // one message per failed dataset
    std::vector<MetricAggregate> metrics;

    bool partial() const { return !failures.empty(); }
};

AblationRow run_ablation(const AblationSpec& spec);

// Trains an IMM and a single-mode KF on identical two-mode datasets and
// reports the IMM's relative state-RMSE change against the KF. When motion
// is frozen the IMM keeps the true two-mode motion model while the KF keeps
// the non-maneuvering mode's process noise.
struct ImmVsKfMetric {
    std::string metric;
    Aggregate imm_vs_kf;
    std::vector<double> samples;
};

struct ImmVsKfRow {
    AblationSpec spec;
    int completed = 0;
    std::vector<std::string> failures;
    std::vector<ImmVsKfMetric> metrics;
};

ImmVsKfRow run_imm_vs_kf(const AblationSpec& spec);

// Loss projection: every grid point evaluates the dataset NLL and posterior
// RMSE with a single parameter replaced and all others at their true values.
struct SweepPoint {
    double param_value = 0.0;
    double nll = 0.0;
    double posterior_rmse = 0.0;
};

std::vector<SweepPoint> loss_sweep(const Dataset& ds, const std::string& param_name,
                                   const std::vector<double>& grid);

std::vector<std::string> sweep_param_names(int modes);

// CSV / report emission.
std::string ablation_row_to_csv(const AblationRow& row);
std::string imm_vs_kf_row_to_csv(const ImmVsKfRow& row);
std::string ablation_row_to_text(const AblationRow& row);
std::string imm_vs_kf_row_to_text(const ImmVsKfRow& row);
std::string sweep_to_csv(const std::vector<SweepPoint>& curve);
std::string sweep_plot_script(const std::string& csv_path, const std::string& param_name);

double median_of(std::vector<double> values);
double mean_of(const std::vector<double>& values);

}  // namespace immfit

#endif  // IMMFIT_EXPERIMENTS_HPP

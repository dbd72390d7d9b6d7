#ifndef IMMFIT_OPTIMIZER_HPP
#define IMMFIT_OPTIMIZER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "immfit/params.hpp"
#include "immfit/simulator.hpp"

namespace immfit {

struct TrainConfig {
    int epochs = 1000;
    double learning_rate = 2.0e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1.0e-8;
    std::uint64_t seed = 0;
    bool record_param_history = false;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in [0,1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in [0,1)");
        if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    }
};

struct TrainReport {
    ParamVector final_params;
    ParamVector initial_params;
    std::vector<double> loss_history;       // one entry per epoch, L(theta_k)
    std::vector<ParamVector> param_history; // filled when requested
    double wall_time_seconds = 0.0;
};

// First/second moment estimates plus the running maximum of the second
// moment (the non-decreasing denominator).
struct AmsgradState {
    std::vector<double> m;
    std::vector<double> v;
    std::vector<double> v_hat;

    explicit AmsgradState(std::size_t dim) : m(dim, 0.0), v(dim, 0.0), v_hat(dim, 0.0) {}
};

// One update on the unconstrained coordinates. Coordinates whose `trainable`
// flag is false are left untouched bit-for-bit.
void amsgrad_step(std::vector<double>& u, const std::vector<double>& grad,
                  AmsgradState& state, const TrainConfig& cfg,
                  const std::vector<bool>& trainable);

// Full-batch gradient descent on the dataset NLL in unconstrained space.
// Frozen parameter groups are lifted as constants so they receive zero
// gradient and zero update.
TrainReport train(const std::vector<const Trajectory*>& train_split,
                  const ModelConfig& cfg, const ParamVector& theta0,
                  const FreezeMask& freeze, const TrainConfig& train_cfg);

std::string train_report_to_json_string(const TrainReport& report, const ModelConfig& cfg,
                                        const FreezeMask& freeze,
                                        const TrainConfig& train_cfg);
void save_train_report(const std::string& path, const TrainReport& report,
                       const ModelConfig& cfg, const FreezeMask& freeze,
                       const TrainConfig& train_cfg);
void save_loss_history_csv(const std::string& path, const std::vector<double>& loss_history);

}  // namespace immfit

#endif  // IMMFIT_OPTIMIZER_HPP

#ifndef IMMFIT_METRICS_HPP
#define IMMFIT_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "immfit/params.hpp"
#include "immfit/simulator.hpp"

namespace immfit {

// Position RMSE is aggregated as sqrt(mean over steps and axes of squared
// error); velocity components are excluded. Mode MAE compares the
// maneuver-mode weight (mode index 1) against the true mode indicator and is
// reported only for multi-mode filters.
struct EvalResult {
    double state_pred_rmse = 0.0;
    double state_post_rmse = 0.0;
    std::optional<double> mode_pred_mae;
    std::optional<double> mode_post_mae;
    long n_steps = 0;

    std::string to_csv() const;
};

struct RelativeChange {
    double state_pred_rmse_pct = 0.0;
    double state_post_rmse_pct = 0.0;
    std::optional<double> mode_pred_mae_pct;
    std::optional<double> mode_post_mae_pct;
};

// Runs the plain (non-differentiating) filter over every trajectory and
// scores against ground truth. Loss-free steps t >= 2 only, matching the
// likelihood accumulation window.
EvalResult evaluate(const ParamVector& theta, const ModelConfig& cfg,
                    const std::vector<const Trajectory*>& trajectories);

EvalResult evaluate(const ParamVector& theta, const ModelConfig& cfg,
                    const std::vector<Trajectory>& trajectories);

// 100 * (a - b) / b per metric.
RelativeChange relative_change(const EvalResult& a, const EvalResult& b);

}  // namespace immfit

#endif  // IMMFIT_METRICS_HPP

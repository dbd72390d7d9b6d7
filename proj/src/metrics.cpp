#include "immfit/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "immfit/filters.hpp"
#include "immfit/loss.hpp"

namespace immfit {

namespace {

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string EvalResult::to_csv() const {
    std::string out = "metric,value\n";
    out += "state_pred_rmse," + csv_number(state_pred_rmse) + "\n";
    out += "state_post_rmse," + csv_number(state_post_rmse) + "\n";
    if (mode_pred_mae) out += "mode_pred_mae," + csv_number(*mode_pred_mae) + "\n";
    if (mode_post_mae) out += "mode_post_mae," + csv_number(*mode_post_mae) + "\n";
    out += "n_steps," + std::to_string(n_steps) + "\n";
    return out;
}

EvalResult evaluate(const ParamVector& theta, const ModelConfig& cfg,
                    const std::vector<const Trajectory*>& trajectories) {
    if (trajectories.empty()) throw DataError("evaluation split is empty");
    const FilterModel<double> model = build_filter_model(to_filter_params(theta), cfg);
    const bool multi_mode = cfg.m >= 2;

    double pred_sq_sum = 0.0;
    double post_sq_sum = 0.0;
    double pred_mae_sum = 0.0;
    double post_mae_sum = 0.0;
    long steps = 0;

    for (std::size_t ti = 0; ti < trajectories.size(); ++ti) {
        const Trajectory& traj = *trajectories[ti];
        if (traj.states.size() != traj.measurements.size() ||
            traj.modes.size() != traj.measurements.size()) {
            throw DataError("trajectory is missing ground truth");
        }
        try {
            filter_pass<double>(
                std::span<const std::array<double, 2>>(traj.measurements.data(),
                                                       traj.measurements.size()),
                model, [&](int t, const StepRecord<double>& rec) {
                    const auto& truth = traj.states[static_cast<std::size_t>(t)];

                    // Condensed means: weighted predicted state and the
                    // moment-matched posterior.
                    Vec<double, 4> pred_mean =
                        rec.predicted.modes[0].mean.scaled(rec.predicted.weights[0]);
                    for (int j = 1; j < rec.predicted.mode_count(); ++j) {
                        pred_mean +=
                            rec.predicted.modes[j].mean.scaled(rec.predicted.weights[j]);
                    }
                    const GaussianState<double> post = imm_combine(rec.posterior);

                    const double epx = pred_mean(0, 0) - truth[0];
                    const double epy = pred_mean(2, 0) - truth[2];
                    pred_sq_sum += epx * epx + epy * epy;
                    const double opx = post.mean(0, 0) - truth[0];
                    const double opy = post.mean(2, 0) - truth[2];
                    post_sq_sum += opx * opx + opy * opy;

                    if (multi_mode) {
                        const double indicator =
                            traj.modes[static_cast<std::size_t>(t)] == 1 ? 1.0 : 0.0;
                        pred_mae_sum += std::fabs(rec.predicted.weights[1] - indicator);
                        post_mae_sum += std::fabs(rec.posterior.weights[1] - indicator);
                    }
                    ++steps;
                });
        } catch (const FilterDivergenceError& e) {
            throw FilterDivergenceError(std::string(e.what()) + " in trajectory " +
                                            std::to_string(ti),
                                        e.step(), static_cast<int>(ti));
        }
    }

    EvalResult r;
    r.n_steps = steps;
    r.state_pred_rmse = std::sqrt(pred_sq_sum / (2.0 * static_cast<double>(steps)));
    r.state_post_rmse = std::sqrt(post_sq_sum / (2.0 * static_cast<double>(steps)));
    if (multi_mode) {
        r.mode_pred_mae = pred_mae_sum / static_cast<double>(steps);
        r.mode_post_mae = post_mae_sum / static_cast<double>(steps);
    }
    return r;
}

EvalResult evaluate(const ParamVector& theta, const ModelConfig& cfg,
                    const std::vector<Trajectory>& trajectories) {
    std::vector<const Trajectory*> view;
    view.reserve(trajectories.size());
    for (const Trajectory& t : trajectories) view.push_back(&t);
    return evaluate(theta, cfg, view);
}

namespace {

double pct_change(double a, double b) {
    if (b == 0.0) {
        throw UndefinedBaselineError("relative change against a zero baseline");
    }
    return 100.0 * (a - b) / b;
}

}  // namespace

RelativeChange relative_change(const EvalResult& a, const EvalResult& b) {
    if (a.mode_pred_mae.has_value() != b.mode_pred_mae.has_value()) {
        throw ShapeError("metric sets differ between results");
    }
    RelativeChange rc;
    rc.state_pred_rmse_pct = pct_change(a.state_pred_rmse, b.state_pred_rmse);
    rc.state_post_rmse_pct = pct_change(a.state_post_rmse, b.state_post_rmse);
    if (a.mode_pred_mae) {
        rc.mode_pred_mae_pct = pct_change(*a.mode_pred_mae, *b.mode_pred_mae);
        rc.mode_post_mae_pct = pct_change(*a.mode_post_mae, *b.mode_post_mae);
    }
    return rc;
}

}  // namespace immfit

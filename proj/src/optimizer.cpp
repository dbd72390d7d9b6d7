#include "immfit/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "immfit/loss.hpp"
#include "immfit/models.hpp"

namespace immfit {

using nlohmann::json;

void amsgrad_step(std::vector<double>& u, const std::vector<double>& grad,
                  AmsgradState& state, const TrainConfig& cfg,
                  const std::vector<bool>& trainable) {
    if (u.size() != grad.size() || u.size() != state.m.size() ||
        u.size() != trainable.size()) {
        throw ShapeError("amsgrad_step: vector sizes disagree");
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!trainable[i]) continue;
        const double g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        state.v_hat[i] = std::max(state.v_hat[i], state.v[i]);
        u[i] -= cfg.learning_rate * state.m[i] / (std::sqrt(state.v_hat[i]) + cfg.epsilon);
    }
}

namespace {

template <int D>
TrainReport train_impl(const std::vector<const Trajectory*>& train_split,
                       const ModelConfig& cfg, const ParamVector& theta0,
                       const FreezeMask& freeze, const TrainConfig& train_cfg) {
    const ParamLayout layout(theta0.modes());
    const std::vector<bool> trainable = freeze.trainable_slots(layout);

    std::vector<const MeasurementSeq*> seqs;
    seqs.reserve(train_split.size());
    for (const Trajectory* t : train_split) seqs.push_back(&t->measurements);

    std::vector<double> u = layout.flatten(to_unconstrained(theta0));
    AmsgradState state(u.size());

    TrainReport report;
    report.initial_params = theta0;
    report.loss_history.reserve(static_cast<std::size_t>(train_cfg.epochs));

    const auto t_start = std::chrono::steady_clock::now();
    ParamVector theta = theta0;
    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        const FilterParams<Dual<D>> lifted = lift_params<D>(theta, freeze);
        const FilterModel<Dual<D>> model = build_filter_model(lifted, cfg);
        const LossValue<Dual<D>> loss =
            dataset_nll<Dual<D>>(std::span<const MeasurementSeq* const>(seqs), model);

        if (!is_finite(loss.total)) {
            throw TrainingError("non-finite loss or gradient", epoch);
        }
        report.loss_history.push_back(loss.total.value());
        if (train_cfg.record_param_history) report.param_history.push_back(theta);

        std::vector<double> grad(u.size(), 0.0);
        for (std::size_t i = 0; i < u.size(); ++i) {
            grad[i] = loss.total.tangent(static_cast<int>(i));
        }
        amsgrad_step(u, grad, state, train_cfg, trainable);
        theta = to_constrained(layout.unflatten(u));
    }
    const auto t_end = std::chrono::steady_clock::now();

    report.final_params = theta;
    report.wall_time_seconds = std::chrono::duration<double>(t_end - t_start).count();
    return report;
}

}  // namespace

TrainReport train(const std::vector<const Trajectory*>& train_split, const ModelConfig& cfg,
                  const ParamVector& theta0, const FreezeMask& freeze,
                  const TrainConfig& train_cfg) {
    if (train_split.empty()) throw DataError("training split is empty");
    theta0.validate();
    cfg.validate();
    train_cfg.validate();
    if (theta0.modes() != cfg.m) {
        throw ShapeError("initial parameters do not match model config");
    }

    switch (ParamLayout(theta0.modes()).dim()) {
        case 2:
            return train_impl<2>(train_split, cfg, theta0, freeze, train_cfg);
        case 5:
            return train_impl<5>(train_split, cfg, theta0, freeze, train_cfg);
        case 7:
            return train_impl<7>(train_split, cfg, theta0, freeze, train_cfg);
        case 9:
            return train_impl<9>(train_split, cfg, theta0, freeze, train_cfg);
        default:
            throw ConfigError("training supports at most 4 modes");
    }
}

std::string train_report_to_json_string(const TrainReport& report, const ModelConfig& cfg,
                                        const FreezeMask& freeze,
                                        const TrainConfig& train_cfg) {
    json j;
    j["final_params"] = json::parse(params_to_json_string(report.final_params, cfg));
    j["initial_params"] = json::parse(params_to_json_string(report.initial_params, cfg));
    j["config"] = {{"epochs", train_cfg.epochs},
                   {"learning_rate", train_cfg.learning_rate},
                   {"beta1", train_cfg.beta1},
                   {"beta2", train_cfg.beta2},
                   {"epsilon", train_cfg.epsilon},
                   {"seed", train_cfg.seed}};
    j["freeze"] = {{"train_motion", freeze.train_motion},
                   {"train_meas", freeze.train_meas}};
    j["loss_history"] = report.loss_history;
    j["wall_time_seconds"] = report.wall_time_seconds;
    if (!report.param_history.empty()) {
        json hist = json::array();
        for (const ParamVector& p : report.param_history) {
            hist.push_back(json::parse(params_to_json_string(p, cfg)));
        }
        j["param_history"] = std::move(hist);
    }
    return j.dump(2) + "\n";
}

void save_train_report(const std::string& path, const TrainReport& report,
                       const ModelConfig& cfg, const FreezeMask& freeze,
                       const TrainConfig& train_cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open report file for writing", path);
    out << train_report_to_json_string(report, cfg, freeze, train_cfg);
    if (!out) throw IoError("failed writing report file", path);
}

void save_loss_history_csv(const std::string& path, const std::vector<double>& loss_history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open loss CSV for writing", path);
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < loss_history.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof(line), "%zu,%.17g\n", i, loss_history[i]);
        out << line;
    }
    if (!out) throw IoError("failed writing loss CSV", path);
}

}  // namespace immfit

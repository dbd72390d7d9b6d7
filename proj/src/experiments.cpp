#include "immfit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

#include "immfit/loss.hpp"

namespace immfit {

namespace {

constexpr std::uint64_t kDatasetStream = 0xd5;
constexpr std::uint64_t kInitStream = 0x11;
constexpr std::uint64_t kKfInitStream = 0x1f;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f%%", v);
    return buf;
}

// Runs fn(0..n-1) on a bounded pool. Tasks own their error handling; the
// caller sees results only through the per-index output slots.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    const int count = std::min(jobs, n);
    workers.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) {
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (std::thread& t : workers) t.join();
}

// Initial parameters for one run: trained groups drawn at random, frozen
// groups pinned to the dataset's true values.
ParamVector initial_params(const ParamVector& true_params, const FreezeMask& freeze,
                           std::mt19937_64& rng, int modes) {
    const ParamVector sampled = sample_dataset_params(rng, modes);
    ParamVector theta0 = true_params;
    if (freeze.train_motion) {
        theta0.sigma_v = sampled.sigma_v;
        theta0.p_stay = sampled.p_stay;
    }
    if (freeze.train_meas) {
        theta0.sigma_r = sampled.sigma_r;
    }
    return theta0;
}

struct DatasetOutcome {
    bool ok = false;
    std::string error;
    RelativeChange vs_untrained;
    RelativeChange vs_true;
};

Aggregate aggregate_of(const std::vector<double>& samples) {
    return {median_of(samples), mean_of(samples)};
}

void append_metric(std::vector<MetricAggregate>& out, const std::string& name,
                   std::vector<double> vs_untrained, std::vector<double> vs_true) {
    MetricAggregate agg;
    agg.metric = name;
    agg.vs_untrained = aggregate_of(vs_untrained);
    agg.vs_true = aggregate_of(vs_true);
    agg.vs_untrained_samples = std::move(vs_untrained);
    agg.vs_true_samples = std::move(vs_true);
    out.push_back(std::move(agg));
}

}  // namespace

double median_of(std::vector<double> values) {
    if (values.empty()) throw DataError("median of empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) throw DataError("mean of empty sample");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

std::string AblationSpec::config_label() const {
    std::string label = "modes=" + std::to_string(modes);
    label += std::string(" motion=") + (train_motion ? "train" : "frozen");
    label += std::string(" meas=") + (train_meas ? "train" : "frozen");
    return label;
}

AblationRow run_ablation(const AblationSpec& spec) {
    spec.validate();
    const FreezeMask freeze{spec.train_motion, spec.train_meas};

    std::vector<DatasetOutcome> outcomes(static_cast<std::size_t>(spec.n_datasets));
    parallel_for(spec.n_datasets, spec.jobs, [&](int i) {
        DatasetOutcome& out = outcomes[static_cast<std::size_t>(i)];
        try {
            SimOptions options;
            options.n_trajectories = spec.n_trajectories;
            options.length = spec.trajectory_length;
            options.modes = spec.modes;
            const Dataset ds = generate_dataset(
                derive_seed(spec.base_seed, kDatasetStream, static_cast<std::uint64_t>(i)),
                options);

            std::mt19937_64 init_rng(
                derive_seed(spec.base_seed, kInitStream, static_cast<std::uint64_t>(i)));
            const ParamVector theta0 =
                initial_params(ds.true_params, freeze, init_rng, spec.modes);

            const TrainReport report = train(ds.trajectory_view(ds.train_indices),
                                             ds.config, theta0, freeze, spec.train_config);

            const auto test = ds.trajectory_view(ds.test_indices);
            const EvalResult trained = evaluate(report.final_params, ds.config, test);
            const EvalResult untrained = evaluate(theta0, ds.config, test);
            const EvalResult with_true = evaluate(ds.true_params, ds.config, test);

            out.vs_untrained = relative_change(trained, untrained);
            out.vs_true = relative_change(trained, with_true);
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = std::string("dataset ") + std::to_string(i) + ": " + e.what();
        }
    });

    AblationRow row;
    row.spec = spec;
    std::vector<double> u_pred, u_post, u_mpred, u_mpost;
    std::vector<double> t_pred, t_post, t_mpred, t_mpost;
    for (const DatasetOutcome& out : outcomes) {
        if (!out.ok) {
            row.failures.push_back(out.error);
            continue;
        }
        ++row.completed;
        u_pred.push_back(out.vs_untrained.state_pred_rmse_pct);
        u_post.push_back(out.vs_untrained.state_post_rmse_pct);
        t_pred.push_back(out.vs_true.state_pred_rmse_pct);
        t_post.push_back(out.vs_true.state_post_rmse_pct);
        if (out.vs_untrained.mode_pred_mae_pct) {
            u_mpred.push_back(*out.vs_untrained.mode_pred_mae_pct);
            u_mpost.push_back(*out.vs_untrained.mode_post_mae_pct);
            t_mpred.push_back(*out.vs_true.mode_pred_mae_pct);
            t_mpost.push_back(*out.vs_true.mode_post_mae_pct);
        }
    }
    if (row.completed == 0) {
        throw DataError("all ablation datasets failed; first error: " +
                        (row.failures.empty() ? std::string("none") : row.failures[0]));
    }
    append_metric(row.metrics, "state_pred_rmse", u_pred, t_pred);
    append_metric(row.metrics, "state_post_rmse", u_post, t_post);
    if (!u_mpred.empty()) {
        append_metric(row.metrics, "mode_pred_mae", u_mpred, t_mpred);
        append_metric(row.metrics, "mode_post_mae", u_mpost, t_mpost);
    }
    return row;
}

ImmVsKfRow run_imm_vs_kf(const AblationSpec& spec) {
    spec.validate();
    if (spec.modes != 2) {
        throw ConfigError("the IMM-vs-KF comparison requires two-mode datasets");
    }
    const FreezeMask freeze{spec.train_motion, spec.train_meas};

    struct Outcome {
        bool ok = false;
        std::string error;
        double pred_pct = 0.0;
        double post_pct = 0.0;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(spec.n_datasets));

    parallel_for(spec.n_datasets, spec.jobs, [&](int i) {
        Outcome& out = outcomes[static_cast<std::size_t>(i)];
        try {
            SimOptions options;
            options.n_trajectories = spec.n_trajectories;
            options.length = spec.trajectory_length;
            options.modes = 2;
            const Dataset ds = generate_dataset(
                derive_seed(spec.base_seed, kDatasetStream, static_cast<std::uint64_t>(i)),
                options);
            const auto train_view = ds.trajectory_view(ds.train_indices);
            const auto test_view = ds.trajectory_view(ds.test_indices);

            // IMM side.
            std::mt19937_64 imm_rng(
                derive_seed(spec.base_seed, kInitStream, static_cast<std::uint64_t>(i)));
            const ParamVector imm_theta0 =
                initial_params(ds.true_params, freeze, imm_rng, 2);
            const TrainReport imm_report =
                train(train_view, ds.config, imm_theta0, freeze, spec.train_config);
            const EvalResult imm_eval =
                evaluate(imm_report.final_params, ds.config, test_view);

            // KF side: single mode, matched to the non-maneuvering mode when
            // the motion model is frozen.
            ModelConfig kf_cfg = ds.config;
            kf_cfg.m = 1;
            ParamVector kf_true;
            kf_true.sigma_v = {ds.true_params.sigma_v[0]};
            kf_true.p_stay = {1.0};
            kf_true.sigma_r = ds.true_params.sigma_r;
            std::mt19937_64 kf_rng(
                derive_seed(spec.base_seed, kKfInitStream, static_cast<std::uint64_t>(i)));
            const ParamVector kf_theta0 = initial_params(kf_true, freeze, kf_rng, 1);
            const TrainReport kf_report =
                train(train_view, kf_cfg, kf_theta0, freeze, spec.train_config);
            const EvalResult kf_eval = evaluate(kf_report.final_params, kf_cfg, test_view);

            out.pred_pct =
                100.0 * (imm_eval.state_pred_rmse - kf_eval.state_pred_rmse) /
                kf_eval.state_pred_rmse;
            out.post_pct =
                100.0 * (imm_eval.state_post_rmse - kf_eval.state_post_rmse) /
                kf_eval.state_post_rmse;
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = std::string("dataset ") + std::to_string(i) + ": " + e.what();
        }
    });

    ImmVsKfRow row;
    row.spec = spec;
    std::vector<double> pred, post;
    for (const Outcome& out : outcomes) {
        if (!out.ok) {
            row.failures.push_back(out.error);
            continue;
        }
        ++row.completed;
        pred.push_back(out.pred_pct);
        post.push_back(out.post_pct);
    }
    if (row.completed == 0) {
        throw DataError("all comparison datasets failed; first error: " +
                        (row.failures.empty() ? std::string("none") : row.failures[0]));
    }
    row.metrics.push_back({"state_pred_rmse", aggregate_of(pred), pred});
    row.metrics.push_back({"state_post_rmse", aggregate_of(post), post});
    return row;
}

std::vector<std::string> sweep_param_names(int modes) {
    const ParamLayout layout(modes);
    std::vector<std::string> names;
    for (int i = 0; i < layout.dim(); ++i) names.push_back(layout.slot_name(i));
    return names;
}

std::vector<SweepPoint> loss_sweep(const Dataset& ds, const std::string& param_name,
                                   const std::vector<double>& grid) {
    if (grid.empty()) throw ConfigError("sweep grid is empty");
    const int m = ds.true_params.modes();
    const ParamLayout layout(m);

    int slot = -1;
    for (int i = 0; i < layout.dim(); ++i) {
        if (layout.slot_name(i) == param_name) slot = i;
    }
    if (slot < 0) {
        std::string valid;
        for (const std::string& n : sweep_param_names(m)) valid += " " + n;
        throw ConfigError("unknown parameter '" + param_name + "'; valid names:" + valid);
    }

    std::vector<int> all_idx(ds.trajectories.size());
    for (std::size_t i = 0; i < all_idx.size(); ++i) all_idx[i] = static_cast<int>(i);
    const std::vector<const Trajectory*> all = ds.trajectory_view(all_idx);
    const auto all_meas = ds.measurement_view(all_idx);

    std::vector<SweepPoint> curve;
    curve.reserve(grid.size());
    for (double value : grid) {
        ParamVector theta = ds.true_params;
        if (slot < m) {
            theta.sigma_v[static_cast<std::size_t>(slot)] = value;
        } else if (slot == layout.sigma_r_slot()) {
            theta.sigma_r = value;
        } else {
            theta.p_stay[static_cast<std::size_t>(slot - m)] = value;
        }
        theta.validate();

        const FilterModel<double> model =
            build_filter_model(to_filter_params(theta), ds.config);
        const LossValue<double> loss = dataset_nll<double>(
            std::span<const MeasurementSeq* const>(all_meas), model);

        SweepPoint point;
        point.param_value = value;
        point.nll = loss.total;
        point.posterior_rmse = evaluate(theta, ds.config, all).state_post_rmse;
        curve.push_back(point);
    }
    return curve;
}

std::string ablation_row_to_csv(const AblationRow& row) {
    std::string out = "config,metric,stat,vs_untrained_pct,vs_true_pct\n";
    const std::string label = row.spec.config_label();
    for (const MetricAggregate& m : row.metrics) {
        out += label + "," + m.metric + ",median," + fmt(m.vs_untrained.median) + "," +
               fmt(m.vs_true.median) + "\n";
        out += label + "," + m.metric + ",mean," + fmt(m.vs_untrained.mean) + "," +
               fmt(m.vs_true.mean) + "\n";
    }
    return out;
}

std::string imm_vs_kf_row_to_csv(const ImmVsKfRow& row) {
    std::string out = "config,metric,stat,imm_vs_kf_pct\n";
    const std::string label = row.spec.config_label();
    for (const ImmVsKfMetric& m : row.metrics) {
        out += label + "," + m.metric + ",median," + fmt(m.imm_vs_kf.median) + "\n";
        out += label + "," + m.metric + ",mean," + fmt(m.imm_vs_kf.mean) + "\n";
    }
    return out;
}

std::string ablation_row_to_text(const AblationRow& row) {
    std::ostringstream out;
    out << "ablation: " << row.spec.config_label() << "  (datasets completed: "
        << row.completed << "/" << row.spec.n_datasets << ")\n";
    out << "  metric             vs untrained (median/mean)   vs true (median/mean)\n";
    for (const MetricAggregate& m : row.metrics) {
        char line[160];
        std::snprintf(line, sizeof(line), "  %-18s %10s / %-10s    %10s / %-10s\n",
                      m.metric.c_str(), fmt_pct(m.vs_untrained.median).c_str(),
                      fmt_pct(m.vs_untrained.mean).c_str(), fmt_pct(m.vs_true.median).c_str(),
                      fmt_pct(m.vs_true.mean).c_str());
        out << line;
    }
    for (const std::string& f : row.failures) out << "  FAILED " << f << "\n";
    return out.str();
}

std::string imm_vs_kf_row_to_text(const ImmVsKfRow& row) {
    std::ostringstream out;
    out << "imm-vs-kf: " << row.spec.config_label() << "  (datasets completed: "
        << row.completed << "/" << row.spec.n_datasets << ")\n";
    out << "  metric             imm vs kf (median/mean)\n";
    for (const ImmVsKfMetric& m : row.metrics) {
        char line[120];
        std::snprintf(line, sizeof(line), "  %-18s %10s / %-10s\n", m.metric.c_str(),
                      fmt_pct(m.imm_vs_kf.median).c_str(), fmt_pct(m.imm_vs_kf.mean).c_str());
        out << line;
    }
    for (const std::string& f : row.failures) out << "  FAILED " << f << "\n";
    return out.str();
}

std::string sweep_to_csv(const std::vector<SweepPoint>& curve) {
    std::string out = "param_value,nll,posterior_rmse\n";
    for (const SweepPoint& p : curve) {
        out += fmt(p.param_value) + "," + fmt(p.nll) + "," + fmt(p.posterior_rmse) + "\n";
    }
    return out;
}

std::string sweep_plot_script(const std::string& csv_path, const std::string& param_name) {
    std::ostringstream out;
    out << "set datafile separator ','\n";
    out << "set xlabel '" << param_name << "'\n";
    out << "set ylabel 'NLL'\n";
    out << "set y2label 'posterior RMSE'\n";
    out << "set y2tics\n";
    out << "set key top right\n";
    out << "plot '" << csv_path << "' using 1:2 skip 1 with lines title 'NLL' axes x1y1, \\\n";
    out << "     '" << csv_path
        << "' using 1:3 skip 1 with lines title 'posterior RMSE' axes x1y2\n";
    return out.str();
}

}  // namespace immfit

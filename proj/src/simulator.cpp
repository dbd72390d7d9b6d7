#include "immfit/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "immfit/models.hpp"

namespace immfit {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stationary distribution of the mode chain. Closed form for one and two
// modes; fixed-point iteration otherwise (rows mix strictly, so it
// converges fast and deterministically).
std::vector<double> stationary_distribution(const Transition<double>& tr) {
    const int m = tr.m;
    if (m == 1) return {1.0};
    if (m == 2) {
        const double denom = 2.0 - tr(0, 0) - tr(1, 1);
        const double pi0 = (1.0 - tr(1, 1)) / denom;
        return {pi0, 1.0 - pi0};
    }
    std::vector<double> pi(static_cast<std::size_t>(m), 1.0 / m);
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<double> next(static_cast<std::size_t>(m), 0.0);
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < m; ++i) next[j] += tr(i, j) * pi[i];
        }
        pi.swap(next);
    }
    return pi;
}

int draw_categorical(const std::vector<double>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(base ^ (stream * 0xd1342543de82ef95ULL)) ^ index);
}

ParamVector sample_dataset_params(std::mt19937_64& rng, int modes) {
    if (modes != 1 && modes != 2) {
        throw ConfigError("parameter sampling intervals are defined for 1 or 2 modes");
    }
    std::uniform_real_distribution<double> sv0(1.0e-3, 0.98);
    std::uniform_real_distribution<double> sv1(9.81, 49.1);
    std::uniform_real_distribution<double> pstay(0.95, 0.999);
    std::uniform_real_distribution<double> sr(1.0, 25.0);

    ParamVector theta;
    theta.sigma_v.push_back(sv0(rng));
    if (modes == 2) theta.sigma_v.push_back(sv1(rng));
    if (modes == 1) {
        theta.p_stay.push_back(1.0);
    } else {
        theta.p_stay.push_back(pstay(rng));
        theta.p_stay.push_back(pstay(rng));
    }
    theta.sigma_r = sr(rng);
    theta.validate();
    return theta;
}

Trajectory generate_trajectory(const ParamVector& theta, const ModelConfig& cfg, int length,
                               std::mt19937_64& rng) {
    cfg.validate();
    if (length < 2) throw DataError("trajectory length must be >= 2");
    if (theta.modes() != cfg.m) throw ShapeError("theta mode count does not match config");
    // Zero noise levels are meaningful for simulation (degenerate noiseless
    // runs), so only sign and probability constraints are enforced here.
    if (static_cast<int>(theta.p_stay.size()) != cfg.m) {
        throw ShapeError("p_stay size does not match mode count");
    }
    for (double s : theta.sigma_v) {
        if (!(s >= 0.0)) throw ConfigError("sigma_v must be non-negative");
    }
    if (!(theta.sigma_r >= 0.0)) throw ConfigError("sigma_r must be non-negative");

    const double tau = cfg.tau;
    // Cholesky factor of the unit-noise per-axis process block
    // [[tau^3/3, tau^2/2], [tau^2/2, tau]]; scaling by sigma_v scales the
    // factor, which keeps sigma_v = 0 valid.
    const double l00 = std::sqrt(tau * tau * tau / 3.0);
    const double l10 = (tau * tau / 2.0) / l00;
    const double l11 = std::sqrt(tau - l10 * l10);

    Transition<double> tr;
    {
        InlineVec<double, kMaxModes> p_stay;
        for (double p : theta.p_stay) p_stay.push_back(p);
        tr = build_transition<double>(p_stay);
    }
    const std::vector<double> stationary = stationary_distribution(tr);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Trajectory out;
    out.states.reserve(static_cast<std::size_t>(length));
    out.modes.reserve(static_cast<std::size_t>(length));
    out.measurements.reserve(static_cast<std::size_t>(length));

    std::array<double, 4> x{0.0, 0.0, 0.0, 0.0};
    int mode = draw_categorical(stationary, rng);
    out.states.push_back(x);
    out.modes.push_back(mode);
    out.measurements.push_back(
        {x[0] + theta.sigma_r * gauss(rng), x[2] + theta.sigma_r * gauss(rng)});

    for (int t = 1; t < length; ++t) {
        const double sv = theta.sigma_v[static_cast<std::size_t>(mode)];

        int next_mode = mode;
        if (cfg.m > 1) {
            std::vector<double> row(static_cast<std::size_t>(cfg.m));
            for (int j = 0; j < cfg.m; ++j) row[static_cast<std::size_t>(j)] = tr(mode, j);
            next_mode = draw_categorical(row, rng);
        }

        // x_t = F x_{t-1} + u, u ~ N(0, Q^{mode before the switch}).
        std::array<double, 4> next{};
        for (int axis = 0; axis < 2; ++axis) {
            const int o = 2 * axis;
            const double g0 = gauss(rng);
            const double g1 = gauss(rng);
            const double u_pos = sv * l00 * g0;
            const double u_vel = sv * (l10 * g0 + l11 * g1);
            next[o] = x[o] + tau * x[o + 1] + u_pos;
            next[o + 1] = x[o + 1] + u_vel;
        }
        x = next;
        mode = next_mode;

        out.states.push_back(x);
        out.modes.push_back(mode);
        out.measurements.push_back(
            {x[0] + theta.sigma_r * gauss(rng), x[2] + theta.sigma_r * gauss(rng)});
    }
    return out;
}

namespace {
constexpr std::uint64_t kParamStream = 0x70;
constexpr std::uint64_t kTrajectoryStream = 0x7a;
}  // namespace

Dataset generate_dataset(std::uint64_t seed, const SimOptions& options) {
    if (options.n_trajectories < 1) throw ConfigError("need at least one trajectory");
    if (options.length < 2) throw ConfigError("trajectory length must be >= 2");

    Dataset ds;
    ds.seed = seed;
    ds.config.tau = options.tau;
    ds.config.m = options.modes;

    std::mt19937_64 param_rng(derive_seed(seed, kParamStream));
    ds.true_params = sample_dataset_params(param_rng, options.modes);

    for (int i = 0; i < options.n_trajectories; ++i) {
        std::mt19937_64 traj_rng(derive_seed(seed, kTrajectoryStream, static_cast<std::uint64_t>(i)));
        ds.trajectories.push_back(
            generate_trajectory(ds.true_params, ds.config, options.length, traj_rng));
        if (i % 2 == 0) {
            ds.train_indices.push_back(i);
        } else {
            ds.test_indices.push_back(i);
        }
    }
    return ds;
}

std::string dataset_to_json_string(const Dataset& ds) {
    json j;
    j["seed"] = ds.seed;
    j["true_params"] = json::parse(params_to_json_string(ds.true_params, ds.config));
    json trajs = json::array();
    for (const Trajectory& t : ds.trajectories) {
        json jt;
        jt["states"] = t.states;
        jt["modes"] = t.modes;
        jt["measurements"] = t.measurements;
        trajs.push_back(std::move(jt));
    }
    j["trajectories"] = std::move(trajs);
    return j.dump() + "\n";
}

Dataset dataset_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed dataset JSON: ") + e.what());
    }
    Dataset ds;
    try {
        ds.seed = j.at("seed").get<std::uint64_t>();
        auto [theta, cfg] = params_from_json_string(j.at("true_params").dump());
        ds.true_params = theta;
        ds.config = cfg;
        int index = 0;
        for (const json& jt : j.at("trajectories")) {
            Trajectory t;
            t.states = jt.at("states").get<std::vector<std::array<double, 4>>>();
            t.modes = jt.at("modes").get<std::vector<int>>();
            t.measurements =
                jt.at("measurements").get<std::vector<std::array<double, 2>>>();
            if (t.states.size() != t.modes.size() ||
                t.states.size() != t.measurements.size()) {
                throw ConfigError("dataset JSON: inconsistent trajectory lengths");
            }
            ds.trajectories.push_back(std::move(t));
            if (index % 2 == 0) {
                ds.train_indices.push_back(index);
            } else {
                ds.test_indices.push_back(index);
            }
            ++index;
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset JSON missing field: ") + e.what());
    }
    return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open dataset file for writing", path);
    out << dataset_to_json_string(ds);
    if (!out) throw IoError("failed writing dataset file", path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_json_string(buf.str());
}

void export_measurements_csv(const Dataset& ds, const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw IoError("cannot create directory", directory);

    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%03zu.csv", i);
        const std::string path = (fs::path(directory) / name).string();
        std::ofstream out(path);
        if (!out) throw IoError("cannot open CSV for writing", path);
        out << "t,zx,zy\n";
        const Trajectory& t = ds.trajectories[i];
        for (std::size_t k = 0; k < t.measurements.size(); ++k) {
            char line[96];
            std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", k,
                          t.measurements[k][0], t.measurements[k][1]);
            out << line;
        }
        if (!out) throw IoError("failed writing CSV", path);
    }
}

}  // namespace immfit

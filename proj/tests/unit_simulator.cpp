#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "immfit/simulator.hpp"
#include "oracle/stats.hpp"

using namespace immfit;

TEST_CASE("sampled parameters respect the intervals") {
    std::mt19937_64 rng(1);
    double sr_sum = 0.0;
    double sv0_min = 1e9, sv0_max = -1e9, sv1_min = 1e9, sv1_max = -1e9;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const ParamVector theta = sample_dataset_params(rng, 2);
        CHECK(theta.sigma_v[0] >= 1e-3);
        CHECK(theta.sigma_v[0] <= 0.98);
        CHECK(theta.sigma_v[1] >= 9.81);
        CHECK(theta.sigma_v[1] <= 49.1);
        for (double p : theta.p_stay) {
            CHECK(p >= 0.95);
            CHECK(p <= 0.999);
        }
        CHECK(theta.sigma_r >= 1.0);
        CHECK(theta.sigma_r <= 25.0);
        sr_sum += theta.sigma_r;
        sv0_min = std::min(sv0_min, theta.sigma_v[0]);
        sv0_max = std::max(sv0_max, theta.sigma_v[0]);
        sv1_min = std::min(sv1_min, theta.sigma_v[1]);
        sv1_max = std::max(sv1_max, theta.sigma_v[1]);
    }
    // Mean of U[1, 25] is 13; CLT bound for 10^4 draws.
    const double sr_mean = sr_sum / n;
    CHECK(sr_mean > 12.6);
    CHECK(sr_mean < 13.4);
    // The extremes should get close to the interval ends.
    CHECK(sv0_min < 1e-3 + 0.01);
    CHECK(sv0_max > 0.98 - 0.01);
    CHECK(sv1_min < 9.81 + 0.5);
    CHECK(sv1_max > 49.1 - 0.5);

    const ParamVector single = sample_dataset_params(rng, 1);
    CHECK(single.modes() == 1);
    CHECK(single.p_stay[0] == 1.0);
    CHECK_THROWS_AS(sample_dataset_params(rng, 3), ConfigError);
}

TEST_CASE("a noiseless trajectory stays at the origin") {
    ParamVector theta;
    theta.sigma_v = {0.0, 0.0};
    theta.p_stay = {0.97, 0.95};
    theta.sigma_r = 0.0;
    ModelConfig cfg;
    cfg.m = 2;
    std::mt19937_64 rng(2);
    const Trajectory traj = generate_trajectory(theta, cfg, 50, rng);
    for (const auto& x : traj.states) {
        for (double v : x) CHECK(v == 0.0);
    }
    for (const auto& z : traj.measurements) {
        CHECK(z[0] == 0.0);
        CHECK(z[1] == 0.0);
    }
}

TEST_CASE("position increments equal tau times velocity without process noise") {
    ParamVector theta;
    theta.sigma_v = {0.0};
    theta.p_stay = {1.0};
    theta.sigma_r = 3.0;
    ModelConfig cfg;
    cfg.m = 1;
    cfg.tau = 0.5;
    std::mt19937_64 rng(3);
    Trajectory traj = generate_trajectory(theta, cfg, 40, rng);
    // Give the target a velocity by hand and replay the noiseless dynamics.
    // With sigma_v = 0 the generator keeps velocity constant, so positions
    // must advance by exactly tau * velocity each step.
    for (std::size_t t = 1; t < traj.states.size(); ++t) {
        CHECK(traj.states[t][0] - traj.states[t - 1][0] ==
              doctest::Approx(cfg.tau * traj.states[t - 1][1]).epsilon(1e-15));
        CHECK(traj.states[t][2] - traj.states[t - 1][2] ==
              doctest::Approx(cfg.tau * traj.states[t - 1][3]).epsilon(1e-15));
    }
}

TEST_CASE("mode switches occur at the configured rate") {
    ParamVector theta;
    theta.sigma_v = {0.1, 10.0};
    theta.p_stay = {0.999, 0.999};
    theta.sigma_r = 1.0;
    ModelConfig cfg;
    cfg.m = 2;
    std::mt19937_64 rng(4);
    const int steps = 10000;
    const Trajectory traj = generate_trajectory(theta, cfg, steps, rng);
    int switches = 0;
    for (std::size_t t = 1; t < traj.modes.size(); ++t) {
        if (traj.modes[t] != traj.modes[t - 1]) ++switches;
    }
    const double freq = static_cast<double>(switches) / (steps - 1);
    const double p = 0.001;
    const double sd = std::sqrt(p * (1.0 - p) / (steps - 1));
    CHECK(std::fabs(freq - p) < 3.0 * sd);
}

TEST_CASE("maneuver accelerations have the configured magnitude") {
    ParamVector theta;
    theta.sigma_v = {0.98, 49.1};
    theta.p_stay = {0.95, 0.999};  // long dwells in the maneuvering mode
    theta.sigma_r = 1.0;
    ModelConfig cfg;
    cfg.m = 2;
    std::mt19937_64 rng(5);
    const Trajectory traj = generate_trajectory(theta, cfg, 60000, rng);

    double sq[2] = {0.0, 0.0};
    long count[2] = {0, 0};
    for (std::size_t t = 1; t < traj.states.size(); ++t) {
        const int mode = traj.modes[t - 1];  // mode that drove this step
        for (int axis = 0; axis < 2; ++axis) {
            const double dv =
                traj.states[t][2 * axis + 1] - traj.states[t - 1][2 * axis + 1];
            sq[mode] += dv * dv;
            ++count[mode];
        }
    }
    // Velocity increments are N(0, sigma_v^2 tau); tau = 1.
    const double std0 = std::sqrt(sq[0] / count[0]);
    const double std1 = std::sqrt(sq[1] / count[1]);
    CHECK(std::fabs(std0 - 0.98) / 0.98 < 0.05);
    CHECK(std::fabs(std1 - 49.1) / 49.1 < 0.05);
    // Scale sanity: the non-maneuvering regime sits near 0.1 g, the
    // maneuvering regime near 5 g.
    CHECK(std0 < 0.15 * 9.81);
    CHECK(std1 > 4.0 * 9.81);
    CHECK(std1 < 6.0 * 9.81);
}

TEST_CASE("mode dwell times are geometric") {
    ParamVector theta;
    theta.sigma_v = {0.5, 20.0};
    theta.p_stay = {0.98, 0.96};
    theta.sigma_r = 1.0;
    ModelConfig cfg;
    cfg.m = 2;
    std::mt19937_64 rng(6);
    const int steps = 100000;
    const Trajectory traj = generate_trajectory(theta, cfg, steps, rng);

    std::vector<int> dwell0, dwell1;
    int run = 1;
    for (std::size_t t = 1; t < traj.modes.size(); ++t) {
        if (traj.modes[t] == traj.modes[t - 1]) {
            ++run;
        } else {
            (traj.modes[t - 1] == 0 ? dwell0 : dwell1).push_back(run);
            run = 1;
        }
    }
    CHECK(dwell0.size() > 100);
    CHECK(dwell1.size() > 100);
    CHECK(oracle::geometric_dwell_pvalue(dwell0, 1.0 - 0.98) > 0.01);
    CHECK(oracle::geometric_dwell_pvalue(dwell1, 1.0 - 0.96) > 0.01);
}

TEST_CASE("initial modes follow the stationary distribution") {
    ParamVector theta;
    theta.sigma_v = {0.5, 20.0};
    theta.p_stay = {0.999, 0.95};
    theta.sigma_r = 1.0;
    ModelConfig cfg;
    cfg.m = 2;
    const double pi1 = (1.0 - 0.999) / (2.0 - 0.999 - 0.95);  // ~0.0196
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(derive_seed(1000, 10, static_cast<std::uint64_t>(i)));
        const Trajectory traj = generate_trajectory(theta, cfg, 2, rng);
        ones += traj.modes[0];
    }
    const double freq = static_cast<double>(ones) / n;
    const double sd = std::sqrt(pi1 * (1.0 - pi1) / n);
    CHECK(std::fabs(freq - pi1) < 4.0 * sd);
}

TEST_CASE("empirical measurement noise matches sigma_r") {
    const Dataset ds = generate_dataset(31415, SimOptions{60, 120, 2, 1.0});
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    long n = 0;
    for (const Trajectory& traj : ds.trajectories) {
        for (std::size_t t = 0; t < traj.measurements.size(); ++t) {
            const double ex = traj.measurements[t][0] - traj.states[t][0];
            const double ey = traj.measurements[t][1] - traj.states[t][2];
            sxx += ex * ex;
            syy += ey * ey;
            sxy += ex * ey;
            ++n;
        }
    }
    CHECK(n == 7200);
    const double s2 = ds.true_params.sigma_r * ds.true_params.sigma_r;
    CHECK(std::fabs(sxx / n - s2) / s2 < 0.05);
    CHECK(std::fabs(syy / n - s2) / s2 < 0.05);
    CHECK(std::fabs(sxy / n) / s2 < 0.05);
}

TEST_CASE("dataset generation is deterministic") {
    const SimOptions options{60, 120, 2, 1.0};
    const Dataset a = generate_dataset(7, options);
    const Dataset b = generate_dataset(7, options);
    CHECK(dataset_to_json_string(a) == dataset_to_json_string(b));
    CHECK(a.train_indices.size() == 30);
    CHECK(a.test_indices.size() == 30);
    CHECK(a.trajectories.size() == 60);
    CHECK(a.trajectories[0].length() == 120);
}

TEST_CASE("dataset persists and reloads bit-identically") {
    const Dataset ds = generate_dataset(99, SimOptions{6, 25, 2, 1.0});
    const auto tmp = std::filesystem::temp_directory_path() / "immfit_dataset_test.json";
    save_dataset(tmp.string(), ds);
    const Dataset back = load_dataset(tmp.string());
    std::filesystem::remove(tmp);

    CHECK(back.seed == ds.seed);
    CHECK(back.true_params.sigma_v == ds.true_params.sigma_v);
    CHECK(back.true_params.p_stay == ds.true_params.p_stay);
    CHECK(back.true_params.sigma_r == ds.true_params.sigma_r);
    CHECK(back.config.tau == ds.config.tau);
    CHECK(back.config.m == ds.config.m);
    CHECK(back.train_indices == ds.train_indices);
    CHECK(back.test_indices == ds.test_indices);
    REQUIRE(back.trajectories.size() == ds.trajectories.size());
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        CHECK(back.trajectories[i].states == ds.trajectories[i].states);
        CHECK(back.trajectories[i].modes == ds.trajectories[i].modes);
        CHECK(back.trajectories[i].measurements == ds.trajectories[i].measurements);
    }

    CHECK_THROWS_AS(load_dataset("/nonexistent/dataset.json"), IoError);
}

TEST_CASE("distinct seeds give distinct dataset parameters") {
    std::set<std::pair<double, double>> seen;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Dataset ds = generate_dataset(seed, SimOptions{1, 2, 2, 1.0});
        seen.insert({ds.true_params.sigma_r, ds.true_params.sigma_v[1]});
    }
    CHECK(seen.size() == 100);
}

TEST_CASE("measurement CSV export writes one file per trajectory") {
    const Dataset ds = generate_dataset(55, SimOptions{3, 10, 1, 1.0});
    const auto dir = std::filesystem::temp_directory_path() / "immfit_csv_test";
    export_measurements_csv(ds, dir.string());
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%03d.csv", i);
        const auto path = dir / name;
        REQUIRE(std::filesystem::exists(path));
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "t,zx,zy");
        int lines = 0;
        std::string line;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == 10);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory generation validates its inputs") {
    ParamVector theta;
    theta.sigma_v = {0.5};
    theta.p_stay = {1.0};
    theta.sigma_r = 1.0;
    ModelConfig cfg;
    cfg.m = 1;
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(generate_trajectory(theta, cfg, 1, rng), DataError);
    ModelConfig wrong;
    wrong.m = 2;
    CHECK_THROWS_AS(generate_trajectory(theta, wrong, 10, rng), ShapeError);
}

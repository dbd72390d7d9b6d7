#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "immfit/models.hpp"
#include "oracle/fd.hpp"

using namespace immfit;

namespace {
using D1 = Dual<1>;
}

TEST_CASE("constant-velocity transition matrix layout") {
    ModelConfig cfg;
    cfg.tau = 1.0;
    const auto f = build_F<double>(cfg);
    const double expected[4][4] = {
        {1, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 0, 1}};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(f(r, c) == expected[r][c]);

    cfg.tau = 0.0;
    const auto f0 = build_F<double>(cfg);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(f0(r, c) == (r == c ? 1.0 : 0.0));

    Vec<double, 4> zero;
    const auto moved = f * zero;
    for (int i = 0; i < 4; ++i) CHECK(moved(i, 0) == 0.0);
}

TEST_CASE("process noise block values") {
    ModelConfig cfg;
    cfg.tau = 1.0;

    const auto q0 = build_Q<double>(0.0, cfg);
    for (const double& e : q0.e) CHECK(e == 0.0);

    const auto q1 = build_Q<double>(1.0, cfg);
    CHECK(q1(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(q1(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q1(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q1(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(q1(2, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(q1(0, 2) == 0.0);
    CHECK(q1(1, 3) == 0.0);
}

TEST_CASE("process noise derivative w.r.t. sigma_v") {
    // dQ00/dsigma = 2 sigma tau^3 / 3 = 4/3 at sigma = 2, tau = 1.
    ModelConfig cfg;
    const auto q = build_Q<D1>(D1::parameter(2.0, 0), cfg);
    CHECK(q(0, 0).tangent(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("measurement model selects positions") {
    const auto h = build_H<double>();
    Vec<double, 4> x{{3.0, -1.0, 7.0, 2.0}};
    const auto z = h * x;
    CHECK(z(0, 0) == 3.0);
    CHECK(z(1, 0) == 7.0);

    const auto r = build_R<double>(5.0);
    CHECK(r(0, 0) == 25.0);
    CHECK(r(1, 1) == 25.0);
    CHECK(r(0, 1) == 0.0);

    const auto rd = build_R<D1>(D1::parameter(3.0, 0));
    CHECK(rd(0, 0).tangent(0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("transition matrix rows") {
    InlineVec<double, kMaxModes> two{0.97, 0.95};
    const auto tr = build_transition<double>(two);
    CHECK(tr(0, 0) == doctest::Approx(0.97));
    CHECK(tr(0, 1) == doctest::Approx(0.03));
    CHECK(tr(1, 0) == doctest::Approx(0.05));
    CHECK(tr(1, 1) == doctest::Approx(0.95));

    InlineVec<double, kMaxModes> one{1.0};
    const auto tr1 = build_transition<double>(one);
    CHECK(tr1.m == 1);
    CHECK(tr1(0, 0) == 1.0);

    InlineVec<double, kMaxModes> three{0.9, 0.8, 0.7};
    const auto tr3 = build_transition<double>(three);
    CHECK(tr3(0, 0) == doctest::Approx(0.9));
    CHECK(tr3(0, 1) == doctest::Approx(0.05));
    CHECK(tr3(0, 2) == doctest::Approx(0.05));

    InlineVec<double, kMaxModes> bad{1.5, 0.5};
    CHECK_THROWS_AS(build_transition<double>(bad), ConfigError);
}

TEST_CASE("transition rows sum to one across the logit range") {
    for (double lambda = -20.0; lambda <= 20.0; lambda += 2.5) {
        const double p = sigmoid(lambda);
        InlineVec<double, kMaxModes> stay{p, 0.5, 1.0 - p * 0.5};
        const auto tr = build_transition<double>(stay);
        for (int i = 0; i < 3; ++i) {
            double row = 0.0;
            for (int j = 0; j < 3; ++j) row += tr(i, j);
            CHECK(std::fabs(row - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("unconstrained transform basics") {
    ParamVector theta;
    theta.sigma_v = {1.0, 20.0};
    theta.p_stay = {0.5, 0.97};
    theta.sigma_r = 25.0;
    const auto u = to_unconstrained(theta);
    CHECK(u.rho_v[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(u.lambda_p[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(u.rho_r == doctest::Approx(std::log(25.0)).epsilon(1e-12));
    CHECK(u.rho_r == doctest::Approx(3.2188758248682).epsilon(1e-10));
}

TEST_CASE("round trip through unconstrained space is the identity") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> sig(0.001, 50.0);
    std::uniform_real_distribution<double> prob(0.01, 0.999);
    for (int rep = 0; rep < 50; ++rep) {
        ParamVector theta;
        theta.sigma_v = {sig(rng), sig(rng)};
        theta.p_stay = {prob(rng), prob(rng)};
        theta.sigma_r = sig(rng);
        const ParamVector back = to_constrained(to_unconstrained(theta));
        for (int i = 0; i < 2; ++i) {
            CHECK(back.sigma_v[i] == doctest::Approx(theta.sigma_v[i]).epsilon(1e-12));
            CHECK(back.p_stay[i] == doctest::Approx(theta.p_stay[i]).epsilon(1e-12));
        }
        CHECK(back.sigma_r == doctest::Approx(theta.sigma_r).epsilon(1e-12));
    }
}

TEST_CASE("constrained output always satisfies the parameter invariants") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> unif(-20.0, 20.0);
    for (int rep = 0; rep < 100; ++rep) {
        UnconstrainedParams u;
        u.rho_v = {unif(rng), unif(rng)};
        u.lambda_p = {unif(rng), unif(rng)};
        u.rho_r = unif(rng);
        const ParamVector theta = to_constrained(u);
        CHECK_NOTHROW(theta.validate());
    }
}

TEST_CASE("non-finite unconstrained input is rejected") {
    UnconstrainedParams u;
    u.rho_v = {std::numeric_limits<double>::quiet_NaN()};
    u.rho_r = 0.0;
    CHECK_THROWS_AS(to_constrained(u), ConfigError);
}

TEST_CASE("process noise stays positive semidefinite") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> sig(1e-3, 49.1);
    ModelConfig cfg;
    for (int rep = 0; rep < 25; ++rep) {
        const auto q = build_Q<double>(sig(rng), cfg);
        Eigen::Matrix4d qe;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) qe(r, c) = q(r, c);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(qe);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
}

TEST_CASE("builder gradients in unconstrained space match finite differences") {
    const double rho = std::log(1.7);
    ModelConfig cfg;
    const auto q = build_Q<D1>(exp(D1::parameter(rho, 0)), cfg);
    const auto fd = oracle::finite_difference_gradient(
        [&](const std::vector<double>& v) {
            return build_Q<double>(std::exp(v[0]), cfg)(0, 0);
        },
        {rho});
    CHECK(std::fabs(q(0, 0).tangent(0) - fd[0]) / std::max(1.0, std::fabs(fd[0])) < 1e-5);

    const double lam = logit(0.97);
    InlineVec<D1, kMaxModes> stay;
    stay.push_back(sigmoid(D1::parameter(lam, 0)));
    stay.push_back(D1::constant(0.95));
    const auto tr = build_transition<D1>(stay);
    const auto fd_tr = oracle::finite_difference_gradient(
        [&](const std::vector<double>& v) {
            InlineVec<double, kMaxModes> s{sigmoid(v[0]), 0.95};
            return build_transition<double>(s)(0, 1);
        },
        {lam});
    CHECK(std::fabs(tr(0, 1).tangent(0) - fd_tr[0]) /
              std::max(1.0, std::fabs(fd_tr[0])) <
          1e-5);
}

TEST_CASE("parameter JSON round trip") {
    ParamVector theta;
    theta.sigma_v = {0.37, 22.5};
    theta.p_stay = {0.97, 0.951};
    theta.sigma_r = 7.25;
    ModelConfig cfg;
    cfg.tau = 1.0;
    cfg.m = 2;

    const std::string text = params_to_json_string(theta, cfg);
    const auto [back, back_cfg] = params_from_json_string(text);
    CHECK(back.sigma_v == theta.sigma_v);
    CHECK(back.p_stay == theta.p_stay);
    CHECK(back.sigma_r == theta.sigma_r);
    CHECK(back_cfg.tau == cfg.tau);
    CHECK(back_cfg.m == cfg.m);

    const auto tmp = std::filesystem::temp_directory_path() / "immfit_params_test.json";
    save_params(tmp.string(), theta, cfg);
    const auto [loaded, loaded_cfg] = load_params(tmp.string());
    CHECK(loaded.sigma_v == theta.sigma_v);
    CHECK(loaded.sigma_r == theta.sigma_r);
    CHECK(loaded_cfg.m == cfg.m);
    std::filesystem::remove(tmp);

    CHECK_THROWS_AS(params_from_json_string("{not json"), ConfigError);
    CHECK_THROWS_AS(params_from_json_string("{\"sigma_v\": [1.0]}"), ConfigError);
    CHECK_THROWS_AS(load_params("/nonexistent/params.json"), IoError);
}

TEST_CASE("parameter layout slots and names") {
    const ParamLayout two(2);
    CHECK(two.dim() == 5);
    CHECK(two.sigma_v_slot(0) == 0);
    CHECK(two.sigma_v_slot(1) == 1);
    CHECK(two.p_stay_slot(0) == 2);
    CHECK(two.p_stay_slot(1) == 3);
    CHECK(two.sigma_r_slot() == 4);
    CHECK(two.slot_name(0) == "sigma_v0");
    CHECK(two.slot_name(3) == "p11");
    CHECK(two.slot_name(4) == "sigma_r");

    const ParamLayout one(1);
    CHECK(one.dim() == 2);
    CHECK(one.sigma_r_slot() == 1);
    CHECK_THROWS_AS(one.p_stay_slot(0), ConfigError);
}

TEST_CASE("freeze masks map onto slots") {
    const ParamLayout layout(2);
    const FreezeMask all{true, true};
    const FreezeMask meas_only{false, true};
    const auto all_slots = all.trainable_slots(layout);
    for (bool b : all_slots) CHECK(b);
    const auto meas_slots = meas_only.trainable_slots(layout);
    CHECK(meas_slots == std::vector<bool>{false, false, false, false, true});
}

TEST_CASE("lifting seeds tangents only for trained groups") {
    ParamVector theta;
    theta.sigma_v = {0.5, 20.0};
    theta.p_stay = {0.97, 0.95};
    theta.sigma_r = 5.0;

    const auto all = lift_params<5>(theta, FreezeMask{true, true});
    CHECK(all.sigma_v[0].value() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(all.sigma_v[0].tangent(0) != 0.0);
    CHECK(all.sigma_r.tangent(4) != 0.0);

    const auto frozen_motion = lift_params<5>(theta, FreezeMask{false, true});
    for (int k = 0; k < 5; ++k) {
        CHECK(frozen_motion.sigma_v[0].tangent(k) == 0.0);
        CHECK(frozen_motion.p_stay[1].tangent(k) == 0.0);
    }
    CHECK(frozen_motion.sigma_r.tangent(4) != 0.0);

    CHECK_THROWS_AS((lift_params<2>(theta, FreezeMask{})), ConfigError);
}

#ifndef IMMFIT_MODELS_HPP
#define IMMFIT_MODELS_HPP

#include <cmath>

#include "immfit/dual.hpp"
#include "immfit/inline_vec.hpp"
#include "immfit/matrix.hpp"
#include "immfit/params.hpp"

namespace immfit {

inline constexpr int kMaxModes = 4;

// Markov mode-transition matrix. p(i,j) is the probability of switching from
// mode i to mode j within one step; every row sums to 1.
template <class S>
struct Transition {
    int m = 0;
    std::array<S, static_cast<std::size_t>(kMaxModes) * kMaxModes> p{};

    S& operator()(int i, int j) { return p[static_cast<std::size_t>(i) * kMaxModes + j]; }
    const S& operator()(int i, int j) const {
        return p[static_cast<std::size_t>(i) * kMaxModes + j];
    }
};

// Constant-velocity transition, block [[1, tau], [0, 1]] per axis.
template <class S>
Mat<S, 4, 4> build_F(const ModelConfig& cfg) {
    Mat<S, 4, 4> f = Mat<S, 4, 4>::identity();
    f(0, 1) = S(cfg.tau);
    f(2, 3) = S(cfg.tau);
    return f;
}

// White-noise-acceleration process covariance,
// block sigma_v^2 * [[tau^3/3, tau^2/2], [tau^2/2, tau]] per axis.
template <class S>
Mat<S, 4, 4> build_Q(const S& sigma_v, const ModelConfig& cfg) {
    const double t = cfg.tau;
    const S s2 = sigma_v * sigma_v;
    Mat<S, 4, 4> q;
    const S q_pp = s2 * (t * t * t / 3.0);
    const S q_pv = s2 * (t * t / 2.0);
    const S q_vv = s2 * t;
    for (int axis = 0; axis < 2; ++axis) {
        const int o = 2 * axis;
        q(o, o) = q_pp;
        q(o, o + 1) = q_pv;
        q(o + 1, o) = q_pv;
        q(o + 1, o + 1) = q_vv;
    }
    return q;
}

// Position-selecting measurement matrix.
template <class S>
Mat<S, 2, 4> build_H(const ModelConfig& = {}) {
    Mat<S, 2, 4> h;
    h(0, 0) = S(1.0);
    h(1, 2) = S(1.0);
    return h;
}

template <class S>
Mat<S, 2, 2> build_R(const S& sigma_r) {
    const S s2 = sigma_r * sigma_r;
    Mat<S, 2, 2> r;
    r(0, 0) = s2;
    r(1, 1) = s2;
    return r;
}

// Diagonal entries come from p_stay; each row's remaining mass is split
// uniformly over the other modes. For m = 1 the matrix is [1].
template <class S>
Transition<S> build_transition(const InlineVec<S, kMaxModes>& p_stay) {
    const int m = p_stay.size();
    if (m < 1) throw ConfigError("transition matrix needs at least one mode");
    if (m > kMaxModes) throw ConfigError("at most 4 modes supported");
    Transition<S> t;
    t.m = m;
    if (m == 1) {
        t(0, 0) = S(1.0);
        return t;
    }
    for (int i = 0; i < m; ++i) {
        const double pv = value_of(p_stay[i]);
        if (!(pv > 0.0) || !(pv < 1.0)) {
            throw ConfigError("p_stay must lie strictly inside (0,1)");
        }
        const S off = (1.0 - p_stay[i]) * (1.0 / (m - 1));
        for (int j = 0; j < m; ++j) t(i, j) = (i == j) ? p_stay[i] : off;
    }
    return t;
}

// Motion model with its Jacobian hook. The shipped model is linear, so the
// Jacobian is the constant F; nonlinear models would re-linearize per state.
template <class S>
struct MotionModel {
    Mat<S, 4, 4> F;

    Vec<S, 4> apply(const Vec<S, 4>& x) const { return F * x; }
    const Mat<S, 4, 4>& jacobian(const Vec<S, 4>&) const { return F; }
};

template <class S>
struct MeasurementModel {
    Mat<S, 2, 4> H;

    Vec<S, 2> apply(const Vec<S, 4>& x) const { return H * x; }
    const Mat<S, 2, 4>& jacobian(const Vec<S, 4>&) const { return H; }
};

// Filter parameters lifted into the working scalar type. For S = Dual the
// trainable entries carry tangent seeds in unconstrained space; frozen
// entries are constants.
template <class S>
struct FilterParams {
    InlineVec<S, kMaxModes> sigma_v;
    InlineVec<S, kMaxModes> p_stay;
    S sigma_r = S(1.0);

    int modes() const { return sigma_v.size(); }
};

inline FilterParams<double> to_filter_params(const ParamVector& theta) {
    theta.validate();
    FilterParams<double> p;
    for (double s : theta.sigma_v) p.sigma_v.push_back(s);
    for (double s : theta.p_stay) p.p_stay.push_back(s);
    p.sigma_r = theta.sigma_r;
    return p;
}

// Seeds each trainable coordinate in unconstrained space and maps back to
// the constrained values through exp/sigmoid, so tangents are derivatives
// with respect to (rho_v, lambda_p, rho_r).
template <int D>
FilterParams<Dual<D>> lift_params(const ParamVector& theta, const FreezeMask& mask) {
    theta.validate();
    const ParamLayout layout(theta.modes());
    if (layout.dim() != D) {
        throw ConfigError("tangent width " + std::to_string(D) +
                          " does not match layout dimension " +
                          std::to_string(layout.dim()));
    }
    const UnconstrainedParams u = to_unconstrained(theta);
    FilterParams<Dual<D>> p;
    for (int i = 0; i < theta.modes(); ++i) {
        if (mask.train_motion) {
            p.sigma_v.push_back(
                exp(Dual<D>::parameter(u.rho_v[i], layout.sigma_v_slot(i))));
        } else {
            p.sigma_v.push_back(Dual<D>::constant(theta.sigma_v[i]));
        }
    }
    for (int i = 0; i < theta.modes(); ++i) {
        if (theta.modes() >= 2 && mask.train_motion) {
            p.p_stay.push_back(
                sigmoid(Dual<D>::parameter(u.lambda_p[i], layout.p_stay_slot(i))));
        } else {
            p.p_stay.push_back(Dual<D>::constant(theta.p_stay[i]));
        }
    }
    if (mask.train_meas) {
        p.sigma_r = exp(Dual<D>::parameter(u.rho_r, layout.sigma_r_slot()));
    } else {
        p.sigma_r = Dual<D>::constant(theta.sigma_r);
    }
    return p;
}

// All time-invariant filter matrices assembled once per pass.
template <class S>
struct FilterModel {
    MotionModel<S> motion;                      // shared F
    InlineVec<Mat<S, 4, 4>, kMaxModes> process_noise;  // per-mode Q
    MeasurementModel<S> meas;
    Mat<S, 2, 2> R;
    Transition<S> transition;
    S sigma_r = S(1.0);
    double tau = 1.0;

    int modes() const { return process_noise.size(); }
};

template <class S>
FilterModel<S> build_filter_model(const FilterParams<S>& p, const ModelConfig& cfg) {
    cfg.validate();
    if (p.modes() != cfg.m) {
        throw ShapeError("parameter mode count does not match model config");
    }
    FilterModel<S> model;
    model.motion.F = build_F<S>(cfg);
    for (int i = 0; i < p.modes(); ++i) {
        model.process_noise.push_back(build_Q<S>(p.sigma_v[i], cfg));
    }
    model.meas.H = build_H<S>(cfg);
    model.R = build_R<S>(p.sigma_r);
    model.transition = build_transition<S>(p.p_stay);
    model.sigma_r = p.sigma_r;
    model.tau = cfg.tau;
    return model;
}

}  // namespace immfit

#endif  // IMMFIT_MODELS_HPP

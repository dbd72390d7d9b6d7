#ifndef IMMFIT_FILTERS_HPP
#define IMMFIT_FILTERS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>

#include "immfit/models.hpp"

namespace immfit {

// Predicted mode weights below this are clamped (as constants, outside the
// gradient) and the weight vector renormalized; the mixing step divides by
// them. Values below kWeightUnderflow abort instead.
inline constexpr double kWeightFloor = 1e-12;
inline constexpr double kWeightUnderflow = 1e-300;

template <class S>
struct GaussianState {
    Vec<S, 4> mean;      // (px, vx, py, vy)
    Mat<S, 4, 4> cov;
};

template <class S>
struct ImmBelief {
    InlineVec<GaussianState<S>, kMaxModes> modes;
    InlineVec<S, kMaxModes> weights;

    int mode_count() const { return modes.size(); }
};

// Moment-matched one-step-ahead measurement distribution, computed from the
// predicted (pre-update) belief. The likelihood loss evaluates measurements
// against exactly this Gaussian.
template <class S>
struct MeasPrediction {
    Vec<S, 2> mean;
    Mat<S, 2, 2> cov;
};

template <class S>
struct StepRecord {
    ImmBelief<S> predicted;   // per-mode predicted states with weights w_{t|t-1}
    ImmBelief<S> posterior;
    InlineVec<S, kMaxModes> per_mode_loglik;  // log-likelihood of z per mode
    S normalizer_log = S(0.0);                // log of the weight normalizer
    MeasPrediction<S> meas_prediction;
};

template <class S>
GaussianState<S> kf_predict(const GaussianState<S>& s, const MotionModel<S>& motion,
                            const Mat<S, 4, 4>& q) {
    const Mat<S, 4, 4>& f = motion.jacobian(s.mean);
    GaussianState<S> out;
    out.mean = motion.apply(s.mean);
    out.cov = (f * s.cov * f.transposed() + q).symmetrized();
    return out;
}

template <class S>
struct KfUpdateResult {
    GaussianState<S> posterior;
    S loglik = S(0.0);  // log N(z; h(x), S)
};

// Measurement update with the Joseph-form covariance, which stays valid for
// the suboptimal gains that occur while parameters are still wrong.
template <class S>
KfUpdateResult<S> kf_update(const GaussianState<S>& s, const Vec<double, 2>& z,
                            const MeasurementModel<S>& meas, const Mat<S, 2, 2>& r) {
    const Mat<S, 2, 4>& h = meas.jacobian(s.mean);
    const Vec<S, 2> z_pred = meas.apply(s.mean);
    const Mat<S, 2, 2> innov_cov = (h * s.cov * h.transposed() + r).symmetrized();
    const Cholesky<S, 2> chol = Cholesky<S, 2>::compute(innov_cov);

    // K = P H^T S^-1, computed as K^T = S^-1 H P (P symmetric).
    const Mat<S, 4, 2> gain = chol.solve(h * s.cov).transposed();

    Vec<S, 2> resid;
    for (int i = 0; i < 2; ++i) resid(i, 0) = S(z(i, 0)) - z_pred(i, 0);

    KfUpdateResult<S> out;
    out.posterior.mean = s.mean + gain * resid;
    const Mat<S, 4, 4> a = Mat<S, 4, 4>::identity() - gain * h;
    out.posterior.cov =
        (a * s.cov * a.transposed() + gain * r * gain.transposed()).symmetrized();

    const Vec<S, 2> white = chol.forward_solve(resid);
    const S mahal = white(0, 0) * white(0, 0) + white(1, 0) * white(1, 0);
    out.loglik = (chol.log_det() + mahal + 2.0 * detail::kLogTwoPi) * -0.5;
    return out;
}

template <class S>
struct MixResult {
    InlineVec<GaussianState<S>, kMaxModes> mixed;  // x^{0j}, P^{0j}
    InlineVec<S, kMaxModes> predicted_weights;     // w_{t|t-1}
};

// Interaction step: predicted mode weights, per-target-mode mixing weights,
// and moment-matched mixed states.
template <class S>
MixResult<S> imm_mix(const ImmBelief<S>& b, const Transition<S>& tr) {
    const int m = b.mode_count();
    if (tr.m != m) throw ShapeError("transition size does not match belief");

    MixResult<S> out;
    for (int j = 0; j < m; ++j) {
        S wp = tr(0, j) * b.weights[0];
        for (int i = 1; i < m; ++i) wp += tr(i, j) * b.weights[i];
        if (value_of(wp) < kWeightUnderflow) {
            throw DegenerateWeightError(
                "predicted weight underflow in mode " + std::to_string(j), j);
        }
        out.predicted_weights.push_back(wp);
    }

    bool clamped = false;
    for (int j = 0; j < m; ++j) {
        if (value_of(out.predicted_weights[j]) < kWeightFloor) {
            out.predicted_weights[j] = S(kWeightFloor);
            clamped = true;
        }
    }
    if (clamped) {
        S total = out.predicted_weights[0];
        for (int j = 1; j < m; ++j) total += out.predicted_weights[j];
        for (int j = 0; j < m; ++j) {
            out.predicted_weights[j] = out.predicted_weights[j] / total;
        }
    }

    for (int j = 0; j < m; ++j) {
        InlineVec<S, kMaxModes> mix_w;
        for (int i = 0; i < m; ++i) {
            mix_w.push_back(tr(i, j) * b.weights[i] / out.predicted_weights[j]);
        }
        GaussianState<S> mixed;
        mixed.mean = b.modes[0].mean.scaled(mix_w[0]);
        for (int i = 1; i < m; ++i) {
            mixed.mean += b.modes[i].mean.scaled(mix_w[i]);
        }
        Mat<S, 4, 4> cov = Mat<S, 4, 4>::zero();
        for (int i = 0; i < m; ++i) {
            const Vec<S, 4> d = b.modes[i].mean - mixed.mean;
            cov += (b.modes[i].cov + outer(d, d)).scaled(mix_w[i]);
        }
        mixed.cov = cov.symmetrized();
        out.mixed.push_back(mixed);
    }
    return out;
}

// Moment-matched measurement prediction over the per-mode predicted states.
template <class S>
MeasPrediction<S> predicted_measurement_moments(
    const InlineVec<GaussianState<S>, kMaxModes>& predicted,
    const InlineVec<S, kMaxModes>& weights, const MeasurementModel<S>& meas,
    const Mat<S, 2, 2>& r) {
    const int m = predicted.size();
    Vec<S, 4> state_mean = predicted[0].mean.scaled(weights[0]);
    for (int i = 1; i < m; ++i) state_mean += predicted[i].mean.scaled(weights[i]);

    MeasPrediction<S> out;
    out.mean = meas.apply(state_mean);

    Mat<S, 2, 2> cov = Mat<S, 2, 2>::zero();
    for (int i = 0; i < m; ++i) {
        const Mat<S, 2, 4>& h = meas.jacobian(predicted[i].mean);
        const Mat<S, 2, 2> s_i = h * predicted[i].cov * h.transposed() + r;
        const Vec<S, 2> nu = meas.apply(predicted[i].mean) - out.mean;
        cov += (s_i + outer(nu, nu)).scaled(weights[i]);
    }
    out.cov = cov.symmetrized();
    return out;
}

// One full IMM recursion step: interact, predict, form the measurement
// prediction, update each mode, and reweight in log space.
template <class S>
StepRecord<S> imm_step(const ImmBelief<S>& b, const Vec<double, 2>& z,
                       const FilterModel<S>& model) {
    using std::exp;
    using std::log;
    const int m = b.mode_count();
    if (model.modes() != m) throw ShapeError("model mode count does not match belief");

    const MixResult<S> mix = imm_mix(b, model.transition);

    StepRecord<S> rec;
    rec.predicted.weights = mix.predicted_weights;
    for (int j = 0; j < m; ++j) {
        rec.predicted.modes.push_back(
            kf_predict(mix.mixed[j], model.motion, model.process_noise[j]));
    }

    rec.meas_prediction = predicted_measurement_moments(
        rec.predicted.modes, rec.predicted.weights, model.meas, model.R);

    InlineVec<S, kMaxModes> log_joint;
    for (int j = 0; j < m; ++j) {
        KfUpdateResult<S> upd = kf_update(rec.predicted.modes[j], z, model.meas, model.R);
        rec.posterior.modes.push_back(upd.posterior);
        rec.per_mode_loglik.push_back(upd.loglik);
        log_joint.push_back(upd.loglik + log(rec.predicted.weights[j]));
    }

    double shift = value_of(log_joint[0]);
    for (int j = 1; j < m; ++j) shift = std::max(shift, value_of(log_joint[j]));
    if (!std::isfinite(shift)) {
        throw DegenerateWeightError("all mode likelihoods vanished", -1);
    }
    S sum_exp = exp(log_joint[0] - shift);
    for (int j = 1; j < m; ++j) sum_exp += exp(log_joint[j] - shift);
    rec.normalizer_log = log(sum_exp) + shift;
    for (int j = 0; j < m; ++j) {
        rec.posterior.weights.push_back(exp(log_joint[j] - rec.normalizer_log));
    }
    return rec;
}

// Moment-matched condensed estimate; only needed when a single Gaussian
// summary of the belief is requested.
template <class S>
GaussianState<S> imm_combine(const ImmBelief<S>& b) {
    const int m = b.mode_count();
    GaussianState<S> out;
    out.mean = b.modes[0].mean.scaled(b.weights[0]);
    for (int i = 1; i < m; ++i) out.mean += b.modes[i].mean.scaled(b.weights[i]);
    Mat<S, 4, 4> cov = Mat<S, 4, 4>::zero();
    for (int i = 0; i < m; ++i) {
        const Vec<S, 4> d = b.modes[i].mean - out.mean;
        cov += (b.modes[i].cov + outer(d, d)).scaled(b.weights[i]);
    }
    out.cov = cov.symmetrized();
    return out;
}

// Two-point differencing: position from the newest of the two leading
// measurements, velocity from their difference, covariance consistent with
// the measurement noise. All modes start identical with uniform weights.
template <class S>
ImmBelief<S> init_belief(const Vec<double, 2>& z0, const Vec<double, 2>& z1,
                         const S& sigma_r, double tau, int m) {
    if (m < 1 || m > kMaxModes) throw ConfigError("unsupported mode count");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");

    GaussianState<S> state;
    state.mean(0, 0) = S(z1(0, 0));
    state.mean(1, 0) = S((z1(0, 0) - z0(0, 0)) / tau);
    state.mean(2, 0) = S(z1(1, 0));
    state.mean(3, 0) = S((z1(1, 0) - z0(1, 0)) / tau);

    const S s2 = sigma_r * sigma_r;
    for (int axis = 0; axis < 2; ++axis) {
        const int o = 2 * axis;
        state.cov(o, o) = s2;
        state.cov(o, o + 1) = s2 * (1.0 / tau);
        state.cov(o + 1, o) = s2 * (1.0 / tau);
        state.cov(o + 1, o + 1) = s2 * (2.0 / (tau * tau));
    }

    ImmBelief<S> b;
    const S w = S(1.0 / m);
    for (int i = 0; i < m; ++i) {
        b.modes.push_back(state);
        b.weights.push_back(w);
    }
    return b;
}

// Runs the recursion over one measurement sequence, visiting every step
// record. Initialization consumes the first two measurements; the visitor
// sees steps t = 2 .. T-1.
template <class S, class Visitor>
void filter_pass(std::span<const std::array<double, 2>> zs, const FilterModel<S>& model,
                 Visitor&& visit) {
    if (zs.size() < 3) {
        throw DataError("trajectory needs at least 3 measurements, got " +
                        std::to_string(zs.size()));
    }
    const Vec<double, 2> z0{{zs[0][0], zs[0][1]}};
    const Vec<double, 2> z1{{zs[1][0], zs[1][1]}};
    ImmBelief<S> belief =
        init_belief(z0, z1, model.sigma_r, model.tau, model.modes());
    for (std::size_t t = 2; t < zs.size(); ++t) {
        const Vec<double, 2> z{{zs[t][0], zs[t][1]}};
        StepRecord<S> rec;
        try {
            rec = imm_step(belief, z, model);
        } catch (const FilterDivergenceError& e) {
            throw FilterDivergenceError(
                std::string(e.what()) + " at step " + std::to_string(t),
                static_cast<int>(t), e.trajectory());
        }
        visit(static_cast<int>(t), rec);
        belief = rec.posterior;
    }
}

}  // namespace immfit

#endif  // IMMFIT_FILTERS_HPP

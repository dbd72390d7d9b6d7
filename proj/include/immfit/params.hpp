#ifndef IMMFIT_PARAMS_HPP
#define IMMFIT_PARAMS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "immfit/dual.hpp"
#include "immfit/errors.hpp"

namespace immfit {

// Filter/model dimensions shared across the library. The shipped models are
// 2-D position/velocity kinematics with positional measurements.
struct ModelConfig {
    double tau = 1.0;  // step interval, seconds
    int m = 2;         // number of motion modes

    static constexpr int kStateDim = 4;  // (px, vx, py, vy)
    static constexpr int kMeasDim = 2;   // (zx, zy)

    void validate() const {
        if (!(tau > 0.0)) throw ConfigError("tau must be positive");
        if (m < 1) throw ConfigError("mode count must be >= 1");
    }
};

// The trainable filter parameters in their natural (constrained) space:
// per-mode process-noise levels, per-mode stay probabilities, and the
// measurement-noise level.
struct ParamVector {
    std::vector<double> sigma_v;  // process noise std dev per mode, m/s^2-scale
    std::vector<double> p_stay;   // diagonal transition probability per mode
    double sigma_r = 1.0;         // measurement noise std dev, meters

    int modes() const { return static_cast<int>(sigma_v.size()); }

    void validate() const {
        const int m = modes();
        if (m < 1) throw ConfigError("ParamVector needs at least one mode");
        if (static_cast<int>(p_stay.size()) != m) {
            throw ConfigError("p_stay size must match sigma_v size");
        }
        for (double s : sigma_v) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw ConfigError("sigma_v must be positive and finite");
            }
        }
        if (m == 1) {
            if (p_stay[0] != 1.0) {
                throw ConfigError("single-mode p_stay is fixed to 1");
            }
        } else {
            for (double p : p_stay) {
                if (!(p > 0.0) || !(p < 1.0)) {
                    throw ConfigError("p_stay must lie strictly inside (0,1)");
                }
            }
        }
        if (!(sigma_r > 0.0) || !std::isfinite(sigma_r)) {
            throw ConfigError("sigma_r must be positive and finite");
        }
    }
};

// Optimization-space image of a ParamVector: log for scales, logit for
// probabilities. Keeps AMSGrad unconstrained while the constrained vector
// stays positive / inside (0,1) by construction.
struct UnconstrainedParams {
    std::vector<double> rho_v;     // log sigma_v
    std::vector<double> lambda_p;  // logit p_stay (empty for m = 1)
    double rho_r = 0.0;            // log sigma_r
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }

template <class S>
S sigmoid(const S& x) {
    using std::exp;
    if (value_of(x) >= 0.0) {
        return 1.0 / (1.0 + exp(-x));
    }
    const S e = exp(x);
    return e / (1.0 + e);
}

inline UnconstrainedParams to_unconstrained(const ParamVector& theta) {
    theta.validate();
    UnconstrainedParams u;
    for (double s : theta.sigma_v) u.rho_v.push_back(std::log(s));
    if (theta.modes() >= 2) {
        for (double p : theta.p_stay) u.lambda_p.push_back(logit(p));
    }
    u.rho_r = std::log(theta.sigma_r);
    return u;
}

inline ParamVector to_constrained(const UnconstrainedParams& u) {
    ParamVector theta;
    for (double r : u.rho_v) {
        if (!std::isfinite(r)) throw ConfigError("non-finite rho_v");
        theta.sigma_v.push_back(std::exp(r));
    }
    if (u.lambda_p.empty()) {
        theta.p_stay.push_back(1.0);
    } else {
        for (double l : u.lambda_p) {
            if (!std::isfinite(l)) throw ConfigError("non-finite lambda_p");
            theta.p_stay.push_back(sigmoid(l));
        }
    }
    if (!std::isfinite(u.rho_r)) throw ConfigError("non-finite rho_r");
    theta.sigma_r = std::exp(u.rho_r);
    return theta;
}

// Assigns each unconstrained coordinate a tangent slot. Order: rho_v per
// mode, lambda_p per mode (absent for m = 1), rho_r last.
class ParamLayout {
public:
    explicit ParamLayout(int m) : m_(m) {
        if (m < 1) throw ConfigError("mode count must be >= 1");
    }

    int modes() const { return m_; }
    int dim() const { return m_ == 1 ? m_ + 1 : 2 * m_ + 1; }

    int sigma_v_slot(int mode) const { return mode; }
    int p_stay_slot(int mode) const {
        if (m_ == 1) throw ConfigError("single-mode layout has no p slot");
        return m_ + mode;
    }
    int sigma_r_slot() const { return dim() - 1; }

    std::string slot_name(int slot) const {
        if (slot < m_) return "sigma_v" + std::to_string(slot);
        if (slot == sigma_r_slot()) return "sigma_r";
        const int mode = slot - m_;
        return "p" + std::to_string(mode) + std::to_string(mode);
    }

    std::vector<double> flatten(const UnconstrainedParams& u) const {
        std::vector<double> flat(static_cast<std::size_t>(dim()));
        for (int i = 0; i < m_; ++i) flat[sigma_v_slot(i)] = u.rho_v[i];
        if (m_ >= 2) {
            for (int i = 0; i < m_; ++i) flat[p_stay_slot(i)] = u.lambda_p[i];
        }
        flat[sigma_r_slot()] = u.rho_r;
        return flat;
    }

    UnconstrainedParams unflatten(const std::vector<double>& flat) const {
        if (static_cast<int>(flat.size()) != dim()) {
            throw ShapeError("flat parameter vector has wrong length");
        }
        UnconstrainedParams u;
        for (int i = 0; i < m_; ++i) u.rho_v.push_back(flat[sigma_v_slot(i)]);
        if (m_ >= 2) {
            for (int i = 0; i < m_; ++i) u.lambda_p.push_back(flat[p_stay_slot(i)]);
        }
        u.rho_r = flat[sigma_r_slot()];
        return u;
    }

private:
    int m_;
};

// Which parameter groups receive gradient updates. Frozen groups are lifted
// as constants, so their tangents (and optimizer updates) are exactly zero.
struct FreezeMask {
    bool train_motion = true;  // sigma_v per mode and p_stay per mode
    bool train_meas = true;    // sigma_r

    std::vector<bool> trainable_slots(const ParamLayout& layout) const {
        std::vector<bool> t(static_cast<std::size_t>(layout.dim()), false);
        for (int i = 0; i < layout.modes(); ++i) {
            t[layout.sigma_v_slot(i)] = train_motion;
        }
        if (layout.modes() >= 2) {
            for (int i = 0; i < layout.modes(); ++i) {
                t[layout.p_stay_slot(i)] = train_motion;
            }
        }
        t[layout.sigma_r_slot()] = train_meas;
        return t;
    }
};

// JSON (de)serialization; keys: sigma_v, p_stay, sigma_r, tau, m.
std::string params_to_json_string(const ParamVector& theta, const ModelConfig& cfg);
std::pair<ParamVector, ModelConfig> params_from_json_string(const std::string& text);
void save_params(const std::string& path, const ParamVector& theta, const ModelConfig& cfg);
std::pair<ParamVector, ModelConfig> load_params(const std::string& path);

}  // namespace immfit

#endif  // IMMFIT_PARAMS_HPP

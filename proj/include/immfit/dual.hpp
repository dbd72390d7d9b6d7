#ifndef IMMFIT_DUAL_HPP
#define IMMFIT_DUAL_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "immfit/errors.hpp"

namespace immfit {

// Forward-mode scalar: a value plus a dense tangent vector with one slot per
// trainable parameter. The tangent width N is fixed at compile time; freezing
// a parameter is done by lifting it as a constant, never by shrinking N.
//
// Constants (including plain double literals mixed into expressions) carry an
// all-zero tangent. Every operation propagates tangents by the chain rule, so
// any composite built from these scalars differentiates itself.
template <int N>
class Dual {
    static_assert(N >= 1, "tangent width must be positive");

public:
    static constexpr int kTangentSize = N;

    constexpr Dual() = default;

    // Implicit on purpose: lets generic filter code mix literals freely.
    constexpr Dual(double v) : value_(v) {}

    static constexpr Dual constant(double v) { return Dual(v); }

    // Seeds d(theta_slot)/d(theta_slot) = 1.
    static Dual parameter(double v, int slot) {
        if (slot < 0 || slot >= N) {
            throw ConfigError("parameter slot " + std::to_string(slot) +
                              " out of range for tangent width " +
                              std::to_string(N));
        }
        Dual d(v);
        d.tangent_[static_cast<std::size_t>(slot)] = 1.0;
        return d;
    }

    double value() const { return value_; }
    const std::array<double, N>& tangent() const { return tangent_; }
    double tangent(int i) const { return tangent_[static_cast<std::size_t>(i)]; }

    Dual operator-() const {
        Dual r(-value_);
        for (int i = 0; i < N; ++i) r.tangent_[i] = -tangent_[i];
        return r;
    }

    Dual& operator+=(const Dual& o) {
        value_ += o.value_;
        for (int i = 0; i < N; ++i) tangent_[i] += o.tangent_[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        value_ -= o.value_;
        for (int i = 0; i < N; ++i) tangent_[i] -= o.tangent_[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (int i = 0; i < N; ++i) {
            tangent_[i] = tangent_[i] * o.value_ + value_ * o.tangent_[i];
        }
        value_ *= o.value_;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        if (o.value_ == 0.0) throw NumericDomainError("divide", 0.0);
        const double inv = 1.0 / o.value_;
        value_ *= inv;
        for (int i = 0; i < N; ++i) {
            tangent_[i] = (tangent_[i] - value_ * o.tangent_[i]) * inv;
        }
        return *this;
    }

    Dual& operator+=(double s) {
        value_ += s;
        return *this;
    }
    Dual& operator-=(double s) {
        value_ -= s;
        return *this;
    }
    Dual& operator*=(double s) {
        value_ *= s;
        for (int i = 0; i < N; ++i) tangent_[i] *= s;
        return *this;
    }
    Dual& operator/=(double s) {
        if (s == 0.0) throw NumericDomainError("divide", 0.0);
        return (*this) *= (1.0 / s);
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }

    friend Dual operator+(Dual a, double b) { return a += b; }
    friend Dual operator-(Dual a, double b) { return a -= b; }
    friend Dual operator*(Dual a, double b) { return a *= b; }
    friend Dual operator/(Dual a, double b) { return a /= b; }
    friend Dual operator+(double a, Dual b) { return b += a; }
    friend Dual operator*(double a, Dual b) { return b *= a; }
    friend Dual operator-(double a, const Dual& b) {
        Dual r = -b;
        r.value_ += a;
        return r;
    }
    friend Dual operator/(double a, const Dual& b) { return Dual(a) /= b; }

    // Comparisons act on values; tangents never participate in control flow.
    friend bool operator<(const Dual& a, const Dual& b) { return a.value_ < b.value_; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.value_ > b.value_; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.value_ <= b.value_; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.value_ >= b.value_; }
    friend bool operator==(const Dual& a, const Dual& b) { return a.value_ == b.value_; }
    friend bool operator!=(const Dual& a, const Dual& b) { return a.value_ != b.value_; }

    friend Dual exp(const Dual& a) {
        const double e = std::exp(a.value_);
        Dual r(e);
        for (int i = 0; i < N; ++i) r.tangent_[i] = e * a.tangent_[i];
        return r;
    }

    friend Dual log(const Dual& a) {
        if (!(a.value_ > 0.0)) throw NumericDomainError("log", a.value_);
        Dual r(std::log(a.value_));
        const double inv = 1.0 / a.value_;
        for (int i = 0; i < N; ++i) r.tangent_[i] = inv * a.tangent_[i];
        return r;
    }

    friend Dual sqrt(const Dual& a) {
        if (!(a.value_ > 0.0)) throw NumericDomainError("sqrt", a.value_);
        const double s = std::sqrt(a.value_);
        Dual r(s);
        const double half_inv = 0.5 / s;
        for (int i = 0; i < N; ++i) r.tangent_[i] = half_inv * a.tangent_[i];
        return r;
    }

private:
    double value_ = 0.0;
    std::array<double, N> tangent_{};
};

// Uniform value access for code generic over double and Dual.
inline double value_of(double x) { return x; }

template <int N>
double value_of(const Dual<N>& x) {
    return x.value();
}

inline bool is_finite(double x) { return std::isfinite(x); }

template <int N>
bool is_finite(const Dual<N>& x) {
    if (!std::isfinite(x.value())) return false;
    for (int i = 0; i < N; ++i) {
        if (!std::isfinite(x.tangent(i))) return false;
    }
    return true;
}

}  // namespace immfit

#endif  // IMMFIT_DUAL_HPP

#ifndef IMMFIT_MATRIX_HPP
#define IMMFIT_MATRIX_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>

#include "immfit/dual.hpp"
#include "immfit/errors.hpp"

namespace immfit {

// Dense row-major matrix with compile-time shape, usable with plain doubles
// or Dual scalars. All filter-sized products (4x4, 2x4, 2x2) stay on the
// stack and unroll fully.
template <class T, int R, int C>
struct Mat {
    static_assert(R >= 1 && C >= 1, "matrix dimensions must be positive");

    std::array<T, static_cast<std::size_t>(R) * C> e{};

    static constexpr int rows() { return R; }
    static constexpr int cols() { return C; }

    T& operator()(int r, int c) { return e[static_cast<std::size_t>(r) * C + c]; }
    const T& operator()(int r, int c) const {
        return e[static_cast<std::size_t>(r) * C + c];
    }

    static Mat zero() { return Mat{}; }

    static Mat identity()
        requires(R == C)
    {
        Mat m;
        for (int i = 0; i < R; ++i) m(i, i) = T(1.0);
        return m;
    }

    Mat operator+(const Mat& o) const {
        Mat r;
        for (std::size_t i = 0; i < e.size(); ++i) r.e[i] = e[i] + o.e[i];
        return r;
    }

    Mat operator-(const Mat& o) const {
        Mat r;
        for (std::size_t i = 0; i < e.size(); ++i) r.e[i] = e[i] - o.e[i];
        return r;
    }

    Mat& operator+=(const Mat& o) {
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += o.e[i];
        return *this;
    }

    template <int K>
    Mat<T, R, K> operator*(const Mat<T, C, K>& o) const {
        Mat<T, R, K> r;
        for (int i = 0; i < R; ++i) {
            for (int j = 0; j < K; ++j) {
                T acc = (*this)(i, 0) * o(0, j);
                for (int k = 1; k < C; ++k) acc += (*this)(i, k) * o(k, j);
                r(i, j) = acc;
            }
        }
        return r;
    }

    Mat scaled(const T& s) const {
        Mat r;
        for (std::size_t i = 0; i < e.size(); ++i) r.e[i] = e[i] * s;
        return r;
    }

    // Cheaper path for constant factors: no tangent arithmetic on the scalar.
    Mat scaled(double s) const
        requires(!std::is_same_v<T, double>)
    {
        Mat r;
        for (std::size_t i = 0; i < e.size(); ++i) r.e[i] = e[i] * s;
        return r;
    }

    Mat<T, C, R> transposed() const {
        Mat<T, C, R> r;
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < C; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    // (M + M^T)/2; applied after covariance propagation to cancel FP drift.
    Mat symmetrized() const
        requires(R == C)
    {
        Mat r;
        for (int i = 0; i < R; ++i) {
            for (int j = 0; j < C; ++j) {
                r(i, j) = ((*this)(i, j) + (*this)(j, i)) * 0.5;
            }
        }
        return r;
    }
};

template <class T, int N>
using Vec = Mat<T, N, 1>;

// Outer product v * w^T.
template <class T, int N>
Mat<T, N, N> outer(const Vec<T, N>& v, const Vec<T, N>& w) {
    Mat<T, N, N> r;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r(i, j) = v(i, 0) * w(j, 0);
    return r;
}

template <class T, int R, int C>
Mat<T, R, C> lift(const Mat<double, R, C>& m) {
    Mat<T, R, C> r;
    for (std::size_t i = 0; i < m.e.size(); ++i) r.e[i] = T(m.e[i]);
    return r;
}

template <class T, int R, int C>
Mat<double, R, C> values_of(const Mat<T, R, C>& m) {
    Mat<double, R, C> r;
    for (std::size_t i = 0; i < m.e.size(); ++i) r.e[i] = value_of(m.e[i]);
    return r;
}

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
// Running the factorization in Dual arithmetic propagates tangents through
// the solve and the log-determinant for free, which keeps d(M^-1) and
// d(logdet M) consistent with the value path.
template <class T, int N>
struct Cholesky {
    Mat<T, N, N> lower;

    static Cholesky compute(const Mat<T, N, N>& m) {
        using std::sqrt;
        Cholesky f;
        for (int j = 0; j < N; ++j) {
            T d = m(j, j);
            for (int k = 0; k < j; ++k) d -= f.lower(j, k) * f.lower(j, k);
            if (!(value_of(d) > 0.0)) {
                throw FilterDivergenceError(
                    "non-positive Cholesky pivot " + std::to_string(value_of(d)) +
                    " at row " + std::to_string(j));
            }
            f.lower(j, j) = sqrt(d);
            for (int i = j + 1; i < N; ++i) {
                T s = m(i, j);
                for (int k = 0; k < j; ++k) s -= f.lower(i, k) * f.lower(j, k);
                f.lower(i, j) = s / f.lower(j, j);
            }
        }
        return f;
    }

    // Solves L y = b (forward substitution).
    template <int K>
    Mat<T, N, K> forward_solve(const Mat<T, N, K>& b) const {
        Mat<T, N, K> y;
        for (int c = 0; c < K; ++c) {
            for (int i = 0; i < N; ++i) {
                T s = b(i, c);
                for (int k = 0; k < i; ++k) s -= lower(i, k) * y(k, c);
                y(i, c) = s / lower(i, i);
            }
        }
        return y;
    }

    // Solves (L L^T) x = b.
    template <int K>
    Mat<T, N, K> solve(const Mat<T, N, K>& b) const {
        Mat<T, N, K> y = forward_solve(b);
        Mat<T, N, K> x;
        for (int c = 0; c < K; ++c) {
            for (int i = N - 1; i >= 0; --i) {
                T s = y(i, c);
                for (int k = i + 1; k < N; ++k) s -= lower(k, i) * x(k, c);
                x(i, c) = s / lower(i, i);
            }
        }
        return x;
    }

    T log_det() const {
        using std::log;
        T s = log(lower(0, 0));
        for (int i = 1; i < N; ++i) s += log(lower(i, i));
        return s * 2.0;
    }
};

template <class T, int N, int K>
Mat<T, N, K> solve_spd(const Mat<T, N, N>& m, const Mat<T, N, K>& b) {
    return Cholesky<T, N>::compute(m).solve(b);
}

template <class T, int N>
T logdet_spd(const Mat<T, N, N>& m) {
    return Cholesky<T, N>::compute(m).log_det();
}

namespace detail {
inline const double kLogTwoPi = std::log(2.0 * 3.14159265358979323846);
}

// log N(z; mean, cov) for a measured (constant) z.
template <class T, int L>
T gaussian_log_pdf(const Vec<double, L>& z, const Vec<T, L>& mean,
                   const Mat<T, L, L>& cov) {
    Vec<T, L> resid;
    for (int i = 0; i < L; ++i) resid(i, 0) = T(z(i, 0)) - mean(i, 0);
    const Cholesky<T, L> chol = Cholesky<T, L>::compute(cov);
    const Vec<T, L> w = chol.forward_solve(resid);
    T mahal = w(0, 0) * w(0, 0);
    for (int i = 1; i < L; ++i) mahal += w(i, 0) * w(i, 0);
    return (chol.log_det() + mahal + L * detail::kLogTwoPi) * -0.5;
}

}  // namespace immfit

#endif  // IMMFIT_MATRIX_HPP

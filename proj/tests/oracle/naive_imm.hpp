#ifndef IMMFIT_TESTS_ORACLE_NAIVE_IMM_HPP
#define IMMFIT_TESTS_ORACLE_NAIVE_IMM_HPP

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "immfit/params.hpp"

namespace oracle {

// Literal transcription of the mode-mixing filter recursion, kept
// deliberately naive: explicit matrix inverses and determinants, linear-space
// mode likelihoods, and the plain (non-Joseph) covariance update. Shares no
// code with the library under test. Suitable for short sequences only.
struct NaiveStep {
    std::vector<Eigen::Vector4d> mode_means;       // posterior per mode
    std::vector<Eigen::Matrix4d> mode_covs;
    Eigen::VectorXd weights;                       // posterior mode weights
    Eigen::VectorXd predicted_weights;
    Eigen::Vector4d combined_mean;                 // moment-matched posterior
    Eigen::Matrix4d combined_cov;
    Eigen::Vector2d predicted_meas_mean;
    Eigen::Matrix2d predicted_meas_cov;
    double step_nll = 0.0;  // -log N(z_t; predicted measurement)
};

struct NaiveResult {
    std::vector<NaiveStep> steps;  // t = 2 .. T-1
    double total_nll = 0.0;
};

NaiveResult naive_imm_reference(const std::vector<std::array<double, 2>>& measurements,
                                const immfit::ParamVector& theta, double tau);

}  // namespace oracle

#endif  // IMMFIT_TESTS_ORACLE_NAIVE_IMM_HPP

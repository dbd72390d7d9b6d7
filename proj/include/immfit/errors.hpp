#ifndef IMMFIT_ERRORS_HPP
#define IMMFIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace immfit {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration: bad parameter slot, non-finite input, unsupported
// mode count, malformed spec file.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Runtime dimension mismatch (mode counts, sequence lengths).
class ShapeError : public Error {
public:
    using Error::Error;
};

// Scalar operation outside its domain (log/sqrt of non-positive value,
// division by zero). Carries the offending operation and operand.
class NumericDomainError : public Error {
public:
    NumericDomainError(const std::string& op, double operand)
        : Error(op + ": domain violation at operand " + std::to_string(operand)),
          op_(op),
          operand_(operand) {}

    const std::string& op() const { return op_; }
    double operand() const { return operand_; }

private:
    std::string op_;
    double operand_;
};

// An innovation or state covariance lost positive definiteness. The step and
// trajectory indices are filled in by the filter recursion when known.
class FilterDivergenceError : public Error {
public:
    explicit FilterDivergenceError(const std::string& msg, int step = -1,
                                   int trajectory = -1)
        : Error(msg), step_(step), trajectory_(trajectory) {}

    int step() const { return step_; }
    int trajectory() const { return trajectory_; }

private:
    int step_;
    int trajectory_;
};

// A mode weight underflowed or all mode likelihoods vanished.
class DegenerateWeightError : public Error {
public:
    DegenerateWeightError(const std::string& msg, int mode)
        : Error(msg), mode_(mode) {}

    int mode() const { return mode_; }

private:
    int mode_;
};

// Input data violates a precondition (e.g. trajectory shorter than two
// measurements).
class DataError : public Error {
public:
    using Error::Error;
};

// File read/write failure; message includes the path.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg, const std::string& path)
        : Error(msg + ": " + path), path_(path) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Training aborted (non-finite gradient or loss). Carries the epoch index.
class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, int epoch)
        : Error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

    int epoch() const { return epoch_; }

private:
    int epoch_;
};

// Relative change against a zero baseline.
class UndefinedBaselineError : public Error {
public:
    using Error::Error;
};

}  // namespace immfit

#endif  // IMMFIT_ERRORS_HPP

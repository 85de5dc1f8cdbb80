#pragma once

#include <stdexcept>
#include <string>

namespace agediff {

/// Failure categories, mapped to CLI exit codes by the tool driver.
enum class ErrorCode {
    validation,        ///< bad input, config, precondition, grid mismatch
    causality,         ///< evolution operator requested backwards in age
    invalid_coefficient,
    step_construction,
    near_spectrum,     ///< (1 - Q_lambda) or the perturbed system is not invertible
    degenerate_spectrum,
    numerical,         ///< iteration failure, non-finite values
    size_limit,
    internal           ///< invariant broken inside the library (a bug)
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(ErrorCode::validation, what) {}
};

struct CausalityError : Error {
    explicit CausalityError(const std::string& what) : Error(ErrorCode::causality, what) {}
};

struct InvalidCoefficientError : Error {
    explicit InvalidCoefficientError(const std::string& what)
        : Error(ErrorCode::invalid_coefficient, what) {}
};

struct StepConstructionError : Error {
    explicit StepConstructionError(const std::string& what)
        : Error(ErrorCode::step_construction, what) {}
};

/// lambda is at or near an eigenvalue: the linear system is effectively singular.
struct NearSpectrumError : Error {
    NearSpectrumError(double lambda, double condition, const std::string& what)
        : Error(ErrorCode::near_spectrum, what), lambda(lambda), condition(condition) {}
    double lambda;
    double condition;
};

struct DegenerateSpectrumError : Error {
    DegenerateSpectrumError(double top, double second, const std::string& what)
        : Error(ErrorCode::degenerate_spectrum, what), top(top), second(second) {}
    double top;
    double second;
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorCode::numerical, what) {}
};

struct SizeLimitError : Error {
    explicit SizeLimitError(const std::string& what) : Error(ErrorCode::size_limit, what) {}
};

struct InternalError : Error {
    explicit InternalError(const std::string& what) : Error(ErrorCode::internal, what) {}
};

/// Exit code contract used by the CLI: 0 ok, 2 near-spectrum, 3 validation,
/// 4 numerical failure, 5 verify-suite failure.
inline int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::validation:
        case ErrorCode::causality:
        case ErrorCode::invalid_coefficient:
        case ErrorCode::size_limit:
            return 3;
        case ErrorCode::near_spectrum:
            return 2;
        default:
            return 4;
    }
}

}  // namespace agediff

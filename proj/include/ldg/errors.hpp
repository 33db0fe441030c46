#ifndef LDG_ERRORS_HPP
#define LDG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ldg {

// Error taxonomy mirrored by the CLI exit codes: configuration errors exit
// with 2, model/assumption violations with 3, I/O failures with 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// The model itself breaks a requirement (non-ergodic chain, zero occupancy
// mass, ill-conditioned system).
struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// A stated assumption of an estimator fails (singular A without
// regularization, dependent feature columns).
struct AssumptionError : ModelError {
    explicit AssumptionError(const std::string& msg) : ModelError(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ldg

#endif

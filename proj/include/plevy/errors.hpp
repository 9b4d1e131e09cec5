#pragma once
// Exception taxonomy shared across the library. The CLI maps these onto
// process exit codes (configuration/validation -> 2, solver -> 3).

#include <stdexcept>
#include <string>

namespace plevy {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct SolverError : std::runtime_error {
    SolverError(const std::string& what, int step_index, double last_residual)
        : std::runtime_error(what), step(step_index), residual(last_residual) {}
    int step;
    double residual;
};

}  // namespace plevy

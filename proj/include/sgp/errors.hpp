#pragma once

#include <stdexcept>
#include <string>

namespace sgp {

struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

struct NoWeakDerivative : std::runtime_error {
    explicit NoWeakDerivative(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidMeasure : std::runtime_error {
    explicit InvalidMeasure(const std::string& what) : std::runtime_error(what) {}
};

struct StructureViolation : std::runtime_error {
    explicit StructureViolation(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sgp

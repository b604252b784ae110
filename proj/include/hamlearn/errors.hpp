#pragma once

#include <stdexcept>
#include <string>

namespace hamlearn {

// Invalid user-facing configuration (dimensions, ranges, flags).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Violated call contract between modules (shape/basis mismatches and the like).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Geometry degenerate enough to break the physics (coincident atoms).
class DegenerateGeometryError : public std::runtime_error {
 public:
  explicit DegenerateGeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative solver failed to converge; message carries residual diagnostics.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// Ground state degenerate where a unique one is required.
class DegeneracyError : public std::runtime_error {
 public:
  explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric not defined for the given inputs (e.g. zero target variance).
class UndefinedMetricError : public std::runtime_error {
 public:
  explicit UndefinedMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hamlearn

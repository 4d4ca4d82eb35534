#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace selfsim {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed: non-convergence, invariant breach, exhausted scan.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::string module, const std::string& message, int iteration = -1,
              double residual = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(module + ": " + message + detail(iteration, residual)),
        module_(std::move(module)),
        iteration_(iteration),
        residual_(residual) {}

  const std::string& module() const noexcept { return module_; }
  int iteration() const noexcept { return iteration_; }
  double residual() const noexcept { return residual_; }

 private:
  static std::string detail(int iteration, double residual) {
    std::string s;
    if (iteration >= 0) s += " (iteration " + std::to_string(iteration);
    if (!std::isnan(residual)) {
      s += s.empty() ? " (" : ", ";
      s += "residual " + std::to_string(residual);
    }
    if (!s.empty()) s += ")";
    return s;
  }

  std::string module_;
  int iteration_;
  double residual_;
};

/// Invalid run configuration; carries the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace selfsim

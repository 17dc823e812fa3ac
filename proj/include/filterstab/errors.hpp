#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace filterstab {

/// Operands live in spaces of different dimension.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two grids cannot be compared node by node.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A quadrature, truncation or mass check failed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Bayes denominator vanished (or underflowed) for an observation.
class DegenerateUpdate : public std::runtime_error {
 public:
  DegenerateUpdate(const std::string& what, double observation, std::ptrdiff_t step = -1)
      : std::runtime_error(what), observation_(observation), step_(step) {}

  double observation() const noexcept { return observation_; }
  std::ptrdiff_t step() const noexcept { return step_; }

 private:
  double observation_;
  std::ptrdiff_t step_;
};

/// Particle weights collapsed (effective sample size below 2).
class ParticleDegeneracy : public std::runtime_error {
 public:
  ParticleDegeneracy(const std::string& what, std::ptrdiff_t step)
      : std::runtime_error(what), step_(step) {}

  std::ptrdiff_t step() const noexcept { return step_; }

 private:
  std::ptrdiff_t step_;
};

/// Invalid experiment configuration; `key()` names the offending entry when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : std::runtime_error(what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace filterstab

#pragma once

#include <stdexcept>
#include <string>

namespace rsdrl {

// Invalid numeric parameter (tau outside (0,1], gamma == 0, ...).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Two value grids have no common refinement.
class AlignmentError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A probability table violates nonnegativity or normalization.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A value does not lie on the reward lattice.
class GridClosureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A policy is undefined at an augmented state that was reached.
class CoverageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Inputs with mismatched structure (sizes, grids, horizons).
class StructureError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace rsdrl

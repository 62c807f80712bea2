#pragma once

#include <stdexcept>
#include <string>

namespace qqvar {

/// Invalid argument to a numerical routine (non-finite input, level outside (0,1), empty sample).
class ArgumentError : public std::invalid_argument {
public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// A weight vector whose projected scale vanishes.
class DegenerateProjection : public ArgumentError {
public:
  explicit DegenerateProjection(const std::string& what) : ArgumentError(what) {}
};

/// Scatter matrix is not symmetric positive definite.
class ModelError : public ArgumentError {
public:
  explicit ModelError(const std::string& what) : ArgumentError(what) {}
};

/// A caller-side precondition that is checked rather than assumed (e.g. a non-tangent direction).
class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// An iterative routine failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qqvar

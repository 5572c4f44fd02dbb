#pragma once

#include <stdexcept>
#include <string>

namespace raydiff {

/// Input rejected before any numerics ran. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not deliver its contract. Maps to exit code 3.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public ValidationError {
  public:
    explicit DimensionError(int dim)
        : ValidationError("spatial dimension must be >= 3, got " + std::to_string(dim)),
          dim_(dim) {}
    int dim() const { return dim_; }

  private:
    int dim_;
};

/// Power spectrum fails Bochner admissibility (negative density, bad grid).
class AdmissibilityError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// delta exceeds delta_*(M): the energy shell bound cannot be formed.
class ConfinementViolated : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// |k| left the guard shell (1/(2 M_delta), 2 M_delta).
class ShellExit : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class IntegrationFailure : public NumericalError {
  public:
    IntegrationFailure(const std::string& what, double last_good_time)
        : NumericalError(what), last_good_time_(last_good_time) {}
    double last_good_time() const { return last_good_time_; }

  private:
    double last_good_time_;
};

class QuadratureTruncation : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class DegenerateDiffusion : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class ResolutionError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class InconsistentA : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class ConfigError : public ValidationError {
  public:
    ConfigError(const std::string& what, int line)
        : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

}  // namespace raydiff

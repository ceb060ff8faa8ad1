#ifndef PERTRL_ERRORS_HPP
#define PERTRL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pertrl {

/// Invalid experiment configuration (bad field, missing file, schema mismatch).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A least-squares solve was refused because the (empirical) Gram matrix is
/// too ill-conditioned. Carries the offending condition number. This is an
/// expected failure mode of the method, not a bug, so it is reported rather
/// than silently regularized.
class ConditioningError : public std::runtime_error {
  public:
    ConditioningError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const { return condition_; }

  private:
    double condition_;
};

/// A rollout or recursion left the numerically trusted region.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(const std::string& what, int time_index, double value)
        : std::runtime_error(what), time_index_(time_index), value_(value) {}
    int time_index() const { return time_index_; }
    double value() const { return value_; }

  private:
    int time_index_;
    double value_;
};

/// Row/matrix dimensions do not chain.
class DimensionError : public std::invalid_argument {
  public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// An iterative routine failed to reach its tolerance. Carries the residual.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

}  // namespace pertrl

#endif

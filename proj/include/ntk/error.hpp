#pragma once

#include <stdexcept>
#include <string>

namespace ntk {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorClass {
  configuration,  // bad parameters, unsupported options, out-of-domain inputs
  numerical,      // factorization, quadrature accuracy, fitting failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  [[nodiscard]] ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::configuration, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorClass::configuration, what) {}
};

class UnsupportedSmoothness : public ConfigError {
 public:
  explicit UnsupportedSmoothness(int s)
      : ConfigError("unsupported smoothness s=" + std::to_string(s) +
                    ": closed forms exist for s in {1,2,3} (s=0 internal only); "
                    "higher s needs a recursion/quadrature path"),
        smoothness_(s) {}
  [[nodiscard]] int smoothness() const noexcept { return smoothness_; }

 private:
  int smoothness_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

class IllConditionedGram : public NumericalError {
 public:
  IllConditionedGram(const std::string& what, double condition_estimate)
      : NumericalError(what), condition_estimate_(condition_estimate) {}
  [[nodiscard]] double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class SpectralAccuracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitError : public NumericalError {
 public:
  FitError(const std::string& what, std::size_t usable) : NumericalError(what), usable_(usable) {}
  [[nodiscard]] std::size_t usable_count() const noexcept { return usable_; }

 private:
  std::size_t usable_;
};

class DegenerateFunction : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ntk

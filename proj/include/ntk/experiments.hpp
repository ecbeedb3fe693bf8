#pragma once

// Synthetic ground truths in the RKHS of a kernel and the experiments built on
// them: sup-error rates of kernel ridge regression and greedy information-gain
// growth, each compared against the asymptotic exponent it should respect.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ntk/krr.hpp"
#include "ntk/neural_kernels.hpp"

namespace ntk {

struct SyntheticConfig {
  std::size_t anchors = 100;         // n0
  double ridge = 0.01;               // delta^2
  std::size_t range_sample = 10000;  // points used to estimate max g - min g
};

/// f(x) = k(x)^T (K + delta^2 I)^{-1} Y / range with Y ~ N(0, K) on random anchors.
class SyntheticFunction {
 public:
  static SyntheticFunction make(const DotProductKernel& kernel, const SyntheticConfig& cfg, std::uint64_t seed,
                                std::size_t workers = 0);

  /// Same construction with caller-supplied anchors and anchor values.
  static SyntheticFunction from_anchors(const DotProductKernel& kernel, const PointSet& anchors,
                                        const Eigen::VectorXd& values, const SyntheticConfig& cfg,
                                        std::uint64_t seed, std::size_t workers = 0);

  [[nodiscard]] double operator()(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd evaluate(const PointSet& points, std::size_t workers = 0) const;

  [[nodiscard]] const PointSet& anchors() const noexcept { return anchors_; }
  [[nodiscard]] const Eigen::VectorXd& anchor_values() const noexcept { return values_; }
  [[nodiscard]] double ridge() const noexcept { return ridge_; }
  [[nodiscard]] double range_normalizer() const noexcept { return range_; }
  /// ||g||^2 in the RKHS, and the certified bound ||Y||^2 / delta^2 it satisfies.
  [[nodiscard]] double rkhs_norm_sq() const noexcept { return norm_sq_; }
  [[nodiscard]] double certified_bound_sq() const noexcept { return bound_sq_; }
  /// RKHS norm of the normalized function f = g / range.
  [[nodiscard]] double norm_bound() const noexcept { return std::sqrt(norm_sq_) / range_; }

 private:
  explicit SyntheticFunction(const DotProductKernel& kernel) : kernel_(kernel) {}

  DotProductKernel kernel_;
  PointSet anchors_;
  Eigen::VectorXd values_;
  Eigen::VectorXd weights_;  // (K + delta^2 I)^{-1} Y
  double ridge_ = 0.0;
  double range_ = 1.0;
  double norm_sq_ = 0.0;
  double bound_sq_ = 0.0;
};

/// Slack on ||g||^2 <= ||Y||^2 / delta^2.
inline constexpr double kNormCertificateSlack = 1e-6;
/// Ranges at or below this are degenerate.
inline constexpr double kDegenerateRange = 1e-12;

/// NT: (-2s+1)/(2d+4s-4). RF: (-2s-1)/(2d+4s).
double theoretical_error_exponent(KernelFamily family, int s, int d);
/// NT: (d-1)/(d+2s-2). RF: (d-1)/(d+2s).
double theoretical_mig_exponent(KernelFamily family, int s, int d);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares on (log x, log y); needs >= 3 points, all positive.
LogLogFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys);

/// Indices [size/2, size) of an n-grid: the part used for asymptotic slopes.
std::size_t upper_half_start(std::size_t grid_size);

/// 2^first .. 2^last.
std::vector<std::size_t> power_of_two_grid(int first, int last);

struct ErrorRateConfig {
  KernelSpec kernel{};
  NtRecursion recursion = NtRecursion::scaled;
  std::vector<std::size_t> n_grid = power_of_two_grid(1, 11);
  std::size_t repetitions = 5;
  std::uint64_t master_seed = 0;
  std::size_t eval_sample = 10000;
  double train_lambda2 = 0.01;
  double noise_scale = 0.0;
  bool nested = true;  // training sets extend each other across the grid
  SyntheticConfig synthetic{};
};

struct RepetitionResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string diagnostic;
  std::vector<double> sup_errors;  // aligned with n_grid
  double exponent = 0.0;
  double r_squared = 0.0;
};

struct ErrorRateReport {
  ErrorRateConfig config;
  std::vector<RepetitionResult> repetitions;
  std::size_t failed = 0;
  double mean_exponent = 0.0;
  double std_exponent = 0.0;
  double theoretical_exponent = 0.0;
};

/// Failure share at or above which the experiment itself fails.
inline constexpr double kMaxFailedRepetitionShare = 0.2;

ErrorRateReport error_rate_experiment(const ErrorRateConfig& cfg, std::size_t workers = 0);

struct MigGrowthConfig {
  KernelSpec kernel{};
  NtRecursion recursion = NtRecursion::scaled;
  std::vector<std::size_t> n_grid = power_of_two_grid(1, 10);
  double lambda = 0.1;
  std::size_t candidate_grid_size = 4096;
  std::uint64_t seed = 0;
};

struct MigGrowthReport {
  MigGrowthConfig config;
  std::vector<double> info_gain;      // greedy lower bound on gamma(n), aligned with n_grid
  std::vector<double> effective_dim;  // aligned with n_grid
  double fitted_exponent = 0.0;
  double r_squared = 0.0;
  double theoretical_exponent = 0.0;
};

MigGrowthReport mig_growth_experiment(const MigGrowthConfig& cfg, std::size_t workers = 0);

}  // namespace ntk

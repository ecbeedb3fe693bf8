#pragma once

// Kernel ridge regression on the sphere with the Gaussian-process reading of
// the same linear algebra: posterior mean, posterior variance, information
// gain and greedy maximum-variance data collection.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ntk/neural_kernels.hpp"

namespace ntk {

/// n points drawn uniformly from S^{d-1} (normalized Gaussian vectors), one per column.
PointSet sample_sphere(int d, std::size_t n, std::uint64_t seed);

struct SphericalDataset {
  int dim = 3;
  PointSet inputs;
  Eigen::VectorXd values;
  double noise_scale = 0.0;  // R, metadata only

  /// Throws on non-unit inputs or mismatched sizes.
  void validate() const;
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
};

/// Diagonal jitter schedule for the regularized Gram factorization, relative to trace/n.
inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-6;

/// Lower Cholesky factor of K + lambda2 I. When the plain factorization fails,
/// jitter 1e-10 trace/n is added and raised tenfold up to 1e-6 trace/n before
/// IllConditionedGram is thrown.
struct RegularizedFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

RegularizedFactor factor_regularized(const Eigen::MatrixXd& gram_matrix, double lambda2);

class FittedRegressor {
 public:
  /// Prior (n = 0): mean 0, variance kappa(1).
  static FittedRegressor prior(const DotProductKernel& kernel, double lambda);

  static FittedRegressor fit(const DotProductKernel& kernel, const SphericalDataset& data, double lambda,
                             std::size_t workers = 0);

  [[nodiscard]] double predict_mean(const Eigen::VectorXd& x) const;
  [[nodiscard]] double predict_variance(const Eigen::VectorXd& x) const;

  /// Batch versions over the columns of `points`.
  [[nodiscard]] Eigen::VectorXd predict_mean(const PointSet& points, std::size_t workers = 0) const;
  [[nodiscard]] Eigen::VectorXd predict_variance(const PointSet& points, std::size_t workers = 0) const;

  [[nodiscard]] const DotProductKernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] double jitter() const noexcept { return jitter_; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }
  [[nodiscard]] const PointSet& inputs() const noexcept { return inputs_; }
  [[nodiscard]] const Eigen::MatrixXd& factor() const noexcept { return lower_; }
  [[nodiscard]] const Eigen::VectorXd& dual_weights() const noexcept { return alpha_; }

 private:
  FittedRegressor(const DotProductKernel& kernel, double lambda) : kernel_(kernel), lambda_(lambda) {}

  DotProductKernel kernel_;
  double lambda_;
  double jitter_ = 0.0;
  PointSet inputs_;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd alpha_;
};

/// Posterior variances below zero by at most this much are rounded to zero.
inline constexpr double kVarianceRoundoff = 1e-10;

struct ConfidenceParams {
  double norm_bound = 1.0;  // B
  double noise = 0.0;       // R
  double delta = 0.05;      // failure probability

  void validate() const;
  /// beta(delta) = B + (R / lambda) sqrt(2 log(1/delta)).
  [[nodiscard]] double beta(double lambda) const;
};

/// beta(delta) * sigma_n(x).
double confidence_band(const FittedRegressor& model, const Eigen::VectorXd& x, const ConfidenceParams& params);

/// 1/2 log det(I + K/lambda^2), from the Cholesky diagonal.
double information_gain(const DotProductKernel& kernel, const PointSet& points, double lambda,
                        std::size_t workers = 0);

/// Tr(K (K + lambda^2 I)^{-1}).
double effective_dimension(const DotProductKernel& kernel, const PointSet& points, double lambda,
                           std::size_t workers = 0);

struct InfoGainReport {
  std::size_t n = 0;
  double info_gain = 0.0;
  double effective_dim = 0.0;
  double lambda = 0.0;
  double sum_variance = 0.0;  // sum_i sigma^2_{i-1}(x_i)
  double bound_rhs = 0.0;     // 2 / log(1 + lambda^-2) * info_gain
};

/// Reports for every prefix x_1..x_k, k = 1..n, of an ordered point sequence,
/// all read off one factorization of the full regularized Gram matrix.
std::vector<InfoGainReport> prefix_reports(const DotProductKernel& kernel, const PointSet& points, double lambda,
                                           std::size_t workers = 0);

struct GreedySelection {
  std::vector<std::size_t> indices;  // candidate indices in selection order
  std::vector<double> variances;     // sigma^2_{i-1}(x_i) at selection time
  PointSet points;
};

/// x_i = argmax over the candidates of sigma^2_{i-1}; ties go to the lowest index.
/// A candidate may be selected more than once.
GreedySelection greedy_max_variance(const DotProductKernel& kernel, const PointSet& candidates, std::size_t n,
                                    double lambda, std::size_t workers = 0);

struct VarianceSumCheck {
  double lhs = 0.0;  // sum_i sigma^2_{i-1}(x_i)
  double rhs = 0.0;  // 2 / log(1 + lambda^-2) * I
  double info_gain = 0.0;
  bool holds = false;
};

/// Absolute slack allowed on lhs <= rhs.
inline constexpr double kVarianceSumSlack = 1e-8;

VarianceSumCheck variance_sum_check(const DotProductKernel& kernel, const PointSet& points, double lambda,
                                    std::size_t workers = 0);

}  // namespace ntk

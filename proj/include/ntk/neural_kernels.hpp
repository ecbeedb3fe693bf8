#pragma once

// Random-feature (RF) and neural tangent (NT) kernels of fully connected
// networks with power-ReLU activations a_s(z) = max(0, z)^s, restricted to
// the unit sphere where they depend on inputs only through u = <x, x'>.

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace ntk {

/// One point per column. Every column is expected to have unit norm.
using PointSet = Eigen::MatrixXd;

enum class KernelFamily { rf, nt };

std::string_view to_string(KernelFamily family);
KernelFamily parse_family(std::string_view name);

/// Tolerance on |u| - 1 before a dot product is rejected instead of clamped.
inline constexpr double kDotClampSlack = 1e-12;
/// Tolerance on | ||x|| - 1 | for inputs declared to lie on the sphere.
inline constexpr double kUnitNormSlack = 1e-8;

/// Layer-composition rule for deep NT kernels.
enum class NtRecursion {
  /// Theta^l = c^2 * Theta^{l-1} * kappa_s'(Sigma^{l-1}) + Sigma^l, with c^2 = 2/(2s-1)!!.
  scaled,
  /// Theta^l = Theta^{l-1} * kappa_s'(Sigma^{l-1}) + Sigma^l.
  unscaled,
};

struct KernelSpec {
  KernelFamily family = KernelFamily::nt;
  int smoothness = 1;
  int depth = 2;
  int ambient_dim = 3;

  /// c^2 = 2 / (2s-1)!!, the constant that makes the RF kernel equal 1 at u = 1.
  [[nodiscard]] double normalization_sq() const;

  /// Throws ConfigError / UnsupportedSmoothness when the kernel parameters are not evaluable.
  void validate() const;
};

double normalization_sq(int s);

/// Clamp a dot product into [-1, 1]; throws DomainError beyond kDotClampSlack.
double clamp_dot(double u);

/// Closed-form RF kernel kappa_s(u), s in {0, 1, 2, 3}.
/// kappa_0 is the (normalized) step-activation kernel used for derivatives.
double rf_closed(int s, double u);

/// kappa_s'(u) = s^2 / (2s-1) * kappa_{s-1}(u), s in {1, 2, 3}.
double rf_derivative(int s, double u);

/// Two-layer NT kernel: u * kappa_s'(u) + kappa_s(u).
double nt_two_layer(int s, double u);

/// kappa^l_s(u) = kappa_s(kappa^{l-1}_s(u)), l >= 2.
double rf_deep(int s, int depth, double u);

double nt_deep(int s, int depth, double u, NtRecursion rule = NtRecursion::scaled);

/// An immutable dot-product kernel kappa: [-1, 1] -> R.
class DotProductKernel {
 public:
  explicit DotProductKernel(KernelSpec spec, NtRecursion rule = NtRecursion::scaled);

  [[nodiscard]] double operator()(double u) const;
  /// kappa(1) = k(x, x) for any unit x.
  [[nodiscard]] double at_one() const noexcept { return at_one_; }
  [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] NtRecursion recursion() const noexcept { return rule_; }
  [[nodiscard]] std::string describe() const;

 private:
  KernelSpec spec_;
  NtRecursion rule_;
  double at_one_;
};

struct McOracleConfig {
  std::uint64_t sample_count = 1'000'000;
  std::uint64_t seed = 0;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of a two-layer kernel value from its defining
/// expectation over w ~ N(0, I_d). Samples are drawn from a counter-based
/// generator in fixed blocks, so the result does not depend on `workers`.
McEstimate mc_estimate(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                       const McOracleConfig& cfg, std::size_t workers = 0);

/// Throws DomainError naming the first column whose norm differs from 1.
void require_unit_columns(const PointSet& points, std::string_view what = "point");

/// K_ij = kappa(<x_i, x_j>).
Eigen::MatrixXd gram(const DotProductKernel& kernel, const PointSet& points, std::size_t workers = 0);

/// K_ij = kappa(<a_i, b_j>), rows indexed by columns of `a`.
Eigen::MatrixXd cross_gram(const DotProductKernel& kernel, const PointSet& a, const PointSet& b,
                           std::size_t workers = 0);

}  // namespace ntk

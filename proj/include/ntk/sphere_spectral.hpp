#pragma once

// Mercer spectra of dot-product kernels on the sphere S^{d-1}.
//
// A dot-product kernel expands in Gegenbauer polynomials C_i = C_i^{(d-2)/2}:
//
//   kappa(u) = sum_i b_i C_i(u),   b_i = <kappa, C_i>_w / <C_i, C_i>_w,
//
// with weight w(t) = (1 - t^2)^{(d-3)/2}. The addition theorem collapses the
// degree-i spherical harmonics into c_{i,d} C_i(<x, x'>), so the per-degree
// Mercer eigenvalue is lambda_i = b_i / c_{i,d}, repeated N_{d,i} times.

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ntk/neural_kernels.hpp"

namespace ntk {

/// Number of linearly independent degree-i spherical harmonics on S^{d-1}.
std::uint64_t multiplicity(int d, int i);

/// C_i^alpha(u) by the three-term recurrence. alpha must be positive.
double gegenbauer(double alpha, int degree, double u);

/// Addition-theorem constant c_{i,d} = N_{d,i} Gamma((d-2)/2) / (2 pi^{(d-2)/2} C_i(1)).
double addition_constant(int d, int i);

/// Composite Gauss-Legendre rule for integrals against (1 - t^2)^{(d-3)/2} on [-1, 1].
///
/// Integration runs in the angle theta = arccos(t), where the weight becomes
/// sin(theta)^{d-2} and the arc-cosine kernels are analytic, so the fractional
/// powers these kernels carry at t = +-1 cost no extra refinement.
class GegenbauerBasis {
 public:
  GegenbauerBasis(int d, int max_degree);

  [[nodiscard]] int dim() const noexcept { return d_; }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] int max_degree() const noexcept { return max_degree_; }
  [[nodiscard]] std::span<const double> nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }

  /// Fills out[i] = C_i(t) for i = 0..out.size()-1.
  void evaluate(double t, std::span<double> out) const;

 private:
  int d_;
  double alpha_;
  int max_degree_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

enum class SpectrumProvenance { numerical_nt, numerical_rf, analytic_matern, numerical_custom };

std::string_view to_string(SpectrumProvenance p);

struct SpectrumTable {
  int dim = 3;
  SpectrumProvenance provenance = SpectrumProvenance::numerical_custom;
  std::vector<double> eigenvalues;              // lambda_i, degree i = index
  std::vector<std::uint64_t> multiplicities;    // N_{d,i}
  std::size_t clamped_count = 0;                // tiny negative eigenvalues set to zero
  double max_clamped_magnitude = 0.0;

  [[nodiscard]] int max_degree() const noexcept { return static_cast<int>(eigenvalues.size()) - 1; }
};

/// Relative size of quadrature negatives that are treated as roundoff and clamped.
inline constexpr double kNegativeEigenvalueSlack = 1e-10;
/// Slack on sum_{i<=M} lambda_i c_{i,d} C_i(1) <= kappa(1).
inline constexpr double kReconstructionSlack = 1e-6;

SpectrumTable mercer_spectrum(const DotProductKernel& kernel, int max_degree, const GegenbauerBasis& basis,
                              std::size_t workers = 0);

/// Spectrum of an arbitrary continuous kappa on [-1, 1].
SpectrumTable mercer_spectrum(const std::function<double(double)>& kappa, double kappa_at_one, int max_degree,
                              const GegenbauerBasis& basis, SpectrumProvenance provenance,
                              std::size_t workers = 0);

/// Truncated Mercer series sum_{i<=M} lambda_i c_{i,d} C_i(u).
double reconstruct(const SpectrumTable& spectrum, double u);

/// Upper bound on sup_u |kappa(u) - reconstruct_M(u)|: the per-degree terms
/// lambda_i N_{d,i} Gamma((d-2)/2) / (2 pi^{(d-2)/2}) summed numerically above M
/// up to a cutoff degree, plus a power-law remainder whose constant is fitted
/// on the last computed octave. The remainder exponent is p, lowered to the
/// observed octave-to-octave exponent when the terms have not yet reached it.
class SpectralTail {
 public:
  static constexpr int kDefaultCutoff = 400;

  /// `term_decay` is p in term_i ~ C i^{-p}.
  SpectralTail(SpectrumTable spectrum, double term_decay);

  /// Builds the spectrum to `cutoff` and uses p = 2s (NT) or 2s + 2 (RF).
  explicit SpectralTail(const DotProductKernel& kernel, int cutoff = kDefaultCutoff, std::size_t workers = 0);

  [[nodiscard]] double operator()(int M) const;
  [[nodiscard]] int cutoff() const noexcept { return spectrum_.max_degree(); }
  [[nodiscard]] double remainder() const noexcept { return remainder_; }
  [[nodiscard]] double term_decay() const noexcept { return decay_; }
  /// Exponent actually used for the remainder: min(p, observed octave exponent).
  [[nodiscard]] double effective_decay() const noexcept { return effective_decay_; }
  [[nodiscard]] const SpectrumTable& spectrum() const noexcept { return spectrum_; }

 private:
  SpectrumTable spectrum_;
  double decay_;
  std::vector<double> suffix_;  // suffix_[i] = sum_{j >= i} term_j, j <= cutoff
  double remainder_ = 0.0;
  double effective_decay_ = 0.0;
};

double tail_sum(const DotProductKernel& kernel, int M, int cutoff = SpectralTail::kDefaultCutoff,
                std::size_t workers = 0);

/// Matern kernel on the sphere; `lengthscale` is the scale parameter in 2 nu / lengthscale^2.
struct MaternSpec {
  double nu = 0.5;
  double lengthscale = 1.0;
  int dim = 3;
};

SpectrumTable matern_spectrum(const MaternSpec& spec, int max_degree);

/// Eigenvalues with multiplicity, sorted in nonincreasing order.
std::vector<double> flatten_spectrum(const SpectrumTable& table);

/// Coefficients of t^{(2s+1)/2} in the expansions of kappa_s(-1 + t) and kappa_s(1 - t).
struct EndpointCoefficients {
  double c_minus = 0.0;
  double c_plus = 0.0;
};

EndpointCoefficients endpoint_coefficient(int s);

/// kappa_s(-1 + t) / t^{(2s+1)/2} for each t in (0, 0.1].
std::vector<double> verify_endpoint(int s, std::span<const double> t_values);

enum class Parity { even, odd, all };

std::string_view to_string(Parity p);
Parity parse_parity(std::string_view name);

struct DegreeRange {
  int first = 0;
  int last = 0;
};

/// Degrees [max(9, 2s+3), 59].
DegreeRange default_decay_range(int s);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t used = 0;
};

/// Least-squares slope of log lambda_i against log i on the selected degrees.
/// Degrees with lambda_i <= 1e-14 are ignored; fewer than 5 usable degrees throws FitError.
DecayFit eigendecay_fit(const SpectrumTable& table, Parity parity, DegreeRange degrees);

struct RatioBounds {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  int argmin = -1;
  int argmax = -1;
};

/// Extremes of lambda_i^num / lambda_i^den over the parity-filtered degree range.
RatioBounds rkhs_equivalence_ratio(const SpectrumTable& numerator, const SpectrumTable& denominator,
                                   DegreeRange degrees, Parity parity);

}  // namespace ntk

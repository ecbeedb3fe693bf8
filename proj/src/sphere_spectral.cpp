#include "ntk/sphere_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "ntk/detail/ols.hpp"
#include "ntk/error.hpp"
#include "ntk/parallel.hpp"

namespace ntk {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPanelOrder = 32;
constexpr double kUsableEigenvalue = 1e-14;
constexpr std::size_t kMinimumFitDegrees = 5;

std::uint64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::int64_t j = 1; j <= k; ++j) {
    // r * (n-k+j) is divisible by j; split j between the two factors first.
    const std::uint64_t g = std::gcd(r, static_cast<std::uint64_t>(j));
    const std::uint64_t t = static_cast<std::uint64_t>(n - k + j) / (static_cast<std::uint64_t>(j) / g);
    if (__builtin_mul_overflow(r / g, t, &r)) throw ConfigError("multiplicity overflows 64 bits");
  }
  return r;
}

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_n.
GaussRule gauss_legendre(int n) {
  GaussRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(kPi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.x[k] = -x;
    rule.x[n - 1 - k] = x;
    rule.w[k] = w;
    rule.w[n - 1 - k] = w;
  }
  return rule;
}

double degree_term_constant(int d) {
  const double half = 0.5 * (d - 2);
  return std::tgamma(half) / (2.0 * std::pow(kPi, half));
}

void require_spectral_dim(int d) {
  if (d < 3) {
    throw ConfigError("spectral operations need d >= 3 (Gegenbauer index (d-2)/2 vanishes at d=2), got d=" +
                      std::to_string(d));
  }
}

bool parity_selects(Parity parity, int degree) {
  switch (parity) {
    case Parity::even:
      return degree % 2 == 0;
    case Parity::odd:
      return degree % 2 == 1;
    case Parity::all:
      return true;
  }
  return true;
}

}  // namespace

std::uint64_t multiplicity(int d, int i) {
  if (d < 2 || i < 0) throw ConfigError("multiplicity needs d >= 2 and i >= 0");
  return binomial(i + d - 1, d - 1) - binomial(i + d - 3, d - 1);
}

double gegenbauer(double alpha, int degree, double u) {
  if (!(alpha > 0.0)) throw ConfigError("Gegenbauer index must be positive (d = 2 is unsupported)");
  if (degree < 0) throw ConfigError("Gegenbauer degree must be nonnegative");
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * alpha * u;
  for (int i = 2; i <= degree; ++i) {
    const double next = (2.0 * (i + alpha - 1.0) * u * cur - (i + 2.0 * alpha - 2.0) * prev) / i;
    prev = cur;
    cur = next;
  }
  return cur;
}

double addition_constant(int d, int i) {
  require_spectral_dim(d);
  const double alpha = 0.5 * (d - 2);
  return static_cast<double>(multiplicity(d, i)) * degree_term_constant(d) / gegenbauer(alpha, i, 1.0);
}

GegenbauerBasis::GegenbauerBasis(int d, int max_degree) : d_(d), alpha_(0.5 * (d - 2)), max_degree_(max_degree) {
  require_spectral_dim(d);
  if (max_degree < 0) throw ConfigError("max_degree must be nonnegative");

  const GaussRule rule = gauss_legendre(kPanelOrder);
  const int budget = 64 * (max_degree + 8);
  const int panels = (budget + kPanelOrder - 1) / kPanelOrder;
  const double width = kPi / panels;
  nodes_.reserve(static_cast<std::size_t>(panels) * kPanelOrder);
  weights_.reserve(nodes_.capacity());
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    for (int k = 0; k < kPanelOrder; ++k) {
      const double theta = mid + 0.5 * width * rule.x[k];
      nodes_.push_back(std::cos(theta));
      weights_.push_back(0.5 * width * rule.w[k] * std::pow(std::sin(theta), d - 2));
    }
  }
}

void GegenbauerBasis::evaluate(double t, std::span<double> out) const {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = 2.0 * alpha_ * t;
  for (std::size_t i = 2; i < out.size(); ++i) {
    const auto di = static_cast<double>(i);
    out[i] = (2.0 * (di + alpha_ - 1.0) * t * out[i - 1] - (di + 2.0 * alpha_ - 2.0) * out[i - 2]) / di;
  }
}

std::string_view to_string(SpectrumProvenance p) {
  switch (p) {
    case SpectrumProvenance::numerical_nt:
      return "numerical-NT";
    case SpectrumProvenance::numerical_rf:
      return "numerical-RF";
    case SpectrumProvenance::analytic_matern:
      return "analytic-Matern";
    case SpectrumProvenance::numerical_custom:
      return "numerical-custom";
  }
  return "unknown";
}

SpectrumTable mercer_spectrum(const DotProductKernel& kernel, int max_degree, const GegenbauerBasis& basis,
                              std::size_t workers) {
  const auto provenance = kernel.spec().family == KernelFamily::nt ? SpectrumProvenance::numerical_nt
                                                                   : SpectrumProvenance::numerical_rf;
  return mercer_spectrum([&kernel](double u) { return kernel(u); }, kernel.at_one(), max_degree, basis, provenance,
                         workers);
}

SpectrumTable mercer_spectrum(const std::function<double(double)>& kappa, double kappa_at_one, int max_degree,
                              const GegenbauerBasis& basis, SpectrumProvenance provenance, std::size_t workers) {
  if (max_degree < 0 || max_degree > basis.max_degree()) {
    throw ConfigError("requested degree " + std::to_string(max_degree) + " exceeds basis degree " +
                      std::to_string(basis.max_degree()));
  }
  const int d = basis.dim();
  const auto degrees = static_cast<std::size_t>(max_degree) + 1;
  const auto nodes = basis.nodes();
  const auto weights = basis.weights();

  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = chunk_count(nodes.size(), kChunk);
  std::vector<double> numer(chunks * degrees, 0.0);
  std::vector<double> denom(chunks * degrees, 0.0);
  for_each_chunk(nodes.size(), kChunk, workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> poly(degrees);
    double* num = numer.data() + c * degrees;
    double* den = denom.data() + c * degrees;
    for (std::size_t k = begin; k < end; ++k) {
      basis.evaluate(nodes[k], poly);
      const double wk = weights[k];
      const double fk = wk * kappa(nodes[k]);
      for (std::size_t i = 0; i < degrees; ++i) {
        num[i] += fk * poly[i];
        den[i] += wk * poly[i] * poly[i];
      }
    }
  });

  SpectrumTable table;
  table.dim = d;
  table.provenance = provenance;
  table.eigenvalues.assign(degrees, 0.0);
  table.multiplicities.resize(degrees);
  for (std::size_t i = 0; i < degrees; ++i) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
      num += numer[c * degrees + i];
      den += denom[c * degrees + i];
    }
    table.eigenvalues[i] = (num / den) / addition_constant(d, static_cast<int>(i));
    table.multiplicities[i] = multiplicity(d, static_cast<int>(i));
  }

  double scale = 0.0;
  for (double v : table.eigenvalues) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < degrees; ++i) {
    double& v = table.eigenvalues[i];
    if (v >= 0.0) continue;
    if (-v > kNegativeEigenvalueSlack * scale) {
      std::ostringstream msg;
      msg.precision(6);
      msg << "degree " << i << " eigenvalue " << v << " is negative beyond roundoff; "
          << "the kernel may not be positive definite or the quadrature is inaccurate";
      throw SpectralAccuracyError(msg.str());
    }
    table.max_clamped_magnitude = std::max(table.max_clamped_magnitude, -v);
    ++table.clamped_count;
    v = 0.0;
  }

  const double mass = reconstruct(table, 1.0);
  if (mass > kappa_at_one + kReconstructionSlack) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Mercer series mass " << mass << " exceeds kappa(1) = " << kappa_at_one
        << "; increase the quadrature order";
    throw SpectralAccuracyError(msg.str());
  }
  return table;
}

double reconstruct(const SpectrumTable& spectrum, double u) {
  const int d = spectrum.dim;
  require_spectral_dim(d);
  std::vector<double> poly(spectrum.eigenvalues.size());
  const double alpha = 0.5 * (d - 2);
  poly[0] = 1.0;
  if (poly.size() > 1) poly[1] = 2.0 * alpha * u;
  for (std::size_t i = 2; i < poly.size(); ++i) {
    const auto di = static_cast<double>(i);
    poly[i] = (2.0 * (di + alpha - 1.0) * u * poly[i - 1] - (di + 2.0 * alpha - 2.0) * poly[i - 2]) / di;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (spectrum.eigenvalues[i] == 0.0) continue;
    sum += spectrum.eigenvalues[i] * addition_constant(d, static_cast<int>(i)) * poly[i];
  }
  return sum;
}

SpectralTail::SpectralTail(SpectrumTable spectrum, double term_decay)
    : spectrum_(std::move(spectrum)), decay_(term_decay) {
  require_spectral_dim(spectrum_.dim);
  if (!(decay_ > 1.0)) throw ConfigError("tail term decay exponent must exceed 1");
  const int cutoff = spectrum_.max_degree();
  if (cutoff < 4) throw ConfigError("tail cutoff degree must be at least 4");

  const double constant = degree_term_constant(spectrum_.dim);
  std::vector<double> terms(static_cast<std::size_t>(cutoff) + 1);
  for (int i = 0; i <= cutoff; ++i) {
    terms[i] = std::max(0.0, spectrum_.eigenvalues[i]) * static_cast<double>(spectrum_.multiplicities[i]) * constant;
  }
  suffix_.assign(terms.size() + 1, 0.0);
  for (int i = cutoff; i >= 0; --i) suffix_[i] = suffix_[i + 1] + terms[i];

  // Octave sums over (K/2, K] and (K/4, K/2]. Summing whole octaves makes the
  // fit insensitive to degrees that vanish by parity.
  const int top = cutoff / 2;
  const int mid = cutoff / 4;
  const double last_octave = suffix_[top + 1];
  const double prior_octave = suffix_[mid + 1] - suffix_[top + 1];
  effective_decay_ = decay_;
  if (!(last_octave > 0.0)) return;

  // Terms approach C i^{-p} from below for these kernels, so the observed local
  // exponent is still shallower than p at the cutoff. Extrapolating with the
  // shallower exponent keeps the remainder an upper bound.
  double p = decay_;
  if (prior_octave > 0.0) {
    const double observed_decay = 1.0 - std::log2(last_octave / prior_octave);
    if (observed_decay > 1.0 && observed_decay < p) p = observed_decay;
  }
  double model = 0.0;
  for (int i = top + 1; i <= cutoff; ++i) model += std::pow(static_cast<double>(i), -p);
  const double fitted = last_octave / model;
  // sum_{i > K} i^{-p} by Euler-Maclaurin.
  const double k = cutoff;
  const double power_sum = std::pow(k, 1.0 - p) / (p - 1.0) - 0.5 * std::pow(k, -p) + p * std::pow(k, -p - 1.0) / 12.0;
  remainder_ = fitted * power_sum;
  effective_decay_ = p;
}

SpectralTail::SpectralTail(const DotProductKernel& kernel, int cutoff, std::size_t workers)
    : SpectralTail(mercer_spectrum(kernel, cutoff, GegenbauerBasis(kernel.spec().ambient_dim, cutoff), workers),
                   kernel.spec().family == KernelFamily::nt ? 2.0 * kernel.spec().smoothness
                                                            : 2.0 * kernel.spec().smoothness + 2.0) {}

double SpectralTail::operator()(int M) const {
  if (M < 0 || M >= cutoff()) {
    throw ConfigError("tail degree M=" + std::to_string(M) + " must lie in [0, " + std::to_string(cutoff()) + ")");
  }
  return suffix_[static_cast<std::size_t>(M) + 1] + remainder_;
}

double tail_sum(const DotProductKernel& kernel, int M, int cutoff, std::size_t workers) {
  if (M >= cutoff) {
    throw ConfigError("tail degree M=" + std::to_string(M) + " must be below the cutoff " + std::to_string(cutoff));
  }
  return SpectralTail(kernel, cutoff, workers)(M);
}

SpectrumTable matern_spectrum(const MaternSpec& spec, int max_degree) {
  if (!(spec.nu > 0.0) || !(spec.lengthscale > 0.0)) throw ConfigError("Matern nu and lengthscale must be positive");
  if (spec.dim < 2) throw ConfigError("Matern spectrum needs d >= 2");
  if (max_degree < 0) throw ConfigError("max_degree must be nonnegative");
  SpectrumTable table;
  table.dim = spec.dim;
  table.provenance = SpectrumProvenance::analytic_matern;
  const double shift = 2.0 * spec.nu / (spec.lengthscale * spec.lengthscale);
  const double exponent = -(spec.nu + 0.5 * (spec.dim - 1));
  for (int i = 0; i <= max_degree; ++i) {
    const double di = i;
    table.eigenvalues.push_back(std::pow(shift + di * (di + spec.dim - 2), exponent));
    table.multiplicities.push_back(multiplicity(spec.dim, i));
  }
  return table;
}

std::vector<double> flatten_spectrum(const SpectrumTable& table) {
  std::vector<double> flat;
  for (std::size_t i = 0; i < table.eigenvalues.size(); ++i) {
    flat.insert(flat.end(), table.multiplicities[i], table.eigenvalues[i]);
  }
  std::stable_sort(flat.begin(), flat.end(), std::greater<>());
  return flat;
}

EndpointCoefficients endpoint_coefficient(int s) {
  if (s < 1) throw ConfigError("endpoint coefficients need s >= 1");
  double product = 1.0;
  for (int r = 1; r <= s; ++r) product *= static_cast<double>(r * r) / (4.0 * r * r - 1.0);
  const double c_minus = std::ldexp(std::numbers::sqrt2 / kPi, s) * product;
  return {c_minus, (s % 2 == 1) ? c_minus : -c_minus};
}

std::vector<double> verify_endpoint(int s, std::span<const double> t_values) {
  std::vector<double> ratios;
  ratios.reserve(t_values.size());
  const double exponent = 0.5 * (2 * s + 1);
  for (double t : t_values) {
    if (!(t > 0.0 && t <= 0.1)) throw DomainError("endpoint offsets must lie in (0, 0.1]");
    ratios.push_back(rf_closed(s, -1.0 + t) / std::pow(t, exponent));
  }
  return ratios;
}

std::string_view to_string(Parity p) {
  switch (p) {
    case Parity::even:
      return "even";
    case Parity::odd:
      return "odd";
    case Parity::all:
      return "all";
  }
  return "all";
}

Parity parse_parity(std::string_view name) {
  if (name == "even") return Parity::even;
  if (name == "odd") return Parity::odd;
  if (name == "all") return Parity::all;
  throw ConfigError("unknown parity '" + std::string(name) + "' (expected even, odd or all)");
}

DegreeRange default_decay_range(int s) { return {std::max(9, 2 * s + 3), 59}; }

DecayFit eigendecay_fit(const SpectrumTable& table, Parity parity, DegreeRange degrees) {
  std::vector<double> log_i;
  std::vector<double> log_lambda;
  const int last = std::min(degrees.last, table.max_degree());
  for (int i = std::max(1, degrees.first); i <= last; ++i) {
    if (!parity_selects(parity, i)) continue;
    const double v = table.eigenvalues[i];
    if (!(v > kUsableEigenvalue)) continue;
    log_i.push_back(std::log(static_cast<double>(i)));
    log_lambda.push_back(std::log(v));
  }
  if (log_i.size() < kMinimumFitDegrees) {
    throw FitError("eigendecay fit found " + std::to_string(log_i.size()) + " usable " + std::string(to_string(parity)) +
                       " degrees in [" + std::to_string(degrees.first) + ", " + std::to_string(degrees.last) +
                       "], need at least " + std::to_string(kMinimumFitDegrees),
                   log_i.size());
  }
  const auto line = detail::ordinary_least_squares(log_i, log_lambda);
  return {line.slope, line.intercept, line.r_squared, log_i.size()};
}

RatioBounds rkhs_equivalence_ratio(const SpectrumTable& numerator, const SpectrumTable& denominator,
                                   DegreeRange degrees, Parity parity) {
  if (numerator.dim != denominator.dim) throw ConfigError("spectra live on spheres of different dimension");
  if (degrees.first < 0 || degrees.first > degrees.last || degrees.last > numerator.max_degree() ||
      degrees.last > denominator.max_degree()) {
    throw ConfigError("degree range outside the spectra");
  }
  RatioBounds out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), -1, -1};
  for (int i = degrees.first; i <= degrees.last; ++i) {
    if (!parity_selects(parity, i)) continue;
    const double den = denominator.eigenvalues[i];
    if (!(den > 0.0)) throw DomainError("denominator eigenvalue at degree " + std::to_string(i) + " is not positive");
    const double r = numerator.eigenvalues[i] / den;
    if (r < out.min_ratio) {
      out.min_ratio = r;
      out.argmin = i;
    }
    if (r > out.max_ratio) {
      out.max_ratio = r;
      out.argmax = i;
    }
  }
  if (out.argmin < 0) throw ConfigError("no degrees of the requested parity in range");
  return out;
}

}  // namespace ntk

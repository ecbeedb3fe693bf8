#include "ntk/neural_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ntk/error.hpp"
#include "ntk/parallel.hpp"
#include "ntk/random.hpp"

namespace ntk {

namespace {

constexpr double kPi = std::numbers::pi;

// Trigonometric quantities of u = cos(theta), with sin(theta) formed from
// (1-u)(1+u) to avoid cancellation near |u| = 1.
struct Angle {
  double cos_t;
  double sin_t;
  double pi_minus_theta;
};

Angle angle_of(double u) {
  return {u, std::sqrt((1.0 - u) * (1.0 + u)), kPi - std::acos(u)};
}

double closed_form(int s, const Angle& a) {
  const double c = a.cos_t;
  const double sn = a.sin_t;
  const double phi = a.pi_minus_theta;
  switch (s) {
    case 0:
      return phi / kPi;
    case 1:
      return (sn + phi * c) / kPi;
    case 2:
      return (3.0 * sn * c + phi * (1.0 + 2.0 * c * c)) / (3.0 * kPi);
    case 3:
      return (15.0 * sn - 11.0 * sn * sn * sn + phi * (9.0 * c + 6.0 * c * c * c)) / (15.0 * kPi);
    default:
      throw UnsupportedSmoothness(s);
  }
}

void require_public_smoothness(int s) {
  if (s < 1 || s > 3) throw UnsupportedSmoothness(s);
}

void require_depth(int depth) {
  if (depth < 2) throw ConfigError("depth must be >= 2, got " + std::to_string(depth));
}

double derivative_factor(int s) { return static_cast<double>(s * s) / static_cast<double>(2 * s - 1); }

double power_relu(int s, double z) {
  if (z <= 0.0) return 0.0;  // includes the 0^0 = 0 convention for s = 0
  double r = 1.0;
  for (int k = 0; k < s; ++k) r *= z;
  return r;
}

}  // namespace

std::string_view to_string(KernelFamily family) { return family == KernelFamily::rf ? "rf" : "nt"; }

KernelFamily parse_family(std::string_view name) {
  if (name == "rf" || name == "RF") return KernelFamily::rf;
  if (name == "nt" || name == "NT") return KernelFamily::nt;
  throw ConfigError("unknown kernel family '" + std::string(name) + "' (expected rf or nt)");
}

double normalization_sq(int s) {
  if (s < 0) throw ConfigError("smoothness must be nonnegative");
  double double_factorial = 1.0;
  for (int k = 2 * s - 1; k > 1; k -= 2) double_factorial *= k;
  return 2.0 / double_factorial;
}

double KernelSpec::normalization_sq() const { return ntk::normalization_sq(smoothness); }

void KernelSpec::validate() const {
  require_public_smoothness(smoothness);
  require_depth(depth);
  if (ambient_dim < 2) throw ConfigError("ambient dimension must be >= 2, got " + std::to_string(ambient_dim));
}

double clamp_dot(double u) {
  if (!(std::abs(u) <= 1.0 + kDotClampSlack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "dot product u=" << u << " outside [-1, 1]";
    throw DomainError(msg.str());
  }
  return std::clamp(u, -1.0, 1.0);
}

double rf_closed(int s, double u) {
  if (s < 0 || s > 3) throw UnsupportedSmoothness(s);
  return closed_form(s, angle_of(clamp_dot(u)));
}

double rf_derivative(int s, double u) {
  require_public_smoothness(s);
  return derivative_factor(s) * rf_closed(s - 1, u);
}

double nt_two_layer(int s, double u) {
  require_public_smoothness(s);
  u = clamp_dot(u);
  const Angle a = angle_of(u);
  return u * derivative_factor(s) * closed_form(s - 1, a) + closed_form(s, a);
}

double rf_deep(int s, int depth, double u) {
  require_public_smoothness(s);
  require_depth(depth);
  double v = rf_closed(s, u);
  for (int l = 3; l <= depth; ++l) v = rf_closed(s, v);
  return v;
}

double nt_deep(int s, int depth, double u, NtRecursion rule) {
  require_public_smoothness(s);
  require_depth(depth);
  const double scale = rule == NtRecursion::scaled ? normalization_sq(s) : 1.0;
  double sigma = rf_closed(s, u);
  double theta = nt_two_layer(s, u);
  for (int l = 3; l <= depth; ++l) {
    const double next_sigma = rf_closed(s, sigma);
    theta = scale * theta * rf_derivative(s, sigma) + next_sigma;
    sigma = next_sigma;
  }
  return theta;
}

DotProductKernel::DotProductKernel(KernelSpec spec, NtRecursion rule) : spec_(spec), rule_(rule), at_one_(0.0) {
  spec_.validate();
  at_one_ = (*this)(1.0);
}

double DotProductKernel::operator()(double u) const {
  if (spec_.family == KernelFamily::rf) {
    return spec_.depth == 2 ? rf_closed(spec_.smoothness, u) : rf_deep(spec_.smoothness, spec_.depth, u);
  }
  return spec_.depth == 2 ? nt_two_layer(spec_.smoothness, u) : nt_deep(spec_.smoothness, spec_.depth, u, rule_);
}

std::string DotProductKernel::describe() const {
  std::ostringstream out;
  out << to_string(spec_.family) << "(s=" << spec_.smoothness << ", l=" << spec_.depth << ", d=" << spec_.ambient_dim
      << ")";
  return out.str();
}

McEstimate mc_estimate(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                       const McOracleConfig& cfg, std::size_t workers) {
  if (spec.depth != 2) throw ConfigError("the Monte-Carlo oracle covers two-layer kernels only");
  const int s = spec.smoothness;
  if (s < 0 || (spec.family == KernelFamily::nt && s < 1)) throw UnsupportedSmoothness(s);
  if (x.size() != x_prime.size() || x.size() < 2) throw ConfigError("oracle inputs must share a dimension >= 2");
  if (std::abs(x.norm() - 1.0) > kUnitNormSlack || std::abs(x_prime.norm() - 1.0) > kUnitNormSlack) {
    throw DomainError("Monte-Carlo oracle inputs must be unit vectors");
  }
  if (cfg.sample_count < 2) throw ConfigError("sample_count must be >= 2");

  const auto d = static_cast<std::size_t>(x.size());
  const double c2 = normalization_sq(s);
  const double u = x.dot(x_prime);
  const double tangent_scale = c2 * u * s * s;
  const CounterRng rng(cfg.seed);

  // Welford accumulators per fixed block, merged in block order.
  struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  constexpr std::size_t kBlock = 1 << 15;
  const std::size_t n = cfg.sample_count;
  std::vector<Moments> blocks(chunk_count(n, kBlock));

  for_each_chunk(n, kBlock, workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Moments m;
    for (std::size_t k = begin; k < end; ++k) {
      double p = 0.0;
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double w = rng.normal(k * d + j);
        p += w * x[static_cast<Eigen::Index>(j)];
        q += w * x_prime[static_cast<Eigen::Index>(j)];
      }
      double value = c2 * power_relu(s, p) * power_relu(s, q);
      if (spec.family == KernelFamily::nt) value += tangent_scale * power_relu(s - 1, p) * power_relu(s - 1, q);
      m.count += 1.0;
      const double delta = value - m.mean;
      m.mean += delta / m.count;
      m.m2 += delta * (value - m.mean);
    }
    blocks[c] = m;
  });

  Moments total;
  for (const Moments& b : blocks) {
    const double count = total.count + b.count;
    const double delta = b.mean - total.mean;
    total.mean += delta * b.count / count;
    total.m2 += b.m2 + delta * delta * total.count * b.count / count;
    total.count = count;
  }
  const double variance = total.m2 / (total.count - 1.0);
  return {total.mean, std::sqrt(variance / total.count)};
}

void require_unit_columns(const PointSet& points, std::string_view what) {
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double norm = points.col(j).norm();
    if (!(std::abs(norm - 1.0) <= kUnitNormSlack)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << what << " " << j << " is not unit-norm (norm=" << norm << ")";
      throw DomainError(msg.str());
    }
  }
}

Eigen::MatrixXd gram(const DotProductKernel& kernel, const PointSet& points, std::size_t workers) {
  require_unit_columns(points);
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd k = points.transpose() * points;
  for_each_chunk(static_cast<std::size_t>(n), 16, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (auto j = static_cast<Eigen::Index>(begin); j < static_cast<Eigen::Index>(end); ++j) {
      k(j, j) = kernel.at_one();
      for (Eigen::Index i = j + 1; i < n; ++i) k(i, j) = kernel(k(i, j));
    }
  });
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  return k;
}

Eigen::MatrixXd cross_gram(const DotProductKernel& kernel, const PointSet& a, const PointSet& b,
                           std::size_t workers) {
  if (a.rows() != b.rows()) throw ConfigError("cross_gram: point dimensions differ");
  Eigen::MatrixXd k = a.transpose() * b;
  const Eigen::Index rows = k.rows();
  for_each_chunk(static_cast<std::size_t>(k.cols()), 16, workers,
                 [&](std::size_t, std::size_t begin, std::size_t end) {
                   for (auto j = static_cast<Eigen::Index>(begin); j < static_cast<Eigen::Index>(end); ++j) {
                     for (Eigen::Index i = 0; i < rows; ++i) k(i, j) = kernel(k(i, j));
                   }
                 });
  return k;
}

}  // namespace ntk

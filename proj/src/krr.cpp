#include "ntk/krr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ntk/error.hpp"
#include "ntk/parallel.hpp"
#include "ntk/random.hpp"

namespace ntk {

namespace {

constexpr std::size_t kPredictChunk = 256;

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("regularization lambda must be positive and finite");
}

void require_unit(const Eigen::VectorXd& x) {
  if (!(std::abs(x.norm() - 1.0) <= kUnitNormSlack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "test point is not unit-norm (norm=" << x.norm() << ")";
    throw DomainError(msg.str());
  }
}

double condition_estimate(const Eigen::MatrixXd& a) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  if (ev.size() == 0) return 1.0;
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

double clamp_variance(double v, double prior) {
  if (v < 0.0) {
    if (v < -kVarianceRoundoff * std::max(1.0, prior)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "posterior variance " << v << " is negative beyond roundoff";
      throw NumericalError(msg.str());
    }
    return 0.0;
  }
  return std::min(v, prior);
}

// Per-index diagnostics of a factor of K + mu I: log L_ii and L_ii^2 - mu.
struct FactorDiagonal {
  double mu = 0.0;
  Eigen::VectorXd log_diag;
  Eigen::VectorXd conditional_variance;
};

FactorDiagonal diagonal_of(const RegularizedFactor& f, double lambda) {
  FactorDiagonal out;
  out.mu = lambda * lambda + f.jitter;
  const Eigen::VectorXd diag = f.lower.diagonal();
  out.log_diag = diag.array().log();
  out.conditional_variance = (diag.array().square() - out.mu).cwiseMax(0.0);
  return out;
}

double bound_factor(double lambda) { return 2.0 / std::log1p(1.0 / (lambda * lambda)); }

}  // namespace

PointSet sample_sphere(int d, std::size_t n, std::uint64_t seed) {
  if (d < 2) throw ConfigError("sphere dimension d must be >= 2");
  if (n < 1) throw ConfigError("sample size must be >= 1");
  const CounterRng rng(seed);
  const auto du = static_cast<std::uint64_t>(d);
  PointSet points(d, static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    auto col = points.col(static_cast<Eigen::Index>(k));
    for (int j = 0; j < d; ++j) col[j] = rng.normal(k * du + static_cast<std::uint64_t>(j));
    col /= col.norm();
  }
  return points;
}

void SphericalDataset::validate() const {
  if (inputs.rows() != dim) throw ConfigError("dataset inputs do not match the declared dimension");
  if (inputs.cols() != values.size()) throw ConfigError("dataset has different numbers of inputs and values");
  if (noise_scale < 0.0) throw ConfigError("noise scale must be nonnegative");
  require_unit_columns(inputs, "training input");
}

RegularizedFactor factor_regularized(const Eigen::MatrixXd& gram_matrix, double lambda2) {
  const Eigen::Index n = gram_matrix.rows();
  Eigen::MatrixXd a = gram_matrix;
  a.diagonal().array() += lambda2;
  RegularizedFactor out;
  if (n == 0) return out;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    out.lower = llt.matrixL();
    return out;
  }
  const double scale = gram_matrix.trace() / static_cast<double>(n);
  for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-9); rel *= 10.0) {
    Eigen::MatrixXd b = a;
    b.diagonal().array() += rel * scale;
    llt.compute(b);
    if (llt.info() == Eigen::Success) {
      out.lower = llt.matrixL();
      out.jitter = rel * scale;
      return out;
    }
  }
  const double cond = condition_estimate(a);
  std::ostringstream msg;
  msg.precision(6);
  msg << "Cholesky factorization of the regularized Gram matrix failed after maximal jitter (n=" << n
      << ", condition estimate " << cond << ")";
  throw IllConditionedGram(msg.str(), cond);
}

FittedRegressor FittedRegressor::prior(const DotProductKernel& kernel, double lambda) {
  require_lambda(lambda);
  FittedRegressor model(kernel, lambda);
  model.inputs_ = PointSet(kernel.spec().ambient_dim, 0);
  return model;
}

FittedRegressor FittedRegressor::fit(const DotProductKernel& kernel, const SphericalDataset& data, double lambda,
                                     std::size_t workers) {
  require_lambda(lambda);
  data.validate();
  if (data.size() == 0) throw ConfigError("cannot fit on an empty dataset; use the prior model");
  FittedRegressor model(kernel, lambda);
  model.inputs_ = data.inputs;
  RegularizedFactor f = factor_regularized(gram(kernel, data.inputs, workers), lambda * lambda);
  model.lower_ = std::move(f.lower);
  model.jitter_ = f.jitter;
  const Eigen::VectorXd z = model.lower_.triangularView<Eigen::Lower>().solve(data.values);
  model.alpha_ = model.lower_.transpose().triangularView<Eigen::Upper>().solve(z);
  return model;
}

double FittedRegressor::predict_mean(const Eigen::VectorXd& x) const {
  require_unit(x);
  if (size() == 0) return 0.0;
  const Eigen::VectorXd k = cross_gram(kernel_, inputs_, x, 1).col(0);
  return k.dot(alpha_);
}

double FittedRegressor::predict_variance(const Eigen::VectorXd& x) const {
  require_unit(x);
  const double prior = kernel_.at_one();
  if (size() == 0) return prior;
  const Eigen::VectorXd k = cross_gram(kernel_, inputs_, x, 1).col(0);
  const Eigen::VectorXd v = lower_.triangularView<Eigen::Lower>().solve(k);
  return clamp_variance(prior - v.squaredNorm(), prior);
}

Eigen::VectorXd FittedRegressor::predict_mean(const PointSet& points, std::size_t workers) const {
  require_unit_columns(points, "test point");
  const auto m = static_cast<std::size_t>(points.cols());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.cols());
  if (size() == 0) return out;
  for_each_chunk(m, kPredictChunk, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    const Eigen::MatrixXd k = cross_gram(kernel_, inputs_, points.middleCols(b, len), 1);
    out.segment(b, len).noalias() = k.transpose() * alpha_;
  });
  return out;
}

Eigen::VectorXd FittedRegressor::predict_variance(const PointSet& points, std::size_t workers) const {
  require_unit_columns(points, "test point");
  const auto m = static_cast<std::size_t>(points.cols());
  const double prior = kernel_.at_one();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(points.cols(), prior);
  if (size() == 0) return out;
  for_each_chunk(m, kPredictChunk, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    Eigen::MatrixXd k = cross_gram(kernel_, inputs_, points.middleCols(b, len), 1);
    lower_.triangularView<Eigen::Lower>().solveInPlace(k);
    for (Eigen::Index j = 0; j < len; ++j) out[b + j] = clamp_variance(prior - k.col(j).squaredNorm(), prior);
  });
  return out;
}

void ConfidenceParams::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("confidence delta must lie in (0, 1)");
  if (!(norm_bound > 0.0)) throw ConfigError("norm bound B must be positive");
  if (!(noise >= 0.0)) throw ConfigError("noise scale R must be nonnegative");
}

double ConfidenceParams::beta(double lambda) const {
  validate();
  require_lambda(lambda);
  return norm_bound + (noise / lambda) * std::sqrt(2.0 * std::log(1.0 / delta));
}

double confidence_band(const FittedRegressor& model, const Eigen::VectorXd& x, const ConfidenceParams& params) {
  return params.beta(model.lambda()) * std::sqrt(model.predict_variance(x));
}

double information_gain(const DotProductKernel& kernel, const PointSet& points, double lambda,
                        std::size_t workers) {
  require_lambda(lambda);
  if (points.cols() == 0) return 0.0;
  const FactorDiagonal diag =
      diagonal_of(factor_regularized(gram(kernel, points, workers), lambda * lambda), lambda);
  return std::max(0.0, diag.log_diag.sum() - 0.5 * static_cast<double>(points.cols()) * std::log(diag.mu));
}

double effective_dimension(const DotProductKernel& kernel, const PointSet& points, double lambda,
                           std::size_t workers) {
  require_lambda(lambda);
  const Eigen::Index n = points.cols();
  if (n == 0) return 0.0;
  const RegularizedFactor f = factor_regularized(gram(kernel, points, workers), lambda * lambda);
  const double mu = lambda * lambda + f.jitter;
  const Eigen::MatrixXd inv = f.lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  const double d = static_cast<double>(n) - mu * inv.squaredNorm();
  return std::clamp(d, 0.0, static_cast<double>(n));
}

std::vector<InfoGainReport> prefix_reports(const DotProductKernel& kernel, const PointSet& points, double lambda,
                                           std::size_t workers) {
  require_lambda(lambda);
  const Eigen::Index n = points.cols();
  std::vector<InfoGainReport> out;
  if (n == 0) return out;
  const RegularizedFactor f = factor_regularized(gram(kernel, points, workers), lambda * lambda);
  const FactorDiagonal diag = diagonal_of(f, lambda);
  // Leading blocks of L^{-1} are the inverses of the leading blocks of L.
  const Eigen::MatrixXd inv = f.lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  const double half_log_mu = 0.5 * std::log(diag.mu);
  const double factor = bound_factor(lambda);
  double log_det = 0.0;
  double inv_sq = 0.0;
  double sum_var = 0.0;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    log_det += diag.log_diag[k] - half_log_mu;
    inv_sq += inv.row(k).head(k + 1).squaredNorm();
    sum_var += diag.conditional_variance[k];
    InfoGainReport r;
    r.n = static_cast<std::size_t>(k + 1);
    r.info_gain = std::max(0.0, log_det);
    r.effective_dim = std::clamp(static_cast<double>(k + 1) - diag.mu * inv_sq, 0.0, static_cast<double>(k + 1));
    r.lambda = lambda;
    r.sum_variance = sum_var;
    r.bound_rhs = factor * r.info_gain;
    out.push_back(r);
  }
  return out;
}

GreedySelection greedy_max_variance(const DotProductKernel& kernel, const PointSet& candidates, std::size_t n,
                                    double lambda, std::size_t workers) {
  require_lambda(lambda);
  if (candidates.cols() == 0) throw ConfigError("greedy selection needs a non-empty candidate grid");
  require_unit_columns(candidates, "candidate");
  const auto c = static_cast<std::size_t>(candidates.cols());
  const double lambda2 = lambda * lambda;
  constexpr std::size_t kChunk = 512;

  // Row c of `factors` holds the low-rank posterior covariance factors of candidate c.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> factors(candidates.cols(),
                                                                                  static_cast<Eigen::Index>(n));
  Eigen::VectorXd variance = Eigen::VectorXd::Constant(candidates.cols(), kernel.at_one());
  std::vector<std::pair<double, std::size_t>> chunk_best(chunk_count(c, kChunk));

  GreedySelection out;
  out.indices.reserve(n);
  out.variances.reserve(n);
  out.points.resize(candidates.rows(), static_cast<Eigen::Index>(n));

  for (std::size_t t = 0; t < n; ++t) {
    for_each_chunk(c, kChunk, workers, [&](std::size_t ci, std::size_t begin, std::size_t end) {
      std::pair<double, std::size_t> best{-std::numeric_limits<double>::infinity(), begin};
      for (std::size_t i = begin; i < end; ++i) {
        if (variance[static_cast<Eigen::Index>(i)] > best.first) best = {variance[static_cast<Eigen::Index>(i)], i};
      }
      chunk_best[ci] = best;
    });
    std::pair<double, std::size_t> best = chunk_best.front();
    for (const auto& b : chunk_best) {
      if (b.first > best.first) best = b;
    }
    const std::size_t j = best.second;
    const auto ji = static_cast<Eigen::Index>(j);
    const double selected_var = variance[ji];
    out.indices.push_back(j);
    out.variances.push_back(selected_var);
    out.points.col(static_cast<Eigen::Index>(t)) = candidates.col(ji);

    const auto ti = static_cast<Eigen::Index>(t);
    const Eigen::RowVectorXd row_j = factors.row(ji).head(ti);
    const Eigen::VectorXd xj = candidates.col(ji);
    const double scale = 1.0 / std::sqrt(selected_var + lambda2);
    for_each_chunk(c, kChunk, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double k = kernel(clamp_dot(candidates.col(ii).dot(xj)));
        const double g = (k - factors.row(ii).head(ti).dot(row_j)) * scale;
        factors(ii, ti) = g;
        variance[ii] = std::max(0.0, variance[ii] - g * g);
      }
    });
  }
  return out;
}

VarianceSumCheck variance_sum_check(const DotProductKernel& kernel, const PointSet& points, double lambda,
                                    std::size_t workers) {
  require_lambda(lambda);
  VarianceSumCheck out;
  if (points.cols() > 0) {
    const FactorDiagonal diag =
        diagonal_of(factor_regularized(gram(kernel, points, workers), lambda * lambda), lambda);
    out.lhs = diag.conditional_variance.sum();
    out.info_gain =
        std::max(0.0, diag.log_diag.sum() - 0.5 * static_cast<double>(points.cols()) * std::log(diag.mu));
    out.rhs = bound_factor(lambda) * out.info_gain;
  }
  out.holds = out.lhs <= out.rhs + kVarianceSumSlack;
  return out;
}

}  // namespace ntk

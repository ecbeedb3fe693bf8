#include "ntk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ntk/detail/ols.hpp"
#include "ntk/error.hpp"
#include "ntk/parallel.hpp"
#include "ntk/random.hpp"

namespace ntk {

namespace {

constexpr std::size_t kEvalChunk = 512;

void require_exponent_args(int s, int d) {
  if (s < 1) throw ConfigError("smoothness s must be >= 1");
  if (d < 2) throw ConfigError("dimension d must be >= 2");
}

void require_grid(const std::vector<std::size_t>& grid) {
  if (grid.empty()) throw ConfigError("n grid is empty");
  if (grid.front() < 1) throw ConfigError("n grid entries must be >= 1");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) throw ConfigError("n grid must be strictly increasing");
  }
  if (grid.size() - upper_half_start(grid.size()) < 3) {
    throw ConfigError("n grid needs at least 5 entries so the upper half holds 3 points for the slope");
  }
}

Eigen::VectorXd gaussian_vector(std::uint64_t seed, Eigen::Index n) {
  const CounterRng rng(seed);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal(static_cast<std::uint64_t>(i));
  return z;
}

LogLogFit upper_half_fit(const std::vector<std::size_t>& grid, const std::vector<double>& values) {
  const std::size_t start = upper_half_start(grid.size());
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = start; i < grid.size(); ++i) {
    xs.push_back(static_cast<double>(grid[i]));
    ys.push_back(values[i]);
  }
  return fit_loglog_slope(xs, ys);
}

}  // namespace

SyntheticFunction SyntheticFunction::make(const DotProductKernel& kernel, const SyntheticConfig& cfg,
                                          std::uint64_t seed, std::size_t workers) {
  if (cfg.anchors < 1) throw ConfigError("synthetic function needs at least one anchor");
  const int d = kernel.spec().ambient_dim;
  const PointSet anchors = sample_sphere(d, cfg.anchors, derive_seed(seed, stream::anchors));
  // Y ~ N(0, K): Y = L z with K = L L^T.
  const RegularizedFactor k_factor = factor_regularized(gram(kernel, anchors, workers), 0.0);
  const Eigen::VectorXd z = gaussian_vector(derive_seed(seed, stream::anchor_values), anchors.cols());
  const Eigen::VectorXd values = k_factor.lower.triangularView<Eigen::Lower>() * z;
  return from_anchors(kernel, anchors, values, cfg, seed, workers);
}

SyntheticFunction SyntheticFunction::from_anchors(const DotProductKernel& kernel, const PointSet& anchors,
                                                  const Eigen::VectorXd& values, const SyntheticConfig& cfg,
                                                  std::uint64_t seed, std::size_t workers) {
  if (!(cfg.ridge > 0.0)) throw ConfigError("synthetic ridge delta^2 must be positive");
  if (cfg.range_sample < 2) throw ConfigError("range sample must hold at least 2 points");
  if (anchors.cols() != values.size() || anchors.cols() == 0) {
    throw ConfigError("anchors and anchor values must be non-empty and of equal length");
  }
  if (anchors.rows() != kernel.spec().ambient_dim) throw ConfigError("anchor dimension differs from the kernel's");
  require_unit_columns(anchors, "anchor");

  SyntheticFunction f(kernel);
  f.anchors_ = anchors;
  f.values_ = values;
  f.ridge_ = cfg.ridge;
  const Eigen::MatrixXd k = gram(kernel, anchors, workers);
  const RegularizedFactor factor = factor_regularized(k, cfg.ridge);
  const Eigen::VectorXd z = factor.lower.triangularView<Eigen::Lower>().solve(values);
  f.weights_ = factor.lower.transpose().triangularView<Eigen::Upper>().solve(z);

  f.norm_sq_ = f.weights_.dot(k * f.weights_);
  f.bound_sq_ = values.squaredNorm() / cfg.ridge;
  if (!(f.norm_sq_ <= f.bound_sq_ + kNormCertificateSlack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "RKHS norm certificate failed: ||g||^2 = " << f.norm_sq_ << " exceeds ||Y||^2/delta^2 = " << f.bound_sq_;
    throw NumericalError(msg.str());
  }

  const PointSet sample = sample_sphere(kernel.spec().ambient_dim, cfg.range_sample,
                                        derive_seed(seed, stream::range_sample));
  f.range_ = 1.0;
  const Eigen::VectorXd g = f.evaluate(sample, workers);
  const double range = g.maxCoeff() - g.minCoeff();
  if (!(range > kDegenerateRange)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "synthetic function is degenerate: range " << range << " over " << cfg.range_sample << " samples";
    throw DegenerateFunction(msg.str());
  }
  f.range_ = range;
  return f;
}

double SyntheticFunction::operator()(const Eigen::VectorXd& x) const {
  if (!(std::abs(x.norm() - 1.0) <= kUnitNormSlack)) throw DomainError("evaluation point is not unit-norm");
  return cross_gram(kernel_, anchors_, x, 1).col(0).dot(weights_) / range_;
}

Eigen::VectorXd SyntheticFunction::evaluate(const PointSet& points, std::size_t workers) const {
  require_unit_columns(points, "evaluation point");
  Eigen::VectorXd out(points.cols());
  for_each_chunk(static_cast<std::size_t>(points.cols()), kEvalChunk, workers,
                 [&](std::size_t, std::size_t begin, std::size_t end) {
                   const auto b = static_cast<Eigen::Index>(begin);
                   const auto len = static_cast<Eigen::Index>(end - begin);
                   const Eigen::MatrixXd k = cross_gram(kernel_, anchors_, points.middleCols(b, len), 1);
                   out.segment(b, len).noalias() = k.transpose() * weights_;
                 });
  return out / range_;
}

double theoretical_error_exponent(KernelFamily family, int s, int d) {
  require_exponent_args(s, d);
  if (family == KernelFamily::nt) return static_cast<double>(-2 * s + 1) / static_cast<double>(2 * d + 4 * s - 4);
  return static_cast<double>(-2 * s - 1) / static_cast<double>(2 * d + 4 * s);
}

double theoretical_mig_exponent(KernelFamily family, int s, int d) {
  require_exponent_args(s, d);
  if (family == KernelFamily::nt) return static_cast<double>(d - 1) / static_cast<double>(d + 2 * s - 2);
  return static_cast<double>(d - 1) / static_cast<double>(d + 2 * s);
}

LogLogFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ConfigError("fit_loglog_slope: xs and ys differ in length");
  if (xs.size() < 3) throw ConfigError("fit_loglog_slope needs at least 3 points");
  std::vector<double> lx(xs.size());
  std::vector<double> ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DomainError("fit_loglog_slope needs strictly positive inputs");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  const detail::LineFit fit = detail::ordinary_least_squares(lx, ly);
  return {fit.slope, fit.intercept, fit.r_squared};
}

std::size_t upper_half_start(std::size_t grid_size) { return grid_size / 2; }

std::vector<std::size_t> power_of_two_grid(int first, int last) {
  if (first < 0 || last < first || last > 40) throw ConfigError("power-of-two grid exponents out of range");
  std::vector<std::size_t> grid;
  for (int i = first; i <= last; ++i) grid.push_back(std::size_t{1} << i);
  return grid;
}

ErrorRateReport error_rate_experiment(const ErrorRateConfig& cfg, std::size_t workers) {
  require_grid(cfg.n_grid);
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (cfg.eval_sample < 1) throw ConfigError("evaluation sample must be >= 1");
  if (!(cfg.train_lambda2 > 0.0)) throw ConfigError("training regularization lambda^2 must be positive");
  if (cfg.noise_scale < 0.0) throw ConfigError("noise scale must be nonnegative");
  const DotProductKernel kernel(cfg.kernel, cfg.recursion);
  const int d = cfg.kernel.ambient_dim;
  const double lambda = std::sqrt(cfg.train_lambda2);
  const std::size_t max_n = cfg.n_grid.back();

  ErrorRateReport report;
  report.config = cfg;
  report.theoretical_exponent = theoretical_error_exponent(cfg.kernel.family, cfg.kernel.smoothness, d);

  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    RepetitionResult rep;
    rep.index = r;
    rep.seed = cfg.master_seed + r;
    try {
      const SyntheticFunction f = SyntheticFunction::make(kernel, cfg.synthetic, rep.seed, workers);
      const PointSet eval = sample_sphere(d, cfg.eval_sample, derive_seed(rep.seed, stream::evaluation));
      const Eigen::VectorXd truth = f.evaluate(eval, workers);
      const std::uint64_t train_seed = derive_seed(rep.seed, stream::train);
      const std::uint64_t noise_seed = derive_seed(rep.seed, stream::noise);

      PointSet pool;
      Eigen::VectorXd pool_values;
      if (cfg.nested) {
        pool = sample_sphere(d, max_n, train_seed);
        pool_values = f.evaluate(pool, workers);
        if (cfg.noise_scale > 0.0) {
          pool_values += cfg.noise_scale * gaussian_vector(noise_seed, pool.cols());
        }
      }
      for (const std::size_t n : cfg.n_grid) {
        SphericalDataset data;
        data.dim = d;
        data.noise_scale = cfg.noise_scale;
        const auto ni = static_cast<Eigen::Index>(n);
        if (cfg.nested) {
          data.inputs = pool.leftCols(ni);
          data.values = pool_values.head(ni);
        } else {
          data.inputs = sample_sphere(d, n, derive_seed(train_seed, n));
          data.values = f.evaluate(data.inputs, workers);
          if (cfg.noise_scale > 0.0) {
            data.values += cfg.noise_scale * gaussian_vector(derive_seed(noise_seed, n), ni);
          }
        }
        const FittedRegressor model = FittedRegressor::fit(kernel, data, lambda, workers);
        const Eigen::VectorXd prediction = model.predict_mean(eval, workers);
        rep.sup_errors.push_back((prediction - truth).cwiseAbs().maxCoeff());
      }
      const LogLogFit fit = upper_half_fit(cfg.n_grid, rep.sup_errors);
      rep.exponent = fit.slope;
      rep.r_squared = fit.r_squared;
      rep.ok = true;
    } catch (const Error& e) {
      rep.ok = false;
      rep.diagnostic = e.what();
      ++report.failed;
    }
    report.repetitions.push_back(std::move(rep));
  }

  const double failed_share = static_cast<double>(report.failed) / static_cast<double>(cfg.repetitions);
  if (failed_share >= kMaxFailedRepetitionShare) {
    std::ostringstream msg;
    msg << report.failed << " of " << cfg.repetitions << " repetitions failed";
    for (const RepetitionResult& rep : report.repetitions) {
      if (!rep.ok) {
        msg << "; first failure (seed " << rep.seed << "): " << rep.diagnostic;
        break;
      }
    }
    throw NumericalError(msg.str());
  }

  std::vector<double> exponents;
  for (const RepetitionResult& rep : report.repetitions) {
    if (rep.ok) exponents.push_back(rep.exponent);
  }
  double mean = 0.0;
  for (const double e : exponents) mean += e;
  mean /= static_cast<double>(exponents.size());
  double ss = 0.0;
  for (const double e : exponents) ss += (e - mean) * (e - mean);
  report.mean_exponent = mean;
  report.std_exponent = exponents.size() > 1 ? std::sqrt(ss / static_cast<double>(exponents.size() - 1)) : 0.0;
  return report;
}

MigGrowthReport mig_growth_experiment(const MigGrowthConfig& cfg, std::size_t workers) {
  require_grid(cfg.n_grid);
  if (cfg.candidate_grid_size < 1) throw ConfigError("candidate grid must be non-empty");
  const DotProductKernel kernel(cfg.kernel, cfg.recursion);
  const int d = cfg.kernel.ambient_dim;

  MigGrowthReport report;
  report.config = cfg;
  report.theoretical_exponent = theoretical_mig_exponent(cfg.kernel.family, cfg.kernel.smoothness, d);

  const PointSet candidates = sample_sphere(d, cfg.candidate_grid_size, derive_seed(cfg.seed, stream::candidates));
  const GreedySelection selection =
      greedy_max_variance(kernel, candidates, cfg.n_grid.back(), cfg.lambda, workers);
  const std::vector<InfoGainReport> prefixes = prefix_reports(kernel, selection.points, cfg.lambda, workers);
  for (const std::size_t n : cfg.n_grid) {
    report.info_gain.push_back(prefixes[n - 1].info_gain);
    report.effective_dim.push_back(prefixes[n - 1].effective_dim);
  }
  const LogLogFit fit = upper_half_fit(cfg.n_grid, report.info_gain);
  report.fitted_exponent = fit.slope;
  report.r_squared = fit.r_squared;
  return report;
}

}  // namespace ntk

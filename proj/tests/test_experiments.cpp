#include <cmath>
#include <vector>

#include <doctest.h>

#include "ntk/error.hpp"
#include "ntk/experiments.hpp"
#include "ntk/krr.hpp"
#include "ntk/random.hpp"

using namespace ntk;
using doctest::Approx;

TEST_CASE("theoretical exponents") {
  CHECK(theoretical_error_exponent(KernelFamily::nt, 1, 3) == Approx(-1.0 / 6.0));
  CHECK(theoretical_error_exponent(KernelFamily::nt, 2, 2) == Approx(-3.0 / 8.0));
  CHECK(theoretical_error_exponent(KernelFamily::rf, 1, 3) == Approx(-3.0 / 10.0));
  CHECK(theoretical_mig_exponent(KernelFamily::nt, 1, 3) == Approx(2.0 / 3.0));
  CHECK(theoretical_mig_exponent(KernelFamily::rf, 2, 4) == Approx(3.0 / 8.0));
  // Smoother kernels decay faster; higher dimensions slower.
  for (int d = 2; d <= 5; ++d) {
    for (int s = 1; s < 3; ++s) {
      CHECK(theoretical_error_exponent(KernelFamily::nt, s + 1, d) < theoretical_error_exponent(KernelFamily::nt, s, d));
      CHECK(theoretical_error_exponent(KernelFamily::nt, s, d + 1) > theoretical_error_exponent(KernelFamily::nt, s, d));
    }
  }
  CHECK_THROWS_AS(theoretical_error_exponent(KernelFamily::nt, 0, 3), ConfigError);
}

TEST_CASE("log-log slope fits") {
  const std::vector<double> xs = {1, 2, 4, 8, 16};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.0 * std::pow(x, -0.75));
  const LogLogFit f = fit_loglog_slope(xs, ys);
  CHECK(f.slope == Approx(-0.75));
  CHECK(f.intercept == Approx(std::log(3.0)));
  CHECK(f.r_squared == Approx(1.0));
  const std::vector<double> two = {1, 2};
  CHECK_THROWS_AS(fit_loglog_slope(two, two), ConfigError);
  CHECK_THROWS_AS(fit_loglog_slope(xs, two), ConfigError);
  std::vector<double> bad = ys;
  bad[2] = 0.0;
  CHECK_THROWS_AS(fit_loglog_slope(xs, bad), DomainError);
}

TEST_CASE("grids") {
  CHECK(power_of_two_grid(1, 4) == std::vector<std::size_t>{2, 4, 8, 16});
  CHECK(upper_half_start(11) == 5);
  CHECK(upper_half_start(6) == 3);
  CHECK_THROWS_AS(power_of_two_grid(3, 2), ConfigError);
}

TEST_CASE("synthetic target functions") {
  const DotProductKernel k({KernelFamily::nt, 1, 2, 3});
  const SyntheticConfig cfg{};
  const SyntheticFunction f = SyntheticFunction::make(k, cfg, 5);
  CHECK(f.anchors().cols() == 100);
  CHECK(f.rkhs_norm_sq() <= f.certified_bound_sq() + kNormCertificateSlack);
  CHECK(f.norm_bound() > 0.0);
  // The normalizer is the range on the estimation sample, so that sample has range exactly 1.
  const Eigen::VectorXd v = f.evaluate(sample_sphere(3, cfg.range_sample, derive_seed(5, stream::range_sample)));
  CHECK(v.maxCoeff() - v.minCoeff() == Approx(1.0).epsilon(1e-12));
  const PointSet q = sample_sphere(3, 600, 77);
  CHECK(f.evaluate(q, 1) == f.evaluate(q, 3));
  CHECK(f.evaluate(q)(4) == Approx(f(Eigen::VectorXd(q.col(4)))).epsilon(1e-14));
  const SyntheticFunction again = SyntheticFunction::make(k, cfg, 5);
  CHECK(again.anchor_values() == f.anchor_values());
}

TEST_CASE("degenerate synthetic functions are rejected") {
  const DotProductKernel k({KernelFamily::rf, 2, 2, 3});
  const PointSet anchors = sample_sphere(3, 10, 1);
  CHECK_THROWS_AS(SyntheticFunction::from_anchors(k, anchors, Eigen::VectorXd::Zero(10), SyntheticConfig{}, 0),
                  DegenerateFunction);
  CHECK_THROWS_AS(SyntheticFunction::from_anchors(k, anchors, Eigen::VectorXd::Ones(9), SyntheticConfig{}, 0),
                  ConfigError);
  CHECK_THROWS_AS(SyntheticFunction::from_anchors(k, anchors, Eigen::VectorXd::Ones(10), SyntheticConfig{10, 0.0, 100}, 0),
                  ConfigError);
}

TEST_CASE("error-rate experiment is reproducible") {
  ErrorRateConfig cfg;
  cfg.kernel = {KernelFamily::nt, 2, 2, 3};
  cfg.n_grid = power_of_two_grid(2, 7);
  cfg.repetitions = 3;
  cfg.eval_sample = 500;
  cfg.master_seed = 9;
  cfg.synthetic.range_sample = 1000;
  const ErrorRateReport a = error_rate_experiment(cfg, 1);
  const ErrorRateReport b = error_rate_experiment(cfg, 3);
  REQUIRE(a.repetitions.size() == 3);
  CHECK(a.failed == 0);
  CHECK(a.theoretical_exponent == Approx(-0.3));
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(a.repetitions[r].sup_errors == b.repetitions[r].sup_errors);
    CHECK(a.repetitions[r].seed == 9 + r);
    CHECK(a.repetitions[r].sup_errors.size() == cfg.n_grid.size());
  }
  CHECK(a.mean_exponent == b.mean_exponent);
  CHECK(a.mean_exponent < 0.0);
  // Error at the largest n is well below the error at the smallest.
  CHECK(a.repetitions[0].sup_errors.back() < 0.5 * a.repetitions[0].sup_errors.front());

  cfg.nested = false;
  const ErrorRateReport c = error_rate_experiment(cfg, 1);
  CHECK(c.failed == 0);
  CHECK(c.repetitions[0].sup_errors != a.repetitions[0].sup_errors);
}

TEST_CASE("error-rate configuration checks") {
  ErrorRateConfig cfg;
  cfg.n_grid = {2, 4, 8, 16};
  CHECK_THROWS_AS(error_rate_experiment(cfg), ConfigError);
  cfg.n_grid = {2, 4, 4, 8, 16};
  CHECK_THROWS_AS(error_rate_experiment(cfg), ConfigError);
  cfg.n_grid = power_of_two_grid(1, 5);
  cfg.train_lambda2 = 0.0;
  CHECK_THROWS_AS(error_rate_experiment(cfg), ConfigError);
}

TEST_CASE("maximal information gain growth") {
  MigGrowthConfig cfg;
  cfg.kernel = {KernelFamily::nt, 1, 2, 3};
  cfg.n_grid = power_of_two_grid(1, 7);
  cfg.candidate_grid_size = 1024;
  cfg.seed = 3;
  const MigGrowthReport a = mig_growth_experiment(cfg, 1);
  REQUIRE(a.info_gain.size() == cfg.n_grid.size());
  for (std::size_t i = 1; i < a.info_gain.size(); ++i) CHECK(a.info_gain[i] > a.info_gain[i - 1]);
  CHECK(a.fitted_exponent > 0.0);
  CHECK(a.fitted_exponent < 1.0);
  const MigGrowthReport b = mig_growth_experiment(cfg, 2);
  CHECK(a.info_gain == b.info_gain);

  cfg.lambda = 0.2;
  const MigGrowthReport c = mig_growth_experiment(cfg, 1);
  for (std::size_t i = 0; i < a.info_gain.size(); ++i) CHECK(c.info_gain[i] < a.info_gain[i]);
}

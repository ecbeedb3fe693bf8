// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Usage: acceptance <path to the ntk binary>

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "ntk/error.hpp"
#include "ntk/experiments.hpp"
#include "ntk/krr.hpp"
#include "ntk/neural_kernels.hpp"
#include "ntk/random.hpp"
#include "ntk/sphere_spectral.hpp"

using namespace ntk;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> pair_with_dot(int d, double u) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  x[0] = 1.0;
  y[0] = u;
  y[1] = std::sqrt((1.0 - u) * (1.0 + u));
  return {x, y};
}

SpectrumTable spectrum(KernelFamily family, int s, int d, int max_degree) {
  return mercer_spectrum(DotProductKernel({family, s, 2, d}), max_degree, GegenbauerBasis(d, max_degree));
}

// Slope, or NaN when the fit has too few usable degrees.
double slope_or_nan(const SpectrumTable& t, Parity parity, DegreeRange range) {
  try {
    return eigendecay_fit(t, parity, range).slope;
  } catch (const FitError&) {
    return std::nan("");
  }
}

Verdict criterion1() {
  constexpr std::uint64_t kSamples = 1'000'000;
  constexpr double kSigmas = 3.0;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;
  std::string recheck;
  std::uint64_t seed = 1;
  for (KernelFamily fam : {KernelFamily::rf, KernelFamily::nt}) {
    for (int s = 1; s <= 3; ++s) {
      for (double u : {-0.9, -0.3, 0.0, 0.3, 0.9}) {
        for (int d : {3, 5}) {
          const KernelSpec spec{fam, s, 2, d};
          const auto [x, y] = pair_with_dot(d, u);
          const McEstimate est = mc_estimate(spec, x, y, {kSamples, seed++});
          const double closed = DotProductKernel(spec)(x.dot(y));
          const double z = std::abs(est.estimate - closed) / est.std_error;
          worst = std::max(worst, z);
          ++cases;
          if (!(z <= kSigmas)) {
            ++failures;
            // Informational only: a fresh 10x larger sample tells bias from chance.
            const McEstimate big = mc_estimate(spec, x, y, {10 * kSamples, 0xB16 + seed});
            recheck += std::string(to_string(fam)) + " s=" + std::to_string(s) + " u=" + fmt(u) +
                       " d=" + std::to_string(d) + " z=" + fmt(z) + ", recheck at 1e7 z=" +
                       fmt((big.estimate - closed) / big.std_error) + ";";
          }
        }
      }
    }
  }
  return {failures == 0, std::to_string(cases) + " cases, " + std::to_string(failures) +
                             " outside 3 SE, worst |z| = " + fmt(worst) + (recheck.empty() ? "" : " [" + recheck + "]")};
}

Verdict criterion2() {
  constexpr double kTol = 1e-6;
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (int s = 1; s <= 3; ++s) {
    for (int j = -99; j <= 99; ++j) {
      const double u = j / 100.0;
      const double fd = (rf_closed(s, u + h) - rf_closed(s, u - h)) / (2.0 * h);
      const double exact = rf_derivative(s, u);
      worst = std::max(worst, std::abs(exact - fd) / std::abs(exact));
    }
  }
  return {worst <= kTol, "max relative error " + fmt(worst) + " over s=1..3, u in [-0.99, 0.99] step 0.01"};
}

Verdict criterion3() {
  const DegreeRange range{9, 59};
  const SpectrumTable nt1 = spectrum(KernelFamily::nt, 1, 3, 60);
  const SpectrumTable nt2 = spectrum(KernelFamily::nt, 2, 3, 60);
  const SpectrumTable rf1 = spectrum(KernelFamily::rf, 1, 3, 60);
  const SpectrumTable matern = matern_spectrum({0.5, 1.0, 3}, 60);
  const double a = slope_or_nan(nt1, Parity::odd, range);
  const double b = slope_or_nan(rf1, Parity::even, range);
  const double c = slope_or_nan(nt2, Parity::even, range);
  const double m = slope_or_nan(matern, Parity::all, range);
  const bool pass = std::abs(a + 3.0) <= 0.3 && std::abs(b + 5.0) <= 0.5 && std::abs(c + 5.0) <= 0.5 &&
                    std::abs(m + 3.0) <= 0.1;
  std::string detail = "NT s=1 odd " + fmt(a) + ", RF s=1 even " + fmt(b) + ", NT s=2 even " + fmt(c) +
                       ", Matern " + fmt(m) + " (nan: no usable degrees)";
  detail += "; opposite parity: NT s=1 even " + fmt(slope_or_nan(nt1, Parity::even, range)) + ", NT s=2 odd " +
            fmt(slope_or_nan(nt2, Parity::odd, range));
  return {pass, detail};
}

Verdict criterion4() {
  constexpr double kRel = 0.02;
  const std::vector<double> t = {1e-4};
  bool pass = true;
  std::string detail;
  for (int s = 1; s <= 2; ++s) {
    const double ratio = verify_endpoint(s, t)[0];
    const double c = endpoint_coefficient(s).c_minus;
    const double rel = std::abs(ratio - c) / std::abs(c);
    pass = pass && rel <= kRel;
    detail += "s=" + std::to_string(s) + " rel err " + fmt(rel) + (s == 1 ? ", " : "");
  }
  return {pass, detail};
}

Verdict criterion5() {
  constexpr double kRel = 0.25;
  bool pass = true;
  std::string detail;
  for (int s = 1; s <= 2; ++s) {
    const SpectralTail tail(DotProductKernel({KernelFamily::nt, s, 2, 3}));
    const double target = std::pow(2.0, -(2.0 * s - 1.0));
    detail += "s=" + std::to_string(s) + " ratios";
    for (int M : {8, 16, 32}) {
      const double r = tail(2 * M) / tail(M);
      pass = pass && std::abs(r - target) <= kRel * target;
      detail += " " + fmt(r);
    }
    detail += " (target " + fmt(target) + ")" + (s == 1 ? "; " : "");
  }
  return {pass, detail};
}

Verdict criterion6() {
  bool pass = true;
  std::string detail;
  for (KernelFamily fam : {KernelFamily::nt, KernelFamily::rf}) {
    const DotProductKernel k({fam, 1, 2, 3});
    const SpectrumTable t = mercer_spectrum(k, 60, GegenbauerBasis(3, 60));
    double sup = 0.0;
    for (int j = 0; j <= 200; ++j) {
      const double u = -1.0 + 2.0 * j / 200.0;
      sup = std::max(sup, std::abs(reconstruct(t, u) - k(u)));
    }
    const double bound = tail_sum(k, 60);
    pass = pass && sup < bound;
    detail += std::string(to_string(fam)) + " sup " + fmt(sup) + " vs tail " + fmt(bound) +
              (fam == KernelFamily::nt ? "; " : "");
  }
  return {pass, detail};
}

Verdict criterion7() {
  const SpectrumTable nt = spectrum(KernelFamily::nt, 1, 3, 60);
  const SpectrumTable matern = matern_spectrum({0.5, 1.0, 3}, 60);
  const RatioBounds odd = rkhs_equivalence_ratio(nt, matern, {5, 59}, Parity::odd);
  const RatioBounds even = rkhs_equivalence_ratio(nt, matern, {5, 59}, Parity::even);
  const double odd_spread = odd.max_ratio / odd.min_ratio;
  const bool pass = odd_spread < 20.0 && even.min_ratio * 10.0 <= odd.min_ratio;
  return {pass, "odd max/min " + fmt(odd_spread) + ", even min " + fmt(even.min_ratio) + ", odd min " +
                    fmt(odd.min_ratio) + "; even max/min " + fmt(even.max_ratio / even.min_ratio)};
}

Verdict criterion8() {
  bool pass = true;
  int runs = 0;
  double tightest = 0.0;
  for (int s = 1; s <= 2; ++s) {
    for (int d : {3, 4}) {
      for (double lambda : {0.5, 1.0}) {
        const DotProductKernel k({KernelFamily::nt, s, 2, d});
        const PointSet grid = sample_sphere(d, 4096, derive_seed(8, stream::candidates));
        const GreedySelection sel = greedy_max_variance(k, grid, 256, lambda);
        const VarianceSumCheck c = variance_sum_check(k, sel.points, lambda);
        pass = pass && c.lhs <= c.rhs + kVarianceSumSlack;
        tightest = std::max(tightest, c.lhs / c.rhs);
        ++runs;
      }
    }
  }
  return {pass, std::to_string(runs) + " greedy runs, largest lhs/rhs " + fmt(tightest)};
}

Verdict criterion9() {
  MigGrowthConfig cfg;
  cfg.kernel = {KernelFamily::nt, 1, 2, 3};
  cfg.n_grid = power_of_two_grid(1, 10);
  cfg.lambda = 0.1;
  cfg.candidate_grid_size = 4096;
  cfg.seed = 9;
  const MigGrowthReport r = mig_growth_experiment(cfg);
  const bool pass = r.fitted_exponent <= r.theoretical_exponent + 0.15;
  return {pass, "fitted " + fmt(r.fitted_exponent) + " vs theoretical " + fmt(r.theoretical_exponent) + " + 0.15"};
}

Verdict criterion10() {
  double mean[4][5] = {};
  bool a = true;
  bool b = true;
  std::string table;
  for (int s = 1; s <= 3; ++s) {
    for (int d = 2; d <= 4; ++d) {
      ErrorRateConfig cfg;
      cfg.kernel = {KernelFamily::nt, s, 2, d};
      cfg.n_grid = power_of_two_grid(1, 11);
      cfg.repetitions = 5;
      cfg.master_seed = 1000;
      const ErrorRateReport r = error_rate_experiment(cfg);
      mean[s][d] = r.mean_exponent;
      a = a && r.mean_exponent < 0.0;
      b = b && r.mean_exponent <= r.theoretical_exponent + 0.10;
      table += " (" + std::to_string(s) + "," + std::to_string(d) + ")=" + fmt(r.mean_exponent, 3);
    }
  }
  bool c = true;
  for (int d = 2; d <= 4; ++d) {
    for (int s = 1; s < 3; ++s) c = c && mean[s + 1][d] < mean[s][d];
  }
  for (int s = 1; s <= 3; ++s) {
    for (int d = 2; d < 4; ++d) c = c && mean[s][d + 1] > mean[s][d];
  }
  return {a && b && c, std::string("(a) ") + (a ? "ok" : "violated") + " (b) " + (b ? "ok" : "violated") +
                           " (c) " + (c ? "ok" : "violated") + "; mean exponents (s,d):" + table};
}

struct Captured {
  int code = -1;
  std::string out;
};

Captured capture(const std::string& cmd) {
  Captured c;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (pipe == nullptr) return c;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) c.out.append(buf.data(), got);
  const int status = pclose(pipe);
  c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return c;
}

Verdict criterion11(const std::string& cli) {
  const std::vector<std::string> commands = {
      "kernel-eval --family nt --s 2 --u -0.9 -0.3 0 0.3 0.9",
      "spectrum --family rf --s 2 --d 4 --max-degree 40",
      "eigendecay --family nt --s 1 --parity even",
      "matern-compare --parity even",
      "infogain --n 128 --lambda 0.1 --seed 3",
      "sample-greedy --n 64 --lambda 0.5 --candidates 1024 --seed 4",
      "error-rate --s 2 --d 3 --n-max-exp 8 --reps 3 --eval-sample 2000 --range-sample 2000 --seed 5",
      "mig-growth --n-max-exp 8 --candidates 1024 --seed 6",
  };
  const std::regex stamp("\"timestamp\": \"[^\"]*\"");
  int compared = 0;
  std::string mismatch;
  for (const std::string& c : commands) {
    for (const std::string format : {"csv", "json"}) {
      std::string reference;
      for (const std::string workers : {"1", "1", "2", "4"}) {
        const Captured r = capture(cli + " " + c + " --format " + format + " --workers " + workers);
        const std::string masked = std::regex_replace(r.out, stamp, "\"timestamp\": \"-\"");
        if (r.code != 0 || masked.empty()) {
          mismatch = c + " exited " + std::to_string(r.code);
        } else if (reference.empty()) {
          reference = masked;
        } else if (masked != reference) {
          mismatch = c + " --format " + format + " differs at --workers " + workers;
        }
        ++compared;
      }
    }
  }
  return {mismatch.empty(),
          std::to_string(compared) + " runs over " + std::to_string(commands.size()) + " commands" +
              (mismatch.empty() ? ", all identical" : "; " + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <ntk binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10},
      {11, [&] { return criterion11(cli); }},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << v.detail << " (" << fmt(secs, 3)
              << " s)" << std::endl;
  }
  std::cout << (11 - failed) << "/11 criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}

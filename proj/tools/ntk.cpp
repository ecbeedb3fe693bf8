// ntk: command-line front end for the kernel, spectrum, regression and
// experiment routines.
//
//   ntk <subcommand> [options]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ntk/error.hpp"
#include "ntk/experiments.hpp"
#include "ntk/krr.hpp"
#include "ntk/neural_kernels.hpp"
#include "ntk/random.hpp"
#include "ntk/report_io.hpp"
#include "ntk/sphere_spectral.hpp"

namespace {

using nlohmann::ordered_json;
using ntk::io::CsvTable;
using ntk::io::format_number;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  std::size_t workers = 0;
  bool full_scale = false;
  std::string plot_path;
};

struct Output {
  ordered_json config;
  ordered_json result;
  std::optional<CsvTable> table;
  std::optional<CsvTable> plot;
};

struct KernelOptions {
  std::string family = "nt";
  int s = 1;
  int l = 2;
  int d = 3;
  std::string recursion = "scaled";

  void add_to(CLI::App* sub, bool allow_matern = false) {
    sub->add_option("--family", family, allow_matern ? "nt, rf or matern" : "nt or rf")->capture_default_str();
    sub->add_option("--s", s, "activation smoothness")->capture_default_str();
    sub->add_option("--l", l, "depth (number of layers)")->capture_default_str();
    sub->add_option("--d", d, "ambient dimension of the sphere S^{d-1}")->capture_default_str();
    sub->add_option("--nt-recursion", recursion, "deep NT rule: scaled or unscaled")
        ->check(CLI::IsMember({"scaled", "unscaled"}))
        ->capture_default_str();
  }

  [[nodiscard]] ntk::KernelSpec spec() const {
    return {ntk::parse_family(family), s, l, d};
  }

  [[nodiscard]] ntk::NtRecursion rule() const {
    return recursion == "unscaled" ? ntk::NtRecursion::unscaled : ntk::NtRecursion::scaled;
  }

  [[nodiscard]] ntk::DotProductKernel kernel() const { return ntk::DotProductKernel(spec(), rule()); }

  void echo(ordered_json& cfg) const {
    cfg["family"] = family;
    cfg["s"] = s;
    cfg["l"] = l;
    cfg["d"] = d;
    cfg["nt-recursion"] = recursion;
  }
};

ntk::DegreeRange resolve_range(int first, int last, int s, int max_degree) {
  ntk::DegreeRange r = ntk::default_decay_range(s);
  if (first >= 0) r.first = first;
  r.last = last >= 0 ? last : std::min(r.last, max_degree - 1);
  if (r.first > r.last || r.last > max_degree) {
    throw ntk::ConfigError("degree range [" + std::to_string(r.first) + ", " + std::to_string(r.last) +
                           "] is empty or exceeds the maximum degree " + std::to_string(max_degree));
  }
  return r;
}

ntk::SpectrumTable build_spectrum(const KernelOptions& k, int max_degree, double nu, double lengthscale,
                                  std::size_t workers) {
  if (max_degree < 0) throw ntk::ConfigError("--max-degree must be nonnegative");
  if (k.family == "matern") return ntk::matern_spectrum({nu, lengthscale, k.d}, max_degree);
  const ntk::DotProductKernel kernel = k.kernel();
  return ntk::mercer_spectrum(kernel, max_degree, ntk::GegenbauerBasis(k.d, max_degree), workers);
}

std::vector<std::size_t> exponent_grid(int first, int last) { return ntk::power_of_two_grid(first, last); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json document(const std::string& command, const Output& out, bool with_result) {
  ordered_json doc;
  doc["version"] = NTK_VERSION;
  doc["command"] = command;
  doc["config"] = out.config;
  if (with_result) doc["result"] = out.result;
  // Only the timestamp varies between runs; worker count and output path stay out of the report.
  doc["meta"] = {{"timestamp", utc_timestamp()}};
  return doc;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ntk::ConfigError("cannot open '" + path + "' for writing");
  f << contents;
  if (!f) throw ntk::ConfigError("failed writing '" + path + "'");
}

void emit(const std::string& command, Output& out, const Common& common) {
  out.config["seed"] = common.seed;
  out.config["format"] = common.format;
  if (common.format == "json" || !out.table) {
    const std::string text = document(command, out, true).dump(2) + "\n";
    if (common.out.empty()) {
      std::cout << text;
    } else {
      write_file(common.out, text);
    }
  } else {
    const std::string sidecar = document(command, out, false).dump(2) + "\n";
    if (common.out.empty()) {
      std::cerr << "config: " << document(command, out, false).dump() << "\n";
      out.table->write(std::cout);
    } else {
      write_file(common.out, out.table->str());
      write_file(common.out + ".config.json", sidecar);
    }
  }
  if (!common.plot_path.empty()) {
    if (!out.plot) throw ntk::ConfigError("--emit-plot-data is not available for " + command);
    write_file(common.plot_path, out.plot->str());
  }
}

std::vector<double> read_pair_dots(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw ntk::ConfigError("cannot open point-pair file '" + path + "'");
  std::vector<double> dots;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream fields(line);
    std::vector<double> values;
    double v = 0.0;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) throw ntk::ConfigError(path + ":" + std::to_string(line_no) + ": not a number");
    if (values.empty()) continue;
    if (values.size() != static_cast<std::size_t>(2 * d)) {
      throw ntk::ConfigError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(2 * d) +
                             " coordinates (x then x')");
    }
    const Eigen::Map<const Eigen::VectorXd> x(values.data(), d);
    const Eigen::Map<const Eigen::VectorXd> xp(values.data() + d, d);
    if (std::abs(x.norm() - 1.0) > ntk::kUnitNormSlack || std::abs(xp.norm() - 1.0) > ntk::kUnitNormSlack) {
      throw ntk::DomainError(path + ":" + std::to_string(line_no) + ": points must be unit vectors");
    }
    dots.push_back(x.dot(xp));
  }
  return dots;
}

// Turns a JSON config (flat object, or a previous output document with a
// "config" member) into flag tokens for every key not given on the command line.
std::vector<std::string> config_tokens(const std::string& path, const std::vector<std::string>& cli_args) {
  std::ifstream in(path);
  if (!in) throw ntk::ConfigError("cannot open config file '" + path + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ntk::ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) throw ntk::ConfigError("config file must hold a JSON object");

  auto given = [&](const std::string& flag) {
    for (const std::string& a : cli_args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  auto scalar = [](const ordered_json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_number(v.get<double>());
    return v.dump();
  };

  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || given(flag)) continue;
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
      continue;
    }
    if (value.is_array()) {
      if (value.empty()) continue;
      tokens.push_back(flag);
      for (const auto& v : value) tokens.push_back(scalar(v));
      continue;
    }
    if (value.is_string() && value.get<std::string>().empty()) continue;
    tokens.push_back(flag);
    tokens.push_back(scalar(value));
  }
  return tokens;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON configuration; flags override its values");
  sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
  sub->add_option("--out", c.out, "output path (default: stdout)");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  sub->add_option("--workers", c.workers, "worker threads (0 = all cores)")->capture_default_str();
  sub->add_flag("--full-scale", c.full_scale, "error-rate: n up to 2^13 and 20 repetitions");
  sub->add_option("--emit-plot-data", c.plot_path, "write tidy CSV for plotting (experiments)");
}

using Runner = std::function<Output()>;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural tangent and random-feature kernels on the sphere: spectra, information gain, "
               "kernel ridge regression experiments"};
  app.set_version_flag("--version", std::string(NTK_VERSION));
  app.require_subcommand(1);
  Common common;
  std::map<std::string, Runner> runners;

  // kernel-eval
  KernelOptions ke;
  std::vector<double> ke_u;
  std::string ke_pairs;
  {
    CLI::App* sub = app.add_subcommand("kernel-eval", "evaluate a kernel at dot products u");
    ke.add_to(sub);
    sub->add_option("--u", ke_u, "dot products in [-1, 1]");
    sub->add_option("--pairs", ke_pairs, "file of point pairs, one pair per line (x then x')");
    add_common(sub, common);
    runners["kernel-eval"] = [&] {
      if (ke_u.empty() == ke_pairs.empty()) throw ntk::ConfigError("give exactly one of --u or --pairs");
      const ntk::DotProductKernel kernel = ke.kernel();
      const std::vector<double> us = ke_pairs.empty() ? ke_u : read_pair_dots(ke_pairs, ke.d);
      Output out;
      ke.echo(out.config);
      if (!ke_u.empty()) out.config["u"] = ke_u;
      if (!ke_pairs.empty()) out.config["pairs"] = ke_pairs;
      CsvTable table({"u", "value"});
      ordered_json rows = ordered_json::array();
      for (const double u : us) {
        const double v = kernel(u);
        table.add_row({format_number(u), format_number(v)});
        rows.push_back({{"u", u}, {"value", v}});
      }
      out.result = {{"kernel", kernel.describe()}, {"values", rows}};
      out.table = std::move(table);
      return out;
    };
  }

  // spectrum
  KernelOptions sp;
  int sp_max = 60;
  double sp_nu = 0.5;
  double sp_ell = 1.0;
  {
    CLI::App* sub = app.add_subcommand("spectrum", "per-degree Mercer eigenvalues");
    sp.add_to(sub, true);
    sub->add_option("--max-degree", sp_max, "highest degree M")->capture_default_str();
    sub->add_option("--nu", sp_nu, "Matern smoothness (family matern)")->capture_default_str();
    sub->add_option("--lengthscale", sp_ell, "Matern lengthscale (family matern)")->capture_default_str();
    add_common(sub, common);
    runners["spectrum"] = [&] {
      Output out;
      sp.echo(out.config);
      out.config["max-degree"] = sp_max;
      out.config["nu"] = sp_nu;
      out.config["lengthscale"] = sp_ell;
      const ntk::SpectrumTable table = build_spectrum(sp, sp_max, sp_nu, sp_ell, common.workers);
      out.result = ntk::io::to_json(table);
      out.table = ntk::io::spectrum_csv(table);
      return out;
    };
  }

  // eigendecay
  KernelOptions ed;
  int ed_max = 60;
  std::string ed_parity = "all";
  int ed_first = -1;
  int ed_last = -1;
  double ed_nu = 0.5;
  double ed_ell = 1.0;
  {
    CLI::App* sub = app.add_subcommand("eigendecay", "log-log slope of the eigenvalues over a degree range");
    ed.add_to(sub, true);
    sub->add_option("--max-degree", ed_max, "highest degree M")->capture_default_str();
    sub->add_option("--parity", ed_parity, "even, odd or all")->check(CLI::IsMember({"even", "odd", "all"}))
        ->capture_default_str();
    sub->add_option("--first", ed_first, "first degree of the fit (default max(9, 2s+3))");
    sub->add_option("--last", ed_last, "last degree of the fit (default min(59, M-1))");
    sub->add_option("--nu", ed_nu, "Matern smoothness (family matern)")->capture_default_str();
    sub->add_option("--lengthscale", ed_ell, "Matern lengthscale (family matern)")->capture_default_str();
    add_common(sub, common);
    runners["eigendecay"] = [&] {
      const ntk::DegreeRange range = resolve_range(ed_first, ed_last, ed.s, ed_max);
      Output out;
      ed.echo(out.config);
      out.config["max-degree"] = ed_max;
      out.config["parity"] = ed_parity;
      out.config["first"] = range.first;
      out.config["last"] = range.last;
      out.config["nu"] = ed_nu;
      out.config["lengthscale"] = ed_ell;
      const ntk::SpectrumTable table = build_spectrum(ed, ed_max, ed_nu, ed_ell, common.workers);
      const ntk::DecayFit fit = ntk::eigendecay_fit(table, ntk::parse_parity(ed_parity), range);
      out.result = ntk::io::to_json(fit);
      out.result["provenance"] = std::string(ntk::to_string(table.provenance));
      CsvTable csv({"parity", "first", "last", "slope", "intercept", "r_squared", "used"});
      csv.add_row({ed_parity, std::to_string(range.first), std::to_string(range.last), format_number(fit.slope),
                   format_number(fit.intercept), format_number(fit.r_squared),
                   format_number(static_cast<std::uint64_t>(fit.used))});
      out.table = std::move(csv);
      return out;
    };
  }

  // matern-compare
  KernelOptions mc;
  int mc_max = 60;
  double mc_nu = 0.5;
  double mc_ell = 1.0;
  std::string mc_parity = "odd";
  int mc_first = 5;
  int mc_last = 59;
  {
    CLI::App* sub = app.add_subcommand("matern-compare", "eigenvalue ratios of a neural kernel to a Matern kernel");
    mc.add_to(sub);
    sub->add_option("--max-degree", mc_max, "highest degree M")->capture_default_str();
    sub->add_option("--nu", mc_nu, "Matern smoothness")->capture_default_str();
    sub->add_option("--lengthscale", mc_ell, "Matern lengthscale")->capture_default_str();
    sub->add_option("--parity", mc_parity, "even, odd or all")->check(CLI::IsMember({"even", "odd", "all"}))
        ->capture_default_str();
    sub->add_option("--first", mc_first, "first degree")->capture_default_str();
    sub->add_option("--last", mc_last, "last degree")->capture_default_str();
    add_common(sub, common);
    runners["matern-compare"] = [&] {
      Output out;
      mc.echo(out.config);
      out.config["max-degree"] = mc_max;
      out.config["nu"] = mc_nu;
      out.config["lengthscale"] = mc_ell;
      out.config["parity"] = mc_parity;
      out.config["first"] = mc_first;
      out.config["last"] = mc_last;
      const ntk::SpectrumTable neural = build_spectrum(mc, mc_max, mc_nu, mc_ell, common.workers);
      const ntk::SpectrumTable matern = ntk::matern_spectrum({mc_nu, mc_ell, mc.d}, mc_max);
      const ntk::RatioBounds b =
          ntk::rkhs_equivalence_ratio(neural, matern, {mc_first, mc_last}, ntk::parse_parity(mc_parity));
      out.result = ntk::io::to_json(b);
      CsvTable csv({"parity", "min_ratio", "max_ratio", "argmin", "argmax", "max_over_min"});
      csv.add_row({mc_parity, format_number(b.min_ratio), format_number(b.max_ratio), std::to_string(b.argmin),
                   std::to_string(b.argmax), format_number(b.max_ratio / b.min_ratio)});
      out.table = std::move(csv);
      return out;
    };
  }

  // infogain
  KernelOptions ig;
  std::size_t ig_n = 256;
  double ig_lambda = 0.1;
  {
    CLI::App* sub = app.add_subcommand("infogain", "information gain and effective dimension of uniform samples");
    ig.add_to(sub);
    sub->add_option("--n", ig_n, "number of points")->capture_default_str();
    sub->add_option("--lambda", ig_lambda, "regularization lambda (noise standard deviation)")->capture_default_str();
    add_common(sub, common);
    runners["infogain"] = [&] {
      Output out;
      ig.echo(out.config);
      out.config["n"] = ig_n;
      out.config["lambda"] = ig_lambda;
      const ntk::DotProductKernel kernel = ig.kernel();
      const ntk::PointSet points =
          ntk::sample_sphere(ig.d, ig_n, ntk::derive_seed(common.seed, ntk::stream::train));
      const std::vector<ntk::InfoGainReport> reports = ntk::prefix_reports(kernel, points, ig_lambda, common.workers);
      ordered_json rows = ordered_json::array();
      for (const auto& r : reports) rows.push_back(ntk::io::to_json(r));
      out.result = {{"kernel", kernel.describe()}, {"reports", rows}};
      out.table = ntk::io::info_gain_csv(reports);
      return out;
    };
  }

  // sample-greedy
  KernelOptions sg;
  std::size_t sg_n = 256;
  double sg_lambda = 1.0;
  std::size_t sg_candidates = 4096;
  {
    CLI::App* sub = app.add_subcommand("sample-greedy", "greedy maximum-variance selection from a candidate grid");
    sg.add_to(sub);
    sub->add_option("--n", sg_n, "number of selections")->capture_default_str();
    sub->add_option("--lambda", sg_lambda, "regularization lambda")->capture_default_str();
    sub->add_option("--candidates", sg_candidates, "candidate grid size")->capture_default_str();
    add_common(sub, common);
    runners["sample-greedy"] = [&] {
      Output out;
      sg.echo(out.config);
      out.config["n"] = sg_n;
      out.config["lambda"] = sg_lambda;
      out.config["candidates"] = sg_candidates;
      const ntk::DotProductKernel kernel = sg.kernel();
      if (sg_candidates < 1) throw ntk::ConfigError("--candidates must be >= 1");
      const ntk::PointSet grid =
          ntk::sample_sphere(sg.d, sg_candidates, ntk::derive_seed(common.seed, ntk::stream::candidates));
      const ntk::GreedySelection sel = ntk::greedy_max_variance(kernel, grid, sg_n, sg_lambda, common.workers);
      const std::vector<ntk::InfoGainReport> reports =
          ntk::prefix_reports(kernel, sel.points, sg_lambda, common.workers);
      const ntk::VarianceSumCheck check = ntk::variance_sum_check(kernel, sel.points, sg_lambda, common.workers);
      ordered_json rows = ordered_json::array();
      for (const auto& r : reports) rows.push_back(ntk::io::to_json(r));
      out.result = {{"kernel", kernel.describe()},
                    {"selection", ntk::io::to_json(sel)},
                    {"reports", rows},
                    {"variance_sum_check",
                     {{"lhs", check.lhs}, {"rhs", check.rhs}, {"info_gain", check.info_gain}, {"holds", check.holds}}}};
      out.table = ntk::io::info_gain_csv(reports);
      return out;
    };
  }

  // error-rate
  KernelOptions er;
  int er_first = 1;
  int er_last = 11;
  std::size_t er_reps = 5;
  std::size_t er_eval = 10000;
  double er_lambda2 = 0.01;
  double er_noise = 0.0;
  bool er_independent = false;
  std::size_t er_anchors = 100;
  double er_delta2 = 0.01;
  std::size_t er_range = 10000;
  {
    CLI::App* sub = app.add_subcommand("error-rate", "sup-error decay of kernel ridge regression on synthetic targets");
    er.add_to(sub);
    sub->add_option("--n-min-exp", er_first, "smallest n = 2^k")->capture_default_str();
    sub->add_option("--n-max-exp", er_last, "largest n = 2^k")->capture_default_str();
    sub->add_option("--reps", er_reps, "repetitions")->capture_default_str();
    sub->add_option("--eval-sample", er_eval, "points for the sup-error")->capture_default_str();
    sub->add_option("--train-lambda2", er_lambda2, "training regularization lambda^2")->capture_default_str();
    sub->add_option("--noise-scale", er_noise, "Gaussian observation noise scale")->capture_default_str();
    sub->add_flag("--independent-sets", er_independent, "resample training sets per n instead of nesting them");
    sub->add_option("--anchors", er_anchors, "anchor points of the synthetic target")->capture_default_str();
    sub->add_option("--delta2", er_delta2, "ridge of the synthetic target")->capture_default_str();
    sub->add_option("--range-sample", er_range, "points used for the range normalizer")->capture_default_str();
    add_common(sub, common);
    runners["error-rate"] = [&] {
      if (common.full_scale) {
        er_last = 13;
        er_reps = 20;
      }
      Output out;
      er.echo(out.config);
      out.config["n-min-exp"] = er_first;
      out.config["n-max-exp"] = er_last;
      out.config["reps"] = er_reps;
      out.config["eval-sample"] = er_eval;
      out.config["train-lambda2"] = er_lambda2;
      out.config["noise-scale"] = er_noise;
      out.config["independent-sets"] = er_independent;
      out.config["anchors"] = er_anchors;
      out.config["delta2"] = er_delta2;
      out.config["range-sample"] = er_range;
      out.config["full-scale"] = common.full_scale;
      ntk::ErrorRateConfig cfg;
      cfg.kernel = er.spec();
      cfg.recursion = er.rule();
      cfg.n_grid = exponent_grid(er_first, er_last);
      cfg.repetitions = er_reps;
      cfg.master_seed = common.seed;
      cfg.eval_sample = er_eval;
      cfg.train_lambda2 = er_lambda2;
      cfg.noise_scale = er_noise;
      cfg.nested = !er_independent;
      cfg.synthetic = {er_anchors, er_delta2, er_range};
      const ntk::ErrorRateReport report = ntk::error_rate_experiment(cfg, common.workers);
      out.result = ntk::io::to_json(report);
      out.table = ntk::io::error_rate_csv(report);
      out.plot = ntk::io::error_rate_plot_data(report);
      return out;
    };
  }

  // mig-growth
  KernelOptions mg;
  int mg_first = 1;
  int mg_last = 10;
  double mg_lambda = 0.1;
  std::size_t mg_candidates = 4096;
  {
    CLI::App* sub = app.add_subcommand("mig-growth", "growth of the greedy information gain with n");
    mg.add_to(sub);
    sub->add_option("--n-min-exp", mg_first, "smallest n = 2^k")->capture_default_str();
    sub->add_option("--n-max-exp", mg_last, "largest n = 2^k")->capture_default_str();
    sub->add_option("--lambda", mg_lambda, "regularization lambda")->capture_default_str();
    sub->add_option("--candidates", mg_candidates, "candidate grid size")->capture_default_str();
    add_common(sub, common);
    runners["mig-growth"] = [&] {
      Output out;
      mg.echo(out.config);
      out.config["n-min-exp"] = mg_first;
      out.config["n-max-exp"] = mg_last;
      out.config["lambda"] = mg_lambda;
      out.config["candidates"] = mg_candidates;
      ntk::MigGrowthConfig cfg;
      cfg.kernel = mg.spec();
      cfg.recursion = mg.rule();
      cfg.n_grid = exponent_grid(mg_first, mg_last);
      cfg.lambda = mg_lambda;
      cfg.candidate_grid_size = mg_candidates;
      cfg.seed = common.seed;
      const ntk::MigGrowthReport report = ntk::mig_growth_experiment(cfg, common.workers);
      out.result = ntk::io::to_json(report);
      out.table = ntk::io::mig_growth_csv(report);
      out.plot = ntk::io::mig_growth_plot_data(report);
      return out;
    };
  }

  try {
    // Splice values from --config in front of the explicit flags.
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!config_path.empty() && args.size() > 1 && runners.count(args[1]) > 0) {
      const std::vector<std::string> extra = config_tokens(config_path, args);
      args.insert(args.begin() + 2, extra.begin(), extra.end());
    }
    std::vector<char*> raw;
    raw.reserve(args.size());
    for (std::string& a : args) raw.push_back(a.data());
    try {
      app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? 0 : kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    Output out = runners.at(command)();
    emit(command, out, common);
    return 0;
  } catch (const ntk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.error_class() == ntk::ErrorClass::configuration ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

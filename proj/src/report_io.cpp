#include "ntk/report_io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <system_error>

#include "ntk/error.hpp"

namespace ntk::io {

using nlohmann::ordered_json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw NumericalError("number formatting failed");
  return {buf, res.ptr};
}

std::string format_number(std::uint64_t v) { return std::to_string(v); }

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw ConfigError("CSV header must not be empty");
}

void CsvTable::add_row(std::vector<std::string> fields) {
  if (fields.size() != header_.size()) throw ConfigError("CSV row width differs from the header");
  rows_.push_back(std::move(fields));
}

std::string csv_field(std::string_view raw) {
  if (raw.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(raw);
  std::string out = "\"";
  for (const char c : raw) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out << ',';
      out << csv_field(fields[i]);
    }
    out << "\r\n";
  };
  line(header_);
  for (const auto& row : rows_) line(row);
}

std::string CsvTable::str() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

CsvTable spectrum_csv(const SpectrumTable& table) {
  CsvTable csv({"degree", "eigenvalue", "multiplicity"});
  for (std::size_t i = 0; i < table.eigenvalues.size(); ++i) {
    csv.add_row({format_number(static_cast<std::uint64_t>(i)), format_number(table.eigenvalues[i]),
                 format_number(table.multiplicities[i])});
  }
  return csv;
}

ordered_json to_json(const SpectrumTable& table) {
  ordered_json j;
  j["d"] = table.dim;
  j["M"] = table.max_degree();
  j["provenance"] = std::string(to_string(table.provenance));
  j["clamped_count"] = table.clamped_count;
  j["max_clamped_magnitude"] = table.max_clamped_magnitude;
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < table.eigenvalues.size(); ++i) {
    rows.push_back({{"degree", i}, {"eigenvalue", table.eigenvalues[i]}, {"multiplicity", table.multiplicities[i]}});
  }
  j["degrees"] = std::move(rows);
  return j;
}

ordered_json to_json(const DecayFit& fit) {
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}, {"used", fit.used}};
}

ordered_json to_json(const RatioBounds& bounds) {
  return {{"min_ratio", bounds.min_ratio},
          {"max_ratio", bounds.max_ratio},
          {"argmin", bounds.argmin},
          {"argmax", bounds.argmax},
          {"max_over_min", bounds.max_ratio / bounds.min_ratio}};
}

CsvTable info_gain_csv(std::span<const InfoGainReport> reports) {
  CsvTable csv({"n", "info_gain", "effective_dim", "sum_variance", "bound_rhs"});
  for (const InfoGainReport& r : reports) {
    csv.add_row({format_number(static_cast<std::uint64_t>(r.n)), format_number(r.info_gain),
                 format_number(r.effective_dim), format_number(r.sum_variance), format_number(r.bound_rhs)});
  }
  return csv;
}

ordered_json to_json(const InfoGainReport& r) {
  return {{"n", r.n},
          {"info_gain", r.info_gain},
          {"effective_dim", r.effective_dim},
          {"lambda", r.lambda},
          {"sum_variance", r.sum_variance},
          {"bound_rhs", r.bound_rhs}};
}

ordered_json to_json(const GreedySelection& selection) {
  return {{"indices", selection.indices}, {"variances", selection.variances}};
}

ordered_json to_json(const KernelSpec& spec) {
  return {{"family", std::string(to_string(spec.family))},
          {"s", spec.smoothness},
          {"l", spec.depth},
          {"d", spec.ambient_dim}};
}

CsvTable error_rate_csv(const ErrorRateReport& report) {
  CsvTable csv({"n", "rep", "sup_error"});
  for (const RepetitionResult& rep : report.repetitions) {
    if (!rep.ok) continue;
    for (std::size_t i = 0; i < rep.sup_errors.size(); ++i) {
      csv.add_row({format_number(static_cast<std::uint64_t>(report.config.n_grid[i])),
                   format_number(static_cast<std::uint64_t>(rep.index)), format_number(rep.sup_errors[i])});
    }
  }
  return csv;
}

ordered_json to_json(const ErrorRateReport& report) {
  ordered_json j;
  j["kernel"] = to_json(report.config.kernel);
  j["n_grid"] = report.config.n_grid;
  ordered_json reps = ordered_json::array();
  for (const RepetitionResult& rep : report.repetitions) {
    ordered_json r;
    r["rep"] = rep.index;
    r["seed"] = rep.seed;
    r["ok"] = rep.ok;
    if (rep.ok) {
      r["sup_errors"] = rep.sup_errors;
      r["exponent"] = rep.exponent;
      r["r_squared"] = rep.r_squared;
    } else {
      r["diagnostic"] = rep.diagnostic;
    }
    reps.push_back(std::move(r));
  }
  j["repetitions"] = std::move(reps);
  j["failed"] = report.failed;
  j["mean_exponent"] = report.mean_exponent;
  j["std_exponent"] = report.std_exponent;
  j["theoretical_exponent"] = report.theoretical_exponent;
  return j;
}

CsvTable error_rate_plot_data(const ErrorRateReport& report) {
  CsvTable csv({"family", "s", "d", "rep", "n", "sup_error", "theoretical_exponent"});
  const KernelSpec& k = report.config.kernel;
  for (const RepetitionResult& rep : report.repetitions) {
    if (!rep.ok) continue;
    for (std::size_t i = 0; i < rep.sup_errors.size(); ++i) {
      csv.add_row({std::string(to_string(k.family)), std::to_string(k.smoothness), std::to_string(k.ambient_dim),
                   format_number(static_cast<std::uint64_t>(rep.index)),
                   format_number(static_cast<std::uint64_t>(report.config.n_grid[i])),
                   format_number(rep.sup_errors[i]), format_number(report.theoretical_exponent)});
    }
  }
  return csv;
}

CsvTable mig_growth_csv(const MigGrowthReport& report) {
  CsvTable csv({"n", "info_gain"});
  for (std::size_t i = 0; i < report.info_gain.size(); ++i) {
    csv.add_row({format_number(static_cast<std::uint64_t>(report.config.n_grid[i])),
                 format_number(report.info_gain[i])});
  }
  return csv;
}

ordered_json to_json(const MigGrowthReport& report) {
  ordered_json j;
  j["kernel"] = to_json(report.config.kernel);
  j["lambda"] = report.config.lambda;
  j["n_grid"] = report.config.n_grid;
  j["info_gain"] = report.info_gain;
  j["effective_dim"] = report.effective_dim;
  j["fitted_exponent"] = report.fitted_exponent;
  j["r_squared"] = report.r_squared;
  j["theoretical_exponent"] = report.theoretical_exponent;
  j["note"] = "information gain of the greedy max-variance set, a lower bound on the maximal information gain";
  return j;
}

CsvTable mig_growth_plot_data(const MigGrowthReport& report) {
  CsvTable csv({"family", "s", "d", "lambda", "n", "info_gain", "effective_dim", "theoretical_exponent"});
  const KernelSpec& k = report.config.kernel;
  for (std::size_t i = 0; i < report.info_gain.size(); ++i) {
    csv.add_row({std::string(to_string(k.family)), std::to_string(k.smoothness), std::to_string(k.ambient_dim),
                 format_number(report.config.lambda), format_number(static_cast<std::uint64_t>(report.config.n_grid[i])),
                 format_number(report.info_gain[i]), format_number(report.effective_dim[i]),
                 format_number(report.theoretical_exponent)});
  }
  return csv;
}

}  // namespace ntk::io

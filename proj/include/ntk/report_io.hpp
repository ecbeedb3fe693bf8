#pragma once

// CSV and JSON serialization of spectra, information-gain traces and
// experiment reports.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ntk/experiments.hpp"
#include "ntk/krr.hpp"
#include "ntk/sphere_spectral.hpp"

namespace ntk::io {

/// Shortest decimal string that parses back to exactly `v` (at most 17 significant digits).
std::string format_number(double v);
std::string format_number(std::uint64_t v);

/// RFC 4180 table: mandatory header, CRLF line ends, fields quoted when needed.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> fields);
  [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  void write(std::ostream& out) const;
  [[nodiscard]] std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_field(std::string_view raw);

CsvTable spectrum_csv(const SpectrumTable& table);
nlohmann::ordered_json to_json(const SpectrumTable& table);

nlohmann::ordered_json to_json(const DecayFit& fit);
nlohmann::ordered_json to_json(const RatioBounds& bounds);

/// Header n,info_gain,effective_dim,sum_variance,bound_rhs.
CsvTable info_gain_csv(std::span<const InfoGainReport> reports);
nlohmann::ordered_json to_json(const InfoGainReport& report);
nlohmann::ordered_json to_json(const GreedySelection& selection);

/// Header n,rep,sup_error (successful repetitions only).
CsvTable error_rate_csv(const ErrorRateReport& report);
nlohmann::ordered_json to_json(const ErrorRateReport& report);
/// One row per (rep, n) with the identifying kernel columns, for plotting.
CsvTable error_rate_plot_data(const ErrorRateReport& report);

/// Header n,info_gain.
CsvTable mig_growth_csv(const MigGrowthReport& report);
nlohmann::ordered_json to_json(const MigGrowthReport& report);
CsvTable mig_growth_plot_data(const MigGrowthReport& report);

nlohmann::ordered_json to_json(const KernelSpec& spec);

}  // namespace ntk::io

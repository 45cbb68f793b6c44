#pragma once

#include <optional>
#include <string>
#include <vector>

namespace stratbid {

/// One solved technique, columns mirroring the comparison tables.
struct SolveReport {
  std::string technique;     // e.g. "SM1"
  std::string params;        // e.g. "eps=1e-4"
  std::string status = "ok"; // or "Converged to infeas. point", ...
  double actual_profit = 0.0;
  double computed_profit = 0.0;
  double profit_diff_pct = 0.0; // (computed - actual) / |actual| * 100
  double duality_gap_pct = 0.0;
  double system_expenses_actual = 0.0;
  double system_expenses_computed = 0.0;
  double wall_time_s = 0.0;
  int iterations = 0;
  std::optional<long> nodes;          // MIP runs only
  std::optional<double> mip_gap_pct;  // MIP runs only
  int outer_iteration = 1;
  std::vector<std::string> thermal_violations; // must stay empty
};

/// CSV header matching csv_row().
std::string report_csv_header();
std::string report_csv_row(const SolveReport& r);
std::string report_json(const SolveReport& r);

/// Writes `<path>.json` and `<path>.csv` (header + one row per report),
/// overwriting whatever was there.
void write_report(const std::vector<SolveReport>& reports, const std::string& path);

} // namespace stratbid

#include "stratbid/report.hpp"

#include <fmt/format.h>

#include <fstream>

#include "json.hpp"

namespace stratbid {

std::string report_csv_header() {
  return "technique,params,status,actual_profit,computed_profit,profit_diff_pct,"
         "duality_gap_pct,system_expenses_actual,system_expenses_computed,"
         "wall_time_s,iterations,nodes,mip_gap_pct,outer_iteration";
}

std::string report_csv_row(const SolveReport& r) {
  return fmt::format("{},{},{},{:.6f},{:.6f},{:.6g},{:.6g},{:.6f},{:.6f},{:.3f},{},{},{},{}",
                     r.technique, r.params, r.status, r.actual_profit, r.computed_profit,
                     r.profit_diff_pct, r.duality_gap_pct, r.system_expenses_actual,
                     r.system_expenses_computed, r.wall_time_s, r.iterations,
                     r.nodes ? fmt::format("{}", *r.nodes) : "",
                     r.mip_gap_pct ? fmt::format("{:.6g}", *r.mip_gap_pct) : "",
                     r.outer_iteration);
}

std::string report_json(const SolveReport& r) {
  nlohmann::json j;
  j["technique"] = r.technique;
  j["params"] = r.params;
  j["status"] = r.status;
  j["actual_profit"] = r.actual_profit;
  j["computed_profit"] = r.computed_profit;
  j["profit_diff_pct"] = r.profit_diff_pct;
  j["duality_gap_pct"] = r.duality_gap_pct;
  j["system_expenses_actual"] = r.system_expenses_actual;
  j["system_expenses_computed"] = r.system_expenses_computed;
  j["wall_time_s"] = r.wall_time_s;
  j["iterations"] = r.iterations;
  if (r.nodes) j["nodes"] = *r.nodes;
  if (r.mip_gap_pct) j["mip_gap_pct"] = *r.mip_gap_pct;
  j["outer_iteration"] = r.outer_iteration;
  j["thermal_violations"] = r.thermal_violations;
  return j.dump(2);
}

void write_report(const std::vector<SolveReport>& reports, const std::string& path) {
  {
    std::ofstream csv(path + ".csv", std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + path + ".csv");
    csv << report_csv_header() << "\n";
    for (const auto& r : reports) csv << report_csv_row(r) << "\n";
  }
  {
    std::ofstream js(path + ".json", std::ios::trunc);
    if (!js) throw std::runtime_error("cannot write " + path + ".json");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(nlohmann::json::parse(report_json(r)));
    js << arr.dump(2) << "\n";
  }
}

} // namespace stratbid

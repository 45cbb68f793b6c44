#include <fmt/format.h>

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "stratbid/driver.hpp"

namespace {

using namespace stratbid;

struct CommonArgs {
  std::string case_path;
  std::string profile_path;
  int storage_bus = -1;
  std::vector<double> storage; // capacity, rating, eta
  std::string model = "jabr";
  int outer_iters = 1;
  uint64_t seed = 0;
  std::string out = "report";
  double threshold = 0.85;
  bool binaries = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--case", a.case_path, "MATPOWER-style case file")->required();
  cmd->add_option("--profile", a.profile_path, "24-factor load profile file");
  cmd->add_option("--storage-bus", a.storage_bus, "bus the storage bids from");
  cmd->add_option("--storage", a.storage, "capacity rating eta (p.u., p.u., -)")->expected(3);
  cmd->add_option("--model", a.model, "lower level: dc or jabr")
      ->check(CLI::IsMember({"dc", "jabr"}));
  cmd->add_option("--outer-iters", a.outer_iters, "outer algorithm iterations");
  cmd->add_option("--seed", a.seed, "multistart seed");
  cmd->add_option("--out", a.out, "output path stem (.json/.csv)");
  cmd->add_option("--screen-threshold", a.threshold, "thermal screening threshold");
  cmd->add_flag("--binaries", a.binaries, "enable storage direction binaries");
}

BilevelInstance make_instance(const CommonArgs& a) {
  Network net = parse_case_file(a.case_path);
  LoadProfile profile =
      a.profile_path.empty() ? LoadProfile::flat() : parse_profile_file(a.profile_path);
  StorageSpec es;
  es.bus = a.storage_bus > 0 ? a.storage_bus : net.buses.front().id;
  if (!a.storage.empty()) {
    es.energy_capacity = a.storage[0];
    es.power_rating = a.storage[1];
    es.eta_charge = es.eta_discharge = a.storage[2];
  }
  const LowerLevelModel model = a.model == "dc" ? LowerLevelModel::DC : LowerLevelModel::Jabr;
  return build_instance(net, profile, es, model, a.threshold);
}

TechniqueSpec make_spec(const std::string& technique, std::optional<double> eps,
                        std::optional<double> pi, std::optional<int> D, bool binaries) {
  TechniqueSpec spec = TechniqueSpec::parse(technique);
  if (eps) spec.eps = *eps;
  if (pi) spec.pi = *pi;
  if (D) spec.discretization = *D;
  spec.binaries = spec.binaries || binaries;
  return spec;
}

int run_solve(const CommonArgs& a, const std::string& technique, std::optional<double> eps,
              std::optional<double> pi, std::optional<int> D) {
  BilevelInstance inst = make_instance(a);
  TechniqueSpec spec = make_spec(technique, eps, pi, D, a.binaries);
  DriverOptions opts;
  opts.outer_iterations = a.outer_iters;
  opts.solve.seed = a.seed;
  SolveReport report = run_sequential(inst, spec, opts);
  write_report({report}, a.out);
  fmt::print("{}\n", report_csv_header());
  fmt::print("{}\n", report_csv_row(report));
  return report.status == "ok" ? 0 : 1;
}

int run_compare(const CommonArgs& a, const std::string& spec_file) {
  BilevelInstance inst = make_instance(a);
  std::vector<TechniqueSpec> specs;
  std::ifstream in(spec_file);
  if (!in) {
    fmt::print(stderr, "cannot open technique list: {}\n", spec_file);
    return 2;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    TechniqueSpec spec = TechniqueSpec::parse(line);
    spec.binaries = spec.binaries || a.binaries;
    specs.push_back(spec);
  }
  DriverOptions opts;
  opts.outer_iterations = a.outer_iters;
  opts.solve.seed = a.seed;
  auto reports = compare_techniques(inst, specs, opts);
  write_report(reports, a.out);
  fmt::print("{}\n", report_csv_header());
  bool any_fail = false;
  for (const auto& r : reports) {
    fmt::print("{}\n", report_csv_row(r));
    any_fail |= r.status != "ok";
  }
  return any_fail ? 1 : 0;
}

int run_study(const CommonArgs& a, const std::string& technique, std::optional<double> eps) {
  CommonArgs args = a;
  args.model = "jabr";
  BilevelInstance inst = make_instance(args);
  TechniqueSpec spec = make_spec(technique, eps, std::nullopt, std::nullopt, a.binaries);
  DriverOptions opts;
  opts.outer_iterations = a.outer_iters;
  opts.solve.seed = a.seed;
  StudyResult study = reactive_benefit_study(inst, spec, opts);
  std::ofstream csv(a.out + ".csv", std::ios::trunc);
  csv << "bus,excluded,profit_active_only,profit_with_reactive,profit_increase_pct,"
         "expense_savings_abs,status\n";
  fmt::print("bus  excluded  increase%%  savings\n");
  for (const auto& b : study.buses) {
    csv << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", b.bus, b.excluded ? 1 : 0,
                       b.profit_active_only, b.profit_with_reactive, b.profit_increase_pct,
                       b.expense_savings_abs, b.status);
    fmt::print("{:>3}  {:>8}  {:>9.4f}  {:>9.4f}\n", b.bus, b.excluded ? "yes" : "no",
               b.profit_increase_pct, b.expense_savings_abs);
  }
  csv << fmt::format("# savings_to_profit_ratio,{:.6f}\n", study.savings_to_profit_ratio);
  fmt::print("savings/profit ratio: {:.4f}\n", study.savings_to_profit_ratio);
  return 0;
}

int run_parse_check(const std::string& case_path) {
  Network net = parse_case_file(case_path);
  fmt::print("{}: {} buses, {} generators, {} branches, {} loads, base {} MVA\n", net.name,
             net.buses.size(), net.generators.size(), net.branches.size(), net.loads.size(),
             net.base_mva);
  Network again = parse_case(serialize_case(net));
  fmt::print("round-trip: {}\n",
             again.buses.size() == net.buses.size() ? "ok" : "MISMATCH");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel storage bidding over conic OPF market clearing"};
  app.require_subcommand(1);

  CommonArgs a;
  std::string technique = "SM1";
  std::optional<double> eps, pi;
  std::optional<int> D;
  std::string spec_file;
  std::string parse_path;

  auto* solve = app.add_subcommand("solve", "solve one instance with one technique");
  add_common(solve, a);
  solve->add_option("--technique", technique, "technique name, e.g. SM1 or PF-CS")->required();
  solve->add_option("--eps", eps, "epsilon parameter");
  solve->add_option("--pi", pi, "penalty factor");
  solve->add_option("--D", D, "discretization steps");

  auto* compare = app.add_subcommand("compare", "run a list of techniques");
  add_common(compare, a);
  compare->add_option("--specs", spec_file, "file with one technique string per line")
      ->required();

  auto* study = app.add_subcommand("study-reactive", "reactive-bid benefit study per bus");
  add_common(study, a);
  study->add_option("--technique", technique, "technique name");
  study->add_option("--eps", eps, "epsilon parameter");

  auto* pc = app.add_subcommand("parse-check", "parse a case file and report");
  pc->add_option("case", parse_path, "case file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return run_solve(a, technique, eps, pi, D);
    if (compare->parsed()) return run_compare(a, spec_file);
    if (study->parsed()) return run_study(a, technique, eps);
    if (pc->parsed()) return run_parse_check(parse_path);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 2;
}

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stratbid {

/// Parse failure with the 1-based source line where it was detected.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

private:
  int line_ = 0;
};

struct Bus {
  int id = 0;
  double vmax = 1.1, vmin = 0.9; // p.u.
  double gs = 0.0, bs = 0.0;     // shunt, p.u. at V = 1
};

struct Generator {
  int bus = 0;
  double pmax = 0.0, pmin = 0.0; // p.u.
  double qmax = 0.0, qmin = 0.0;
  double cost_lin = 0.0;  // per p.u.-hour
  double cost_quad = 0.0; // per p.u.^2-hour
  double cost_const = 0.0;
};

struct Branch {
  int from = 0, to = 0;
  double r = 0.0, x = 0.0;       // series impedance, p.u.
  double b_fr = 0.0, b_to = 0.0; // charging halves
  double g_fr = 0.0, g_to = 0.0;
  double tap = 1.0;   // magnitude
  double shift = 0.0; // radians
  std::optional<double> s_max;   // thermal limit, p.u.; empty = no limit
};

struct Load {
  int bus = 0;
  double pd = 0.0, qd = 0.0; // p.u.
};

struct Network {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  std::vector<Load> loads;

  int bus_index(int bus_id) const; // position in `buses`, throws if unknown
  bool has_bus(int bus_id) const;
};

/// 24 positive dimensionless load multipliers.
struct LoadProfile {
  std::array<double, 24> factors{};
  static LoadProfile flat();
};

enum class TerminalPolicy { Free, Fixed };

struct StorageSpec {
  int bus = 0;
  double energy_capacity = 1.0;  // p.u.-hour
  double power_rating = 0.6;     // p.u.
  double eta_charge = 0.9;
  double eta_discharge = 0.9;
  double initial_fraction = 0.5;
  TerminalPolicy terminal = TerminalPolicy::Free;
};

enum class LowerLevelModel { DC, Jabr };

struct BilevelInstance {
  Network network;
  int horizon = 24;
  std::vector<std::vector<Load>> hourly_loads; // [t][..]
  StorageSpec storage;
  LowerLevelModel model = LowerLevelModel::Jabr;
  double thermal_screen_threshold = 0.85;
};

/// Parses the MATPOWER text subset (bus, gen, branch, gencost tables;
/// polynomial costs up to degree 2).  All quantities are converted to
/// per-unit on base_mva; a zero rateA is recorded as "no thermal limit".
Network parse_case(const std::string& text);
Network parse_case_file(const std::string& path);

/// Writes a network back out in the same MATPOWER subset; the output
/// reparses to an identical Network.
std::string serialize_case(const Network& net);

LoadProfile parse_profile(const std::string& text);
LoadProfile parse_profile_file(const std::string& path);

BilevelInstance build_instance(const Network& net, const LoadProfile& profile,
                               const StorageSpec& storage, LowerLevelModel model,
                               double thermal_screen_threshold = 0.85);

} // namespace stratbid

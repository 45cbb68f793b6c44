#include "stratbid/case_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace stratbid {

int Network::bus_index(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  throw std::invalid_argument(fmt::format("unknown bus {}", bus_id));
}

bool Network::has_bus(int bus_id) const {
  return std::any_of(buses.begin(), buses.end(),
                     [bus_id](const Bus& b) { return b.id == bus_id; });
}

LoadProfile LoadProfile::flat() {
  LoadProfile p;
  p.factors.fill(1.0);
  return p;
}

namespace {

struct Matrix {
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines; // source line of each row
  int decl_line = 0;
};

// Strips MATLAB comments and splits one "mpc.<field> = [ ... ];" block.
class CaseScanner {
public:
  explicit CaseScanner(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::string pending_field;
    Matrix pending;
    bool in_matrix = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto pos = line.find('%'); pos != std::string::npos) line.erase(pos);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;

      if (!in_matrix) {
        if (trimmed.rfind("function", 0) == 0) {
          if (auto eq = trimmed.find('='); eq != std::string::npos)
            function_name = trim(trimmed.substr(eq + 1));
          continue;
        }
        if (trimmed.rfind("mpc.", 0) != 0)
          throw ParseError("unrecognized statement: " + trimmed, lineno);
        auto eq = trimmed.find('=');
        if (eq == std::string::npos) throw ParseError("expected '='", lineno);
        std::string field = trim(trimmed.substr(4, eq - 4));
        std::string rhs = trim(trimmed.substr(eq + 1));
        if (!rhs.empty() && rhs.front() == '[') {
          pending_field = field;
          pending = Matrix{};
          pending.decl_line = lineno;
          in_matrix = true;
          rhs.erase(rhs.begin());
          consume_matrix_text(rhs, lineno, pending, in_matrix);
          if (!in_matrix) matrices[pending_field] = pending;
        } else {
          if (!rhs.empty() && rhs.back() == ';') rhs.pop_back();
          scalars[field] = parse_number(trim(rhs), lineno);
        }
      } else {
        consume_matrix_text(trimmed, lineno, pending, in_matrix);
        if (!in_matrix) matrices[pending_field] = pending;
      }
    }
    if (in_matrix) throw ParseError("unterminated matrix '" + pending_field + "'", lineno);
  }

  std::string function_name;
  std::map<std::string, double> scalars;
  std::map<std::string, Matrix> matrices;

private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double parse_number(const std::string& tok, int lineno) {
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ParseError("bad number '" + tok + "'", lineno);
    }
    if (used != tok.size()) throw ParseError("bad number '" + tok + "'", lineno);
    return v;
  }

  static void consume_matrix_text(std::string body, int lineno, Matrix& m, bool& in_matrix) {
    bool closed = false;
    if (auto pos = body.find(']'); pos != std::string::npos) {
      closed = true;
      body.erase(pos);
    }
    // Rows are terminated by ';' or end of line.
    std::string token;
    std::vector<double> row;
    auto flush_row = [&] {
      if (!row.empty()) {
        m.rows.push_back(row);
        m.row_lines.push_back(lineno);
        row.clear();
      }
    };
    std::istringstream rs(body);
    std::string piece;
    while (rs >> piece) {
      while (!piece.empty()) {
        auto semi = piece.find(';');
        if (semi == std::string::npos) {
          row.push_back(parse_number(piece, lineno));
          break;
        }
        if (semi > 0) row.push_back(parse_number(piece.substr(0, semi), lineno));
        flush_row();
        piece.erase(0, semi + 1);
      }
    }
    flush_row();
    if (closed) in_matrix = false;
  }
};

const Matrix& need(const CaseScanner& sc, const std::string& field) {
  auto it = sc.matrices.find(field);
  if (it == sc.matrices.end()) throw ParseError("missing table mpc." + field, 1);
  return it->second;
}

double col(const std::vector<double>& row, size_t idx, double fallback) {
  return idx < row.size() ? row[idx] : fallback;
}

} // namespace

Network parse_case(const std::string& text) {
  CaseScanner sc(text);
  Network net;
  net.name = sc.function_name.empty() ? "case" : sc.function_name;
  auto base_it = sc.scalars.find("baseMVA");
  if (base_it == sc.scalars.end()) throw ParseError("missing mpc.baseMVA", 1);
  net.base_mva = base_it->second;
  if (net.base_mva <= 0) throw ParseError("baseMVA must be positive", 1);
  const double base = net.base_mva;

  const Matrix& bus = need(sc, "bus");
  for (size_t i = 0; i < bus.rows.size(); ++i) {
    const auto& r = bus.rows[i];
    if (r.size() < 13) throw ParseError("bus row too short", bus.row_lines[i]);
    Bus b;
    b.id = static_cast<int>(r[0]);
    b.gs = r[4] / base;
    b.bs = r[5] / base;
    b.vmax = r[11];
    b.vmin = r[12];
    if (b.vmin > b.vmax) throw ParseError("bus voltage bounds inverted", bus.row_lines[i]);
    net.buses.push_back(b);
    if (r[2] != 0.0 || r[3] != 0.0)
      net.loads.push_back(Load{b.id, r[2] / base, r[3] / base});
  }

  const Matrix& gen = need(sc, "gen");
  std::vector<size_t> active_gen_rows;
  for (size_t i = 0; i < gen.rows.size(); ++i) {
    const auto& r = gen.rows[i];
    if (r.size() < 10) throw ParseError("gen row too short", gen.row_lines[i]);
    if (col(r, 7, 1.0) == 0.0) continue; // out of service
    Generator g;
    g.bus = static_cast<int>(r[0]);
    if (!net.has_bus(g.bus)) throw ParseError("generator at undeclared bus", gen.row_lines[i]);
    g.qmax = r[3] / base;
    g.qmin = r[4] / base;
    g.pmax = r[8] / base;
    g.pmin = r[9] / base;
    if (g.pmin > g.pmax) throw ParseError("generator P bounds inverted", gen.row_lines[i]);
    net.generators.push_back(g);
    active_gen_rows.push_back(i);
  }

  const Matrix& branch = need(sc, "branch");
  for (size_t i = 0; i < branch.rows.size(); ++i) {
    const auto& r = branch.rows[i];
    if (r.size() < 11) throw ParseError("branch row too short", branch.row_lines[i]);
    if (col(r, 10, 1.0) == 0.0) continue; // out of service
    Branch e;
    e.from = static_cast<int>(r[0]);
    e.to = static_cast<int>(r[1]);
    if (!net.has_bus(e.from) || !net.has_bus(e.to))
      throw ParseError("dangling branch endpoint", branch.row_lines[i]);
    e.r = r[2];
    e.x = r[3];
    e.b_fr = e.b_to = r[4] / 2.0;
    double rate_a = r[5];
    if (rate_a > 0.0) e.s_max = rate_a / base;
    double tap = col(r, 8, 0.0);
    e.tap = (tap == 0.0) ? 1.0 : tap;
    e.shift = col(r, 9, 0.0) * std::numbers::pi / 180.0;
    net.branches.push_back(e);
  }

  const Matrix& cost = need(sc, "gencost");
  if (cost.rows.size() < gen.rows.size())
    throw ParseError("gencost has fewer rows than gen", cost.decl_line);
  for (size_t k = 0; k < active_gen_rows.size(); ++k) {
    const size_t i = active_gen_rows[k];
    const auto& r = cost.rows[i];
    if (r.size() < 4) throw ParseError("gencost row too short", cost.row_lines[i]);
    int model = static_cast<int>(r[0]);
    int ncost = static_cast<int>(r[3]);
    if (model != 2) throw ParseError("unsupported cost model (only polynomial)", cost.row_lines[i]);
    if (ncost > 3)
      throw ParseError("unsupported cost polynomial degree (> 2)", cost.row_lines[i]);
    if (r.size() < static_cast<size_t>(4 + ncost))
      throw ParseError("gencost row inconsistent with ncost", cost.row_lines[i]);
    Generator& g = net.generators[k];
    // Highest-degree coefficient first; MW scale converted to p.u.
    std::vector<double> c(r.begin() + 4, r.begin() + 4 + ncost);
    std::reverse(c.begin(), c.end()); // now c[k] multiplies P^k in MW
    g.cost_const = c.size() > 0 ? c[0] : 0.0;
    g.cost_lin = c.size() > 1 ? c[1] * base : 0.0;
    g.cost_quad = c.size() > 2 ? c[2] * base * base : 0.0;
    if (g.cost_quad < 0)
      throw ParseError("negative quadratic cost (nonconvex)", cost.row_lines[i]);
  }

  return net;
}

Network parse_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string serialize_case(const Network& net) {
  std::string out;
  out += fmt::format("function mpc = {}\n", net.name);
  out += fmt::format("mpc.baseMVA = {:.17g};\n", net.base_mva);
  const double base = net.base_mva;

  auto pd_of = [&](int bus) {
    for (const auto& l : net.loads)
      if (l.bus == bus) return std::pair{l.pd, l.qd};
    return std::pair{0.0, 0.0};
  };

  out += "mpc.bus = [\n";
  for (const auto& b : net.buses) {
    auto [pd, qd] = pd_of(b.id);
    out += fmt::format("  {} 1 {:.17g} {:.17g} {:.17g} {:.17g} 1 1.0 0.0 1.0 1 {:.17g} {:.17g};\n",
                       b.id, pd * base, qd * base, b.gs * base, b.bs * base, b.vmax, b.vmin);
  }
  out += "];\n";

  out += "mpc.gen = [\n";
  for (const auto& g : net.generators) {
    out += fmt::format("  {} 0 0 {:.17g} {:.17g} 1.0 {:.17g} 1 {:.17g} {:.17g};\n", g.bus,
                       g.qmax * base, g.qmin * base, base, g.pmax * base, g.pmin * base);
  }
  out += "];\n";

  out += "mpc.branch = [\n";
  for (const auto& e : net.branches) {
    out += fmt::format("  {} {} {:.17g} {:.17g} {:.17g} {:.17g} 0 0 {:.17g} {:.17g} 1 -360 360;\n",
                       e.from, e.to, e.r, e.x, (e.b_fr + e.b_to) * 1.0, // stored halved
                       e.s_max ? *e.s_max * base : 0.0, e.tap,
                       e.shift * 180.0 / std::numbers::pi);
  }
  out += "];\n";

  out += "mpc.gencost = [\n";
  for (const auto& g : net.generators) {
    out += fmt::format("  2 0 0 3 {:.17g} {:.17g} {:.17g};\n", g.cost_quad / (base * base),
                       g.cost_lin / base, g.cost_const);
  }
  out += "];\n";
  return out;
}

LoadProfile parse_profile(const std::string& text) {
  LoadProfile p;
  std::istringstream in(text);
  std::string line;
  size_t n = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    double v;
    while (ls >> v) {
      if (n >= p.factors.size()) throw ParseError("profile has more than 24 factors", lineno);
      if (v <= 0.0) throw ParseError("profile factor must be positive", lineno);
      p.factors[n++] = v;
    }
  }
  if (n != p.factors.size())
    throw ParseError(fmt::format("profile has {} factors, expected 24", n), lineno);
  return p;
}

LoadProfile parse_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

BilevelInstance build_instance(const Network& net, const LoadProfile& profile,
                               const StorageSpec& storage, LowerLevelModel model,
                               double thermal_screen_threshold) {
  if (!net.has_bus(storage.bus))
    throw std::invalid_argument(fmt::format("storage at unknown bus {}", storage.bus));
  if (storage.eta_charge <= 0 || storage.eta_charge > 1 || storage.eta_discharge <= 0 ||
      storage.eta_discharge > 1)
    throw std::invalid_argument("storage efficiency must be in (0, 1]");
  if (storage.power_rating <= 0) throw std::invalid_argument("storage rating must be positive");
  if (storage.initial_fraction < 0 || storage.initial_fraction > 1)
    throw std::invalid_argument("initial state-of-energy fraction must be in [0, 1]");
  if (thermal_screen_threshold <= 0 || thermal_screen_threshold > 1)
    throw std::invalid_argument("screen threshold must be in (0, 1]");

  BilevelInstance inst;
  inst.network = net;
  inst.horizon = static_cast<int>(profile.factors.size());
  inst.storage = storage;
  inst.model = model;
  inst.thermal_screen_threshold = thermal_screen_threshold;
  inst.hourly_loads.resize(inst.horizon);
  for (int t = 0; t < inst.horizon; ++t) {
    for (const auto& l : net.loads) {
      inst.hourly_loads[t].push_back(
          Load{l.bus, l.pd * profile.factors[t], l.qd * profile.factors[t]});
    }
  }
  return inst;
}

} // namespace stratbid

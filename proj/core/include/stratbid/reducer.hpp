#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stratbid/case_io.hpp"
#include "stratbid/conic.hpp"
#include "stratbid/opf.hpp"
#include "stratbid/smoothing.hpp"

namespace stratbid {

enum class Technique {
  PD, PDS, SD, SDR, MC, CS, CSR, CSA, CSAR,
  PFSD, PFCS, BESD, BEPF, UESD, UEPF, SM1, SM2,
};

/// Parsed technique selection with parameters; accepts the table-style
/// strings, e.g. "SM1 eps=1e-4", "PF-CS pi=10", "BE-SD D=8".
struct TechniqueSpec {
  Technique kind = Technique::SM1;
  double eps = 1e-4;   // SD-R, CS-R, CS-AR, SM1, SM2
  double pi = 100.0;   // PF-*, BE-PF, UE-PF
  int discretization = 8; // BE/UE steps
  bool binaries = false;  // storage direction binaries on non-BE/UE techniques

  static TechniqueSpec parse(const std::string& text);
  static const std::vector<std::string>& names();
  std::string name() const;
  std::string params_string() const;
  bool uses_eps() const;
  bool uses_pi() const;
  bool is_discretized() const;
  /// Techniques whose single-level form is convex (SOCP class).
  bool is_convex() const;
  /// Techniques that add the quadratic-cost stationarity rows.
  bool needs_stationarity_rows() const;
};

enum class BlockTag { Upper, Primal, Dual, Stationarity, Technique };

struct ReducedLinear {
  std::string name;
  AffExpr expr;
  Rel rel = Rel::Eq;
  BlockTag tag = BlockTag::Primal;
};

struct ReducedSoc {
  std::string name;
  std::vector<AffExpr> comps;
  BlockTag tag = BlockTag::Primal;
};

struct ReducedQuad {
  std::string name;
  QuadExpr expr;
  Rel rel = Rel::Eq;
  BlockTag tag = BlockTag::Technique;
};

/// One smoothed pair row: vector equality residual(x(v), y(v), eps) = 0.
struct SmoothedPairRow {
  std::string name;
  smoothing::Kind kind = smoothing::Kind::CHKS;
  double eps = 1e-4;
  std::vector<AffExpr> x; // affine primal cone vector over the registry
  VarId y_start = -1;     // registry id of the dual block head
  int dim = 1;
};

/// Registry pair in reduced coordinates (for CS rows and diagnostics).
struct RegistryPair {
  std::vector<AffExpr> x;
  VarId y_start = -1;
  int dim = 1;
};

/// Single-level program produced by a reduction technique (maximize).
struct ReducedProblem {
  std::vector<VarInfo> vars;
  std::vector<ReducedLinear> linear;
  std::vector<ReducedSoc> soc;
  std::vector<ReducedQuad> quad;
  std::vector<SmoothedPairRow> smooth;
  QuadExpr objective; // maximize
  std::vector<VarId> integer_vars;

  TechniqueSpec spec;
  int horizon = 0;
  std::vector<VarId> pes_vars, qes_vars;
  QuadExpr omega_p; // lower-level primal objective over the registry
  QuadExpr omega_d; // lower-level dual objective over the registry
  QuadExpr profit;  // sum of bid-price bilinears over the registry
  std::vector<RegistryPair> pairs;

  int num_upper = 0;
  VarId primal_offset = 0; // registry id of lower-level primal var 0
  VarId dual_offset = 0;   // registry id of dual var 0

  VarId reg_primal(VarId v) const { return primal_offset + v; }
  VarId reg_dual(VarId v) const { return dual_offset + v; }

  /// Static registry-closure check: every variable is referenced and
  /// every reference is in range.  Throws std::logic_error on failure.
  void validate() const;
};

/// Produces the single-level program for one technique from the lower
/// level, its dual and pairing, and the price surface (bounds required by
/// MC/BE/UE).  Throws std::invalid_argument with "stationarity
/// strengthening inapplicable" when the technique needs the quadratic-cost
/// stationarity rows and no generator has one.
ReducedProblem reduce(const BilevelInstance& inst, const LowerLevelBundle& bundle,
                      const DualProgram& dual, const PairingMap& pairing,
                      const PriceSurface& surface, const TechniqueSpec& spec,
                      bool reactive_bids = true);

/// Bid revenue sum p_es(t) * lambda1(t, storage bus) + reactive analogue,
/// evaluated from a reduced-problem point.
double profit_of(const ReducedProblem& r, std::span<const double> point);

/// Same profit expression from explicit bids and a price surface.
double profit_of(std::span<const double> p_es, std::span<const double> q_es,
                 const PriceSurface& surface, int storage_bus);

} // namespace stratbid

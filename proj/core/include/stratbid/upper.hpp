#pragma once

#include <vector>

#include "stratbid/case_io.hpp"
#include "stratbid/conic.hpp"

namespace stratbid {

/// Storage bidder model: state-of-energy recursion, charge/discharge split
/// with rate bounds, optional direction binaries, reactive split when the
/// market clears reactive power.
struct UpperLevelModel {
  std::vector<VarInfo> vars;
  struct Row {
    std::string name;
    AffExpr expr;
    Rel rel;
  };
  std::vector<Row> rows;

  int horizon = 0;
  bool reactive = false;
  bool binaries = false;
  std::vector<VarId> soe, p_ch, p_dis, p_es, q_ch, q_dis, q_es, x_p, x_q;
  std::vector<VarId> binary_vars;
};

/// `reactive_market` says whether the lower level clears reactive power at
/// all; with it set but `reactive_bids` off, the q bid slot is pinned to
/// zero so the market-side parameter keeps a registry owner.
UpperLevelModel build_upper_level(const BilevelInstance& inst, bool reactive_bids,
                                  bool reactive_market, bool binaries);

} // namespace stratbid

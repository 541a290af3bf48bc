#pragma once

#include "coremech/dispatch.hpp"
#include "coremech/market.hpp"

namespace coremech {

// Full instance validation: structural checks plus feasibility probes. The
// market must clear, and it must still clear after removing any single bidder
// (VCG payments are undefined otherwise).
inline std::vector<Violation> validate_instance(const MarketInstance& inst,
                                                const DispatchOptions& opt = {}) {
  std::vector<Violation> out = structural_violations(inst);
  if (!out.empty()) return out;

  DispatchOptions probe = opt;
  probe.want_duals = false;
  try {
    const BidderMask everyone = full_mask(inst.num_bidders());
    if (!solve_dispatch(inst, everyone, probe).optimal()) {
      out.push_back({"market", "dispatch is infeasible"});
      return out;
    }
    for (int l = 0; l < inst.num_bidders(); ++l) {
      const BidderMask without = everyone & ~(1u << l);
      if (!solve_dispatch(inst, without, probe).optimal()) {
        out.push_back({inst.bidders[l].id, "market is infeasible after removing this bidder"});
      }
    }
  } catch (const Error& e) {
    out.push_back({"market", std::string(error_code_name(e.code())) + ": " + e.what()});
  }
  return out;
}

}  // namespace coremech

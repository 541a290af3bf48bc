#pragma once

#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "coremech/bids.hpp"
#include "coremech/errors.hpp"
#include "coremech/numerics.hpp"

namespace coremech {

enum class MarketKind { kOneSided, kExchange };

struct Bidder {
  std::string id;
  std::optional<std::string> node;
  BidCurve curve;
  std::optional<BidCurve> true_curve;  // for incentive experiments

  const BidCurve& truth() const { return true_curve ? *true_curve : curve; }
};

struct Line {
  int from = 0;
  int to = 0;
  double susceptance = 1.0;       // per unit
  std::optional<double> limit;    // MW; absent = unlimited
};

struct Network {
  std::vector<std::string> nodes;
  int reference = 0;
  std::vector<Line> lines;

  int node_index(const std::string& name) const {
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      if (nodes[i] == name) return i;
    }
    return -1;
  }

  bool has_finite_limits() const {
    for (const auto& line : lines) {
      if (line.limit) return true;
    }
    return false;
  }

  bool connected() const {
    if (nodes.empty()) return true;
    std::vector<bool> seen(nodes.size(), false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int count = 1;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const auto& line : lines) {
        for (const int v : {line.from == u ? line.to : -1, line.to == u ? line.from : -1}) {
          if (v >= 0 && !seen[v]) {
            seen[v] = true;
            ++count;
            frontier.push(v);
          }
        }
      }
    }
    return count == static_cast<int>(nodes.size());
  }
};

// A variable reference inside constraint/recourse rows: either component
// `comp` of a bidder's quantity vector, or a recourse variable.
struct VarRef {
  enum class Kind { kBidder, kRecourse } kind = Kind::kBidder;
  int index = 0;  // bidder index or recourse variable index
  int comp = 0;   // component within the bidder's quantity vector

  friend bool operator==(const VarRef&, const VarRef&) = default;
};

enum class Sense { kEq, kLe, kGe };

struct LinearTerm {
  VarRef var;
  double coef = 0.0;
};

struct LinearConstraint {
  std::string name;
  std::vector<LinearTerm> terms;
  Sense sense = Sense::kEq;
  double rhs = 0.0;
};

struct QuadraticTerm {
  VarRef a;
  VarRef b;
  double coef = 0.0;
};

struct RecourseScenario {
  double weight = 1.0;
  std::vector<LinearTerm> linear;
};

// Fixed convex second-stage cost d(x, y): a quadratic/linear block over the
// bidder quantities and the recourse variables plus scenario-weighted linear
// costs.
struct Recourse {
  std::vector<std::string> variables;
  std::vector<QuadraticTerm> quadratic;
  std::vector<LinearTerm> linear;
  std::vector<RecourseScenario> scenarios;
};

struct MarketMeta {
  std::string title;
  std::string currency = "USD";
  std::optional<double> tolerance;
};

struct MarketInstance {
  MarketKind kind = MarketKind::kOneSided;
  std::vector<Bidder> bidders;
  std::optional<Network> network;
  std::vector<LinearConstraint> constraints;
  std::optional<Recourse> recourse;
  MarketMeta meta;

  int num_bidders() const { return static_cast<int>(bidders.size()); }

  int bidder_dimension(int l) const { return bidders[l].curve.dimension(); }

  int num_recourse_vars() const {
    return recourse ? static_cast<int>(recourse->variables.size()) : 0;
  }

  int find_bidder(const std::string& id) const {
    for (int i = 0; i < num_bidders(); ++i) {
      if (bidders[i].id == id) return i;
    }
    return -1;
  }

  // The same market cleared against true costs instead of submitted bids.
  MarketInstance truthful() const {
    MarketInstance copy = *this;
    for (auto& bidder : copy.bidders) {
      if (bidder.true_curve) bidder.curve = *bidder.true_curve;
      bidder.true_curve.reset();
    }
    return copy;
  }
};

struct Violation {
  std::string where;
  std::string message;
};

// Structural validation: curve invariants, domain-sign rule for one-sided
// markets, network references. Feasibility probing (including single-bidder
// removal) lives in validate.hpp next to the dispatch solver.
inline std::vector<Violation> structural_violations(const MarketInstance& inst) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (int l = 0; l < inst.num_bidders(); ++l) {
    const Bidder& bidder = inst.bidders[l];
    if (!ids.insert(bidder.id).second) {
      out.push_back({bidder.id, "duplicate bidder id"});
    }
    for (const auto* curve : {&bidder.curve, bidder.true_curve ? &*bidder.true_curve : nullptr}) {
      if (curve == nullptr) continue;
      for (const auto& msg : curve_violations(*curve)) out.push_back({bidder.id, msg});
      if (inst.kind == MarketKind::kOneSided) {
        if (curve->is_quadratic() && curve->quadratic().domain.lo < -kTol) {
          out.push_back({bidder.id, "one-sided market requires nonnegative quantity domains"});
        }
        if (curve->is_discrete()) {
          for (const auto& offer : curve->discrete().offers) {
            if (offer.quantity.minCoeff() < -kTol) {
              out.push_back({bidder.id, "one-sided market requires nonnegative offer quantities"});
            }
          }
        }
      }
    }
    if (inst.network) {
      if (!bidder.node) {
        out.push_back({bidder.id, "bidder needs a node when a network is present"});
      } else if (inst.network->node_index(*bidder.node) < 0) {
        out.push_back({bidder.id, "bidder node '" + *bidder.node + "' is not in the network"});
      } else if (bidder.curve.dimension() != 1) {
        out.push_back({bidder.id, "networked bidders must supply a scalar quantity"});
      }
    }
  }

  if (inst.network) {
    const Network& net = *inst.network;
    if (net.nodes.empty()) out.push_back({"network", "network has no nodes"});
    if (net.reference < 0 || net.reference >= static_cast<int>(net.nodes.size())) {
      out.push_back({"network", "reference node out of range"});
    }
    for (const auto& line : net.lines) {
      if (line.from < 0 || line.from >= static_cast<int>(net.nodes.size()) || line.to < 0 ||
          line.to >= static_cast<int>(net.nodes.size()) || line.from == line.to) {
        out.push_back({"network", "line endpoints must reference distinct nodes"});
      }
      if (line.susceptance <= 0.0) out.push_back({"network", "susceptance must be positive"});
      if (line.limit && *line.limit < 0.0) out.push_back({"network", "line limits must be >= 0"});
    }
    if (!net.connected()) out.push_back({"network", "network graph is disconnected"});
  }

  const int ny = inst.num_recourse_vars();
  auto check_ref = [&](const VarRef& ref, const std::string& where) {
    if (ref.kind == VarRef::Kind::kBidder) {
      if (ref.index < 0 || ref.index >= inst.num_bidders()) {
        out.push_back({where, "term references an unknown bidder"});
      } else if (ref.comp < 0 || ref.comp >= inst.bidder_dimension(ref.index)) {
        out.push_back({where, "term references an out-of-range quantity component"});
      }
    } else if (ref.index < 0 || ref.index >= ny) {
      out.push_back({where, "term references an unknown recourse variable"});
    }
  };
  for (const auto& row : inst.constraints) {
    for (const auto& term : row.terms) check_ref(term.var, "constraint " + row.name);
  }
  if (inst.recourse) {
    for (const auto& term : inst.recourse->linear) check_ref(term.var, "recourse");
    for (const auto& term : inst.recourse->quadratic) {
      check_ref(term.a, "recourse");
      check_ref(term.b, "recourse");
    }
    for (const auto& scenario : inst.recourse->scenarios) {
      if (scenario.weight < 0.0) out.push_back({"recourse", "scenario weights must be >= 0"});
      for (const auto& term : scenario.linear) check_ref(term.var, "recourse scenario");
    }
  }
  return out;
}

namespace market_detail {

// Lemma-scope gate shared by replication and the VCG operator-sign check: a
// single all-units balance row and no line limits or recourse.
inline void require_replicable(const MarketInstance& inst) {
  if (inst.recourse) {
    throw Error(ErrorCode::kUnsupportedStructure, "replication requires no second-stage cost");
  }
  for (const auto& bidder : inst.bidders) {
    if (bidder.curve.is_discrete()) {
      throw Error(ErrorCode::kUnsupportedStructure, "replication requires convex bid curves");
    }
  }
  if (inst.network) {
    if (inst.network->has_finite_limits()) {
      throw Error(ErrorCode::kUnsupportedStructure, "replication requires no line limits");
    }
    if (!inst.constraints.empty()) {
      throw Error(ErrorCode::kUnsupportedStructure,
                  "replication allows no extra constraints besides the network balance");
    }
    return;
  }
  if (inst.constraints.size() != 1) {
    throw Error(ErrorCode::kUnsupportedStructure, "replication requires a single balance row");
  }
  const LinearConstraint& row = inst.constraints.front();
  if (row.sense != Sense::kEq || std::abs(row.rhs) > kTol ||
      row.terms.size() != static_cast<std::size_t>(inst.num_bidders())) {
    throw Error(ErrorCode::kUnsupportedStructure,
                "replication requires the balance row sum(x) = 0 over all bidders");
  }
  std::set<int> seen;
  for (const auto& term : row.terms) {
    if (term.var.kind != VarRef::Kind::kBidder || std::abs(term.coef - 1.0) > kTol ||
        !seen.insert(term.var.index).second) {
      throw Error(ErrorCode::kUnsupportedStructure,
                  "replication requires unit coefficients on every bidder");
    }
  }
}

}  // namespace market_detail

// The market with every bidder duplicated q times (bid profile q * C). Only
// defined for single-balance markets without line limits.
inline MarketInstance replicate_instance(const MarketInstance& inst, int q) {
  if (q <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "replication factor must be a positive integer");
  }
  market_detail::require_replicable(inst);
  if (q == 1) return inst;

  MarketInstance out = inst;
  out.bidders.clear();
  out.constraints.clear();
  for (int copy = 0; copy < q; ++copy) {
    for (const auto& bidder : inst.bidders) {
      Bidder duplicate = bidder;
      if (copy > 0) duplicate.id = bidder.id + "#" + std::to_string(copy + 1);
      out.bidders.push_back(std::move(duplicate));
    }
  }
  if (!inst.network) {
    LinearConstraint balance;
    balance.name = inst.constraints.front().name;
    balance.sense = Sense::kEq;
    balance.rhs = 0.0;
    for (int l = 0; l < out.num_bidders(); ++l) {
      balance.terms.push_back({VarRef{VarRef::Kind::kBidder, l, 0}, 1.0});
    }
    out.constraints.push_back(std::move(balance));
  }
  return out;
}

}  // namespace coremech

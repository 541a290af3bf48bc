#pragma once

#include <string>
#include <vector>

#include "coremech/dispatch.hpp"

namespace coremech {

enum class Mechanism { kPayAsBid, kLmp, kVcg, kMpcs };

inline const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kPayAsBid: return "pay_as_bid";
    case Mechanism::kLmp: return "lmp";
    case Mechanism::kVcg: return "vcg";
    case Mechanism::kMpcs: return "mpcs";
  }
  return "?";
}

// Evaluates the second-stage cost d(x, y) at a dispatch point.
inline double second_stage_cost(const MarketInstance& inst,
                                const std::vector<Eigen::VectorXd>& x, const Eigen::VectorXd& y) {
  if (!inst.recourse) return 0.0;
  const Recourse& rec = *inst.recourse;
  auto value = [&](const VarRef& ref) {
    return ref.kind == VarRef::Kind::kBidder ? x[ref.index](ref.comp) : y(ref.index);
  };
  double cost = 0.0;
  for (const auto& term : rec.linear) cost += term.coef * value(term.var);
  for (const auto& scenario : rec.scenarios) {
    for (const auto& term : scenario.linear) cost += scenario.weight * term.coef * value(term.var);
  }
  for (const auto& term : rec.quadratic) cost += term.coef * value(term.a) * value(term.b);
  return cost;
}

struct PaymentOutcome {
  Mechanism mechanism = Mechanism::kPayAsBid;
  std::vector<double> payments;            // p_l, $
  std::vector<double> revealed_utilities;  // ubar_l = p_l - b_l(x*_l)
  double operator_utility = 0.0;           // ubar_0 = -sum p - d(x*, y*)
  DispatchResult dispatch;
  std::vector<double> bidder_prices;  // LMP only: the price each bidder faces
  bool degenerate_duals = false;
};

namespace mech_detail {

inline void require_feasible(const DispatchResult& result) {
  if (!result.optimal()) {
    throw Error(ErrorCode::kInfeasibleDispatch, "dispatch is infeasible; no payments exist");
  }
}

inline PaymentOutcome finish_outcome(const MarketInstance& inst, Mechanism mech,
                                     const DispatchResult& dispatch, std::vector<double> payments) {
  PaymentOutcome out;
  out.mechanism = mech;
  out.dispatch = dispatch;
  out.payments = std::move(payments);
  out.revealed_utilities.resize(inst.num_bidders());
  double total = 0.0;
  for (int l = 0; l < inst.num_bidders(); ++l) {
    const double bid_cost = evaluate_bid(inst.bidders[l].curve, dispatch.allocation[l]);
    out.revealed_utilities[l] = out.payments[l] - bid_cost;
    total += out.payments[l];
  }
  out.operator_utility =
      -total - second_stage_cost(inst, dispatch.allocation, dispatch.recourse);
  return out;
}

}  // namespace mech_detail

// Pay-as-bid: every accepted bid is paid exactly its bid, revealed utilities
// are zero and the operator keeps -J(B).
inline PaymentOutcome pay_as_bid(CoalitionEvaluator& eval) {
  const MarketInstance& inst = eval.instance();
  const DispatchResult& dispatch = eval.full();
  mech_detail::require_feasible(dispatch);
  std::vector<double> payments(inst.num_bidders());
  for (int l = 0; l < inst.num_bidders(); ++l) {
    payments[l] = evaluate_bid(inst.bidders[l].curve, dispatch.allocation[l]);
  }
  return mech_detail::finish_outcome(inst, Mechanism::kPayAsBid, dispatch, std::move(payments));
}

// LMP needs convex bids and either a network or exactly one balance row.
inline bool lmp_applicable(const MarketInstance& inst) {
  for (const auto& bidder : inst.bidders) {
    if (bidder.curve.is_discrete()) return false;
  }
  if (inst.network) return true;
  int eq_rows = 0;
  for (const auto& row : inst.constraints) eq_rows += row.sense == Sense::kEq ? 1 : 0;
  return eq_rows == 1;
}

// Locational marginal pricing: p_l = lambda_node(l) * x*_l. Bidders sharing a
// node face the same price. Requires convex bids and extractable balance
// multipliers; degenerate multipliers are flagged, not hidden.
inline PaymentOutcome lmp(CoalitionEvaluator& eval) {
  const MarketInstance& inst = eval.instance();
  for (const auto& bidder : inst.bidders) {
    if (bidder.curve.is_discrete()) {
      throw Error(ErrorCode::kNonconvexBids,
                  "LMP needs convex bids; bidder " + bidder.id + " submitted discrete offers");
    }
  }
  const DispatchResult& dispatch = eval.full();
  mech_detail::require_feasible(dispatch);
  if (!dispatch.has_duals) {
    throw Error(ErrorCode::kDualsUnavailable,
                "LMP needs a network or a single balance row with equality multipliers");
  }
  std::vector<double> payments(inst.num_bidders());
  std::vector<double> prices(inst.num_bidders());
  for (int l = 0; l < inst.num_bidders(); ++l) {
    const auto price = bidder_price(inst, dispatch, l);
    if (!price) {
      throw Error(ErrorCode::kDualsUnavailable, "no balance multiplier for " + inst.bidders[l].id);
    }
    prices[l] = *price;
    payments[l] = *price * dispatch.allocation[l](0);
  }
  PaymentOutcome out =
      mech_detail::finish_outcome(inst, Mechanism::kLmp, dispatch, std::move(payments));
  out.bidder_prices = std::move(prices);
  out.degenerate_duals = dispatch.degenerate_duals;
  return out;
}

// VCG utilities via the Clarke pivot: ubar_l = J(B_{-l}) - J(B).
inline std::vector<double> vcg_utilities(CoalitionEvaluator& eval) {
  const MarketInstance& inst = eval.instance();
  const DispatchResult& dispatch = eval.full();
  mech_detail::require_feasible(dispatch);
  const BidderMask everyone = full_mask(inst.num_bidders());
  std::vector<BidderMask> removals;
  for (int l = 0; l < inst.num_bidders(); ++l) removals.push_back(everyone & ~(1u << l));
  auto values = eval.values(removals);

  std::vector<double> utilities(inst.num_bidders());
  for (int l = 0; l < inst.num_bidders(); ++l) {
    const double without = values[everyone & ~(1u << l)];
    if (std::isinf(without)) {
      throw Error(ErrorCode::kRemovalInfeasible,
                  "market infeasible after removing bidder " + inst.bidders[l].id);
    }
    double pivot = without - dispatch.objective;
    // A bidder with zero allocation leaves the optimum unchanged; snap the
    // solver noise so losing bidders are exactly unpaid.
    if (!dispatch.winner(l) &&
        std::abs(pivot) <= 1e-7 * std::max(1.0, std::abs(dispatch.objective))) {
      pivot = 0.0;
    }
    utilities[l] = pivot;
  }
  return utilities;
}

inline PaymentOutcome vcg(CoalitionEvaluator& eval) {
  const MarketInstance& inst = eval.instance();
  const DispatchResult& dispatch = eval.full();
  std::vector<double> utilities = vcg_utilities(eval);
  std::vector<double> payments(inst.num_bidders());
  for (int l = 0; l < inst.num_bidders(); ++l) {
    payments[l] = evaluate_bid(inst.bidders[l].curve, dispatch.allocation[l]) + utilities[l];
  }
  return mech_detail::finish_outcome(inst, Mechanism::kVcg, dispatch, std::move(payments));
}

// ---------------------------------------------------------------------------
// Core machinery

// One inequality row of the core: ubar_0 + sum_{l in S} ubar_l >= -J(B_S).
struct CoreRow {
  BidderMask coalition = 0;
  double value = 0.0;  // J(B_S)
};

struct CoreDescription {
  int num_bidders = 0;
  double grand_value = 0.0;  // J(B)
  std::vector<CoreRow> rows;
};

inline constexpr int kCoalitionEnumerationBudget = 20;

// Materializes every coalition row S strictly inside L.
inline CoreDescription build_core(CoalitionEvaluator& eval) {
  const int nl = eval.instance().num_bidders();
  if (nl > kCoalitionEnumerationBudget) {
    throw Error(ErrorCode::kCapExceeded, "core enumeration budget exceeded");
  }
  CoreDescription core;
  core.num_bidders = nl;
  core.grand_value = eval.full().objective;
  const BidderMask everyone = full_mask(nl);
  std::vector<BidderMask> masks;
  for (BidderMask s = 0; s < everyone; ++s) masks.push_back(s);
  auto values = eval.values(masks);
  for (BidderMask s = 0; s < everyone; ++s) {
    core.rows.push_back({s, values[s]});
  }
  return core;
}

struct CoreCheck {
  bool member = false;
  double worst_violation = 0.0;  // $ amount by which the worst row fails (<= 0 when inside)
  enum class Witness { kNone, kEquality, kCoalition, kNonnegativity } witness = Witness::kNone;
  BidderMask witness_coalition = 0;
  int witness_bidder = -1;
};

// Checks a stacked utility vector [u0, u1, ..., uL] against the core rows.
inline CoreCheck core_membership(const CoreDescription& core, const std::vector<double>& ubar,
                                 double tol = 1e-6) {
  if (static_cast<int>(ubar.size()) != core.num_bidders + 1) {
    throw Error(ErrorCode::kInvalidArgument, "utility vector must have |L|+1 entries");
  }
  const double scale = std::max(1.0, std::abs(core.grand_value));
  CoreCheck check;
  check.worst_violation = -kInfinity;

  double total = ubar[0];
  for (int l = 1; l <= core.num_bidders; ++l) total += ubar[l];
  const double eq_violation = std::abs(total + core.grand_value);
  check.worst_violation = eq_violation;
  check.witness = eq_violation > 0 ? CoreCheck::Witness::kEquality : CoreCheck::Witness::kNone;

  for (int l = 0; l < core.num_bidders; ++l) {
    const double violation = -ubar[l + 1];
    if (violation > check.worst_violation) {
      check.worst_violation = violation;
      check.witness = CoreCheck::Witness::kNonnegativity;
      check.witness_bidder = l;
    }
  }

  for (const auto& row : core.rows) {
    double lhs = ubar[0];
    for (int l = 0; l < core.num_bidders; ++l) {
      if (mask_has(row.coalition, l)) lhs += ubar[l + 1];
    }
    const double violation = -row.value - lhs;  // blocked by S when positive
    if (violation > check.worst_violation) {
      check.worst_violation = violation;
      check.witness = CoreCheck::Witness::kCoalition;
      check.witness_coalition = row.coalition;
      check.witness_bidder = -1;
    }
  }

  check.member = check.worst_violation <= tol * scale;
  return check;
}

struct SeparationResult {
  BidderMask coalition = 0;
  double violation = 0.0;  // positive means the candidate is blocked
  double score = 0.0;      // J(B_S) + sum_{l in S} ubar_l
};

// Most violated coalition row for a candidate utility vector: the argmin of
// J(B_S) + sum_S ubar_l over strict subsets. When every losing bidder has
// zero utility the search restricts to coalitions containing all losers
// (their rows are implied, so only 2^|winners| dispatches are needed).
inline SeparationResult separation_oracle(CoalitionEvaluator& eval,
                                          const std::vector<double>& ubar,
                                          int budget = kCoalitionEnumerationBudget) {
  const MarketInstance& inst = eval.instance();
  const int nl = inst.num_bidders();
  if (static_cast<int>(ubar.size()) != nl + 1) {
    throw Error(ErrorCode::kInvalidArgument, "utility vector must have |L|+1 entries");
  }
  const DispatchResult& full = eval.full();
  const BidderMask everyone = full_mask(nl);

  BidderMask losers = 0;
  for (int l = 0; l < nl; ++l) {
    if (!full.winner(l)) losers |= (1u << l);
  }
  bool reduce = true;
  for (int l = 0; l < nl; ++l) {
    if (mask_has(losers, l) && std::abs(ubar[l + 1]) > 1e-9) reduce = false;
  }

  std::vector<BidderMask> candidates;
  if (reduce) {
    const BidderMask winners = everyone & ~losers;
    const int nw = __builtin_popcount(winners);
    if (nw > budget) throw Error(ErrorCode::kCapExceeded, "separation budget exceeded");
    std::vector<int> widx;
    for (int l = 0; l < nl; ++l) {
      if (mask_has(winners, l)) widx.push_back(l);
    }
    for (BidderMask t = 0; t < (1u << nw); ++t) {
      BidderMask s = losers;
      for (int k = 0; k < nw; ++k) {
        if (mask_has(t, k)) s |= (1u << widx[k]);
      }
      if (s != everyone) candidates.push_back(s);
    }
  } else {
    if (nl > budget) throw Error(ErrorCode::kCapExceeded, "separation budget exceeded");
    for (BidderMask s = 0; s < everyone; ++s) candidates.push_back(s);
  }

  auto values = eval.values(candidates);
  SeparationResult best;
  double best_score = kInfinity;
  BidderMask best_mask = 0;
  for (const BidderMask s : candidates) {
    double score = values[s];
    for (int l = 0; l < nl; ++l) {
      if (mask_has(s, l)) score += ubar[l + 1];
    }
    if (score < best_score - 1e-15 || (score <= best_score && s < best_mask)) {
      best_score = score;
      best_mask = s;
    }
  }
  best.coalition = best_mask;
  best.score = best_score;
  best.violation = -best_score - ubar[0];
  return best;
}

// ---------------------------------------------------------------------------
// Maximum payment core-selecting mechanism

enum class MpcsMode { kEnumerate, kGenerate };

struct MpcsOptions {
  double epsilon = -1.0;  // <= 0: 1e-6 * max(1, |J(B)|)
  MpcsMode mode = MpcsMode::kEnumerate;
  double separation_tol = -1.0;  // <= 0: 1e-7 * max(1, |J(B)|)
  int max_iterations = 1000;
};

struct GenerationStep {
  BidderMask coalition = 0;
  double violation = 0.0;
};

struct MpcsInfo {
  double epsilon = 0.0;
  std::vector<double> vcg_utilities;
  std::vector<BidderMask> rows_used;
  std::vector<GenerationStep> steps;  // generate mode: one entry per oracle call
  int iterations = 0;
};

// Maximizer of sum_l u_l - eps * |u - uVCG|^2 over the polytope described by
// the supplied coalition rows (u0 eliminated through the equality). Bidders
// in pinned_zero are fixed at zero utility.
inline std::vector<double> mpcs_master(const std::vector<CoreRow>& rows, double grand_value,
                                       const std::vector<double>& vcg_u, double epsilon,
                                       BidderMask pinned_zero, int num_bidders) {
  std::vector<int> free_idx;
  for (int l = 0; l < num_bidders; ++l) {
    if (!mask_has(pinned_zero, l)) free_idx.push_back(l);
  }
  const int n = static_cast<int>(free_idx.size());
  std::vector<double> result(num_bidders, 0.0);
  if (n == 0) return result;

  QpProblem qp;
  qp.Q = 2.0 * epsilon * Eigen::MatrixXd::Identity(n, n);
  qp.c.resize(n);
  for (int k = 0; k < n; ++k) qp.c(k) = -1.0 - 2.0 * epsilon * vcg_u[free_idx[k]];
  qp.eq.resize(0, n);
  qp.eq_rhs.resize(0);

  std::vector<Eigen::VectorXd> in_rows;
  std::vector<double> in_rhs;
  for (const auto& row : rows) {
    if (!std::isfinite(row.value)) continue;  // infeasible coalition, row is vacuous
    // ubar_0 + sum_S u >= -J(B_S)  <=>  sum_{l not in S} u_l <= J(B_S) - J(B).
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    bool nonzero = false;
    for (int k = 0; k < n; ++k) {
      if (!mask_has(row.coalition, free_idx[k])) {
        r(k) = 1.0;
        nonzero = true;
      }
    }
    const double rhs = row.value - grand_value;
    if (!nonzero) {
      if (rhs < -1e-9 * std::max(1.0, std::abs(grand_value))) {
        throw Error(ErrorCode::kEmptyPolytope, "core rows exclude the pay-as-bid point");
      }
      continue;
    }
    in_rows.push_back(r);
    in_rhs.push_back(rhs);
  }
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    r(k) = -1.0;
    in_rows.push_back(r);
    in_rhs.push_back(0.0);
  }
  qp.in.resize(in_rows.size(), n);
  qp.in_rhs.resize(in_rows.size());
  for (std::size_t i = 0; i < in_rows.size(); ++i) {
    qp.in.row(i) = in_rows[i].transpose();
    qp.in_rhs(i) = in_rhs[i];
  }

  QpSolution sol = solve_qp(qp);
  if (sol.status == QpStatus::kInfeasible) {
    throw Error(ErrorCode::kEmptyPolytope,
                "master polytope is empty; the pay-as-bid point should always be feasible");
  }
  if (sol.status != QpStatus::kOptimal) {
    throw Error(ErrorCode::kSolverFailure, "master QP did not converge");
  }
  for (int k = 0; k < n; ++k) result[free_idx[k]] = std::max(sol.z(k), 0.0);
  return result;
}

struct MpcsOutcome {
  PaymentOutcome outcome;
  MpcsInfo info;
};

// Maximum payment core-selecting utilities: argmax over the core of
// sum u_l - eps |u - uVCG|^2. Enumerate mode materializes the rows over
// winning bidders (rows involving losing bidders are implied by theirs);
// generate mode grows the row set with the separation oracle until no
// coalition is violated.
inline MpcsOutcome mpcs(CoalitionEvaluator& eval, const MpcsOptions& options = {}) {
  const MarketInstance& inst = eval.instance();
  const int nl = inst.num_bidders();
  const DispatchResult& dispatch = eval.full();
  mech_detail::require_feasible(dispatch);
  const double grand = dispatch.objective;
  const BidderMask everyone = full_mask(nl);

  MpcsInfo info;
  info.vcg_utilities = vcg_utilities(eval);
  info.epsilon =
      options.epsilon > 0 ? options.epsilon : 1e-6 * std::max(1.0, std::abs(grand));
  const double sep_tol = options.separation_tol > 0
                             ? options.separation_tol
                             : 1e-7 * std::max(1.0, std::abs(grand));

  BidderMask losers = 0;
  std::vector<int> winners;
  for (int l = 0; l < nl; ++l) {
    if (dispatch.winner(l)) {
      winners.push_back(l);
    } else {
      losers |= (1u << l);
    }
  }
  const int nw = static_cast<int>(winners.size());

  std::vector<CoreRow> rows;
  std::vector<double> utilities;

  if (options.mode == MpcsMode::kEnumerate) {
    if (nw > kCoalitionEnumerationBudget) {
      throw Error(ErrorCode::kCapExceeded, "core enumeration budget exceeded");
    }
    std::vector<BidderMask> masks;
    for (BidderMask t = 0; t < (1u << nw); ++t) {
      BidderMask s = losers;
      for (int k = 0; k < nw; ++k) {
        if (mask_has(t, k)) s |= (1u << winners[k]);
      }
      if (s != everyone) masks.push_back(s);
    }
    auto values = eval.values(masks);
    for (const BidderMask s : masks) rows.push_back({s, values[s]});
    info.rows_used = masks;
    utilities = mpcs_master(rows, grand, info.vcg_utilities, info.epsilon, losers, nl);
    info.iterations = 1;
  } else {
    // Start cheap: singleton coalitions of winning bidders.
    {
      std::vector<BidderMask> masks;
      for (const int w : winners) {
        const BidderMask s = 1u << w;
        if (s != everyone) masks.push_back(s);
      }
      auto values = eval.values(masks);
      for (const BidderMask s : masks) {
        rows.push_back({s, values[s]});
        info.rows_used.push_back(s);
      }
    }
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      info.iterations = iter + 1;
      utilities = mpcs_master(rows, grand, info.vcg_utilities, info.epsilon, losers, nl);
      std::vector<double> stacked(nl + 1);
      double total = 0.0;
      for (int l = 0; l < nl; ++l) total += utilities[l];
      stacked[0] = -grand - total;
      for (int l = 0; l < nl; ++l) stacked[l + 1] = utilities[l];

      SeparationResult sep = separation_oracle(eval, stacked);
      info.steps.push_back({sep.coalition, sep.violation});
      if (sep.violation <= sep_tol) {
        converged = true;
        break;
      }
      bool duplicate = false;
      for (const auto& row : rows) duplicate = duplicate || row.coalition == sep.coalition;
      if (duplicate) break;  // row already enforced to solver precision
      rows.push_back({sep.coalition, eval.value(sep.coalition)});
      info.rows_used.push_back(sep.coalition);
    }
    if (!converged && info.iterations >= options.max_iterations) {
      throw Error(ErrorCode::kIterationLimit,
                  "constraint generation hit the iteration cap after " +
                      std::to_string(info.iterations) + " rounds");
    }
  }

  std::vector<double> payments(nl);
  for (int l = 0; l < nl; ++l) {
    payments[l] = evaluate_bid(inst.bidders[l].curve, dispatch.allocation[l]) + utilities[l];
  }
  MpcsOutcome out;
  out.outcome = mech_detail::finish_outcome(inst, Mechanism::kMpcs, dispatch, std::move(payments));
  out.info = std::move(info);
  return out;
}

// Uniform entry point used by the analysis suites and the CLI.
inline PaymentOutcome clear_mechanism(CoalitionEvaluator& eval, Mechanism mech,
                                      const MpcsOptions& mpcs_options = {}) {
  switch (mech) {
    case Mechanism::kPayAsBid: return pay_as_bid(eval);
    case Mechanism::kLmp: return lmp(eval);
    case Mechanism::kVcg: return vcg(eval);
    case Mechanism::kMpcs: return mpcs(eval, mpcs_options).outcome;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown mechanism");
}

inline PaymentOutcome clear_mechanism(const MarketInstance& inst, Mechanism mech,
                                      const MpcsOptions& mpcs_options = {},
                                      const DispatchOptions& dispatch_options = {}) {
  CoalitionEvaluator eval(inst, dispatch_options);
  return clear_mechanism(eval, mech, mpcs_options);
}

// Stacks [u0, u1..uL] from a payment outcome for core checks.
inline std::vector<double> stacked_utilities(const PaymentOutcome& outcome) {
  std::vector<double> u(outcome.revealed_utilities.size() + 1);
  u[0] = outcome.operator_utility;
  for (std::size_t l = 0; l < outcome.revealed_utilities.size(); ++l) {
    u[l + 1] = outcome.revealed_utilities[l];
  }
  return u;
}

}  // namespace coremech

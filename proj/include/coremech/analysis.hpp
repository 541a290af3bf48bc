#pragma once

#include <functional>
#include <string>
#include <vector>

#include "coremech/mechanisms.hpp"

namespace coremech {

// ---------------------------------------------------------------------------
// Incentive bounds (unilateral deviations)

// Largest profit bidder l can reach by deviating unilaterally from its true
// cost when everyone else keeps bidding as submitted, under the given
// core-selecting payment rule: uVCG_l(C_l, B_-l) - u_l(C_l, B_-l). The
// submitted curve doubles as the true cost when no separate true curve is
// attached.
inline double incentive_bound(const MarketInstance& inst, Mechanism mech, int bidder,
                              const MpcsOptions& mpcs_options = {}) {
  if (bidder < 0 || bidder >= inst.num_bidders()) {
    throw Error(ErrorCode::kInvalidArgument, "bidder index out of range");
  }
  MarketInstance profile = inst;
  profile.bidders[bidder].curve = inst.bidders[bidder].truth();

  CoalitionEvaluator eval(profile);
  const BidderMask everyone = full_mask(inst.num_bidders());
  const double with_all = eval.full().objective;
  const double without = eval.value(everyone & ~(1u << bidder));
  if (std::isinf(without)) {
    throw Error(ErrorCode::kRemovalInfeasible,
                "market infeasible after removing bidder " + inst.bidders[bidder].id);
  }
  const double vcg_utility = without - with_all;
  const double mech_utility =
      clear_mechanism(eval, mech, mpcs_options).revealed_utilities[bidder];
  return vcg_utility - mech_utility;
}

struct DeviationReport {
  int bidder = -1;
  BidCurve deviated_bid;
  double truthful_utility = 0.0;  // utility when bidding the true cost
  double achieved_utility = 0.0;  // true utility after the deviation
  double profit = 0.0;            // achieved - truthful
  double bound = 0.0;             // Lemma-style cap on the profit
  double epsilon = 0.0;
  double gap = 0.0;  // achieved - (bound - epsilon); >= -tolerance by construction
};

// Builds the near-optimal deviation bid: the true cost shifted up by the
// truthful VCG utility minus epsilon on every nonzero quantity, then
// re-clears the market under the supplied mechanism and reports the true
// utility the deviator actually collects.
inline DeviationReport construct_optimal_deviation(const MarketInstance& inst, int bidder,
                                                   double epsilon, Mechanism mech,
                                                   const MpcsOptions& mpcs_options = {}) {
  if (bidder < 0 || bidder >= inst.num_bidders()) {
    throw Error(ErrorCode::kInvalidArgument, "bidder index out of range");
  }
  MarketInstance profile = inst;
  const BidCurve truth = inst.bidders[bidder].truth();
  profile.bidders[bidder].curve = truth;

  CoalitionEvaluator eval(profile);
  const DispatchResult& truthful = eval.full();
  mech_detail::require_feasible(truthful);
  if (!truthful.winner(bidder)) {
    throw Error(ErrorCode::kLosingBidder,
                "deviation construction requires a winning bidder; " +
                    inst.bidders[bidder].id + " is not allocated");
  }

  const BidderMask everyone = full_mask(inst.num_bidders());
  const double without = eval.value(everyone & ~(1u << bidder));
  if (std::isinf(without)) {
    throw Error(ErrorCode::kRemovalInfeasible,
                "market infeasible after removing bidder " + inst.bidders[bidder].id);
  }
  const double vcg_utility = without - truthful.objective;
  const double truthful_mech_utility =
      clear_mechanism(eval, mech, mpcs_options).revealed_utilities[bidder];

  DeviationReport report;
  report.bidder = bidder;
  report.epsilon = epsilon;
  report.truthful_utility = truthful_mech_utility;
  report.bound = vcg_utility - truthful_mech_utility;

  BidCurve deviated = truth;
  deviated.activation_offset += vcg_utility - epsilon;
  report.deviated_bid = deviated;

  MarketInstance shifted = profile;
  shifted.bidders[bidder].curve = deviated;
  PaymentOutcome outcome = clear_mechanism(shifted, mech, mpcs_options);
  const double true_cost = evaluate_bid(truth, outcome.dispatch.allocation[bidder]);
  report.achieved_utility = outcome.payments[bidder] - true_cost;
  report.profit = report.achieved_utility - report.truthful_utility;
  report.gap = report.achieved_utility - (report.bound - epsilon);
  return report;
}

// ---------------------------------------------------------------------------
// Budget balance

inline double budget(const PaymentOutcome& outcome) { return outcome.operator_utility; }

struct BudgetVerdict {
  double operator_utility = 0.0;
  bool balanced = false;       // operator utility >= -tolerance
  bool premise_holds = false;  // pay-as-bid budget balance, -J(B) >= 0
  bool exchange = false;       // the theorem-level claim needs an exchange
};

inline BudgetVerdict check_budget_balance(const MarketInstance& inst, Mechanism mech,
                                          const MpcsOptions& mpcs_options = {},
                                          double tol = 1e-7) {
  CoalitionEvaluator eval(inst);
  BudgetVerdict verdict;
  verdict.exchange = inst.kind == MarketKind::kExchange;
  const double grand = eval.full().objective;
  verdict.premise_holds = -grand >= -tol * std::max(1.0, std::abs(grand));
  verdict.operator_utility = clear_mechanism(eval, mech, mpcs_options).operator_utility;
  verdict.balanced =
      verdict.operator_utility >= -tol * std::max(1.0, std::abs(verdict.operator_utility));
  return verdict;
}

// ---------------------------------------------------------------------------
// LMP vs VCG payment dominance

struct PaymentComparison {
  int bidder = -1;
  double lmp_payment = 0.0;
  double vcg_payment = 0.0;
  bool dominated = false;  // lmp <= vcg + tolerance
};

inline std::vector<PaymentComparison> compare_lmp_vcg(const MarketInstance& inst,
                                                      double tol = 1e-7) {
  CoalitionEvaluator eval(inst);
  PaymentOutcome lmp_out = lmp(eval);
  PaymentOutcome vcg_out = vcg(eval);
  std::vector<PaymentComparison> rows;
  for (int l = 0; l < inst.num_bidders(); ++l) {
    PaymentComparison row;
    row.bidder = l;
    row.lmp_payment = lmp_out.payments[l];
    row.vcg_payment = vcg_out.payments[l];
    row.dominated = row.lmp_payment <= row.vcg_payment + tol;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Replication identity and the VCG operator sign

struct ReplicationReport {
  int factor = 1;
  double scaled_base = 0.0;      // q * J(C)
  double replicated = 0.0;       // J(q C)
  double gap = 0.0;              // |difference|
  bool identity_holds = false;
};

inline ReplicationReport replication_identity(const MarketInstance& inst, int q) {
  ReplicationReport report;
  report.factor = q;
  MarketInstance replicated = replicate_instance(inst, q);  // gates the structure
  const double base = solve_dispatch(inst).objective;
  const double scaled = solve_dispatch(replicated).objective;
  report.scaled_base = q * base;
  report.replicated = scaled;
  report.gap = std::abs(report.scaled_base - report.replicated);
  report.identity_holds = report.gap <= 1e-6 * std::max(1.0, std::abs(scaled));
  return report;
}

struct OperatorSignVerdict {
  double operator_utility = 0.0;
  bool nonpositive = false;
};

// In a balance market with no line limits the VCG operator can at best break
// even; positive operator utility would contradict the replication identity.
inline OperatorSignVerdict vcg_operator_sign(const MarketInstance& inst, double tol = 1e-7) {
  market_detail::require_replicable(inst);
  CoalitionEvaluator eval(inst);
  OperatorSignVerdict verdict;
  verdict.operator_utility = vcg(eval).operator_utility;
  verdict.nonpositive =
      verdict.operator_utility <= tol * std::max(1.0, std::abs(verdict.operator_utility));
  return verdict;
}

// ---------------------------------------------------------------------------
// Supermodularity

struct SupermodularityReport {
  bool supermodular = true;
  // First violated triple: coalitions S subset of R and a bidder in S.
  BidderMask witness_s = 0;
  BidderMask witness_r = 0;
  int witness_bidder = -1;
};

// Tests J(B_S) - J(B_{S\l}) <= J(B_R) - J(B_{R\l}) over all S subset of R and
// l in S. Exchanges with any actual trade always violate this.
inline SupermodularityReport supermodularity_check(const MarketInstance& inst,
                                                   int budget = 12, double tol = 1e-7) {
  const int nl = inst.num_bidders();
  if (nl > budget) {
    throw Error(ErrorCode::kCapExceeded, "supermodularity enumeration budget exceeded");
  }
  CoalitionEvaluator eval(inst);
  const BidderMask everyone = full_mask(nl);
  std::vector<BidderMask> all;
  for (BidderMask s = 0; s <= everyone; ++s) all.push_back(s);
  auto values = eval.values(all);

  SupermodularityReport report;
  const double scale = std::max(1.0, std::abs(values[everyone]));
  for (BidderMask r = 0; r <= everyone; ++r) {
    // Enumerate submasks of r in decreasing order, then their members.
    for (BidderMask s = r;; s = (s - 1) & r) {
      for (int l = 0; l < nl; ++l) {
        if (!mask_has(s, l)) continue;
        const double lhs = values[s] - values[s & ~(1u << l)];
        const double rhs = values[r] - values[r & ~(1u << l)];
        if (!std::isfinite(lhs) || !std::isfinite(rhs)) continue;
        if (lhs > rhs + tol * scale) {
          report.supermodular = false;
          report.witness_s = s;
          report.witness_r = r;
          report.witness_bidder = l;
          return report;
        }
      }
      if (s == 0) break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Competitive equilibrium construction and verification

// Price functions, one per bidder: a base curve plus a constant activation
// offset on nonzero quantities, infinite outside the admissible set. The
// value at zero is always zero.
struct PriceFunctionSet {
  std::vector<BidCurve> psi;

  double value(int bidder, const Eigen::VectorXd& x) const {
    return evaluate_bid(psi[bidder], x);
  }
  double value(int bidder, double x) const { return evaluate_bid(psi[bidder], x); }
};

// Theorem-style price construction from core utilities: psi_l equals the true
// cost plus u_l on the admissible set away from zero. Requires the stacked
// utilities [u0, u1..uL] to lie in the core of the truthful market.
inline PriceFunctionSet build_ce_prices(const MarketInstance& inst,
                                        const std::vector<double>& stacked_utilities) {
  MarketInstance truthful = inst.truthful();
  CoalitionEvaluator eval(truthful);
  CoreDescription core = build_core(eval);
  CoreCheck check = core_membership(core, stacked_utilities);
  if (!check.member) {
    throw Error(ErrorCode::kNotCoreMember,
                "utilities violate the core by " + std::to_string(check.worst_violation));
  }
  PriceFunctionSet prices;
  for (int l = 0; l < inst.num_bidders(); ++l) {
    BidCurve psi = truthful.bidders[l].curve;
    psi.activation_offset += stacked_utilities[l + 1];
    prices.psi.push_back(psi);
  }
  return prices;
}

struct CeReport {
  bool bidder_optimality = true;    // condition (i), per-bidder grid search
  bool operator_optimality = true;  // condition (ii), re-dispatch under psi
  bool efficient = true;            // allocation equals the truthful optimum
  double worst_bidder_gap = 0.0;    // best grid improvement found over x*_l
  double operator_gap = 0.0;        // candidate cost minus the psi-optimum
  int failing_bidder = -1;
};

struct CeOptions {
  double grid_step_fraction = 1e-2;   // of the domain width, per dimension
  std::uint64_t max_grid_points = 1000000;
  double tol = 1e-6;
};

// Checks Definition-style competitive equilibrium conditions for a candidate
// allocation and price set: (i) each bidder's allocation maximizes
// psi_l - c_l over its admissible set (grid search), and (ii) the allocation
// minimizes total priced cost for the operator (re-dispatch with psi as the
// bid profile). Also reports whether the allocation matches the truthful
// dispatch optimum.
inline CeReport verify_ce(const MarketInstance& inst, const DispatchResult& candidate,
                          const PriceFunctionSet& prices, const CeOptions& options = {}) {
  MarketInstance truthful = inst.truthful();
  const int nl = inst.num_bidders();
  CeReport report;

  // Condition (i): no admissible quantity beats x*_l for any bidder.
  for (int l = 0; l < nl; ++l) {
    const BidCurve& cost = truthful.bidders[l].curve;
    const BidCurve& psi = prices.psi[l];
    const double at_candidate =
        prices.value(l, candidate.allocation[l]) - evaluate_bid(cost, candidate.allocation[l]);
    double best = 0.0;  // x = 0 is always admissible and worth 0
    if (cost.is_discrete()) {
      for (const auto& offer : cost.discrete().offers) {
        if (!curve_admits(psi, offer.quantity)) continue;
        best = std::max(best, evaluate_bid(psi, offer.quantity) -
                                  evaluate_bid(cost, offer.quantity));
      }
    } else {
      Interval range = curve_range(cost);
      const Interval psi_range = psi.is_discrete() ? range : curve_range(psi);
      range.lo = std::max(range.lo, psi_range.lo);
      range.hi = std::min(range.hi, psi_range.hi);
      const double width = std::max(range.width(), 0.0);
      double step = options.grid_step_fraction * std::max(width, 1e-12);
      const double min_step = width / static_cast<double>(options.max_grid_points);
      step = std::max(step, min_step);
      for (double x = range.lo; x <= range.hi + 0.5 * step; x += step) {
        const double q = std::min(x, range.hi);
        best = std::max(best, evaluate_bid(psi, q) - evaluate_bid(cost, q));
      }
    }
    const double gap = best - at_candidate;
    if (gap > report.worst_bidder_gap) {
      report.worst_bidder_gap = gap;
      if (gap > options.tol * std::max(1.0, std::abs(at_candidate))) {
        report.bidder_optimality = false;
        report.failing_bidder = l;
      }
    }
  }

  // Condition (ii): dispatching against the price functions cannot beat the
  // candidate allocation.
  MarketInstance priced = truthful;
  for (int l = 0; l < nl; ++l) priced.bidders[l].curve = prices.psi[l];
  const DispatchResult priced_opt = solve_dispatch(priced);
  double candidate_value =
      second_stage_cost(inst, candidate.allocation, candidate.recourse);
  for (int l = 0; l < nl; ++l) {
    candidate_value += prices.value(l, candidate.allocation[l]);
  }
  report.operator_gap = candidate_value - priced_opt.objective;
  report.operator_optimality =
      report.operator_gap <= options.tol * std::max(1.0, std::abs(candidate_value));

  // Efficiency: a competitive-equilibrium allocation coincides with the
  // truthful dispatch optimum.
  const DispatchResult truthful_opt = solve_dispatch(truthful);
  double worst = 0.0;
  double scale = 1.0;
  for (int l = 0; l < nl; ++l) {
    worst = std::max(
        worst, (candidate.allocation[l] - truthful_opt.allocation[l]).lpNorm<Eigen::Infinity>());
    scale = std::max(scale, truthful_opt.allocation[l].lpNorm<Eigen::Infinity>());
  }
  report.efficient = worst <= 1e-5 * scale;
  return report;
}

}  // namespace coremech

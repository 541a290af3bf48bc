#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <vector>

#include "coremech/market.hpp"
#include "coremech/qp.hpp"

namespace coremech {

// Coalitions are bitmasks over the bidder indices; bit l set means bidder l
// participates, everyone else is forced to x = 0.
using BidderMask = std::uint32_t;

inline constexpr int kMaxMaskBidders = 31;

inline BidderMask full_mask(int num_bidders) {
  if (num_bidders < 0 || num_bidders > kMaxMaskBidders) {
    throw Error(ErrorCode::kCapExceeded, "coalition masks support at most 31 bidders");
  }
  return num_bidders == 0 ? 0u : ((1u << num_bidders) - 1u);
}

inline bool mask_has(BidderMask mask, int l) { return (mask >> l) & 1u; }

enum class DispatchStatus { kOptimal, kInfeasible };

struct DispatchOptions {
  std::uint64_t discrete_cap = 1ull << 25;  // refuse, never approximate, beyond this
  bool want_duals = true;
  QpOptions qp;
};

struct DispatchResult {
  DispatchStatus status = DispatchStatus::kInfeasible;
  double objective = kInfinity;  // +inf iff infeasible
  std::vector<Eigen::VectorXd> allocation;
  Eigen::VectorXd recourse;
  // Nodal balance shadow prices ($/MW): one per network node, or a single
  // entry for markets with one balance row and no network.
  std::vector<double> node_prices;
  bool has_duals = false;
  bool degenerate_duals = false;

  bool optimal() const { return status == DispatchStatus::kOptimal; }

  bool winner(int l, double tol = 1e-7) const {
    return allocation[l].size() > 0 && allocation[l].lpNorm<Eigen::Infinity>() > tol;
  }
};

// DC power-flow rows in the angle formulation, over the stacked variables
// [x_0 .. x_{k-1}, theta_0 .. theta_{m-1}]. Balance rows are per node
// (injections minus outgoing flows equal zero) so their multipliers map
// directly to locational prices; limits give two rows per bounded line.
struct NetworkRows {
  Eigen::MatrixXd balance;
  Eigen::VectorXd balance_rhs;
  Eigen::MatrixXd limits;
  Eigen::VectorXd limit_rhs;
  Eigen::RowVectorXd reference;
  double reference_rhs = 0.0;
};

inline NetworkRows dc_network_rows(const Network& net, const std::vector<int>& bidder_nodes) {
  if (!net.connected()) {
    throw Error(ErrorCode::kDisconnectedNetwork, "network graph is disconnected");
  }
  const int num_nodes = static_cast<int>(net.nodes.size());
  const int num_x = static_cast<int>(bidder_nodes.size());
  const int n = num_x + num_nodes;

  NetworkRows rows;
  rows.balance = Eigen::MatrixXd::Zero(num_nodes, n);
  rows.balance_rhs = Eigen::VectorXd::Zero(num_nodes);
  for (int k = 0; k < num_x; ++k) {
    rows.balance(bidder_nodes[k], k) = 1.0;
  }
  for (const auto& line : net.lines) {
    const int ci = num_x + line.from;
    const int cj = num_x + line.to;
    rows.balance(line.from, ci) -= line.susceptance;
    rows.balance(line.from, cj) += line.susceptance;
    rows.balance(line.to, cj) -= line.susceptance;
    rows.balance(line.to, ci) += line.susceptance;
  }

  int num_limited = 0;
  for (const auto& line : net.lines) {
    if (line.limit) ++num_limited;
  }
  rows.limits = Eigen::MatrixXd::Zero(2 * num_limited, n);
  rows.limit_rhs = Eigen::VectorXd::Zero(2 * num_limited);
  int r = 0;
  for (const auto& line : net.lines) {
    if (!line.limit) continue;
    rows.limits(r, num_x + line.from) = line.susceptance;
    rows.limits(r, num_x + line.to) = -line.susceptance;
    rows.limit_rhs(r) = *line.limit;
    rows.limits(r + 1, num_x + line.from) = -line.susceptance;
    rows.limits(r + 1, num_x + line.to) = line.susceptance;
    rows.limit_rhs(r + 1) = *line.limit;
    r += 2;
  }

  rows.reference = Eigen::RowVectorXd::Zero(n);
  rows.reference(num_x + net.reference) = 1.0;
  rows.reference_rhs = 0.0;
  return rows;
}

namespace dispatch_detail {

struct BranchChoice {
  std::vector<int> discrete_pick;  // per discrete bidder: -1 empty, else offer index
  std::vector<bool> offset_off;    // per offset bidder: true = forced to zero
};

struct Assembled {
  QpProblem qp;
  double constant = 0.0;
  bool feasible = true;
  // variable layout
  std::vector<int> x_var;   // per bidder: variable index of the scalar quantity, -1 if folded
  int y_start = -1;
  int theta_start = -1;
  // equality row tags for dual mapping
  std::vector<int> balance_row_of_node;  // -1 if absent
  int single_balance_row = -1;
  Eigen::VectorXd tie_weights;
  std::vector<Eigen::VectorXd> fixed;  // folded quantities per bidder
};

struct RowBuilder {
  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<Eigen::VectorXd> in_rows;
  std::vector<double> in_rhs;

  int add_eq(const Eigen::VectorXd& row, double rhs) {
    eq_rows.push_back(row);
    eq_rhs.push_back(rhs);
    return static_cast<int>(eq_rows.size()) - 1;
  }
  void add_in(const Eigen::VectorXd& row, double rhs) {
    in_rows.push_back(row);
    in_rhs.push_back(rhs);
  }
};

// Builds the convex program for one enumeration branch. Bidders outside the
// mask, discrete bidders, and offset bidders forced off contribute constants.
inline Assembled assemble(const MarketInstance& inst, BidderMask mask, const BranchChoice& choice) {
  const int nl = inst.num_bidders();
  Assembled out;
  out.x_var.assign(nl, -1);

  // Fixed quantity per bidder (empty vector = participates as a variable).
  std::vector<Eigen::VectorXd> fixed(nl);
  std::vector<bool> variable(nl, false);
  int discrete_seen = 0;
  int offset_seen = 0;
  for (int l = 0; l < nl; ++l) {
    const BidCurve& curve = inst.bidders[l].curve;
    if (!mask_has(mask, l)) {
      fixed[l] = Eigen::VectorXd::Zero(curve.dimension());
      continue;
    }
    if (curve.is_discrete()) {
      const int pick = choice.discrete_pick[discrete_seen++];
      if (pick < 0) {
        fixed[l] = Eigen::VectorXd::Zero(curve.dimension());
      } else {
        fixed[l] = curve.discrete().offers[pick].quantity;
        out.constant += curve.discrete().offers[pick].price + curve.activation_offset;
      }
      continue;
    }
    if (curve.activation_offset != 0.0) {
      if (choice.offset_off[offset_seen++]) {
        fixed[l] = Eigen::VectorXd::Zero(1);
        continue;
      }
      out.constant += curve.activation_offset;
    }
    variable[l] = true;
  }

  // Variable layout: [x..., pwl epigraphs..., y..., theta...].
  int n = 0;
  for (int l = 0; l < nl; ++l) {
    if (variable[l]) out.x_var[l] = n++;
  }
  std::vector<int> epi_var(nl, -1);
  for (int l = 0; l < nl; ++l) {
    if (variable[l] && inst.bidders[l].curve.is_pwl() &&
        inst.bidders[l].curve.pwl().points.size() > 1) {
      epi_var[l] = n++;
    }
  }
  const int ny = inst.num_recourse_vars();
  out.y_start = n;
  n += ny;
  const int num_nodes = inst.network ? static_cast<int>(inst.network->nodes.size()) : 0;
  out.theta_start = n;
  n += num_nodes;

  out.qp.Q = Eigen::MatrixXd::Zero(n, n);
  out.qp.c = Eigen::VectorXd::Zero(n);
  out.tie_weights = Eigen::VectorXd::Constant(n, 1e-3);

  RowBuilder rows;

  auto var_of = [&](const VarRef& ref) -> int {
    if (ref.kind == VarRef::Kind::kRecourse) return out.y_start + ref.index;
    return out.x_var[ref.index];  // -1 when folded (scalar bidders only here)
  };
  auto fixed_value = [&](const VarRef& ref) -> double {
    return fixed[ref.index].size() > ref.comp ? fixed[ref.index](ref.comp) : 0.0;
  };

  // Bid costs and domains.
  for (int l = 0; l < nl; ++l) {
    if (!variable[l]) continue;
    const int xv = out.x_var[l];
    out.tie_weights(xv) = 1.0;
    const BidCurve& curve = inst.bidders[l].curve;
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
    unit(xv) = 1.0;
    if (curve.is_quadratic()) {
      const auto& q = curve.quadratic();
      if (q.a < -kTol) {
        throw Error(ErrorCode::kNonconvexUnsupported,
                    "bidder " + inst.bidders[l].id + " has an indefinite quadratic bid");
      }
      out.qp.Q(xv, xv) += 2.0 * std::max(q.a, 0.0);
      out.qp.c(xv) += q.b;
      rows.add_in(unit, q.domain.hi);
      rows.add_in(-unit, -q.domain.lo);
    } else {
      const auto& pts = curve.pwl().points;
      rows.add_in(unit, pts.back().quantity);
      rows.add_in(-unit, -pts.front().quantity);
      if (epi_var[l] >= 0) {
        out.qp.c(epi_var[l]) += 1.0;
        for (const auto& support : pwl_supports(curve.pwl())) {
          Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
          row(xv) = support.slope;
          row(epi_var[l]) = -1.0;
          rows.add_in(row, -support.intercept);
        }
      }
    }
  }

  // Second-stage cost d(x, y).
  if (inst.recourse) {
    const Recourse& rec = *inst.recourse;
    auto add_linear = [&](const LinearTerm& term, double weight) {
      const int v = var_of(term.var);
      if (v >= 0) {
        out.qp.c(v) += weight * term.coef;
      } else {
        out.constant += weight * term.coef * fixed_value(term.var);
      }
    };
    for (const auto& term : rec.linear) add_linear(term, 1.0);
    for (const auto& scenario : rec.scenarios) {
      for (const auto& term : scenario.linear) add_linear(term, scenario.weight);
    }
    for (const auto& term : rec.quadratic) {
      const int va = var_of(term.a);
      const int vb = var_of(term.b);
      if (va >= 0 && vb >= 0) {
        out.qp.Q(va, vb) += term.coef;
        out.qp.Q(vb, va) += term.coef;
      } else if (va >= 0) {
        out.qp.c(va) += term.coef * fixed_value(term.b);
      } else if (vb >= 0) {
        out.qp.c(vb) += term.coef * fixed_value(term.a);
      } else {
        out.constant += term.coef * fixed_value(term.a) * fixed_value(term.b);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.qp.Q);
    if (es.eigenvalues().minCoeff() < -1e-7 * std::max(1.0, es.eigenvalues().maxCoeff())) {
      throw Error(ErrorCode::kNonconvexUnsupported, "second-stage cost is not convex");
    }
  }

  // Network balance, limits, reference angle.
  out.balance_row_of_node.assign(num_nodes, -1);
  if (inst.network) {
    const Network& net = *inst.network;
    if (!net.connected()) {
      throw Error(ErrorCode::kDisconnectedNetwork, "network graph is disconnected");
    }
    std::vector<Eigen::VectorXd> balance(num_nodes, Eigen::VectorXd::Zero(n));
    std::vector<double> balance_rhs(num_nodes, 0.0);
    for (int l = 0; l < nl; ++l) {
      const int node = net.node_index(*inst.bidders[l].node);
      if (variable[l]) {
        balance[node](out.x_var[l]) += 1.0;
      } else {
        balance_rhs[node] -= fixed[l](0);
      }
    }
    for (const auto& line : net.lines) {
      const int ti = out.theta_start + line.from;
      const int tj = out.theta_start + line.to;
      balance[line.from](ti) -= line.susceptance;
      balance[line.from](tj) += line.susceptance;
      balance[line.to](tj) -= line.susceptance;
      balance[line.to](ti) += line.susceptance;
      if (line.limit) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        row(ti) = line.susceptance;
        row(tj) = -line.susceptance;
        rows.add_in(row, *line.limit);
        rows.add_in(-row, *line.limit);
      }
    }
    for (int i = 0; i < num_nodes; ++i) {
      out.balance_row_of_node[i] = rows.add_eq(balance[i], balance_rhs[i]);
    }
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(n);
    ref(out.theta_start + net.reference) = 1.0;
    rows.add_eq(ref, 0.0);
  }

  // Extra linear constraints with folded constants.
  int eq_extra_count = 0;
  for (const auto& constraint : inst.constraints) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    double rhs = constraint.rhs;
    bool any_var = false;
    for (const auto& term : constraint.terms) {
      if (term.var.kind == VarRef::Kind::kBidder && out.x_var[term.var.index] < 0) {
        rhs -= term.coef * fixed_value(term.var);
        continue;
      }
      const int v = var_of(term.var);
      row(v) += term.coef;
      any_var = true;
    }
    const double scale = std::max(1.0, std::abs(constraint.rhs));
    switch (constraint.sense) {
      case Sense::kEq:
        if (!any_var) {
          if (std::abs(rhs) > 1e-9 * scale) out.feasible = false;
        } else {
          const int r = rows.add_eq(row, rhs);
          if (++eq_extra_count == 1 && !inst.network) out.single_balance_row = r;
        }
        break;
      case Sense::kLe:
        if (!any_var) {
          if (rhs < -1e-9 * scale) out.feasible = false;
        } else {
          rows.add_in(row, rhs);
        }
        break;
      case Sense::kGe:
        if (!any_var) {
          if (-rhs < -1e-9 * scale) out.feasible = false;
        } else {
          rows.add_in(-row, -rhs);
        }
        break;
    }
  }
  if (eq_extra_count != 1) out.single_balance_row = -1;

  out.qp.eq.resize(rows.eq_rows.size(), n);
  out.qp.eq_rhs.resize(rows.eq_rows.size());
  for (std::size_t i = 0; i < rows.eq_rows.size(); ++i) {
    out.qp.eq.row(i) = rows.eq_rows[i].transpose();
    out.qp.eq_rhs(i) = rows.eq_rhs[i];
  }
  out.qp.in.resize(rows.in_rows.size(), n);
  out.qp.in_rhs.resize(rows.in_rows.size());
  for (std::size_t i = 0; i < rows.in_rows.size(); ++i) {
    out.qp.in.row(i) = rows.in_rows[i].transpose();
    out.qp.in_rhs(i) = rows.in_rhs[i];
  }

  // Stash the fixed parts so the caller can reconstruct the allocation.
  for (int l = 0; l < nl; ++l) {
    if (!variable[l] && fixed[l].size() == 0) fixed[l] = Eigen::VectorXd::Zero(1);
  }
  out.fixed = std::move(fixed);
  return out;
}

}  // namespace dispatch_detail

// Economic dispatch of the market under a coalition: minimize total bid cost
// plus second-stage cost subject to network and side constraints, with
// bidders outside the mask pinned to zero. Convex curves go through the
// active-set solver; discrete offers and activation offsets are enumerated
// exhaustively up to the configured cap. Ties across branches prefer lower
// objective, then smaller allocation norm, then the earlier branch.
inline DispatchResult solve_dispatch(const MarketInstance& inst, BidderMask mask,
                                     const DispatchOptions& opt = {}) {
  using namespace dispatch_detail;
  const int nl = inst.num_bidders();
  full_mask(nl);  // range check

  std::vector<int> discrete_idx;
  std::vector<int> offset_idx;
  for (int l = 0; l < nl; ++l) {
    if (!mask_has(mask, l)) continue;
    const BidCurve& curve = inst.bidders[l].curve;
    if (curve.is_discrete()) {
      discrete_idx.push_back(l);
    } else if (curve.activation_offset != 0.0) {
      offset_idx.push_back(l);
    }
  }

  std::uint64_t num_branches = 1;
  for (const int l : discrete_idx) {
    const std::uint64_t options = 1 + inst.bidders[l].curve.discrete().offers.size();
    if (num_branches > opt.discrete_cap / options) {
      throw Error(ErrorCode::kCapExceeded, "discrete selection enumeration exceeds the cap");
    }
    num_branches *= options;
  }
  for (std::size_t i = 0; i < offset_idx.size(); ++i) {
    if (num_branches > opt.discrete_cap / 2) {
      throw Error(ErrorCode::kCapExceeded, "discrete selection enumeration exceeds the cap");
    }
    num_branches *= 2;
  }

  DispatchResult best;
  best.status = DispatchStatus::kInfeasible;
  best.objective = kInfinity;
  double best_norm = kInfinity;
  bool have_best = false;

  BranchChoice choice;
  choice.discrete_pick.assign(discrete_idx.size(), -1);
  choice.offset_off.assign(offset_idx.size(), true);

  for (std::uint64_t branch = 0; branch < num_branches; ++branch) {
    // Decode the branch odometer: empty selections first.
    std::uint64_t code = branch;
    for (std::size_t i = 0; i < discrete_idx.size(); ++i) {
      const std::uint64_t options = 1 + inst.bidders[discrete_idx[i]].curve.discrete().offers.size();
      choice.discrete_pick[i] = static_cast<int>(code % options) - 1;
      code /= options;
    }
    for (std::size_t i = 0; i < offset_idx.size(); ++i) {
      choice.offset_off[i] = (code % 2) == 0;
      code /= 2;
    }

    Assembled a = assemble(inst, mask, choice);
    if (!a.feasible) continue;

    double objective = a.constant;
    QpSolution qsol;
    const int n = a.qp.num_vars();
    if (n > 0) {
      QpOptions qopt = opt.qp;
      qopt.tie_break_weights = a.tie_weights;
      qsol = solve_qp(a.qp, qopt);
      if (qsol.status == QpStatus::kInfeasible) continue;
      if (qsol.status == QpStatus::kUnbounded) {
        throw Error(ErrorCode::kSolverFailure, "dispatch objective is unbounded below");
      }
      if (qsol.status != QpStatus::kOptimal) {
        throw Error(ErrorCode::kSolverFailure, "active-set solver stalled on a dispatch branch");
      }
      objective += qsol.objective;
    }

    // Materialize the allocation for tie-breaking.
    std::vector<Eigen::VectorXd> allocation(nl);
    double norm_sq = 0.0;
    for (int l = 0; l < nl; ++l) {
      if (a.x_var[l] >= 0) {
        double v = qsol.z(a.x_var[l]);
        if (std::abs(v) <= 1e-11) v = 0.0;
        allocation[l] = Eigen::VectorXd::Constant(1, v);
      } else {
        allocation[l] = a.fixed[l];
      }
      norm_sq += allocation[l].squaredNorm();
    }

    const double tol = 1e-9 * std::max(1.0, std::abs(objective));
    const bool better = !have_best || objective < best.objective - tol ||
                        (objective < best.objective + tol && norm_sq < best_norm - 1e-12);
    if (!better) continue;

    have_best = true;
    best_norm = norm_sq;
    best.status = DispatchStatus::kOptimal;
    best.objective = objective;
    best.allocation = std::move(allocation);
    best.recourse = n > 0 && inst.num_recourse_vars() > 0
                        ? Eigen::VectorXd(qsol.z.segment(a.y_start, inst.num_recourse_vars()))
                        : Eigen::VectorXd::Zero(inst.num_recourse_vars());
    best.node_prices.clear();
    best.has_duals = false;
    best.degenerate_duals = false;
    if (opt.want_duals && discrete_idx.empty() && n > 0) {
      if (inst.network) {
        best.node_prices.resize(inst.network->nodes.size());
        for (std::size_t i = 0; i < inst.network->nodes.size(); ++i) {
          best.node_prices[i] = qsol.eq_shadow(a.balance_row_of_node[i]);
        }
        best.has_duals = true;
      } else if (a.single_balance_row >= 0) {
        best.node_prices = {qsol.eq_shadow(a.single_balance_row)};
        best.has_duals = true;
      }
      best.degenerate_duals = qsol.degenerate_duals;
    }
  }

  if (!have_best) {
    best.allocation.assign(nl, Eigen::VectorXd());
    for (int l = 0; l < nl; ++l) {
      best.allocation[l] = Eigen::VectorXd::Zero(inst.bidder_dimension(l));
    }
    best.recourse = Eigen::VectorXd::Zero(inst.num_recourse_vars());
  }
  return best;
}

inline DispatchResult solve_dispatch(const MarketInstance& inst, const DispatchOptions& opt = {}) {
  return solve_dispatch(inst, full_mask(inst.num_bidders()), opt);
}

// The locational price faced by a bidder: its node's balance multiplier, or
// the single balance-row multiplier when the market has no network.
inline std::optional<double> bidder_price(const MarketInstance& inst, const DispatchResult& res,
                                          int l) {
  if (!res.has_duals) return std::nullopt;
  if (inst.network) {
    const int node = inst.network->node_index(*inst.bidders[l].node);
    if (node < 0) return std::nullopt;
    return res.node_prices[node];
  }
  return res.node_prices.empty() ? std::nullopt : std::optional<double>(res.node_prices[0]);
}

// Memoizing evaluator for coalition values J(B_S). Individual solves are
// independent, so batches fan out over a small thread pool; the cache is
// merged under a lock, which keeps results deterministic regardless of
// schedule.
class CoalitionEvaluator {
 public:
  explicit CoalitionEvaluator(MarketInstance inst, DispatchOptions opt = {})
      : inst_(std::move(inst)), opt_(opt) {}

  double value(BidderMask mask) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = memo_.find(mask);
      if (it != memo_.end()) return it->second;
    }
    DispatchOptions opt = opt_;
    opt.want_duals = false;
    const double v = solve_dispatch(inst_, mask, opt).objective;
    std::lock_guard<std::mutex> lock(mu_);
    memo_.emplace(mask, v);
    return v;
  }

  std::map<BidderMask, double> values(const std::vector<BidderMask>& masks) {
    std::vector<BidderMask> missing;
    std::map<BidderMask, double> out;
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (const BidderMask mask : masks) {
        auto it = memo_.find(mask);
        if (it != memo_.end()) {
          out.emplace(mask, it->second);
        } else if (out.find(mask) == out.end()) {
          missing.push_back(mask);
        }
      }
    }
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());

    const unsigned workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), 8u);
    std::vector<double> computed(missing.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&]() {
      DispatchOptions opt = opt_;
      opt.want_duals = false;
      try {
        for (std::size_t i = next.fetch_add(1); i < missing.size(); i = next.fetch_add(1)) {
          computed[i] = solve_dispatch(inst_, missing[i], opt).objective;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    };
    if (missing.size() <= 1 || workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      memo_.emplace(missing[i], computed[i]);
      out.emplace(missing[i], computed[i]);
    }
    return out;
  }

  // Cached solve of the full problem (allocation and duals included).
  const DispatchResult& full() {
    std::lock_guard<std::mutex> lock(mu_);
    if (!full_) {
      full_ = solve_dispatch(inst_, full_mask(inst_.num_bidders()), opt_);
      memo_.emplace(full_mask(inst_.num_bidders()), full_->objective);
    }
    return *full_;
  }

  const MarketInstance& instance() const { return inst_; }
  const DispatchOptions& options() const { return opt_; }

 private:
  MarketInstance inst_;
  DispatchOptions opt_;
  std::unordered_map<BidderMask, double> memo_;
  std::optional<DispatchResult> full_;
  std::mutex mu_;
};

// Batch evaluation of J(B_S) over explicit subsets.
inline std::map<BidderMask, double> coalition_values(const MarketInstance& inst,
                                                     const std::vector<BidderMask>& subsets,
                                                     const DispatchOptions& opt = {}) {
  CoalitionEvaluator eval(inst, opt);
  return eval.values(subsets);
}

}  // namespace coremech

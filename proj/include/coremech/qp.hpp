#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "coremech/errors.hpp"
#include "coremech/numerics.hpp"

namespace coremech {

// Dense convex quadratic program
//
//   minimize    0.5 z'Qz + c'z
//   subject to  eq z  = eq_rhs
//               in z <= in_rhs
//
// Q must be symmetric positive semidefinite; Q = 0 gives a plain LP. Solved
// with a primal active-set method on the inequality rows. Sized for desk-scale
// markets (tens of variables), everything dense.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::MatrixXd eq;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd in;
  Eigen::VectorXd in_rhs;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_eq() const { return static_cast<int>(eq_rhs.size()); }
  int num_in() const { return static_cast<int>(in_rhs.size()); }

  double objective_at(const Eigen::VectorXd& z) const {
    return 0.5 * z.dot(Q * z) + c.dot(z);
  }
};

enum class QpStatus { kOptimal, kInfeasible, kUnbounded, kStalled };

struct QpSolution {
  QpStatus status = QpStatus::kStalled;
  double objective = kInfinity;
  Eigen::VectorXd z;
  // Shadow prices: dJ/d(rhs). Equality shadows are free-signed, inequality
  // shadows are <= 0 and zero on inactive rows.
  Eigen::VectorXd eq_shadow;
  Eigen::VectorXd in_shadow;
  std::vector<int> active;  // inequality rows active at z
  bool degenerate_duals = false;
  int iterations = 0;
};

struct QpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-8;
  int max_iterations = 0;  // 0 -> scaled by problem size
  // Among multiple optima, return the point minimizing the weighted squared
  // norm of z over the optimal set (resolved by an extra strictly convex QP).
  bool min_norm_tie_break = true;
  Eigen::VectorXd tie_break_weights;  // empty -> all ones
};

namespace qp_detail {

struct ActiveSetResult {
  QpStatus status = QpStatus::kStalled;
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;  // stacked [eq; working ineq], L = f + nu'(rows - rhs)
  std::vector<int> working;     // inequality rows in the final working set
  int iterations = 0;
};

// Stacks the equality rows on top of the working inequality rows.
inline Eigen::MatrixXd stack_working(const QpProblem& p, const std::vector<int>& working) {
  const int n = p.num_vars();
  Eigen::MatrixXd a(p.num_eq() + static_cast<int>(working.size()), n);
  if (p.num_eq() > 0) a.topRows(p.num_eq()) = p.eq;
  for (int k = 0; k < static_cast<int>(working.size()); ++k) {
    a.row(p.num_eq() + k) = p.in.row(working[k]);
  }
  return a;
}

inline int matrix_rank(const Eigen::MatrixXd& a, double rel_tol = 1e-11) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const double smax = svd.singularValues()(0);
  if (smax <= 0.0) return 0;
  const double thresh = rel_tol * std::max<double>(a.rows(), a.cols()) * smax;
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > thresh) ++r;
  }
  return r;
}

// Primal active-set iteration from a feasible start. Equalities are always in
// the working set; working inequality rows are kept linearly independent.
inline ActiveSetResult active_set_solve(const QpProblem& p, Eigen::VectorXd z,
                                        std::vector<int> working, const QpOptions& opt) {
  const int n = p.num_vars();
  const int mi = p.num_in();
  ActiveSetResult res;
  res.z = z;
  res.working = working;

  const double grad_scale = std::max(1.0, p.c.lpNorm<Eigen::Infinity>());
  const int max_iter =
      opt.max_iterations > 0 ? opt.max_iterations : 100 * (n + p.num_eq() + mi + 10);
  const int bland_after = 3 * (n + mi + 10);

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    Eigen::MatrixXd aw = stack_working(p, working);

    // Null-space basis of the working rows.
    Eigen::MatrixXd nullspace;
    if (aw.rows() == 0) {
      nullspace = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(aw, Eigen::ComputeFullV);
      const double smax = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
      const double thresh = 1e-11 * std::max<double>(aw.rows(), n) * std::max(1.0, smax);
      int rank = 0;
      for (int i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > thresh) ++rank;
      }
      nullspace = svd.matrixV().rightCols(n - rank);
    }

    Eigen::VectorXd grad = p.Q * z + p.c;
    Eigen::VectorXd direction = Eigen::VectorXd::Zero(n);
    bool linear_direction = false;
    bool at_subproblem_optimum = false;

    if (nullspace.cols() == 0) {
      at_subproblem_optimum = true;
    } else {
      Eigen::MatrixXd reduced_h = nullspace.transpose() * p.Q * nullspace;
      Eigen::VectorXd reduced_g = nullspace.transpose() * grad;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced_h);
      const double lmax = es.eigenvalues().size() > 0 ? es.eigenvalues().maxCoeff() : 0.0;
      const double curve_thresh = 1e-10 * std::max(1.0, lmax);

      if (reduced_g.lpNorm<Eigen::Infinity>() <= opt.opt_tol * grad_scale) {
        // Stationary on the working set; the step length is unreliable here
        // when the curvature is tiny, so test the gradient itself.
        at_subproblem_optimum = true;
      } else {
        Eigen::VectorXd g_in_basis = es.eigenvectors().transpose() * reduced_g;
        Eigen::VectorXd null_part = Eigen::VectorXd::Zero(reduced_g.size());
        Eigen::VectorXd newton = Eigen::VectorXd::Zero(reduced_g.size());
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
          if (es.eigenvalues()(i) > curve_thresh) {
            newton -= (g_in_basis(i) / es.eigenvalues()(i)) * es.eigenvectors().col(i);
          } else {
            null_part += g_in_basis(i) * es.eigenvectors().col(i);
          }
        }

        if (null_part.lpNorm<Eigen::Infinity>() > opt.opt_tol * grad_scale) {
          direction = -nullspace * null_part;
          linear_direction = true;
        } else {
          direction = nullspace * newton;
          if (direction.lpNorm<Eigen::Infinity>() <=
              1e-11 * std::max(1.0, z.lpNorm<Eigen::Infinity>())) {
            at_subproblem_optimum = true;
          }
        }
      }
    }

    if (at_subproblem_optimum) {
      // Multipliers: grad + aw' nu = 0 in least squares.
      Eigen::VectorXd nu;
      if (stack_working(p, working).rows() == 0) {
        nu.resize(0);
      } else {
        Eigen::MatrixXd aw2 = stack_working(p, working);
        nu = aw2.transpose().completeOrthogonalDecomposition().solve(-grad);
      }
      int drop = -1;
      double most_negative = -opt.opt_tol * grad_scale;
      const bool bland = iter > bland_after;
      for (int k = 0; k < static_cast<int>(working.size()); ++k) {
        const double v = nu(p.num_eq() + k);
        if (v < most_negative) {
          drop = k;
          if (bland) break;  // lowest-index rule once progress stalls
          most_negative = v;
        }
      }
      if (drop < 0) {
        res.status = QpStatus::kOptimal;
        res.z = z;
        res.multipliers = nu;
        res.working = working;
        return res;
      }
      working.erase(working.begin() + drop);
      continue;
    }

    // Ratio test against rows outside the working set.
    double best_alpha = linear_direction ? kInfinity : 1.0;
    int blocking = -1;
    for (int i = 0; i < mi; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double advance = p.in.row(i).dot(direction);
      const double row_scale = std::max(1.0, p.in.row(i).lpNorm<Eigen::Infinity>());
      if (advance <= 1e-12 * row_scale * std::max(1.0, direction.lpNorm<Eigen::Infinity>()))
        continue;
      double slack = p.in_rhs(i) - p.in.row(i).dot(z);
      if (slack < 0.0) slack = 0.0;  // numerical drift
      const double alpha = slack / advance;
      if (alpha < best_alpha - 1e-15) {
        best_alpha = alpha;
        blocking = i;
      }
    }

    if (linear_direction && blocking < 0) {
      res.status = QpStatus::kUnbounded;
      res.z = z;
      return res;
    }

    z += best_alpha * direction;
    if (blocking >= 0 && best_alpha < (linear_direction ? kInfinity : 1.0) - 1e-15) {
      working.push_back(blocking);
    }
  }

  res.status = QpStatus::kStalled;
  res.z = z;
  return res;
}

// Detects rows active at z, keeping the stacked system full row rank.
inline std::vector<int> detect_active(const QpProblem& p, const Eigen::VectorXd& z,
                                      double act_tol) {
  std::vector<int> working;
  Eigen::MatrixXd aw = p.eq;
  int rank = matrix_rank(aw);
  for (int i = 0; i < p.num_in(); ++i) {
    const double resid = p.in_rhs(i) - p.in.row(i).dot(z);
    const double row_scale = std::max(1.0, p.in.row(i).lpNorm<Eigen::Infinity>());
    if (std::abs(resid) <= act_tol * row_scale) {
      Eigen::MatrixXd candidate(aw.rows() + 1, p.num_vars());
      if (aw.rows() > 0) candidate.topRows(aw.rows()) = aw;
      candidate.row(aw.rows()) = p.in.row(i);
      const int new_rank = matrix_rank(candidate);
      if (new_rank > rank) {
        working.push_back(i);
        aw = candidate;
        rank = new_rank;
      }
    }
  }
  return working;
}

// Phase 1: minimize total infeasibility with artificials; always starts
// feasible by construction.
inline bool find_feasible_point(const QpProblem& p, const QpOptions& opt, Eigen::VectorXd* out) {
  const int n = p.num_vars();
  const int me = p.num_eq();
  const int mi = p.num_in();

  // Try the origin first: dispatch problems almost always admit x = 0.
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const double rhs_scale =
      std::max({1.0, me > 0 ? p.eq_rhs.lpNorm<Eigen::Infinity>() : 0.0,
                mi > 0 ? p.in_rhs.lpNorm<Eigen::Infinity>() : 0.0});
  bool origin_ok = true;
  if (me > 0 && p.eq_rhs.lpNorm<Eigen::Infinity>() > opt.feas_tol * rhs_scale) origin_ok = false;
  if (origin_ok && mi > 0 && (-p.in_rhs.array()).maxCoeff() > opt.feas_tol * rhs_scale)
    origin_ok = false;
  if (origin_ok) {
    *out = zero;
    return true;
  }

  const int nv = n + 2 * me + mi;  // [x, art+, art-, t]
  QpProblem phase1;
  phase1.Q = Eigen::MatrixXd::Zero(nv, nv);
  phase1.c = Eigen::VectorXd::Zero(nv);
  phase1.c.segment(n, 2 * me + mi).setOnes();

  phase1.eq = Eigen::MatrixXd::Zero(me, nv);
  phase1.eq_rhs = p.eq_rhs;
  if (me > 0) {
    phase1.eq.leftCols(n) = p.eq;
    phase1.eq.block(0, n, me, me) = Eigen::MatrixXd::Identity(me, me);
    phase1.eq.block(0, n + me, me, me) = -Eigen::MatrixXd::Identity(me, me);
  }

  phase1.in = Eigen::MatrixXd::Zero(mi + 2 * me + mi, nv);
  phase1.in_rhs = Eigen::VectorXd::Zero(mi + 2 * me + mi);
  if (mi > 0) {
    phase1.in.block(0, 0, mi, n) = p.in;
    phase1.in.block(0, n + 2 * me, mi, mi) = -Eigen::MatrixXd::Identity(mi, mi);
    phase1.in_rhs.head(mi) = p.in_rhs;
  }
  phase1.in.block(mi, n, 2 * me + mi, 2 * me + mi) =
      -Eigen::MatrixXd::Identity(2 * me + mi, 2 * me + mi);

  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(nv);
  for (int i = 0; i < me; ++i) {
    const double r = p.eq_rhs(i);
    z0(n + i) = std::max(r, 0.0);
    z0(n + me + i) = std::max(-r, 0.0);
  }
  for (int i = 0; i < mi; ++i) {
    z0(n + 2 * me + i) = std::max(-p.in_rhs(i), 0.0);
  }

  QpOptions o1 = opt;
  o1.min_norm_tie_break = false;
  ActiveSetResult r1 = active_set_solve(phase1, z0, detect_active(phase1, z0, opt.feas_tol), o1);
  if (r1.status != QpStatus::kOptimal) return false;
  const double infeasibility = phase1.c.dot(r1.z);
  if (infeasibility > 1e3 * opt.feas_tol * rhs_scale) return false;
  *out = r1.z.head(n);
  return true;
}

}  // namespace qp_detail

inline QpSolution solve_qp(const QpProblem& p, const QpOptions& opt = {}) {
  using namespace qp_detail;
  const int n = p.num_vars();
  QpSolution sol;
  sol.eq_shadow = Eigen::VectorXd::Zero(p.num_eq());
  sol.in_shadow = Eigen::VectorXd::Zero(p.num_in());

  Eigen::VectorXd z0;
  if (!find_feasible_point(p, opt, &z0)) {
    sol.status = QpStatus::kInfeasible;
    sol.objective = kInfinity;
    return sol;
  }

  ActiveSetResult main = active_set_solve(p, z0, detect_active(p, z0, opt.feas_tol), opt);
  sol.iterations = main.iterations;
  if (main.status == QpStatus::kUnbounded) {
    sol.status = QpStatus::kUnbounded;
    sol.objective = -kInfinity;
    return sol;
  }
  if (main.status != QpStatus::kOptimal) {
    sol.status = QpStatus::kStalled;
    return sol;
  }

  Eigen::VectorXd z = main.z;

  // Shadow prices from the working-set multipliers: dJ/d(rhs) = -nu.
  for (int i = 0; i < p.num_eq(); ++i) sol.eq_shadow(i) = -main.multipliers(i);
  for (int k = 0; k < static_cast<int>(main.working.size()); ++k) {
    const double shadow = -main.multipliers(p.num_eq() + k);
    sol.in_shadow(main.working[k]) = std::min(shadow, 0.0);
  }

  // Degeneracy: more active rows than their rank leaves the multipliers
  // non-unique; callers surface this rather than trusting one vertex dual.
  {
    std::vector<int> act;
    for (int i = 0; i < p.num_in(); ++i) {
      const double resid = p.in_rhs(i) - p.in.row(i).dot(z);
      const double row_scale = std::max(1.0, p.in.row(i).lpNorm<Eigen::Infinity>());
      if (std::abs(resid) <= 10 * opt.feas_tol * row_scale) act.push_back(i);
    }
    sol.active = act;
    Eigen::MatrixXd all_active(p.num_eq() + act.size(), n);
    if (p.num_eq() > 0) all_active.topRows(p.num_eq()) = p.eq;
    for (int k = 0; k < static_cast<int>(act.size()); ++k)
      all_active.row(p.num_eq() + k) = p.in.row(act[k]);
    sol.degenerate_duals = matrix_rank(all_active) < all_active.rows();
  }

  // Tie-break pass: minimize a weighted norm over the optimal set, which is
  // the feasible set intersected with {Qz = Qz*, c'z = c'z*}.
  bool unique_already = false;
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.Q);
    unique_already = es.eigenvalues().minCoeff() > 1e-9 * std::max(1.0, es.eigenvalues().maxCoeff());
  }
  if (opt.min_norm_tie_break && !unique_already && n > 0) {
    QpProblem tie;
    tie.Q = Eigen::MatrixXd::Identity(n, n);
    if (opt.tie_break_weights.size() == n) {
      tie.Q = opt.tie_break_weights.asDiagonal();
    }
    tie.c = Eigen::VectorXd::Zero(n);
    tie.eq.resize(p.num_eq() + n + 1, n);
    tie.eq_rhs.resize(p.num_eq() + n + 1);
    if (p.num_eq() > 0) {
      tie.eq.topRows(p.num_eq()) = p.eq;
      tie.eq_rhs.head(p.num_eq()) = p.eq_rhs;
    }
    tie.eq.block(p.num_eq(), 0, n, n) = p.Q;
    tie.eq_rhs.segment(p.num_eq(), n) = p.Q * z;
    tie.eq.row(p.num_eq() + n) = p.c.transpose();
    tie.eq_rhs(p.num_eq() + n) = p.c.dot(z);
    tie.in = p.in;
    tie.in_rhs = p.in_rhs;

    QpOptions ot = opt;
    ot.min_norm_tie_break = false;
    ActiveSetResult tb = active_set_solve(tie, z, detect_active(tie, z, opt.feas_tol), ot);
    if (tb.status == QpStatus::kOptimal) z = tb.z;
  }

  sol.status = QpStatus::kOptimal;
  sol.z = z;
  sol.objective = p.objective_at(z);
  return sol;
}

}  // namespace coremech

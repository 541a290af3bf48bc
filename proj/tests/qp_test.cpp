#include "coremech/qp.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace coremech;

namespace {

QpProblem make_problem(int n) {
  QpProblem p;
  p.Q = Eigen::MatrixXd::Zero(n, n);
  p.c = Eigen::VectorXd::Zero(n);
  p.eq.resize(0, n);
  p.eq_rhs.resize(0);
  p.in.resize(0, n);
  p.in_rhs.resize(0);
  return p;
}

void add_ineq(QpProblem* p, const Eigen::VectorXd& row, double rhs) {
  p->in.conservativeResize(p->in.rows() + 1, p->num_vars());
  p->in.row(p->in.rows() - 1) = row.transpose();
  p->in_rhs.conservativeResize(p->in_rhs.size() + 1);
  p->in_rhs(p->in_rhs.size() - 1) = rhs;
}

void add_eq(QpProblem* p, const Eigen::VectorXd& row, double rhs) {
  p->eq.conservativeResize(p->eq.rows() + 1, p->num_vars());
  p->eq.row(p->eq.rows() - 1) = row.transpose();
  p->eq_rhs.conservativeResize(p->eq_rhs.size() + 1);
  p->eq_rhs(p->eq_rhs.size() - 1) = rhs;
}

void add_box(QpProblem* p, int var, double lo, double hi) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(p->num_vars());
  e(var) = 1.0;
  add_ineq(p, e, hi);
  add_ineq(p, -e, -lo);
}

}  // namespace

TEST(QpSolver, EqualityConstrainedQuadratic) {
  // min x^2 + y^2 s.t. x + y = 2 -> (1,1), J = 2, dJ/drhs = 2.
  QpProblem p = make_problem(2);
  p.Q = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  add_eq(&p, Eigen::Vector2d(1, 1), 2.0);

  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 1.0, 1e-10);
  EXPECT_NEAR(s.z(1), 1.0, 1e-10);
  EXPECT_NEAR(s.objective, 2.0, 1e-10);
  EXPECT_NEAR(s.eq_shadow(0), 2.0, 1e-8);
}

TEST(QpSolver, LpVertexWithShadowPrices) {
  // min -x - 2y on the unit box -> (1,1), shadows -1 and -2 on the caps.
  QpProblem p = make_problem(2);
  p.c = Eigen::Vector2d(-1, -2);
  add_box(&p, 0, 0.0, 1.0);
  add_box(&p, 1, 0.0, 1.0);

  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 1.0, 1e-10);
  EXPECT_NEAR(s.z(1), 1.0, 1e-10);
  EXPECT_NEAR(s.objective, -3.0, 1e-10);
  EXPECT_NEAR(s.in_shadow(0), -1.0, 1e-8);  // x <= 1
  EXPECT_NEAR(s.in_shadow(2), -2.0, 1e-8);  // y <= 1
}

TEST(QpSolver, BalanceLpMatchesHandSolution) {
  // min x1 + 3 x2 s.t. x1 + x2 = 0, x1 in [0,1], x2 in [-1,0].
  QpProblem p = make_problem(2);
  p.c = Eigen::Vector2d(1, 3);
  add_eq(&p, Eigen::Vector2d(1, 1), 0.0);
  add_box(&p, 0, 0.0, 1.0);
  add_box(&p, 1, -1.0, 0.0);

  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.objective, -2.0, 1e-10);
  EXPECT_NEAR(s.z(0), 1.0, 1e-10);
  EXPECT_NEAR(s.z(1), -1.0, 1e-10);
  EXPECT_NEAR(s.eq_shadow(0), 3.0, 1e-8);
}

TEST(QpSolver, InfeasibleReported) {
  QpProblem p = make_problem(1);
  add_ineq(&p, Eigen::VectorXd::Ones(1), 0.0);    // x <= 0
  add_ineq(&p, -Eigen::VectorXd::Ones(1), -1.0);  // x >= 1
  QpSolution s = solve_qp(p);
  EXPECT_EQ(s.status, QpStatus::kInfeasible);
  EXPECT_TRUE(std::isinf(s.objective));
}

TEST(QpSolver, UnboundedReported) {
  QpProblem p = make_problem(1);
  p.c(0) = -1.0;
  add_ineq(&p, -Eigen::VectorXd::Ones(1), 0.0);  // x >= 0
  QpSolution s = solve_qp(p);
  EXPECT_EQ(s.status, QpStatus::kUnbounded);
}

TEST(QpSolver, PhaseOneFindsInteriorStart) {
  // min x s.t. x >= 5: the origin is infeasible, phase 1 must recover.
  QpProblem p = make_problem(1);
  p.c(0) = 1.0;
  add_ineq(&p, -Eigen::VectorXd::Ones(1), -5.0);
  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 5.0, 1e-9);
  EXPECT_NEAR(s.objective, 5.0, 1e-9);
}

TEST(QpSolver, MinNormTieBreakOnOptimalFace) {
  // min x1 + x2 s.t. x1 + x2 >= 1, x >= 0: the whole face is optimal, the
  // tie-break must return its least-norm point (0.5, 0.5).
  QpProblem p = make_problem(2);
  p.c = Eigen::Vector2d(1, 1);
  add_ineq(&p, Eigen::Vector2d(-1, -1), -1.0);
  add_box(&p, 0, 0.0, 10.0);
  add_box(&p, 1, 0.0, 10.0);

  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-9);
  EXPECT_NEAR(s.z(0), 0.5, 1e-8);
  EXPECT_NEAR(s.z(1), 0.5, 1e-8);
}

TEST(QpSolver, ActiveBoundQuadratic) {
  // min x^2 - 6x s.t. x <= 1 -> x = 1, shadow = f'(1) = -4.
  QpProblem p = make_problem(1);
  p.Q(0, 0) = 2.0;
  p.c(0) = -6.0;
  add_ineq(&p, Eigen::VectorXd::Ones(1), 1.0);
  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 1.0, 1e-10);
  EXPECT_NEAR(s.in_shadow(0), -4.0, 1e-8);
}

TEST(QpSolver, SemidefiniteMixedCurvature) {
  // One curved and one flat coordinate: min x^2 + y s.t. y >= -3, x >= -5.
  QpProblem p = make_problem(2);
  p.Q(0, 0) = 2.0;
  p.c(1) = 1.0;
  add_ineq(&p, Eigen::Vector2d(0, -1), 3.0);
  add_ineq(&p, Eigen::Vector2d(-1, 0), 5.0);
  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 0.0, 1e-9);
  EXPECT_NEAR(s.z(1), -3.0, 1e-9);
  EXPECT_NEAR(s.objective, -3.0, 1e-9);
}

TEST(QpSolver, RandomBoxProblemsMatchGridSearch) {
  std::mt19937_64 rng(20240801);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> lin(-5.0, 5.0);

  for (int trial = 0; trial < 12; ++trial) {
    QpProblem p = make_problem(2);
    Eigen::MatrixXd a(2, 2);
    a << coef(rng), coef(rng), coef(rng), coef(rng);
    p.Q = a.transpose() * a;  // PSD, possibly near-singular
    p.c = Eigen::Vector2d(lin(rng), lin(rng));
    add_box(&p, 0, -2.0, 2.0);
    add_box(&p, 1, -2.0, 2.0);

    QpSolution s = solve_qp(p);
    ASSERT_EQ(s.status, QpStatus::kOptimal);

    double best = kInfinity;
    const double h = 0.004;
    for (double x = -2.0; x <= 2.0 + 1e-12; x += h) {
      for (double y = -2.0; y <= 2.0 + 1e-12; y += h) {
        Eigen::Vector2d z(x, y);
        best = std::min(best, p.objective_at(z));
      }
    }
    EXPECT_LE(s.objective, best + 1e-9) << "trial " << trial;
    EXPECT_GE(s.objective, best - 0.05) << "trial " << trial;
  }
}

TEST(QpSolver, ShadowPriceMatchesFiniteDifference) {
  // Strictly convex with one equality and one active inequality.
  QpProblem p = make_problem(3);
  p.Q = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  p.c = Eigen::Vector3d(1.0, -2.0, 0.5);
  add_eq(&p, Eigen::Vector3d(1, 1, 1), 1.5);
  add_ineq(&p, Eigen::Vector3d(1, 0, 0), 0.2);

  QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::kOptimal);

  const double delta = 1e-5;
  QpProblem pp = p;
  pp.eq_rhs(0) += delta;
  QpSolution sp = solve_qp(pp);
  ASSERT_EQ(sp.status, QpStatus::kOptimal);
  EXPECT_NEAR((sp.objective - s.objective) / delta, s.eq_shadow(0), 1e-4);

  QpProblem pi = p;
  pi.in_rhs(0) += delta;
  QpSolution si = solve_qp(pi);
  ASSERT_EQ(si.status, QpStatus::kOptimal);
  EXPECT_NEAR((si.objective - s.objective) / delta, s.in_shadow(0), 1e-4);
}

TEST(QpSolver, DeterministicResults) {
  QpProblem p = make_problem(3);
  p.Q = Eigen::MatrixXd::Zero(3, 3);
  p.Q(0, 0) = 2.0;
  p.c = Eigen::Vector3d(0.0, 1.0, 1.0);
  add_eq(&p, Eigen::Vector3d(1, 1, 1), 1.0);
  add_box(&p, 0, -4.0, 4.0);
  add_box(&p, 1, -4.0, 4.0);
  add_box(&p, 2, -4.0, 4.0);

  QpSolution a = solve_qp(p);
  QpSolution b = solve_qp(p);
  ASSERT_EQ(a.status, QpStatus::kOptimal);
  ASSERT_EQ(b.status, QpStatus::kOptimal);
  EXPECT_EQ(0, std::memcmp(a.z.data(), b.z.data(), sizeof(double) * 3));
  EXPECT_EQ(a.objective, b.objective);
}

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coremech/errors.hpp"
#include "coremech/numerics.hpp"

namespace coremech {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x, double tol = kTol) const { return x >= lo - tol && x <= hi + tol; }
  double width() const { return hi - lo; }
};

// a x^2 + b x on a closed interval containing zero ($/MW^2, $/MW).
struct QuadraticCurve {
  double a = 0.0;
  double b = 0.0;
  Interval domain;
};

// Ordered (quantity, cumulative cost) pairs; first breakpoint is (0, 0) and
// segment slopes are nondecreasing.
struct PwlBreakpoint {
  double quantity = 0.0;
  double cost = 0.0;
};

struct PwlCurve {
  std::vector<PwlBreakpoint> points;
};

// Exclusive quantity/price pairs; at most one offer is selectable, and the
// empty selection (zero quantity, zero cost) is always admissible.
struct DiscreteOffer {
  Eigen::VectorXd quantity;
  double price = 0.0;
};

struct DiscreteOffers {
  std::vector<DiscreteOffer> offers;
};

struct AffineSupport {
  double slope = 0.0;
  double intercept = 0.0;
};

// A reported cost function over admissible quantities. The activation offset
// is a constant added whenever the quantity is nonzero; it keeps curve(0) = 0
// and is used for deviation bids and competitive-equilibrium price functions.
struct BidCurve {
  std::variant<QuadraticCurve, PwlCurve, DiscreteOffers> shape;
  double activation_offset = 0.0;

  bool is_quadratic() const { return std::holds_alternative<QuadraticCurve>(shape); }
  bool is_pwl() const { return std::holds_alternative<PwlCurve>(shape); }
  bool is_discrete() const { return std::holds_alternative<DiscreteOffers>(shape); }

  const QuadraticCurve& quadratic() const { return std::get<QuadraticCurve>(shape); }
  const PwlCurve& pwl() const { return std::get<PwlCurve>(shape); }
  const DiscreteOffers& discrete() const { return std::get<DiscreteOffers>(shape); }

  int dimension() const {
    if (is_discrete()) {
      const auto& d = discrete();
      return d.offers.empty() ? 1 : static_cast<int>(d.offers.front().quantity.size());
    }
    return 1;
  }

  bool convex() const {
    if (is_quadratic()) return quadratic().a >= -kTol;
    if (is_pwl()) return true;  // slopes validated nondecreasing
    return false;
  }
};

inline BidCurve make_quadratic(double a, double b, double lo, double hi) {
  return BidCurve{QuadraticCurve{a, b, {lo, hi}}, 0.0};
}

inline BidCurve make_pwl(std::vector<PwlBreakpoint> pts) {
  return BidCurve{PwlCurve{std::move(pts)}, 0.0};
}

// Support lines of the convex piecewise-linear curve, one per segment.
inline std::vector<AffineSupport> pwl_supports(const PwlCurve& c) {
  std::vector<AffineSupport> out;
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    const auto& p0 = c.points[i];
    const auto& p1 = c.points[i + 1];
    const double slope = (p1.cost - p0.cost) / (p1.quantity - p0.quantity);
    out.push_back({slope, p0.cost - slope * p0.quantity});
  }
  return out;
}

inline bool curve_admits(const BidCurve& curve, const Eigen::VectorXd& x, double tol = kTol) {
  if (curve.is_discrete()) {
    if (x.lpNorm<Eigen::Infinity>() <= tol) return true;
    for (const auto& offer : curve.discrete().offers) {
      if (offer.quantity.size() == x.size() &&
          (offer.quantity - x).lpNorm<Eigen::Infinity>() <= tol)
        return true;
    }
    return false;
  }
  if (x.size() != 1) return false;
  if (curve.is_quadratic()) return curve.quadratic().domain.contains(x(0), tol);
  const auto& pts = curve.pwl().points;
  return x(0) >= pts.front().quantity - tol && x(0) <= pts.back().quantity + tol;
}

// Exact cost of the curve at an admissible quantity; zero maps to zero.
inline double evaluate_bid(const BidCurve& curve, const Eigen::VectorXd& x) {
  if (!curve_admits(curve, x)) {
    throw Error(ErrorCode::kOutOfDomain, "quantity outside the curve's admissible set");
  }
  if (x.lpNorm<Eigen::Infinity>() <= kTol) return 0.0;

  double base = 0.0;
  if (curve.is_quadratic()) {
    const auto& q = curve.quadratic();
    base = q.a * x(0) * x(0) + q.b * x(0);
  } else if (curve.is_pwl()) {
    const auto& pts = curve.pwl().points;
    const double v = std::clamp(x(0), pts.front().quantity, pts.back().quantity);
    base = pts.back().cost;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (v <= pts[i + 1].quantity + kTol) {
        const double w = pts[i + 1].quantity - pts[i].quantity;
        const double f = w <= 0.0 ? 0.0 : (v - pts[i].quantity) / w;
        base = pts[i].cost + f * (pts[i + 1].cost - pts[i].cost);
        break;
      }
    }
  } else {
    for (const auto& offer : curve.discrete().offers) {
      if (offer.quantity.size() == x.size() &&
          (offer.quantity - x).lpNorm<Eigen::Infinity>() <= kTol) {
        base = offer.price;
        break;
      }
    }
  }
  return base + curve.activation_offset;
}

inline double evaluate_bid(const BidCurve& curve, double x) {
  Eigen::VectorXd v(1);
  v(0) = x;
  return evaluate_bid(curve, v);
}

// Scalar admissible range for continuous curves.
inline Interval curve_range(const BidCurve& curve) {
  if (curve.is_quadratic()) return curve.quadratic().domain;
  if (curve.is_pwl()) {
    const auto& pts = curve.pwl().points;
    return {pts.front().quantity, pts.back().quantity};
  }
  throw Error(ErrorCode::kInvalidArgument, "discrete offers have no continuous range");
}

// Structural checks for a single curve; returns human-readable problems.
inline std::vector<std::string> curve_violations(const BidCurve& curve) {
  std::vector<std::string> out;
  if (curve.is_quadratic()) {
    const auto& q = curve.quadratic();
    if (!(q.domain.lo <= q.domain.hi)) out.push_back("quadratic domain is empty");
    if (!q.domain.contains(0.0)) out.push_back("quadratic domain must contain 0");
    if (!is_finite(q.a) || !is_finite(q.b)) out.push_back("quadratic coefficients must be finite");
  } else if (curve.is_pwl()) {
    const auto& pts = curve.pwl().points;
    if (pts.empty()) {
      out.push_back("piecewise-linear curve needs at least one breakpoint");
      return out;
    }
    if (std::abs(pts.front().quantity) > kTol || std::abs(pts.front().cost) > kTol) {
      out.push_back("first breakpoint must be (0, 0)");
    }
    double prev_slope = -kInfinity;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (pts[i + 1].quantity <= pts[i].quantity + kTol) {
        out.push_back("breakpoint quantities must be strictly increasing");
        break;
      }
      const double slope =
          (pts[i + 1].cost - pts[i].cost) / (pts[i + 1].quantity - pts[i].quantity);
      if (slope < prev_slope - 1e-9) {
        out.push_back("segment slopes must be nondecreasing (convexity)");
        break;
      }
      prev_slope = slope;
    }
  } else {
    const auto& offers = curve.discrete().offers;
    int dim = -1;
    for (const auto& offer : offers) {
      if (!is_finite(offer.price)) out.push_back("offer prices must be finite");
      if (dim < 0) dim = static_cast<int>(offer.quantity.size());
      if (offer.quantity.size() != dim) out.push_back("offer quantity dimensions must agree");
      if (offer.quantity.lpNorm<Eigen::Infinity>() <= kTol) {
        out.push_back("the zero quantity is implicit and must not be listed as an offer");
      }
    }
  }
  return out;
}

}  // namespace coremech

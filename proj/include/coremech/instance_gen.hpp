#pragma once

#include <random>

#include "coremech/market.hpp"

namespace coremech {

enum class RandomStructure {
  kBalanceExchange,   // sellers and buyers on one balance row
  kOneSidedDemand,    // sellers covering a fixed procurement
  kNetworkedExchange  // small line network with limits
};

struct RandomMarketOptions {
  int num_bidders = 4;
  RandomStructure structure = RandomStructure::kBalanceExchange;
};

// Deterministic market sampler for the property suites: quadratic curves with
// a in [0.1, 5] and |b| in [0, 20], box domains inside [-10, 10]. Buyers get
// high marginal values and sellers low marginal costs so that trade happens
// in most draws. Every instance is feasible, also after removing any single
// bidder.
inline MarketInstance random_market(std::uint64_t seed, const RandomMarketOptions& options = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> curvature(0.1, 5.0);
  std::uniform_real_distribution<double> seller_slope(0.0, 8.0);
  std::uniform_real_distribution<double> buyer_slope(12.0, 20.0);
  std::uniform_real_distribution<double> cap(1.0, 10.0);

  MarketInstance inst;
  const int nl = std::max(2, options.num_bidders);

  auto add_balance = [&](int count) {
    LinearConstraint balance;
    balance.name = "balance";
    balance.sense = Sense::kEq;
    balance.rhs = 0.0;
    for (int l = 0; l < count; ++l) {
      balance.terms.push_back({VarRef{VarRef::Kind::kBidder, l, 0}, 1.0});
    }
    inst.constraints = {balance};
  };

  switch (options.structure) {
    case RandomStructure::kBalanceExchange: {
      inst.kind = MarketKind::kExchange;
      const int sellers = (nl + 1) / 2;
      for (int l = 0; l < nl; ++l) {
        const bool seller = l < sellers;
        const double bound = cap(rng);
        const double a = curvature(rng);
        const double b = seller ? seller_slope(rng) : buyer_slope(rng);
        inst.bidders.push_back({"b" + std::to_string(l), std::nullopt,
                                seller ? make_quadratic(a, b, 0.0, bound)
                                       : make_quadratic(a, b, -bound, 0.0),
                                std::nullopt});
      }
      add_balance(nl);
      break;
    }
    case RandomStructure::kOneSidedDemand: {
      inst.kind = MarketKind::kOneSided;
      double total_cap = 0.0;
      double min_cap = kInfinity;
      for (int l = 0; l < nl; ++l) {
        const double bound = cap(rng);
        total_cap += bound;
        min_cap = std::min(min_cap, bound);
        inst.bidders.push_back({"s" + std::to_string(l), std::nullopt,
                                make_quadratic(curvature(rng), seller_slope(rng), 0.0, bound),
                                std::nullopt});
      }
      LinearConstraint demand;
      demand.name = "demand";
      demand.sense = Sense::kEq;
      // Coverable even after dropping the largest bidder.
      demand.rhs = 0.45 * (total_cap - min_cap);
      for (int l = 0; l < nl; ++l) {
        demand.terms.push_back({VarRef{VarRef::Kind::kBidder, l, 0}, 1.0});
      }
      inst.constraints = {demand};
      break;
    }
    case RandomStructure::kNetworkedExchange: {
      inst.kind = MarketKind::kExchange;
      std::uniform_real_distribution<double> limit(2.0, 8.0);
      const int nodes = 3;
      Network net;
      net.nodes = {"n0", "n1", "n2"};
      net.reference = 0;
      net.lines = {{0, 1, 1.0, limit(rng)}, {1, 2, 1.0, limit(rng)}};
      inst.network = net;
      (void)nodes;
      for (int l = 0; l < nl; ++l) {
        const bool buyer = l == nl - 1;  // demand sits at the far end of the line
        const double bound = cap(rng);
        const double a = curvature(rng);
        const double b = buyer ? buyer_slope(rng) : seller_slope(rng);
        inst.bidders.push_back({"b" + std::to_string(l),
                                buyer ? "n2" : "n" + std::to_string(l % 2),
                                buyer ? make_quadratic(a, b, -bound, 0.0)
                                      : make_quadratic(a, b, 0.0, bound),
                                std::nullopt});
      }
      break;
    }
  }
  return inst;
}

}  // namespace coremech

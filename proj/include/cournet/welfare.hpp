#pragma once

// Prices, costs, utilities, Walrasian welfare and the exact potential.
// All pure functions of (game, x, y); nothing is cached, so the potential
// identities can be tested without trusting intermediate state.

#include <Eigen/Dense>
#include <string>

#include "cournet/model.hpp"

namespace cournet {

inline double price(const Game& game, int j, double zj) {
  if (j < 0 || j >= game.n_markets()) throw DimensionMismatch("price: market index out of range");
  return game.demands[j].price(zj);
}

inline Vec prices(const Game& game, const Vec& z) {
  if (z.size() != game.n_markets()) throw DimensionMismatch("prices: z has wrong length");
  Vec p(z.size());
  for (int j = 0; j < z.size(); ++j) p[j] = game.demands[j].price(z[j]);
  return p;
}

inline double producer_cost(const Game& game, int i, const Vec& xi) {
  if (i < 0 || i >= game.n_producers()) throw DimensionMismatch("producer_cost: producer index out of range");
  if (xi.size() != game.n_markets()) throw DimensionMismatch("producer_cost: xi has wrong length");
  for (int j = 0; j < xi.size(); ++j) {
    if (xi[j] < 0.0) throw SupportViolation("producer_cost: negative quantity");
    if (xi[j] > 0.0 && !game.network.has_access(i, j))
      throw SupportViolation("producer_cost: quantity on inaccessible market " + std::to_string(j));
  }
  return game.costs[i].value(xi);
}

// Consumer surplus evaluated in closed form (valid for negative z as well)
// minus total production cost.
inline double walrasian_welfare(const Game& game, const Mat& x, const Vec& z) {
  detail::check_production(game.network, x);
  if (z.size() != game.n_markets()) throw DimensionMismatch("walrasian_welfare: z has wrong length");
  double w = 0.0;
  for (int j = 0; j < game.n_markets(); ++j)
    w += game.demands[j].alpha * z[j] - 0.5 * game.demands[j].beta * z[j] * z[j];
  for (int i = 0; i < game.n_producers(); ++i) w -= game.costs[i].value(x.row(i).transpose());
  return w;
}

inline Vec welfare_gradient_z(const Game& game, const Mat& /*x*/, const Vec& z) {
  if (game.welfare_kind != WelfareKind::Walrasian)
    throw UnsupportedWelfare("gradient only available for the Walrasian objective");
  return prices(game, z);
}

inline double market_maker_utility(const Game& game, const Mat& x, const Vec& y) {
  return walrasian_welfare(game, x, net_consumption(game, x, y));
}

inline double producer_utility(const Game& game, int i, const Mat& x, const Vec& y) {
  if (i < 0 || i >= game.n_producers()) throw DimensionMismatch("producer_utility: producer index out of range");
  Vec z = net_consumption(game, x, y);
  double u = 0.0;
  for (int j = 0; j < game.n_markets(); ++j)
    if (game.network.has_access(i, j)) u += x(i, j) * game.demands[j].price(z[j]);
  return u - game.costs[i].value(x.row(i).transpose());
}

// Exact potential: welfare minus the per-quantity correction sum_ij beta_j/2
// x_ij^2. Unilateral deviations change it by exactly the deviating player's
// utility change, so its maximizers over the joint box are the equilibria.
inline double potential(const Game& game, const Mat& x, const Vec& y) {
  if (game.welfare_kind != WelfareKind::Walrasian)
    throw UnsupportedWelfare("potential defined only for the Walrasian objective");
  double p = market_maker_utility(game, x, y);
  for (int i = 0; i < game.n_producers(); ++i)
    for (int j = 0; j < game.n_markets(); ++j)
      if (game.network.has_access(i, j)) p -= 0.5 * game.demands[j].beta * x(i, j) * x(i, j);
  return p;
}

inline double producer_utility(const Game& game, int i, const ProductionProfile& x, const FlowProfile& y) {
  return producer_utility(game, i, x.x(), y.y());
}
inline double market_maker_utility(const Game& game, const ProductionProfile& x, const FlowProfile& y) {
  return market_maker_utility(game, x.x(), y.y());
}
inline double potential(const Game& game, const ProductionProfile& x, const FlowProfile& y) {
  return potential(game, x.x(), y.y());
}

}  // namespace cournet

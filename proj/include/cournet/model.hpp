#pragma once

// Core model types: a capacitated multi-market network, quadratic producer
// costs, affine inverse demand, and the profiles (productions, flows) the
// players choose. Everything is a plain value type; validate_game checks the
// full rule set once and the result is treated as immutable afterwards.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cournet/errors.hpp"

namespace cournet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One directed transport link: tail -> head, with a hard capacity.
// Parallel and antiparallel links are kept as distinct entries; capacities may
// differ per direction.
struct Link {
  std::string id;
  int tail = -1;
  int head = -1;
  double capacity = 0.0;
};

struct MarketNetwork {
  int n_producers = 0;
  int n_markets = 0;
  Mat access;               // n x m, entries 0/1; row i = markets producer i can sell on
  std::vector<Link> links;  // l entries
  std::vector<std::string> producer_ids;  // optional names (size n or empty)
  std::vector<std::string> market_ids;    // optional names (size m or empty)

  int n_links() const { return static_cast<int>(links.size()); }

  bool has_access(int i, int j) const { return access(i, j) != 0.0; }

  // Market-link incidence: B(j,k) = +1 if link k enters market j, -1 if it
  // leaves it. Derived on demand; (tails, heads) is the single source of truth.
  Mat incidence() const {
    Mat b = Mat::Zero(n_markets, n_links());
    for (int k = 0; k < n_links(); ++k) {
      b(links[k].head, k) += 1.0;
      b(links[k].tail, k) -= 1.0;
    }
    return b;
  }

  Vec capacities() const {
    Vec c(n_links());
    for (int k = 0; k < n_links(); ++k) c[k] = links[k].capacity;
    return c;
  }

  std::string producer_name(int i) const {
    return producer_ids.empty() ? "p" + std::to_string(i) : producer_ids[i];
  }
  std::string market_name(int j) const {
    return market_ids.empty() ? "m" + std::to_string(j) : market_ids[j];
  }
};

// cost_i(x_i) = x_i' Theta x_i + gamma' x_i, Theta symmetric PSD, gamma >= 0.
struct QuadraticCost {
  Mat theta;  // m x m
  Vec gamma;  // m

  double value(const Vec& xi) const { return xi.dot(theta * xi) + gamma.dot(xi); }
  Vec gradient(const Vec& xi) const { return 2.0 * (theta * xi) + gamma; }
};

// p_j(z) = alpha - beta * z, defined for all real z (consumption may go
// negative when a market only re-exports).
struct AffineDemand {
  double alpha = 0.0;
  double beta = 0.0;

  double price(double z) const { return alpha - beta * z; }
  // Consumption at which the price hits zero.
  double zero_price_consumption() const { return alpha / beta; }
};

enum class WelfareKind { Walrasian };

struct Game {
  MarketNetwork network;
  std::vector<QuadraticCost> costs;    // size n
  std::vector<AffineDemand> demands;   // size m
  WelfareKind welfare_kind = WelfareKind::Walrasian;

  int n_producers() const { return network.n_producers; }
  int n_markets() const { return network.n_markets; }
  int n_links() const { return network.n_links(); }

  Vec alpha() const {
    Vec a(n_markets());
    for (int j = 0; j < n_markets(); ++j) a[j] = demands[j].alpha;
    return a;
  }
  Vec beta() const {
    Vec b(n_markets());
    for (int j = 0; j < n_markets(); ++j) b[j] = demands[j].beta;
    return b;
  }
};

// --- profiles ---------------------------------------------------------------

namespace detail {

// Round to a fixed number of significant digits; machine-readable output
// files store numbers this way so reruns compare byte for byte.
inline double round_sig(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  double mag = std::floor(std::log10(std::abs(v)));
  double factor = std::pow(10.0, digits - 1 - mag);
  return std::round(v * factor) / factor;
}

inline void check_production(const MarketNetwork& net, const Mat& x) {
  if (x.rows() != net.n_producers || x.cols() != net.n_markets)
    throw DimensionMismatch("production profile is " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + ", expected " + std::to_string(net.n_producers) +
                            "x" + std::to_string(net.n_markets));
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) {
      if (x(i, j) < 0.0)
        throw SupportViolation("negative quantity x(" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (x(i, j) > 0.0 && !net.has_access(i, j))
        throw SupportViolation("x(" + std::to_string(i) + "," + std::to_string(j) +
                               ") > 0 but producer has no access there");
    }
}

inline void check_flow(const MarketNetwork& net, const Vec& y) {
  if (y.size() != net.n_links())
    throw DimensionMismatch("flow profile has " + std::to_string(y.size()) + " entries, expected " +
                            std::to_string(net.n_links()));
  for (int k = 0; k < y.size(); ++k) {
    if (y[k] < 0.0 || y[k] > net.links[k].capacity)
      throw SupportViolation("flow y(" + std::to_string(k) + ") = " + std::to_string(y[k]) +
                             " outside [0, " + std::to_string(net.links[k].capacity) + "]");
  }
}

}  // namespace detail

// Nonnegative n x m production matrix supported on the access set.
class ProductionProfile {
 public:
  ProductionProfile(const MarketNetwork& net, Mat x) : x_(std::move(x)) { detail::check_production(net, x_); }
  const Mat& x() const { return x_; }
  Vec row(int i) const { return x_.row(i).transpose(); }

 private:
  Mat x_;
};

// Per-link flow within [0, capacity].
class FlowProfile {
 public:
  FlowProfile(const MarketNetwork& net, Vec y) : y_(std::move(y)) { detail::check_flow(net, y_); }
  const Vec& y() const { return y_; }

 private:
  Vec y_;
};

struct SolverStats {
  long iterations = 0;
  double final_pg_norm = 0.0;  // projected-gradient displacement norm at exit
  double wall_time_s = 0.0;
  int restarts = 1;
  double restart_x_spread = 0.0;     // max coordinate disagreement across restarts
  double restart_flow_spread = 0.0;  // same for net flows Bu across restarts
};

// A solved (or externally supplied) configuration plus everything derived
// from it. z and prices are always recomputed from (x, y), never trusted.
struct Outcome {
  Mat x;        // n x m production
  Vec y;        // l flows
  Vec z;        // m net consumption
  Vec prices;   // m
  double potential_value = 0.0;
  Vec producer_utilities;  // n
  double welfare_value = 0.0;
  SolverStats stats;
};

// --- operations -------------------------------------------------------------

// z = column sums of x plus net inflow By. Negative entries are legitimate:
// a market can re-export more than it produces locally.
inline Vec net_consumption(const Game& game, const Mat& x, const Vec& y) {
  detail::check_production(game.network, x);
  detail::check_flow(game.network, y);
  Vec z = x.colwise().sum().transpose();
  for (int k = 0; k < game.n_links(); ++k) {
    z[game.network.links[k].head] += y[k];
    z[game.network.links[k].tail] -= y[k];
  }
  return z;
}

inline Vec net_consumption(const Game& game, const ProductionProfile& x, const FlowProfile& y) {
  return net_consumption(game, x.x(), y.y());
}

// Quantity cap above which selling more on market j is never worth it for any
// producer: the zero-price consumption plus everything the links leaving j
// could carry away. Restricting the strategy box there loses no equilibria.
inline double dominance_bound(const Game& game, int i, int j) {
  if (i < 0 || i >= game.n_producers() || j < 0 || j >= game.n_markets())
    throw DimensionMismatch("dominance_bound index out of range");
  if (!game.network.has_access(i, j)) throw NoAccess(i, j);
  double bound = game.demands[j].zero_price_consumption();
  for (const Link& lk : game.network.links)
    if (lk.tail == j) bound += lk.capacity;
  return bound;
}

// Full validation pass. Collects every violation, then either returns the game
// (with cost matrices symmetrized against float-level parse asymmetry) or
// throws ValidationError carrying the complete list.
inline Game validate_game(Game game) {
  std::vector<Violation> vs;
  const MarketNetwork& net = game.network;
  const int n = net.n_producers, m = net.n_markets;

  if (n < 0 || m <= 0)
    vs.push_back({ViolationKind::DimensionMismatch, -1, -1, 0.0, "need at least one market"});
  if (net.access.rows() != n || net.access.cols() != m)
    vs.push_back({ViolationKind::DimensionMismatch, -1, -1, 0.0,
                  "access matrix is " + std::to_string(net.access.rows()) + "x" +
                      std::to_string(net.access.cols())});
  else
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double a = net.access(i, j);
        if (a != 0.0 && a != 1.0)
          vs.push_back({ViolationKind::BadAccessEntry, i, j, a, "access entries must be 0 or 1"});
      }
  if (!net.producer_ids.empty() && static_cast<int>(net.producer_ids.size()) != n)
    vs.push_back({ViolationKind::DimensionMismatch, -1, -1, 0.0, "producer id list size"});
  if (!net.market_ids.empty() && static_cast<int>(net.market_ids.size()) != m)
    vs.push_back({ViolationKind::DimensionMismatch, -1, -1, 0.0, "market id list size"});

  for (int k = 0; k < net.n_links(); ++k) {
    const Link& lk = net.links[k];
    if (lk.tail < 0 || lk.tail >= m || lk.head < 0 || lk.head >= m) {
      vs.push_back({ViolationKind::DimensionMismatch, k, -1, 0.0, "link endpoint out of range"});
      continue;
    }
    if (lk.tail == lk.head) vs.push_back({ViolationKind::SelfLoop, k, -1, 0.0, ""});
    if (lk.capacity < 0.0) vs.push_back({ViolationKind::NegativeCapacity, k, -1, lk.capacity, ""});
  }

  if (static_cast<int>(game.costs.size()) != n)
    vs.push_back({ViolationKind::DimensionMismatch, -1, -1, 0.0,
                  "expected " + std::to_string(n) + " cost entries, got " + std::to_string(game.costs.size())});
  else
    for (int i = 0; i < n; ++i) {
      QuadraticCost& c = game.costs[i];
      if (c.theta.rows() != m || c.theta.cols() != m || c.gamma.size() != m) {
        vs.push_back({ViolationKind::DimensionMismatch, i, -1, 0.0, "cost dimensions for producer " +
                      std::to_string(i)});
        continue;
      }
      double scale = 1.0 + c.theta.cwiseAbs().maxCoeff();
      double asym = (c.theta - c.theta.transpose()).cwiseAbs().maxCoeff();
      if (asym > 1e-6 * scale) {
        vs.push_back({ViolationKind::DimensionMismatch, i, -1, asym, "cost matrix not symmetric"});
        continue;
      }
      c.theta = 0.5 * (c.theta + c.theta.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Mat> es(c.theta, Eigen::EigenvaluesOnly);
      double min_eig = es.eigenvalues().minCoeff();
      // Tolerance keeps float-level wobble from rejecting a genuinely PSD matrix.
      if (min_eig < -1e-10 * scale)
        vs.push_back({ViolationKind::NonPSDCost, i, -1, min_eig, ""});
      for (int j = 0; j < m; ++j)
        if (c.gamma[j] < 0.0) vs.push_back({ViolationKind::NegativeGamma, i, j, c.gamma[j], ""});
    }

  if (static_cast<int>(game.demands.size()) != m)
    vs.push_back({ViolationKind::DimensionMismatch, -1, -1, 0.0,
                  "expected " + std::to_string(m) + " demand entries, got " + std::to_string(game.demands.size())});
  else
    for (int j = 0; j < m; ++j) {
      if (!(game.demands[j].beta > 0.0))
        vs.push_back({ViolationKind::NonPositiveSlope, -1, j, game.demands[j].beta, ""});
      if (!(game.demands[j].alpha > 0.0))
        vs.push_back({ViolationKind::NonPositiveIntercept, -1, j, game.demands[j].alpha, ""});
    }

  if (!vs.empty()) throw ValidationError(std::move(vs));
  return game;
}

}  // namespace cournet

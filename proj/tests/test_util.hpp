#pragma once

// Shared builders and oracles for the test suite. Closed forms and reference
// computations here are derived independently (hand algebra, plain loops over
// the raw parameters) so the tests do not lean on the code under test.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cournet/cournet.hpp"

namespace ctest {

using cournet::Game;
using cournet::Link;
using cournet::Mat;
using cournet::Vec;

inline std::string fixture_path(const std::string& name) {
  return std::string(CNET_FIXTURE_DIR) + "/" + name;
}

// --- named games ------------------------------------------------------------

// One producer on two markets joined by a pair of opposite links of capacity
// chi. Demand p1 = 1 - z1, p2 = 2 - 2 z2. Cost x'(11')x, i.e. (x1+x2)^2.
//
// Closed forms (net flow d = y_{m0->m1} - y_{m1->m0}):
//   producer best response to d: ((1+5d)/10, (3-5d)/10) for d in (-1/5, 3/5)
//   market maker best response to x: d* = clamp((1 + x11 - 2 x12)/3, -chi, chi)
//   equilibrium, chi <= 1/3: x* = ((1+5chi)/10, (3-5chi)/10), d* = chi
//   equilibrium, chi >  1/3: x* = (4/15, 2/15), d* = 1/3, both prices 16/15
inline Game make_two_market_shared(double chi) {
  Game g;
  g.network.n_producers = 1;
  g.network.n_markets = 2;
  g.network.access = Mat::Ones(1, 2);
  g.network.links = {{"f", 0, 1, chi}, {"r", 1, 0, chi}};
  g.costs = {{Mat::Ones(2, 2), Vec::Zero(2)}};
  g.demands = {{1.0, 1.0}, {2.0, 2.0}};
  return cournet::validate_game(g);
}

// Same network, separable cost x'Ix = x1^2 + x2^2.
//   producer best response to d: ((1+d)/4, (1-d)/3), nonnegative for |d| <= 1
//   equilibrium, chi <= 7/25: x* = ((1+chi)/4, (1-chi)/3), d* = chi
//   equilibrium, chi >  7/25: x* = (8/25, 6/25), d* = 7/25, both prices 24/25
inline Game make_two_market_separable(double chi) {
  Game g = make_two_market_shared(chi);
  g.costs[0].theta = Mat::Identity(2, 2);
  return cournet::validate_game(g);
}

// Shared-cost variant with equal demand intercepts (alpha = (1,1)); net
// consumption stays nonnegative at the market maker's best response.
inline Game make_equal_intercepts(double chi) {
  Game g = make_two_market_shared(chi);
  g.demands[0] = {1.0, 1.0};
  g.demands[1] = {1.0, 2.0};
  return cournet::validate_game(g);
}

// Four markets on a ring, three producers with overlapping two-market access
// plus a single-market producer, mixed capacities. Identical demand
// p_j = 14 - 3 z_j, separable costs 0.7 x^2 + 0.3 x per market.
//
// Frozen equilibrium: every access pair produces 157/94; markets 1,2,3 (zero
// based 0,1,2) share price 719/94, market 4 (index 3) sits at price 8 with
// z = 2; canonical flows are (0, 115/94, 0, 1, 68/47, 0, 2) on the link order
// below; the unique critical cut is {m1,m2,m3} with 3->4 saturated at 2 and
// both 4->3 and 4->1 empty.
inline Game make_four_market_ring() {
  Game g;
  g.network.n_producers = 3;
  g.network.n_markets = 4;
  g.network.access = Mat::Zero(3, 4);
  g.network.access(0, 0) = 1.0;
  g.network.access(1, 0) = 1.0;
  g.network.access(1, 1) = 1.0;
  g.network.access(2, 1) = 1.0;
  g.network.access(2, 2) = 1.0;
  g.network.market_ids = {"m1", "m2", "m3", "m4"};
  g.network.producer_ids = {"p1", "p2", "p3"};
  g.network.links = {{"l1", 3, 0, 2.0}, {"l2", 0, 1, 2.0}, {"l3", 1, 0, 2.0}, {"l4", 1, 2, 1.0},
                     {"l5", 1, 2, 2.0}, {"l6", 3, 2, 1.0}, {"l7", 2, 3, 2.0}};
  for (int i = 0; i < 3; ++i) g.costs.push_back({0.7 * Mat::Identity(4, 4), 0.3 * Vec::Ones(4)});
  for (int j = 0; j < 4; ++j) g.demands.push_back({14.0, 3.0});
  return cournet::validate_game(g);
}

// --- random games -----------------------------------------------------------

inline double runif(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline int rint(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

struct SampleOptions {
  bool equal_intercepts = false;
  bool allow_dense_cost = true;
  int max_producers = 3;
  int max_markets = 4;
  int max_links = 4;
};

inline Game sample_game(std::mt19937_64& rng, const SampleOptions& so = {}) {
  Game g;
  const int n = rint(rng, 1, so.max_producers);
  const int m = rint(rng, 1, so.max_markets);
  g.network.n_producers = n;
  g.network.n_markets = m;
  g.network.access = Mat::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    bool any = false;
    for (int j = 0; j < m; ++j)
      if (runif(rng, 0.0, 1.0) < 0.7) {
        g.network.access(i, j) = 1.0;
        any = true;
      }
    if (!any && runif(rng, 0.0, 1.0) < 0.9) g.network.access(i, rint(rng, 0, m - 1)) = 1.0;
  }
  if (m >= 2) {
    const int l = rint(rng, 0, so.max_links);
    for (int k = 0; k < l; ++k) {
      int tail = rint(rng, 0, m - 1);
      int head = rint(rng, 0, m - 2);
      if (head >= tail) ++head;
      g.network.links.push_back({"k" + std::to_string(k), tail, head, runif(rng, 0.2, 1.5)});
    }
  }
  double alpha_common = runif(rng, 0.8, 3.0);
  for (int j = 0; j < m; ++j) {
    double alpha = so.equal_intercepts ? alpha_common : runif(rng, 0.5, 3.0);
    g.demands.push_back({alpha, runif(rng, 0.4, 2.5)});
  }
  for (int i = 0; i < n; ++i) {
    Mat theta;
    if (so.allow_dense_cost && runif(rng, 0.0, 1.0) < 0.5) {
      Mat r(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) r(a, b) = runif(rng, -1.0, 1.0);
      theta = 0.3 * (r.transpose() * r);
    } else {
      theta = Mat::Zero(m, m);
      for (int j = 0; j < m; ++j) theta(j, j) = runif(rng, 0.0, 1.0);
    }
    Vec gamma(m);
    for (int j = 0; j < m; ++j) gamma[j] = runif(rng, 0.0, 0.5);
    g.costs.push_back({theta, gamma});
  }
  return cournet::validate_game(g);
}

// Small boxes and few dimensions, sized so an exhaustive lattice scan stays
// cheap. Box widths land around [0.15, 1.2].
inline Game sample_tiny_game(std::mt19937_64& rng) {
  Game g;
  const int m = rint(rng, 1, 2);
  const int n = rint(rng, 1, 2);
  g.network.n_producers = n;
  g.network.n_markets = m;
  g.network.access = Mat::Ones(n, m);
  if (m == 2) {
    const int l = rint(rng, 0, 2);
    if (l >= 1) g.network.links.push_back({"f", 0, 1, runif(rng, 0.05, 0.3)});
    if (l >= 2) g.network.links.push_back({"r", 1, 0, runif(rng, 0.05, 0.3)});
  }
  for (int j = 0; j < m; ++j) {
    double beta = runif(rng, 0.8, 2.0);
    g.demands.push_back({beta * runif(rng, 0.15, 0.6), beta});
  }
  for (int i = 0; i < n; ++i) {
    Mat theta = Mat::Zero(m, m);
    for (int j = 0; j < m; ++j) theta(j, j) = runif(rng, 0.0, 1.5);
    if (m == 2 && runif(rng, 0.0, 1.0) < 0.4)
      theta(0, 1) = theta(1, 0) = 0.9 * std::sqrt(theta(0, 0) * theta(1, 1)) * runif(rng, 0.0, 1.0);
    Vec gamma(m);
    for (int j = 0; j < m; ++j) gamma[j] = runif(rng, 0.0, 0.3) * g.demands[j].alpha;
    g.costs.push_back({theta, gamma});
  }
  return cournet::validate_game(g);
}

// Feasible strategy draws. Production has no upper bound in the game itself,
// so the draw range is independent of any solver box.
inline Mat sample_production(std::mt19937_64& rng, const Game& g, double hi = 2.0) {
  Mat x = Mat::Zero(g.n_producers(), g.n_markets());
  for (int i = 0; i < g.n_producers(); ++i)
    for (int j = 0; j < g.n_markets(); ++j)
      if (g.network.has_access(i, j)) x(i, j) = runif(rng, 0.0, hi);
  return x;
}

inline Vec sample_flow(std::mt19937_64& rng, const Game& g) {
  Vec y(g.n_links());
  for (int k = 0; k < g.n_links(); ++k) y[k] = runif(rng, 0.0, g.network.links[k].capacity);
  return y;
}

// --- independent reference computations -------------------------------------

// Net consumption, welfare and potential recomputed from raw parameters with
// plain loops.
inline Vec ref_consumption(const Game& g, const Mat& x, const Vec& y) {
  Vec z = Vec::Zero(g.n_markets());
  for (int j = 0; j < g.n_markets(); ++j)
    for (int i = 0; i < g.n_producers(); ++i) z[j] += x(i, j);
  for (int k = 0; k < g.n_links(); ++k) {
    z[g.network.links[k].head] += y[k];
    z[g.network.links[k].tail] -= y[k];
  }
  return z;
}

inline double ref_welfare(const Game& g, const Mat& x, const Vec& z) {
  double w = 0.0;
  for (int j = 0; j < g.n_markets(); ++j)
    w += g.demands[j].alpha * z[j] - 0.5 * g.demands[j].beta * z[j] * z[j];
  for (int i = 0; i < g.n_producers(); ++i) {
    double cost = g.costs[i].gamma.dot(x.row(i).transpose());
    for (int a = 0; a < g.n_markets(); ++a)
      for (int b = 0; b < g.n_markets(); ++b) cost += x(i, a) * g.costs[i].theta(a, b) * x(i, b);
    w -= cost;
  }
  return w;
}

inline double ref_potential(const Game& g, const Mat& x, const Vec& y) {
  Vec z = ref_consumption(g, x, y);
  double p = ref_welfare(g, x, z);
  for (int i = 0; i < g.n_producers(); ++i)
    for (int j = 0; j < g.n_markets(); ++j)
      if (g.network.has_access(i, j)) p -= 0.5 * g.demands[j].beta * x(i, j) * x(i, j);
  return p;
}

inline double ref_producer_utility(const Game& g, int i, const Mat& x, const Vec& y) {
  Vec z = ref_consumption(g, x, y);
  double u = 0.0;
  for (int j = 0; j < g.n_markets(); ++j)
    if (g.network.has_access(i, j)) u += x(i, j) * (g.demands[j].alpha - g.demands[j].beta * z[j]);
  double cost = g.costs[i].gamma.dot(x.row(i).transpose());
  for (int a = 0; a < g.n_markets(); ++a)
    for (int b = 0; b < g.n_markets(); ++b) cost += x(i, a) * g.costs[i].theta(a, b) * x(i, b);
  return u - cost;
}

// Central finite difference of a scalar function of one coordinate.
template <typename F>
double central_diff(F f, double v, double h = 1e-6) {
  return (f(v + h) - f(v - h)) / (2.0 * h);
}

// --- assertions -------------------------------------------------------------

inline void expect_vec_near(const Vec& a, const Vec& b, double tol, const std::string& what) {
  ASSERT_EQ(a.size(), b.size()) << what;
  for (int k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], tol) << what << " entry " << k;
}

inline void expect_mat_near(const Mat& a, const Mat& b, double tol, const std::string& what) {
  ASSERT_EQ(a.rows(), b.rows()) << what;
  ASSERT_EQ(a.cols(), b.cols()) << what;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      EXPECT_NEAR(a(i, j), b(i, j), tol) << what << " entry (" << i << "," << j << ")";
}

}  // namespace ctest

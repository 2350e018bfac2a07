#pragma once

// Equilibrium computation. The joint payoff structure admits an exact
// potential P (see welfare.hpp), concave and quadratic over the box product
// X x Y, so the Nash set is exactly argmax P and projected gradient ascent
// with backtracking finds it globally. Flows are only determined up to
// circulations, so every solver path canonicalizes to the minimum-norm flow
// achieving the optimal net transfer.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cournet/model.hpp"
#include "cournet/welfare.hpp"

namespace cournet {

struct SolveOptions {
  double tol_pg = 1e-9;       // stop when pg displacement <= tol_pg * (1 + |P|)
  long max_iters = 200000;
  double initial_step = 1.0;  // first trial step before the spectral estimate kicks in
  double backtrack_shrink = 0.5;
  double armijo_c = 1e-4;
  int restarts = 1;  // extra random initializations for uniqueness checking
  std::uint64_t seed = 0;
  // Diagnostics: when set, every accepted potential value is appended here
  // (runs are concatenated when restarts > 1).
  std::vector<double>* potential_trace = nullptr;
};

struct VerificationReport {
  double max_producer_improvement = 0.0;
  int best_improving_producer = -1;
  double market_maker_improvement = 0.0;
  double stationarity_residual = 0.0;
  bool is_equilibrium = false;
};

struct BrdTrace {
  std::vector<double> potential;   // after each round
  std::vector<double> max_change;  // largest coordinate move in the round
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  // Fixed-width extraction; avoids distribution objects whose output is
  // implementation defined, keeping runs byte-reproducible across toolchains.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Precomputed immutable view of the game used by all solver loops.
struct Engine {
  const Game* game;
  Mat b;        // m x l incidence
  Vec cap;      // l
  Vec alpha, beta;
  Mat xmax;     // n x m production bounds; 0 outside the access set

  explicit Engine(const Game& g) : game(&g) {
    b = g.network.incidence();
    cap = g.network.capacities();
    alpha = g.alpha();
    beta = g.beta();
    xmax = Mat::Zero(g.n_producers(), g.n_markets());
    for (int i = 0; i < g.n_producers(); ++i)
      for (int j = 0; j < g.n_markets(); ++j)
        if (g.network.has_access(i, j)) xmax(i, j) = dominance_bound(g, i, j);
  }

  int n() const { return game->n_producers(); }
  int m() const { return game->n_markets(); }
  int l() const { return game->n_links(); }

  Vec consumption(const Mat& x, const Vec& y) const {
    Vec z = x.colwise().sum().transpose();
    if (l() > 0) z += b * y;
    return z;
  }

  double potential_at(const Mat& x, const Vec& y) const {
    Vec z = consumption(x, y);
    double p = 0.0;
    for (int j = 0; j < m(); ++j) p += alpha[j] * z[j] - 0.5 * beta[j] * z[j] * z[j];
    for (int i = 0; i < n(); ++i) {
      Vec xi = x.row(i).transpose();
      p -= game->costs[i].value(xi);
    }
    p -= 0.5 * (x.array().square().matrix() * beta).sum();
    return p;
  }

  void gradient_at(const Mat& x, const Vec& y, Mat& gx, Vec& gy) const {
    Vec z = consumption(x, y);
    Vec p(m());
    for (int j = 0; j < m(); ++j) p[j] = alpha[j] - beta[j] * z[j];
    gx.resize(n(), m());
    for (int i = 0; i < n(); ++i) {
      Vec cg = game->costs[i].gradient(x.row(i).transpose());
      for (int j = 0; j < m(); ++j)
        gx(i, j) = game->network.has_access(i, j) ? p[j] - beta[j] * x(i, j) - cg[j] : 0.0;
    }
    gy = l() > 0 ? Vec(b.transpose() * p) : Vec(0);
  }

  void clamp(Mat& x, Vec& y) const {
    x = x.cwiseMax(0.0).cwiseMin(xmax);
    if (l() > 0) y = y.cwiseMax(Vec::Zero(l())).cwiseMin(cap);
  }

  // Exact change P(x+dx, y+dy) - P(x, y), written in terms of the
  // displacement only (p = prices at the current consumption, dz = the
  // consumption change). Subtracting two potential evaluations instead would
  // round the difference away once it falls below |P|'s float resolution,
  // which is exactly the regime a line search probes near the optimum.
  double potential_delta(const Mat& x, const Mat& dx, const Vec& dz, const Vec& p) const {
    double d = 0.0;
    for (int j = 0; j < m(); ++j) d += p[j] * dz[j] - 0.5 * beta[j] * dz[j] * dz[j];
    for (int i = 0; i < n(); ++i) {
      Vec xi = x.row(i).transpose(), di = dx.row(i).transpose();
      d -= game->costs[i].gradient(xi).dot(di) + di.dot(game->costs[i].theta * di);
    }
    for (int j = 0; j < m(); ++j) {
      double s = 0.0;
      for (int i = 0; i < n(); ++i) s += x(i, j) * dx(i, j) + 0.5 * dx(i, j) * dx(i, j);
      d -= beta[j] * s;
    }
    return d;
  }
};

struct AscentResult {
  Mat x;
  Vec y;
  long iterations = 0;
  double pg_norm = 0.0;
  double potential = 0.0;
};

// Projected gradient ascent with Armijo backtracking. Trial steps follow a
// spectral (Barzilai-Borwein) estimate, shrunk until the ascent condition
// holds, so the potential is non-decreasing throughout. freeze_x restricts
// the update to flows (used for the market maker's best response).
inline AscentResult ascend(const Engine& e, Mat x, Vec y, const SolveOptions& opts, bool freeze_x) {
  // The production box only bounds the solver's search; a frozen profile is
  // someone else's choice and must pass through unclipped.
  if (!freeze_x) x = x.cwiseMax(0.0).cwiseMin(e.xmax);
  if (e.l() > 0) y = y.cwiseMax(Vec::Zero(e.l())).cwiseMin(e.cap);
  Mat gx, gxn;
  Vec gy, gyn;
  e.gradient_at(x, y, gx, gy);
  if (freeze_x) gx.setZero();
  double pval = e.potential_at(x, y);
  double step = opts.initial_step;
  if (opts.potential_trace) opts.potential_trace->push_back(pval);
  AscentResult res;

  for (long it = 0; it < opts.max_iters; ++it) {
    // Unit-step projected displacement is the stationarity certificate.
    Mat dx1 = freeze_x ? Mat::Zero(e.n(), e.m()) : Mat((x + gx).cwiseMax(0.0).cwiseMin(e.xmax) - x);
    Vec dy1 = e.l() > 0 ? Vec((y + gy).cwiseMax(Vec::Zero(e.l())).cwiseMin(e.cap) - y) : Vec(0);
    double pg = std::sqrt(dx1.squaredNorm() + dy1.squaredNorm());
    if (pg <= opts.tol_pg * (1.0 + std::abs(pval))) {
      res.potential = e.potential_at(x, y);
      res.x = std::move(x);
      res.y = std::move(y);
      res.iterations = it;
      res.pg_norm = pg;
      return res;
    }

    Vec z = e.consumption(x, y);
    Vec p = e.alpha - e.beta.cwiseProduct(z);

    double t = std::min(std::max(step, 1e-12), 1e6);
    Mat xc;
    Vec yc;
    double dp = 0.0;
    for (;;) {
      xc = freeze_x ? x : Mat((x + t * gx).cwiseMax(0.0).cwiseMin(e.xmax));
      yc = e.l() > 0 ? Vec((y + t * gy).cwiseMax(Vec::Zero(e.l())).cwiseMin(e.cap)) : y;
      Mat dx = xc - x;
      Vec dy = e.l() > 0 ? Vec(yc - y) : Vec(0);
      double ip = gx.cwiseProduct(dx).sum() + (e.l() > 0 ? gy.dot(dy) : 0.0);
      Vec dz = dx.colwise().sum().transpose();
      if (e.l() > 0) dz += e.b * dy;
      dp = e.potential_delta(x, dx, dz, p);
      if (dp >= opts.armijo_c * ip || ip <= 0.0 || t <= 1e-14) break;
      t *= opts.backtrack_shrink;
    }

    e.gradient_at(xc, yc, gxn, gyn);
    if (freeze_x) gxn.setZero();
    // Spectral step from the last displacement/gradient-change pair.
    double dd = (xc - x).squaredNorm() + (e.l() > 0 ? (yc - y).squaredNorm() : 0.0);
    double dg = (xc - x).cwiseProduct(gx - gxn).sum() + (e.l() > 0 ? (yc - y).dot(gy - gyn) : 0.0);
    step = dg > 1e-300 ? dd / dg : 1e6;

    x.swap(xc);
    y.swap(yc);
    gx.swap(gxn);
    gy.swap(gyn);
    pval += dp;
    if (opts.potential_trace) opts.potential_trace->push_back(pval);
  }
  throw NonConvergence("projected gradient ascent did not reach tolerance", opts.max_iters);
}

// Minimum-norm point of {y in [0, cap] : B y = r} via Dykstra's alternating
// projections between the box and the affine set. The affine projection uses
// a least-squares solve against B, so circulations are removed exactly.
inline Vec min_norm_flow(const Mat& b, const Vec& cap, const Vec& r) {
  const int l = static_cast<int>(cap.size());
  if (l == 0) return Vec(0);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(b);
  Vec y = Vec::Zero(l), p = Vec::Zero(l), q = Vec::Zero(l);
  double scale = 1.0 + cap.cwiseAbs().maxCoeff() + r.cwiseAbs().maxCoeff();
  for (int it = 0; it < 100000; ++it) {
    Vec w = y + p;
    Vec u = w - cod.solve(b * w - r);
    p = w - u;
    Vec v = u + q;
    Vec yn = v.cwiseMax(Vec::Zero(l)).cwiseMin(cap);
    q = v - yn;
    double change = (yn - y).cwiseAbs().maxCoeff();
    y = yn;
    if (change < 1e-14 * scale && (b * y - r).cwiseAbs().maxCoeff() < 1e-11 * scale) break;
  }
  return y.cwiseMax(Vec::Zero(l)).cwiseMin(cap);
}

}  // namespace detail

// Assemble the derived quantities for a configuration.
inline Outcome make_outcome(const Game& game, Mat x, Vec y, SolverStats stats = {}) {
  Outcome o;
  o.z = net_consumption(game, x, y);
  o.prices = prices(game, o.z);
  o.potential_value = potential(game, x, y);
  o.welfare_value = walrasian_welfare(game, x, o.z);
  o.producer_utilities.resize(game.n_producers());
  for (int i = 0; i < game.n_producers(); ++i) o.producer_utilities[i] = producer_utility(game, i, x, y);
  o.x = std::move(x);
  o.y = std::move(y);
  o.stats = stats;
  return o;
}

// Welfare-maximizing flow given productions; canonical minimum-norm
// representative of the (circulation-invariant) optimal set.
inline FlowProfile market_maker_best_response(const Game& game, const Mat& x, SolveOptions opts = {}) {
  if (game.welfare_kind != WelfareKind::Walrasian)
    throw UnsupportedWelfare("best response defined for the Walrasian objective");
  detail::check_production(game.network, x);
  detail::Engine e(game);
  auto r = detail::ascend(e, x, Vec::Zero(game.n_links()), opts, /*freeze_x=*/true);
  Vec target = e.l() > 0 ? Vec(e.b * r.y) : Vec(0);
  return FlowProfile(game.network, detail::min_norm_flow(e.b, e.cap, target));
}

inline FlowProfile market_maker_best_response(const Game& game, const ProductionProfile& x,
                                              SolveOptions opts = {}) {
  return market_maker_best_response(game, x.x(), opts);
}

// Producer i's exact best response to the others' productions and the given
// flows. Strictly concave on the producer's access set, so the maximizer is
// unique.
inline Vec producer_best_response(const Game& game, int i, const Mat& x_others, const Vec& y,
                                  SolveOptions opts = {}) {
  if (i < 0 || i >= game.n_producers()) throw DimensionMismatch("producer_best_response: bad index");
  detail::check_flow(game.network, y);
  const int m = game.n_markets();
  Mat rest = x_others;
  rest.row(i).setZero();
  detail::check_production(game.network, rest);
  Vec base = rest.colwise().sum().transpose();
  if (game.n_links() > 0) base += game.network.incidence() * y;

  // Box-constrained concave quadratic in the producer's own vector:
  // u(xi) = sum_j xi_j * p_j(base_j + xi_j) - cost_i(xi).
  Vec lo = Vec::Zero(m), hi(m);
  for (int j = 0; j < m; ++j) hi[j] = game.network.has_access(i, j) ? dominance_bound(game, i, j) : 0.0;
  const QuadraticCost& cost = game.costs[i];
  Vec beta = game.beta(), alpha = game.alpha();

  // Writing M = theta + diag(beta), the objective is c.v - v'Mv with
  // c_j = alpha_j - beta_j base_j - gamma_j. Cyclic exact coordinate
  // maximization: each update is the closed-form clip of the one-dimensional
  // maximizer, so the loop lands on a float-exact fixed point instead of
  // stalling in a line search whose value differences round to zero.
  Vec c(m);
  for (int j = 0; j < m; ++j) c[j] = alpha[j] - beta[j] * base[j] - cost.gamma[j];
  Vec v = Vec::Zero(m);
  const long cap = std::max<long>(opts.max_iters, 1000);
  for (long sweep = 0; sweep < cap; ++sweep) {
    double change = 0.0;
    for (int j = 0; j < m; ++j) {
      if (hi[j] <= 0.0) {
        v[j] = 0.0;
        continue;
      }
      double off = cost.theta.row(j).dot(v) - cost.theta(j, j) * v[j];
      double vj = (c[j] - 2.0 * off) / (2.0 * (cost.theta(j, j) + beta[j]));
      vj = std::clamp(vj, lo[j], hi[j]);
      change = std::max(change, std::abs(vj - v[j]));
      v[j] = vj;
    }
    if (change <= 1e-15 * (1.0 + v.cwiseAbs().maxCoeff())) return v;
  }
  throw NonConvergence("producer best response did not reach tolerance", cap);
}

inline Vec producer_best_response(const Game& game, int i, const ProductionProfile& x_others,
                                  const FlowProfile& y, SolveOptions opts = {}) {
  return producer_best_response(game, i, x_others.x(), y.y(), opts);
}

// Maximize the potential over the joint box. With restarts > 1, extra runs
// start from uniform draws over the boxes; all runs must land on the same
// (x*, By*), which the stats record as a spread for the caller to inspect.
inline Outcome solve_equilibrium(const Game& game, SolveOptions opts = {}) {
  if (game.welfare_kind != WelfareKind::Walrasian)
    throw UnsupportedWelfare("equilibrium solver requires the Walrasian objective");
  auto t0 = std::chrono::steady_clock::now();
  detail::Engine e(game);

  std::vector<detail::AscentResult> runs;
  const int total = std::max(1, opts.restarts);
  std::mt19937_64 rng(opts.seed);
  for (int r = 0; r < total; ++r) {
    Mat x0 = Mat::Zero(e.n(), e.m());
    Vec y0 = Vec::Zero(e.l());
    if (r > 0) {
      for (int i = 0; i < e.n(); ++i)
        for (int j = 0; j < e.m(); ++j) x0(i, j) = detail::uniform01(rng) * e.xmax(i, j);
      for (int k = 0; k < e.l(); ++k) y0[k] = detail::uniform01(rng) * e.cap[k];
    }
    runs.push_back(detail::ascend(e, std::move(x0), std::move(y0), opts, false));
  }

  int best = 0;
  for (int r = 1; r < total; ++r)
    if (runs[r].potential > runs[best].potential) best = r;
  double x_spread = 0.0, flow_spread = 0.0;
  for (int r = 0; r < total; ++r) {
    if (e.n() > 0) x_spread = std::max(x_spread, (runs[r].x - runs[best].x).cwiseAbs().maxCoeff());
    if (e.l() > 0)
      flow_spread =
          std::max(flow_spread, (e.b * (runs[r].y - runs[best].y)).cwiseAbs().maxCoeff());
  }

  Vec target = e.l() > 0 ? Vec(e.b * runs[best].y) : Vec(0);
  Vec y = detail::min_norm_flow(e.b, e.cap, target);
  SolverStats stats;
  stats.iterations = runs[best].iterations;
  stats.final_pg_norm = runs[best].pg_norm;
  stats.restarts = total;
  stats.restart_x_spread = x_spread;
  stats.restart_flow_spread = flow_spread;
  stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return make_outcome(game, std::move(runs[best].x), std::move(y), stats);
}

// Round-robin exact best responses (producers in index order, then the market
// maker). Terminates when the configuration passes the same stationarity
// certificate as the gradient solver, so both methods approximate the
// equilibrium equally tightly.
inline std::pair<BrdTrace, Outcome> best_response_dynamics(const Game& game, Mat x, Vec y,
                                                           SolveOptions opts = {}) {
  auto t0 = std::chrono::steady_clock::now();
  detail::check_production(game.network, x);
  detail::check_flow(game.network, y);
  detail::Engine e(game);
  BrdTrace trace;
  long rounds_cap = std::max<long>(1000, opts.max_iters / 10);

  for (long round = 0; round < rounds_cap; ++round) {
    double change = 0.0;
    for (int i = 0; i < e.n(); ++i) {
      Vec xi = producer_best_response(game, i, x, y, opts);
      change = std::max(change, (xi - x.row(i).transpose()).cwiseAbs().maxCoeff());
      x.row(i) = xi.transpose();
    }
    if (e.l() > 0) {
      Vec yn = market_maker_best_response(game, x, opts).y();
      change = std::max(change, (yn - y).cwiseAbs().maxCoeff());
      y = yn;
    }
    double pval = e.potential_at(x, y);
    trace.potential.push_back(pval);
    trace.max_change.push_back(change);

    Mat gx;
    Vec gy;
    e.gradient_at(x, y, gx, gy);
    Mat dx1 = (x + gx).cwiseMax(0.0).cwiseMin(e.xmax) - x;
    Vec dy1 = e.l() > 0 ? Vec((y + gy).cwiseMax(Vec::Zero(e.l())).cwiseMin(e.cap) - y) : Vec(0);
    double pg = std::sqrt(dx1.squaredNorm() + dy1.squaredNorm());
    if (pg <= opts.tol_pg * (1.0 + std::abs(pval)) || change == 0.0) {
      SolverStats stats;
      stats.iterations = round + 1;
      stats.final_pg_norm = pg;
      stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return {std::move(trace), make_outcome(game, std::move(x), std::move(y), stats)};
    }
  }
  throw NonConvergence("best response dynamics did not settle", rounds_cap);
}

// Exhaustive lattice search over the joint box (step `grid_step`, plus each
// box's upper endpoint). Only meant as a small-problem oracle. Along the
// largest axis the lattice maximum of the one-dimensional concave section is
// located directly, which changes nothing about which lattice point wins.
inline Outcome brute_force_equilibrium(const Game& game, double grid_step) {
  if (grid_step <= 0.0) throw std::invalid_argument("grid_step must be positive");
  detail::Engine e(game);

  struct Dim {
    bool is_flow;
    int i, j, k;
    std::vector<double> values;
  };
  std::vector<Dim> dims;
  for (int i = 0; i < e.n(); ++i)
    for (int j = 0; j < e.m(); ++j)
      if (game.network.has_access(i, j)) {
        Dim d{false, i, j, -1, {}};
        double hi = e.xmax(i, j);
        for (double v = 0.0; v < hi + 1e-12; v += grid_step) d.values.push_back(std::min(v, hi));
        if (d.values.back() < hi) d.values.push_back(hi);
        dims.push_back(std::move(d));
      }
  for (int k = 0; k < e.l(); ++k) {
    Dim d{true, -1, -1, k, {}};
    double hi = e.cap[k];
    for (double v = 0.0; v < hi + 1e-12; v += grid_step) d.values.push_back(std::min(v, hi));
    if (d.values.back() < hi) d.values.push_back(hi);
    dims.push_back(std::move(d));
  }
  if (dims.size() > 6)
    throw TooLarge("grid search supports at most 6 boxed dimensions, got " + std::to_string(dims.size()));
  if (dims.empty()) return make_outcome(game, Mat::Zero(e.n(), e.m()), Vec::Zero(e.l()));

  // Scan all but the longest axis; maximize that one analytically per point.
  int inner = 0;
  for (size_t d = 1; d < dims.size(); ++d)
    if (dims[d].values.size() > dims[inner].values.size()) inner = static_cast<int>(d);
  double outer_count = 1.0;
  for (size_t d = 0; d < dims.size(); ++d)
    if (static_cast<int>(d) != inner) outer_count *= static_cast<double>(dims[d].values.size());
  if (outer_count > 2e8) throw TooLarge("grid has too many points at this step");

  auto assign = [&](Mat& x, Vec& y, const Dim& d, double v) {
    if (d.is_flow)
      y[d.k] = v;
    else
      x(d.i, d.j) = v;
  };

  // Curvature along the inner axis (constant for a quadratic).
  double h_inner = 0.0;
  {
    const Dim& d = dims[inner];
    if (d.is_flow) {
      h_inner = e.beta[game.network.links[d.k].head] + e.beta[game.network.links[d.k].tail];
    } else {
      h_inner = 2.0 * e.beta[d.j] + 2.0 * game.costs[d.i].theta(d.j, d.j);
    }
  }

  Mat x = Mat::Zero(e.n(), e.m());
  Vec y = Vec::Zero(e.l());
  std::vector<size_t> idx(dims.size(), 0);
  for (size_t d = 0; d < dims.size(); ++d) assign(x, y, dims[d], dims[d].values[0]);

  Mat best_x = x;
  Vec best_y = y;
  double best_p = -std::numeric_limits<double>::infinity();
  long long points = 0;

  for (;;) {
    // One-dimensional section along the inner axis: value b0 and slope g0 at
    // the axis origin, curvature h_inner (constant). The lattice maximum of
    // this concave parabola sits at the lattice neighbor of its vertex.
    const Dim& di = dims[inner];
    assign(x, y, di, 0.0);
    Vec z = e.consumption(x, y);
    double b0 = 0.0;
    for (int j = 0; j < e.m(); ++j) b0 += e.alpha[j] * z[j] - 0.5 * e.beta[j] * z[j] * z[j];
    for (int i = 0; i < e.n(); ++i) b0 -= e.game->costs[i].value(x.row(i).transpose());
    b0 -= 0.5 * (x.array().square().matrix() * e.beta).sum();
    double g0;
    if (di.is_flow) {
      int hd = e.game->network.links[di.k].head, tl = e.game->network.links[di.k].tail;
      g0 = (e.alpha[hd] - e.beta[hd] * z[hd]) - (e.alpha[tl] - e.beta[tl] * z[tl]);
    } else {
      Vec cg = e.game->costs[di.i].gradient(x.row(di.i).transpose());
      g0 = e.alpha[di.j] - e.beta[di.j] * z[di.j] - cg[di.j];
    }

    auto section = [&](double v) { return b0 + g0 * v - 0.5 * h_inner * v * v; };
    // Candidates: lattice points bracketing the vertex plus both ends.
    // Ascending index order with strict improvement keeps the earliest
    // lattice point on ties, same as a plain scan would.
    size_t cand = 0;
    double vstar = g0 / h_inner;
    while (cand + 1 < di.values.size() && di.values[cand + 1] <= vstar) ++cand;
    size_t pick = 0;
    double bv = section(di.values[0]);
    for (size_t c : {cand, cand + 1, di.values.size() - 1})
      if (c < di.values.size() && section(di.values[c]) > bv) {
        bv = section(di.values[c]);
        pick = c;
      }
    assign(x, y, di, di.values[pick]);
    double pval = bv;
    points += static_cast<long long>(di.values.size());
    if (pval > best_p) {
      best_p = pval;
      best_x = x;
      best_y = y;
    }

    // Odometer over the outer axes.
    size_t d = 0;
    for (;; ++d) {
      if (d == dims.size()) break;
      if (static_cast<int>(d) == inner) continue;
      if (++idx[d] < dims[d].values.size()) {
        assign(x, y, dims[d], dims[d].values[idx[d]]);
        break;
      }
      idx[d] = 0;
      assign(x, y, dims[d], dims[d].values[0]);
    }
    if (d == dims.size()) break;
  }

  SolverStats stats;
  stats.iterations = points;
  return make_outcome(game, std::move(best_x), std::move(best_y), stats);
}

// Check a configuration against each player's exact best response and the
// stationarity certificate. Tolerances are scale-relative: an improvement
// counts against equilibrium when it exceeds tol * (1 + |utility|).
inline VerificationReport verify_equilibrium(const Game& game, const Outcome& outcome, double tol) {
  VerificationReport rep;
  detail::Engine e(game);
  bool ok = true;

  for (int i = 0; i < game.n_producers(); ++i) {
    double cur = producer_utility(game, i, outcome.x, outcome.y);
    Mat xb = outcome.x;
    Vec xi = producer_best_response(game, i, outcome.x, outcome.y);
    xb.row(i) = xi.transpose();
    double imp = producer_utility(game, i, xb, outcome.y) - cur;
    if (imp > rep.max_producer_improvement) {
      rep.max_producer_improvement = imp;
      rep.best_improving_producer = i;
    }
    if (imp > tol * (1.0 + std::abs(cur))) ok = false;
  }

  double cur0 = market_maker_utility(game, outcome.x, outcome.y);
  Vec yb = market_maker_best_response(game, outcome.x).y();
  rep.market_maker_improvement = market_maker_utility(game, outcome.x, yb) - cur0;
  if (rep.market_maker_improvement > tol * (1.0 + std::abs(cur0))) ok = false;

  Mat gx;
  Vec gy;
  e.gradient_at(outcome.x, outcome.y, gx, gy);
  Mat dx1 = (outcome.x + gx).cwiseMax(0.0).cwiseMin(e.xmax) - outcome.x;
  Vec dy1 = e.l() > 0
                ? Vec((outcome.y + gy).cwiseMax(Vec::Zero(e.l())).cwiseMin(e.cap) - outcome.y)
                : Vec(0);
  rep.stationarity_residual = std::sqrt(dx1.squaredNorm() + dy1.squaredNorm());
  double pval = e.potential_at(outcome.x, outcome.y);
  if (rep.stationarity_residual > tol * (1.0 + std::abs(pval))) ok = false;

  rep.is_equilibrium = ok;
  return rep;
}

}  // namespace cournet

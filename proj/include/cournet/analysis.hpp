#pragma once

// Post-solve structure: how flows relate to price gaps link by link, which
// markets share a price, which market subsets form saturated bottleneck cuts,
// and where consumption went negative. Everything recomputes (z, prices) from
// the outcome's (x, y) rather than trusting stored fields.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cournet/model.hpp"
#include "cournet/solver.hpp"
#include "cournet/welfare.hpp"

namespace cournet {

// When the flow picked by a welfare-maximizing market maker disagrees with
// the price gap across a link (cheap side should export at capacity, pricey
// side should not ship back), the link is flagged PriceFlowMismatch: that
// combination cannot occur at an exact best response.
enum class LinkClass { SaturatedForward, Empty, Interior, PriceFlowMismatch };

inline const char* to_string(LinkClass c) {
  switch (c) {
    case LinkClass::SaturatedForward: return "saturated";
    case LinkClass::Empty: return "empty";
    case LinkClass::Interior: return "interior";
    case LinkClass::PriceFlowMismatch: return "MISMATCH";
  }
  return "?";
}

struct LinkStatus {
  int link = -1;
  double price_tail = 0.0;
  double price_head = 0.0;
  double flow = 0.0;
  LinkClass classification = LinkClass::Interior;
};

struct PriceGroup {
  std::vector<int> markets;
  double group_price = 0.0;
};

struct CutReport {
  std::vector<int> cut_set;       // the lower-priced market side U
  std::vector<int> in_boundary;   // links entering U from outside
  std::vector<int> out_boundary;  // links leaving U
  bool saturated = false;         // out-boundary at capacity, in-boundary empty
};

struct DemandSignReport {
  double min_z = 0.0;
  int min_z_market = -1;
  std::vector<int> negative_markets;
  bool equal_intercepts = false;
};

inline std::vector<LinkStatus> saturation_report(const Game& game, const Outcome& outcome,
                                                 double eps_price, double eps_flow) {
  Vec z = net_consumption(game, outcome.x, outcome.y);
  Vec p = prices(game, z);
  std::vector<LinkStatus> out;
  out.reserve(game.n_links());
  for (int k = 0; k < game.n_links(); ++k) {
    const Link& lk = game.network.links[k];
    LinkStatus s;
    s.link = k;
    s.price_tail = p[lk.tail];
    s.price_head = p[lk.head];
    s.flow = outcome.y[k];
    bool head_pricier = s.price_head > s.price_tail + eps_price;
    bool tail_pricier = s.price_tail > s.price_head + eps_price;
    bool at_capacity = s.flow >= lk.capacity - eps_flow;
    bool at_zero = s.flow <= eps_flow;
    if ((head_pricier && !at_capacity) || (tail_pricier && !at_zero))
      s.classification = LinkClass::PriceFlowMismatch;
    else if (head_pricier)
      s.classification = LinkClass::SaturatedForward;
    else if (tail_pricier)
      s.classification = LinkClass::Empty;
    else
      s.classification = LinkClass::Interior;
    out.push_back(s);
  }
  return out;
}

// Markets connected by links whose endpoint prices agree (within eps) share a
// group. Groups come back sorted by price, cheapest first.
inline std::vector<PriceGroup> price_groups(const Game& game, const Outcome& outcome, double eps_price) {
  Vec z = net_consumption(game, outcome.x, outcome.y);
  Vec p = prices(game, z);
  const int m = game.n_markets();
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  for (const Link& lk : game.network.links)
    if (std::abs(p[lk.head] - p[lk.tail]) <= eps_price) parent[find(lk.head)] = find(lk.tail);

  std::vector<std::vector<int>> members(m);
  for (int j = 0; j < m; ++j) members[find(j)].push_back(j);
  std::vector<PriceGroup> groups;
  for (int r = 0; r < m; ++r) {
    if (members[r].empty()) continue;
    PriceGroup g;
    g.markets = members[r];
    double sum = 0.0;
    for (int j : g.markets) sum += p[j];
    g.group_price = sum / static_cast<double>(g.markets.size());
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), [](const PriceGroup& a, const PriceGroup& b) {
    return a.group_price < b.group_price || (a.group_price == b.group_price && a.markets < b.markets);
  });
  return groups;
}

// Threshold cuts: accumulate price groups cheapest-first; whenever everything
// inside U is strictly cheaper than everything outside, U's outgoing links
// must run at capacity and its incoming links must be empty. Only these
// threshold sets can satisfy the strict separation, so enumeration is linear
// in the number of groups.
inline std::vector<CutReport> critical_cuts(const Game& game, const Outcome& outcome, double eps_price,
                                            double eps_flow) {
  Vec z = net_consumption(game, outcome.x, outcome.y);
  Vec p = prices(game, z);
  auto groups = price_groups(game, outcome, eps_price);
  std::vector<CutReport> cuts;
  std::vector<char> in_u(game.n_markets(), 0);
  for (size_t t = 0; t + 1 < groups.size(); ++t) {
    for (int j : groups[t].markets) in_u[j] = 1;
    double max_in = -std::numeric_limits<double>::infinity();
    double min_out = std::numeric_limits<double>::infinity();
    for (int j = 0; j < game.n_markets(); ++j) {
      if (in_u[j])
        max_in = std::max(max_in, p[j]);
      else
        min_out = std::min(min_out, p[j]);
    }
    if (!(max_in < min_out - eps_price)) continue;

    CutReport cut;
    for (int j = 0; j < game.n_markets(); ++j)
      if (in_u[j]) cut.cut_set.push_back(j);
    bool ok = true;
    for (int k = 0; k < game.n_links(); ++k) {
      const Link& lk = game.network.links[k];
      bool tail_in = in_u[lk.tail], head_in = in_u[lk.head];
      if (tail_in && !head_in) {
        cut.out_boundary.push_back(k);
        if (outcome.y[k] < lk.capacity - eps_flow) ok = false;
      } else if (!tail_in && head_in) {
        cut.in_boundary.push_back(k);
        if (outcome.y[k] > eps_flow) ok = false;
      }
    }
    cut.saturated = ok;
    cuts.push_back(std::move(cut));
  }
  return cuts;
}

// Report where consumption is negative. When every market quotes the same
// zero-consumption price, a best-response flow can never produce negative
// consumption, so a negative entry under that precondition is an internal
// inconsistency worth throwing over.
inline DemandSignReport demand_sign_check(const Game& game, const Outcome& outcome, double eps = 1e-8) {
  Vec z = net_consumption(game, outcome.x, outcome.y);
  DemandSignReport rep;
  rep.min_z = z.minCoeff(&rep.min_z_market);
  for (int j = 0; j < game.n_markets(); ++j)
    if (z[j] < -eps) rep.negative_markets.push_back(j);
  rep.equal_intercepts = true;
  for (int j = 1; j < game.n_markets(); ++j)
    if (std::abs(game.demands[j].alpha - game.demands[0].alpha) >
        1e-12 * (1.0 + std::abs(game.demands[0].alpha)))
      rep.equal_intercepts = false;
  if (rep.equal_intercepts && !rep.negative_markets.empty()) throw NonNegativityViolation(rep.min_z);
  return rep;
}

// Graphviz view of an outcome: market nodes labeled with prices, links
// labeled flow/capacity, saturated bottleneck links dashed.
inline std::string to_dot(const Game& game, const Outcome& outcome, double eps_price, double eps_flow) {
  auto statuses = saturation_report(game, outcome, eps_price, eps_flow);
  auto cuts = critical_cuts(game, outcome, eps_price, eps_flow);
  std::vector<char> dashed(game.n_links(), 0);
  for (const CutReport& cut : cuts)
    if (cut.saturated)
      for (int k : cut.out_boundary) dashed[k] = 1;

  Vec z = net_consumption(game, outcome.x, outcome.y);
  Vec p = prices(game, z);
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "digraph market_network {\n";
  os << "  rankdir=LR;\n  node [shape=ellipse];\n";
  for (int j = 0; j < game.n_markets(); ++j)
    os << "  m" << j << " [label=\"" << game.network.market_name(j) << "\\np=" << p[j] << "\"];\n";
  for (int k = 0; k < game.n_links(); ++k) {
    const Link& lk = game.network.links[k];
    os << "  m" << lk.tail << " -> m" << lk.head << " [label=\"" << outcome.y[k] << "/" << lk.capacity
       << "\"";
    if (dashed[k]) os << ", style=dashed";
    if (statuses[k].classification == LinkClass::PriceFlowMismatch) os << ", color=red";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace cournet

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_util.hpp"

namespace {

using namespace cournet;
using ctest::expect_vec_near;

// Ring equilibrium constants used across the hand-value tests.
const double kRingLowPrice = 719.0 / 94.0;

TEST(Saturation, RingBottleneckHandValues) {
  Game g = ctest::make_four_market_ring();
  Outcome o = solve_equilibrium(g);
  auto rep = saturation_report(g, o, 1e-6, 1e-6);
  ASSERT_EQ(rep.size(), 7u);

  // The pricey market m4 imports nothing and its inbound links sit empty;
  // the only link into it runs at capacity.
  LinkClass expect[] = {LinkClass::Empty,    LinkClass::Interior, LinkClass::Interior,
                        LinkClass::Interior, LinkClass::Interior, LinkClass::Empty,
                        LinkClass::SaturatedForward};
  for (int k = 0; k < 7; ++k) {
    EXPECT_EQ(rep[k].classification, expect[k]) << "link " << k;
    EXPECT_EQ(rep[k].link, k);
  }
  EXPECT_NEAR(rep[6].price_tail, kRingLowPrice, 1e-6);
  EXPECT_NEAR(rep[6].price_head, 8.0, 1e-6);
  EXPECT_NEAR(rep[6].flow, 2.0, 1e-6);
  // Link 3 runs at its capacity of 1 but joins two equal-price markets, so it
  // still reads Interior: classification keys on the price gap, not the flow.
  EXPECT_NEAR(rep[3].flow, 1.0, 1e-6);
  EXPECT_NEAR(rep[3].price_tail, rep[3].price_head, 1e-6);
}

TEST(Saturation, EqualPricesReadInterior) {
  Game g = ctest::make_two_market_shared(1.0);
  Outcome o = solve_equilibrium(g);
  auto rep = saturation_report(g, o, 1e-6, 1e-6);
  ASSERT_EQ(rep.size(), 2u);
  EXPECT_EQ(rep[0].classification, LinkClass::Interior);
  EXPECT_EQ(rep[1].classification, LinkClass::Interior);
  EXPECT_NEAR(rep[0].price_tail, 16.0 / 15.0, 1e-6);
  EXPECT_NEAR(rep[0].price_head, 16.0 / 15.0, 1e-6);
}

TEST(Saturation, WrongFlowsAreFlagged) {
  // Keep the equilibrium productions but zero the flows: the cheap market
  // should be exporting at capacity, so the forward link is inconsistent.
  Game g = ctest::make_two_market_shared(0.2);
  Outcome eq = solve_equilibrium(g);
  Outcome o = make_outcome(g, eq.x, Vec::Zero(2));
  auto rep = saturation_report(g, o, 1e-6, 1e-6);
  ASSERT_EQ(rep.size(), 2u);
  EXPECT_EQ(rep[0].classification, LinkClass::PriceFlowMismatch);
  EXPECT_EQ(rep[1].classification, LinkClass::Empty);
  EXPECT_STREQ(to_string(rep[0].classification), "MISMATCH");
}

TEST(PriceGroups, RingSplitsOffThePriceyMarket) {
  Game g = ctest::make_four_market_ring();
  Outcome o = solve_equilibrium(g);
  auto groups = price_groups(g, o, 1e-6);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].markets, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(groups[1].markets, (std::vector<int>{3}));
  EXPECT_NEAR(groups[0].group_price, kRingLowPrice, 1e-6);
  EXPECT_NEAR(groups[1].group_price, 8.0, 1e-6);
}

TEST(PriceGroups, TightCapacityLeavesAGap) {
  // Below the merge threshold the two markets keep distinct prices with a
  // gap of 1/2 - 3 chi / 2.
  for (double chi : {0.05, 0.2}) {
    Game g = ctest::make_two_market_shared(chi);
    Outcome o = solve_equilibrium(g);
    auto groups = price_groups(g, o, 1e-6);
    ASSERT_EQ(groups.size(), 2u) << "chi=" << chi;
    EXPECT_EQ(groups[0].markets, (std::vector<int>{0}));
    EXPECT_EQ(groups[1].markets, (std::vector<int>{1}));
    EXPECT_NEAR(groups[0].group_price, 0.9 + chi / 2.0, 1e-7);
    EXPECT_NEAR(groups[1].group_price, 1.4 - chi, 1e-7);
    EXPECT_NEAR(groups[1].group_price - groups[0].group_price, 0.5 - 1.5 * chi, 1e-7);
  }
}

TEST(PriceGroups, AmpleCapacityMergesEverything) {
  Game g = ctest::make_two_market_shared(1.0);
  Outcome o = solve_equilibrium(g);
  auto groups = price_groups(g, o, 1e-6);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].markets, (std::vector<int>{0, 1}));
  EXPECT_NEAR(groups[0].group_price, 16.0 / 15.0, 1e-6);
}

TEST(PriceGroups, PartitionCoversEveryMarketOnce) {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 100; ++t) {
    Game g = ctest::sample_game(rng);
    Mat x = ctest::sample_production(rng, g);
    Vec y = market_maker_best_response(g, x).y();
    Outcome o = make_outcome(g, x, y);
    double eps = 1e-6;
    auto groups = price_groups(g, o, eps);
    std::vector<int> seen(g.n_markets(), 0);
    for (const auto& grp : groups)
      for (int j : grp.markets) seen[j] += 1;
    for (int j = 0; j < g.n_markets(); ++j) EXPECT_EQ(seen[j], 1) << "market " << j;
    for (size_t a = 1; a < groups.size(); ++a)
      EXPECT_GE(groups[a].group_price, groups[a - 1].group_price);
    // Maximality: any link joining two different groups carries a real gap.
    Vec z = net_consumption(g, o.x, o.y);
    Vec p = prices(g, z);
    std::vector<int> label(g.n_markets(), -1);
    for (size_t a = 0; a < groups.size(); ++a)
      for (int j : groups[a].markets) label[j] = static_cast<int>(a);
    for (const Link& lk : g.network.links)
      if (label[lk.tail] != label[lk.head])
        EXPECT_GT(std::abs(p[lk.head] - p[lk.tail]), eps);
  }
}

TEST(Cuts, RingHasOneSaturatedCut) {
  Game g = ctest::make_four_market_ring();
  Outcome o = solve_equilibrium(g);
  auto cuts = critical_cuts(g, o, 1e-6, 1e-6);
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_EQ(cuts[0].cut_set, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(cuts[0].out_boundary, (std::vector<int>{6}));
  EXPECT_EQ(cuts[0].in_boundary, (std::vector<int>{0, 5}));
  EXPECT_TRUE(cuts[0].saturated);
}

TEST(Cuts, SingleGroupMeansNoCuts) {
  Game g = ctest::make_two_market_shared(1.0);
  Outcome o = solve_equilibrium(g);
  EXPECT_TRUE(critical_cuts(g, o, 1e-6, 1e-6).empty());
}

TEST(Cuts, TightCapacityYieldsThresholdCut) {
  Game g = ctest::make_two_market_shared(0.2);
  Outcome o = solve_equilibrium(g);
  auto cuts = critical_cuts(g, o, 1e-6, 1e-6);
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_EQ(cuts[0].cut_set, (std::vector<int>{0}));
  EXPECT_EQ(cuts[0].out_boundary, (std::vector<int>{0}));
  EXPECT_EQ(cuts[0].in_boundary, (std::vector<int>{1}));
  EXPECT_TRUE(cuts[0].saturated);
}

TEST(Cuts, WrongFlowsReadUnsaturated) {
  Game g = ctest::make_two_market_shared(0.2);
  Outcome eq = solve_equilibrium(g);
  Outcome o = make_outcome(g, eq.x, Vec::Zero(2));
  auto cuts = critical_cuts(g, o, 1e-6, 1e-6);
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_FALSE(cuts[0].saturated);
}

TEST(DemandSign, NegativeConsumptionIsReportedNotThrown) {
  // With distinct intercepts the cheap market's consumption can genuinely go
  // negative at equilibrium; that is a finding, not an error.
  Game g = ctest::make_two_market_shared(1.0);
  Outcome o = solve_equilibrium(g);
  DemandSignReport rep = demand_sign_check(g, o);
  EXPECT_NEAR(rep.min_z, -1.0 / 15.0, 1e-6);
  EXPECT_EQ(rep.min_z_market, 0);
  EXPECT_EQ(rep.negative_markets, (std::vector<int>{0}));
  EXPECT_FALSE(rep.equal_intercepts);
}

TEST(DemandSign, EqualInterceptsCleanAtEquilibrium) {
  Game g = ctest::make_four_market_ring();
  Outcome o = solve_equilibrium(g);
  DemandSignReport rep = demand_sign_check(g, o);
  EXPECT_TRUE(rep.equal_intercepts);
  EXPECT_TRUE(rep.negative_markets.empty());
  EXPECT_NEAR(rep.min_z, 2.0, 1e-6);
  EXPECT_EQ(rep.min_z_market, 3);
}

TEST(DemandSign, InconsistentNegativesThrow) {
  // Equal intercepts rule out negative consumption at any best-response flow,
  // so a hand-built outcome that shows one is an internal inconsistency.
  Game g = ctest::make_equal_intercepts(1.0);
  Outcome o = make_outcome(g, Mat::Zero(1, 2), (Vec(2) << 1.0, 0.0).finished());
  try {
    demand_sign_check(g, o);
    FAIL() << "expected NonNegativityViolation";
  } catch (const NonNegativityViolation& e) {
    EXPECT_NEAR(e.min_z(), -1.0, 1e-12);
  }
}

TEST(Dot, RingRenderingShowsPricesFlowsAndBottleneck) {
  Game g = ctest::make_four_market_ring();
  Outcome o = solve_equilibrium(g);
  std::string dot = to_dot(g, o, 1e-6, 1e-6);
  EXPECT_NE(dot.find("digraph market_network {"), std::string::npos);
  EXPECT_NE(dot.find("rankdir=LR"), std::string::npos);
  EXPECT_NE(dot.find("m0 [label=\"m1\\np=7.65\"]"), std::string::npos);
  EXPECT_NE(dot.find("m3 [label=\"m4\\np=8.00\"]"), std::string::npos);
  EXPECT_NE(dot.find("m2 -> m3 [label=\"2.00/2.00\", style=dashed]"), std::string::npos);
  EXPECT_NE(dot.find("m3 -> m0 [label=\"0.00/2.00\"]"), std::string::npos);
  EXPECT_EQ(dot.find("color=red"), std::string::npos);
}

TEST(Dot, MismatchesArePaintedRed) {
  Game g = ctest::make_two_market_shared(0.2);
  Outcome eq = solve_equilibrium(g);
  Outcome o = make_outcome(g, eq.x, Vec::Zero(2));
  std::string dot = to_dot(g, o, 1e-6, 1e-6);
  EXPECT_NE(dot.find("color=red"), std::string::npos);
  EXPECT_EQ(dot.find("style=dashed"), std::string::npos);
}

// Flow/price consistency of exact flow best responses, checked link by link
// and again through the report and cut machinery.
TEST(Consistency, BestResponseFlowsRespectPriceOrder) {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 500; ++t) {
    Game g = ctest::sample_game(rng);
    Mat x = ctest::sample_production(rng, g);
    Vec y = market_maker_best_response(g, x).y();
    Outcome o = make_outcome(g, x, y);
    Vec z = net_consumption(g, x, y);
    Vec p = prices(g, z);

    double pscale = 1.0 + (g.n_markets() > 0 ? p.cwiseAbs().maxCoeff() : 0.0);
    double eps_price = 1e-6 * pscale;
    for (int k = 0; k < g.n_links(); ++k) {
      const Link& lk = g.network.links[k];
      double delta = 1e-6 * (1.0 + lk.capacity);
      if (p[lk.tail] < p[lk.head] - eps_price)
        EXPECT_GE(y[k], lk.capacity - delta) << "t=" << t << " link " << k;
      if (p[lk.tail] > p[lk.head] + eps_price)
        EXPECT_LE(y[k], delta) << "t=" << t << " link " << k;
    }

    double cmax = 0.0;
    for (const Link& lk : g.network.links) cmax = std::max(cmax, lk.capacity);
    double eps_flow = 1e-6 * (1.0 + cmax);
    for (const LinkStatus& s : saturation_report(g, o, eps_price, eps_flow))
      EXPECT_NE(s.classification, LinkClass::PriceFlowMismatch) << "t=" << t << " link " << s.link;

    double out_total = 0.0, in_total = 0.0;
    for (const CutReport& cut : critical_cuts(g, o, eps_price, eps_flow)) {
      EXPECT_TRUE(cut.saturated) << "t=" << t;
      for (int k : cut.out_boundary) out_total += y[k];
      for (int k : cut.in_boundary) in_total += y[k];
    }
    // The cheap side exports on net across every separating cut.
    EXPECT_GE(out_total - in_total, -eps_flow) << "t=" << t;
  }
}

TEST(Consistency, EqualInterceptsKeepConsumptionNonNegative) {
  std::mt19937_64 rng(103);
  ctest::SampleOptions so;
  so.equal_intercepts = true;
  for (int t = 0; t < 500; ++t) {
    Game g = ctest::sample_game(rng, so);
    Mat x = ctest::sample_production(rng, g);
    Vec y = market_maker_best_response(g, x).y();
    Vec z = net_consumption(g, x, y);
    EXPECT_GE(z.minCoeff(), -1e-8) << "t=" << t;
    DemandSignReport rep = demand_sign_check(g, make_outcome(g, x, y));
    EXPECT_TRUE(rep.negative_markets.empty()) << "t=" << t;
  }
}

}  // namespace

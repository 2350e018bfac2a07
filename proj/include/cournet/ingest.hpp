#pragma once

// Day-ahead bid ingestion in the GME interchange layout and the estimation
// pipeline that turns bid records plus transit limits into a playable game:
// zonal inverse demand by merit-order regression, per-unit quadratic costs
// from awarded offers.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cournet/model.hpp"

namespace cournet {

enum class BidPurpose { Offer, Bid };

struct BidRecord {
  std::string unit_id;
  BidPurpose purpose = BidPurpose::Offer;
  std::string zone;
  double quantity_offered = 0.0;   // MWh
  double quantity_awarded = 0.0;   // MWh
  double price_offered = 0.0;      // EUR/MWh
  double price_awarded = 0.0;      // EUR/MWh
};

struct ParseIssue {
  long line = 0;
  std::string reason;
};

struct BidParseResult {
  std::vector<BidRecord> records;
  std::vector<ParseIssue> issues;  // malformed rows, never silently dropped
};

struct TransitLimit {
  std::string from_zone;
  std::string to_zone;
  double capacity = 0.0;  // MWh
};

struct ZoneEstimate {
  std::string zone;
  double alpha = 0.0;
  double beta = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

struct UnitEstimate {
  std::string unit;
  std::string zone;
  double gamma = 0.0;
  double theta = 0.0;
  double awarded_price = 0.0;     // aggregated p-hat
  double awarded_quantity = 0.0;  // aggregated q-hat
};

struct EstimatedParams {
  std::vector<ZoneEstimate> zones;
  std::vector<UnitEstimate> units;
};

struct EstimateOptions {
  bool gamma_scaling = true;    // scale the min offer price when deriving gamma
  double gamma_scale = 0.99;
  double price_window = 0.0;    // >0: regress only on points within this band
                                // of the zone's awarded-price reference
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

// Reads the bid CSV. The seven canonical columns must all be present (order
// free, extra columns ignored); every defective row lands in the issue list
// with its line number.
inline BidParseResult parse_bids(std::istream& in) {
  static const char* kCols[7] = {"UNIT_REFERENCE_NO", "PURPOSE_CD",          "ZONE_CD",
                                 "QUANTITY_NO",       "AWARDED_QUANTITY_NO", "ENERGY_PRICE_NO",
                                 "AWARDED_PRICE_NO"};
  std::string line;
  if (!std::getline(in, line)) throw MissingColumn(kCols[0]);
  auto header = detail::split_csv(line);
  int col[7];
  for (int c = 0; c < 7; ++c) {
    col[c] = -1;
    for (size_t h = 0; h < header.size(); ++h)
      if (detail::upper(header[h]) == kCols[c]) col[c] = static_cast<int>(h);
    if (col[c] < 0) throw MissingColumn(kCols[c]);
  }

  BidParseResult res;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv(line);
    auto bad = [&](const std::string& why) { res.issues.push_back({lineno, why}); };
    if (f.size() < header.size()) {
      bad("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
      continue;
    }
    BidRecord r;
    r.unit_id = f[col[0]];
    r.zone = f[col[2]];
    std::string purpose = detail::upper(f[col[1]]);
    if (purpose == "OFF" || purpose == "OFFER")
      r.purpose = BidPurpose::Offer;
    else if (purpose == "BID")
      r.purpose = BidPurpose::Bid;
    else {
      bad("PURPOSE_CD must be OFF or BID, got '" + f[col[1]] + "'");
      continue;
    }
    if (r.zone.empty()) {
      bad("empty ZONE_CD");
      continue;
    }
    if (!detail::parse_double(f[col[3]], r.quantity_offered) ||
        !detail::parse_double(f[col[4]], r.quantity_awarded) ||
        !detail::parse_double(f[col[5]], r.price_offered) ||
        !detail::parse_double(f[col[6]], r.price_awarded)) {
      bad("non-numeric quantity or price");
      continue;
    }
    if (r.quantity_offered < 0.0 || r.quantity_awarded < 0.0) {
      bad("negative quantity");
      continue;
    }
    if (r.price_offered < 0.0 || r.price_awarded < 0.0) {
      bad("negative price");
      continue;
    }
    if (r.quantity_awarded > r.quantity_offered * (1.0 + 1e-9) + 1e-9) {
      bad("awarded quantity exceeds offered quantity");
      continue;
    }
    res.records.push_back(std::move(r));
  }
  return res;
}

// Transit limits: from_zone,to_zone,capacity_mwh. Small curated files, so a
// defect throws instead of accumulating.
inline std::vector<TransitLimit> parse_transit_limits(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MissingColumn("from_zone");
  auto header = detail::split_csv(line);
  int cf = -1, ct = -1, cc = -1;
  for (size_t h = 0; h < header.size(); ++h) {
    std::string u = detail::upper(header[h]);
    if (u == "FROM_ZONE") cf = static_cast<int>(h);
    if (u == "TO_ZONE") ct = static_cast<int>(h);
    if (u == "CAPACITY_MWH") cc = static_cast<int>(h);
  }
  if (cf < 0) throw MissingColumn("from_zone");
  if (ct < 0) throw MissingColumn("to_zone");
  if (cc < 0) throw MissingColumn("capacity_mwh");

  std::vector<TransitLimit> out;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() < header.size()) throw MalformedRow(lineno, "missing fields");
    TransitLimit t;
    t.from_zone = f[cf];
    t.to_zone = f[ct];
    if (t.from_zone.empty() || t.to_zone.empty()) throw MalformedRow(lineno, "empty zone");
    if (!detail::parse_double(f[cc], t.capacity)) throw MalformedRow(lineno, "bad capacity");
    if (t.capacity < 0.0) throw MalformedRow(lineno, "negative capacity");
    out.push_back(std::move(t));
  }
  return out;
}

namespace detail {

// Zone's awarded-price reference for the optional regression window:
// quantity-weighted mean awarded offer price, falling back to the mean
// purchase-bid price when nothing was awarded.
inline double awarded_price_reference(const std::vector<BidRecord>& records, const std::string& zone) {
  double wsum = 0.0, qsum = 0.0, psum = 0.0;
  long bids = 0;
  for (const BidRecord& r : records) {
    if (r.zone != zone) continue;
    if (r.purpose == BidPurpose::Offer && r.quantity_awarded > 0.0) {
      wsum += r.price_awarded * r.quantity_awarded;
      qsum += r.quantity_awarded;
    }
    if (r.purpose == BidPurpose::Bid) {
      psum += r.price_offered;
      ++bids;
    }
  }
  if (qsum > 0.0) return wsum / qsum;
  return bids > 0 ? psum / static_cast<double>(bids) : 0.0;
}

}  // namespace detail

// Zonal inverse demand: purchase bids sorted by price (highest willingness
// first), quantities accumulated into a merit-order curve, then ordinary
// least squares of price on cumulative quantity. Slope must come out
// negative; its magnitude is beta, the intercept is alpha.
inline ZoneEstimate estimate_demand(const std::vector<BidRecord>& records, const std::string& zone,
                                    const EstimateOptions& opts = {}) {
  std::vector<const BidRecord*> bids;
  for (const BidRecord& r : records)
    if (r.zone == zone && r.purpose == BidPurpose::Bid) bids.push_back(&r);
  std::stable_sort(bids.begin(), bids.end(),
                   [](const BidRecord* a, const BidRecord* b) { return a->price_offered > b->price_offered; });

  double ref = opts.price_window > 0.0 ? detail::awarded_price_reference(records, zone) : 0.0;
  std::vector<std::pair<double, double>> pts;  // (cumulative quantity, price)
  double cum = 0.0;
  for (const BidRecord* r : bids) {
    cum += r->quantity_offered;
    if (opts.price_window > 0.0 && std::abs(r->price_offered - ref) > opts.price_window) continue;
    pts.emplace_back(cum, r->price_offered);
  }
  if (pts.size() < 2) throw InsufficientData(zone);

  double n = static_cast<double>(pts.size());
  double sx = 0.0, sy = 0.0;
  for (auto& [q, p] : pts) {
    sx += q;
    sy += p;
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto& [q, p] : pts) {
    sxx += (q - mx) * (q - mx);
    sxy += (q - mx) * (p - my);
    syy += (p - my) * (p - my);
  }
  if (sxx <= 0.0) throw InsufficientData(zone);
  double slope = sxy / sxx;
  if (slope >= 0.0) throw NonDecreasingCurve(zone);

  ZoneEstimate est;
  est.zone = zone;
  est.beta = -slope;
  est.alpha = my - slope * mx;
  est.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  est.points = static_cast<int>(pts.size());
  return est;
}

// Per-unit quadratic cost from its offers: the linear coefficient is the
// (optionally scaled) cheapest price the unit ever asked, and the quadratic
// coefficient makes the unit's marginal cost meet its awarded price at its
// awarded quantity. Multiple awarded offers aggregate by quantity weight.
inline UnitEstimate estimate_costs(const std::vector<BidRecord>& records, const std::string& unit,
                                   const EstimateOptions& opts = {}) {
  double min_price = std::numeric_limits<double>::infinity();
  double q_hat = 0.0, pw = 0.0;
  std::string zone;
  for (const BidRecord& r : records) {
    if (r.unit_id != unit || r.purpose != BidPurpose::Offer) continue;
    if (zone.empty()) zone = r.zone;
    min_price = std::min(min_price, r.price_offered);
    if (r.quantity_awarded > 0.0) {
      q_hat += r.quantity_awarded;
      pw += r.price_awarded * r.quantity_awarded;
    }
  }
  if (q_hat <= 0.0) throw NoAwardedQuantity(unit);
  double p_hat = pw / q_hat;
  double gamma = (opts.gamma_scaling ? opts.gamma_scale : 1.0) * min_price;
  if (p_hat <= gamma) throw NonPositiveTheta(unit);

  UnitEstimate est;
  est.unit = unit;
  est.zone = zone;
  est.gamma = gamma;
  est.theta = (p_hat - gamma) / (2.0 * q_hat);
  est.awarded_price = p_hat;
  est.awarded_quantity = q_hat;
  return est;
}

struct BuildResult {
  Game game;
  EstimatedParams params;
};

// Assemble the game: every zone seen in the bid stream becomes a market (in
// first-appearance order), every unit with offered quantity becomes a
// single-market producer, every transit row becomes a directed link (a
// missing reverse direction is filled in symmetrically). Parameters are
// rounded to 9 significant digits so the game survives a file round trip
// unchanged.
inline BuildResult build_game(const std::vector<BidRecord>& records,
                              const std::vector<TransitLimit>& limits,
                              const EstimateOptions& opts = {}) {
  std::vector<std::string> zones;
  std::map<std::string, int> zone_index;
  for (const BidRecord& r : records)
    if (zone_index.emplace(r.zone, static_cast<int>(zones.size())).second) zones.push_back(r.zone);

  std::vector<std::string> units;
  std::map<std::string, int> unit_index;
  for (const BidRecord& r : records) {
    if (r.purpose != BidPurpose::Offer || r.quantity_offered <= 0.0) continue;
    if (unit_index.emplace(r.unit_id, static_cast<int>(units.size())).second) units.push_back(r.unit_id);
  }

  const int m = static_cast<int>(zones.size());
  const int n = static_cast<int>(units.size());
  BuildResult out;
  Game& g = out.game;
  g.network.n_markets = m;
  g.network.n_producers = n;
  g.network.market_ids = zones;
  g.network.producer_ids = units;
  g.network.access = Mat::Zero(n, m);

  g.demands.resize(m);
  for (int j = 0; j < m; ++j) {
    ZoneEstimate est = estimate_demand(records, zones[j], opts);
    g.demands[j].alpha = detail::round_sig(est.alpha, 9);
    g.demands[j].beta = detail::round_sig(est.beta, 9);
    out.params.zones.push_back(est);
  }

  g.costs.resize(n);
  for (int i = 0; i < n; ++i) {
    UnitEstimate est = estimate_costs(records, units[i], opts);
    int j = zone_index.at(est.zone);
    g.network.access(i, j) = 1.0;
    g.costs[i].theta = Mat::Zero(m, m);
    g.costs[i].theta(j, j) = detail::round_sig(est.theta, 9);
    g.costs[i].gamma = Vec::Zero(m);
    g.costs[i].gamma[j] = detail::round_sig(est.gamma, 9);
    out.params.units.push_back(est);
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (const TransitLimit& t : limits) seen.insert({t.from_zone, t.to_zone});
  std::vector<TransitLimit> all = limits;
  for (const TransitLimit& t : limits)
    if (!seen.count({t.to_zone, t.from_zone})) {
      all.push_back({t.to_zone, t.from_zone, t.capacity});
      seen.insert({t.to_zone, t.from_zone});
    }
  for (const TransitLimit& t : all) {
    auto itf = zone_index.find(t.from_zone);
    auto itt = zone_index.find(t.to_zone);
    if (itf == zone_index.end()) throw UnknownZone(t.from_zone);
    if (itt == zone_index.end()) throw UnknownZone(t.to_zone);
    Link lk;
    lk.id = t.from_zone + "->" + t.to_zone;
    lk.tail = itf->second;
    lk.head = itt->second;
    lk.capacity = detail::round_sig(t.capacity, 9);
    g.network.links.push_back(std::move(lk));
  }

  g = validate_game(std::move(g));
  return out;
}

}  // namespace cournet

#pragma once

// Structured-file layer: game files, outcome files, estimation audits. JSON
// throughout, strict on unknown keys for games (typos in hand-written files
// must not pass silently). Machine files carry numbers rounded to 9
// significant digits; identical inputs therefore produce identical bytes,
// manifest timestamp aside.

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cournet/ingest.hpp"
#include "cournet/model.hpp"
#include "cournet/solver.hpp"

namespace cournet {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "cournet 0.1.0";

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::map<std::string, std::string> options;
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
  std::string timestamp;  // UTC, filled at write time
};

namespace detail {

inline void expect_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw FileFormatError(where + " must be an object");
  for (auto& [key, val] : obj.items())
    if (!allowed.count(key)) throw FileFormatError("unknown key '" + key + "' in " + where);
}

inline double num(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw FileFormatError("missing '" + key + "' in " + where);
  if (!obj[key].is_number()) throw FileFormatError("'" + key + "' in " + where + " must be a number");
  return obj[key].get<double>();
}

inline std::string str(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw FileFormatError("missing '" + key + "' in " + where);
  if (!obj[key].is_string()) throw FileFormatError("'" + key + "' in " + where + " must be a string");
  return obj[key].get<std::string>();
}

inline std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json manifest_json(const RunManifest& man) {
  Json j;
  j["command"] = man.command;
  j["inputs"] = man.inputs;
  Json opts = Json::object();
  for (const auto& [k, v] : man.options) opts[k] = v;
  j["options"] = opts;
  j["seed"] = man.seed;
  j["version"] = man.version;
  j["timestamp"] = man.timestamp.empty() ? utc_now() : man.timestamp;
  return j;
}

inline Json vec_json(const Vec& v, int digits = 9) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(round_sig(v[i], digits));
  return a;
}

inline Vec json_vec(const Json& a, const std::string& where) {
  if (!a.is_array()) throw FileFormatError(where + " must be an array");
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw FileFormatError(where + " must hold numbers");
    v[static_cast<int>(i)] = a[i].get<double>();
  }
  return v;
}

}  // namespace detail

// --- game files -------------------------------------------------------------

inline Json game_to_json(const Game& game) {
  const MarketNetwork& net = game.network;
  Json j;
  j["markets"] = Json::array();
  for (int jx = 0; jx < net.n_markets; ++jx)
    j["markets"].push_back({{"id", net.market_name(jx)},
                            {"alpha", detail::round_sig(game.demands[jx].alpha, 9)},
                            {"beta", detail::round_sig(game.demands[jx].beta, 9)}});
  j["producers"] = Json::array();
  for (int i = 0; i < net.n_producers; ++i) {
    Json p;
    p["id"] = net.producer_name(i);
    p["gamma"] = detail::vec_json(game.costs[i].gamma);
    const Mat& th = game.costs[i].theta;
    bool diagonal = true;
    for (int a = 0; a < th.rows() && diagonal; ++a)
      for (int b = 0; b < th.cols(); ++b)
        if (a != b && th(a, b) != 0.0) {
          diagonal = false;
          break;
        }
    if (diagonal) {
      p["theta"] = {{"diagonal", detail::vec_json(th.diagonal())}};
    } else {
      Json rows = Json::array();
      for (int a = 0; a < th.rows(); ++a) rows.push_back(detail::vec_json(th.row(a).transpose()));
      p["theta"] = {{"full", rows}};
    }
    j["producers"].push_back(std::move(p));
  }
  j["access"] = Json::array();
  for (int i = 0; i < net.n_producers; ++i)
    for (int jx = 0; jx < net.n_markets; ++jx)
      if (net.has_access(i, jx)) j["access"].push_back({net.producer_name(i), net.market_name(jx)});
  j["links"] = Json::array();
  for (const Link& lk : net.links)
    j["links"].push_back({{"id", lk.id},
                          {"tail", net.market_name(lk.tail)},
                          {"head", net.market_name(lk.head)},
                          {"capacity", detail::round_sig(lk.capacity, 9)}});
  return j;
}

// Strict parse: unknown keys anywhere are an error, ids must resolve, and the
// result goes through full validation before it is returned.
inline Game game_from_json(const Json& j) {
  detail::expect_keys(j, {"markets", "producers", "access", "links"}, "game file");
  for (const char* key : {"markets", "producers", "access", "links"})
    if (!j.contains(key) || !j[key].is_array())
      throw FileFormatError(std::string("game file needs array '") + key + "'");

  Game g;
  MarketNetwork& net = g.network;
  std::map<std::string, int> market_index, producer_index;
  for (const Json& mj : j["markets"]) {
    detail::expect_keys(mj, {"id", "alpha", "beta"}, "market");
    std::string id = detail::str(mj, "id", "market");
    if (!market_index.emplace(id, net.n_markets).second)
      throw FileFormatError("duplicate market id '" + id + "'");
    net.market_ids.push_back(id);
    g.demands.push_back({detail::num(mj, "alpha", "market " + id), detail::num(mj, "beta", "market " + id)});
    ++net.n_markets;
  }
  const int m = net.n_markets;

  for (const Json& pj : j["producers"]) {
    detail::expect_keys(pj, {"id", "gamma", "theta"}, "producer");
    std::string id = detail::str(pj, "id", "producer");
    if (!producer_index.emplace(id, net.n_producers).second)
      throw FileFormatError("duplicate producer id '" + id + "'");
    net.producer_ids.push_back(id);
    QuadraticCost cost;
    if (!pj.contains("gamma")) throw FileFormatError("producer " + id + " missing gamma");
    cost.gamma = detail::json_vec(pj["gamma"], "gamma of " + id);
    if (cost.gamma.size() != m) throw FileFormatError("gamma of " + id + " must have one entry per market");
    if (!pj.contains("theta")) throw FileFormatError("producer " + id + " missing theta");
    const Json& tj = pj["theta"];
    detail::expect_keys(tj, {"diagonal", "full"}, "theta of " + id);
    if (tj.contains("diagonal") == tj.contains("full"))
      throw FileFormatError("theta of " + id + " needs exactly one of 'diagonal' or 'full'");
    if (tj.contains("diagonal")) {
      Vec d = detail::json_vec(tj["diagonal"], "theta diagonal of " + id);
      if (d.size() != m) throw FileFormatError("theta diagonal of " + id + " must have one entry per market");
      cost.theta = d.asDiagonal();
    } else {
      const Json& rows = tj["full"];
      if (!rows.is_array() || static_cast<int>(rows.size()) != m)
        throw FileFormatError("theta full of " + id + " must be a " + std::to_string(m) + "-row matrix");
      cost.theta = Mat(m, m);
      for (int a = 0; a < m; ++a) {
        Vec row = detail::json_vec(rows[a], "theta row of " + id);
        if (row.size() != m) throw FileFormatError("theta row of " + id + " has wrong length");
        cost.theta.row(a) = row.transpose();
      }
    }
    g.costs.push_back(std::move(cost));
    ++net.n_producers;
  }

  net.access = Mat::Zero(net.n_producers, m);
  for (const Json& aj : j["access"]) {
    if (!aj.is_array() || aj.size() != 2 || !aj[0].is_string() || !aj[1].is_string())
      throw FileFormatError("access entries must be [producer_id, market_id] pairs");
    auto pi = producer_index.find(aj[0].get<std::string>());
    auto mi = market_index.find(aj[1].get<std::string>());
    if (pi == producer_index.end()) throw FileFormatError("access references unknown producer '" +
                                                          aj[0].get<std::string>() + "'");
    if (mi == market_index.end())
      throw FileFormatError("access references unknown market '" + aj[1].get<std::string>() + "'");
    net.access(pi->second, mi->second) = 1.0;
  }

  for (const Json& lj : j["links"]) {
    detail::expect_keys(lj, {"id", "tail", "head", "capacity"}, "link");
    Link lk;
    lk.id = detail::str(lj, "id", "link");
    std::string tail = detail::str(lj, "tail", "link " + lk.id);
    std::string head = detail::str(lj, "head", "link " + lk.id);
    auto ti = market_index.find(tail), hi = market_index.find(head);
    if (ti == market_index.end()) throw FileFormatError("link " + lk.id + " tail '" + tail + "' unknown");
    if (hi == market_index.end()) throw FileFormatError("link " + lk.id + " head '" + head + "' unknown");
    lk.tail = ti->second;
    lk.head = hi->second;
    lk.capacity = detail::num(lj, "capacity", "link " + lk.id);
    net.links.push_back(std::move(lk));
  }

  return validate_game(std::move(g));
}

inline Game load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot read game file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& ex) {
    throw FileFormatError("game file " + path + " is not valid JSON: " + ex.what());
  }
  return game_from_json(j);
}

inline void save_game(const Game& game, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write " + path);
  out << game_to_json(game).dump(2) << "\n";
}

// --- outcome files ----------------------------------------------------------

inline Json outcome_to_json(const Game& game, const Outcome& o, const RunManifest& man) {
  Json j;
  j["schema"] = "cournet-outcome-v1";
  j["manifest"] = detail::manifest_json(man);
  j["markets"] = Json::array();
  for (int jx = 0; jx < game.n_markets(); ++jx) j["markets"].push_back(game.network.market_name(jx));
  j["producers"] = Json::array();
  for (int i = 0; i < game.n_producers(); ++i) j["producers"].push_back(game.network.producer_name(i));
  j["links"] = Json::array();
  for (const Link& lk : game.network.links) j["links"].push_back(lk.id);
  Json xr = Json::array();
  for (int i = 0; i < game.n_producers(); ++i) xr.push_back(detail::vec_json(o.x.row(i).transpose()));
  j["x"] = xr;
  j["y"] = detail::vec_json(o.y);
  j["z"] = detail::vec_json(o.z);
  j["prices"] = detail::vec_json(o.prices);
  j["potential"] = detail::round_sig(o.potential_value, 9);
  j["welfare"] = detail::round_sig(o.welfare_value, 9);
  j["producer_utilities"] = detail::vec_json(o.producer_utilities);
  j["stats"] = {{"iterations", o.stats.iterations},
                {"final_pg_norm", detail::round_sig(o.stats.final_pg_norm, 9)},
                {"restarts", o.stats.restarts},
                {"restart_x_spread", detail::round_sig(o.stats.restart_x_spread, 9)},
                {"restart_flow_spread", detail::round_sig(o.stats.restart_flow_spread, 9)}};
  return j;
}

// Loads (x, y) and rebuilds every derived field from the game; stored ids
// must match the game or the files are not talking about the same problem.
inline Outcome outcome_from_json(const Game& game, const Json& j) {
  if (!j.is_object() || j.value("schema", "") != std::string("cournet-outcome-v1"))
    throw FileFormatError("not an outcome file (schema mismatch)");
  for (const char* key : {"markets", "producers", "x", "y"})
    if (!j.contains(key)) throw FileFormatError(std::string("outcome file missing '") + key + "'");
  if (static_cast<int>(j["markets"].size()) != game.n_markets() ||
      static_cast<int>(j["producers"].size()) != game.n_producers())
    throw DimensionMismatch("outcome file dimensions do not match the game");
  for (int jx = 0; jx < game.n_markets(); ++jx)
    if (j["markets"][jx].get<std::string>() != game.network.market_name(jx))
      throw DimensionMismatch("outcome market ids do not match the game");
  for (int i = 0; i < game.n_producers(); ++i)
    if (j["producers"][i].get<std::string>() != game.network.producer_name(i))
      throw DimensionMismatch("outcome producer ids do not match the game");

  if (!j["x"].is_array() || static_cast<int>(j["x"].size()) != game.n_producers())
    throw FileFormatError("outcome x must have one row per producer");
  Mat x(game.n_producers(), game.n_markets());
  for (int i = 0; i < game.n_producers(); ++i) {
    Vec row = detail::json_vec(j["x"][i], "outcome x row");
    if (row.size() != game.n_markets()) throw DimensionMismatch("outcome x row length");
    x.row(i) = row.transpose();
  }
  Vec y = detail::json_vec(j["y"], "outcome y");
  if (y.size() != game.n_links()) throw DimensionMismatch("outcome y length");

  SolverStats stats;
  if (j.contains("stats")) {
    const Json& s = j["stats"];
    stats.iterations = s.value("iterations", 0L);
    stats.final_pg_norm = s.value("final_pg_norm", 0.0);
    stats.wall_time_s = s.value("wall_time_s", 0.0);
    stats.restarts = s.value("restarts", 1);
  }
  return make_outcome(game, std::move(x), std::move(y), stats);
}

inline Outcome load_outcome(const Game& game, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot read outcome file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& ex) {
    throw FileFormatError("outcome file " + path + " is not valid JSON: " + ex.what());
  }
  return outcome_from_json(game, j);
}

inline void save_outcome(const Game& game, const Outcome& o, const RunManifest& man,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write " + path);
  out << outcome_to_json(game, o, man).dump(2) << "\n";
}

// --- estimation audit -------------------------------------------------------

inline Json audit_to_json(const EstimatedParams& params, const RunManifest& man) {
  Json j;
  j["schema"] = "cournet-estimate-audit-v1";
  j["manifest"] = detail::manifest_json(man);
  j["zones"] = Json::array();
  for (const ZoneEstimate& z : params.zones)
    j["zones"].push_back({{"id", z.zone},
                          {"alpha", detail::round_sig(z.alpha, 9)},
                          {"beta", detail::round_sig(z.beta, 9)},
                          {"r_squared", detail::round_sig(z.r_squared, 9)},
                          {"points", z.points}});
  j["units"] = Json::array();
  for (const UnitEstimate& u : params.units)
    j["units"].push_back({{"id", u.unit},
                          {"zone", u.zone},
                          {"gamma", detail::round_sig(u.gamma, 9)},
                          {"theta", detail::round_sig(u.theta, 9)},
                          {"awarded_price", detail::round_sig(u.awarded_price, 9)},
                          {"awarded_quantity", detail::round_sig(u.awarded_quantity, 9)}});
  return j;
}

}  // namespace cournet

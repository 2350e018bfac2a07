// Command-line front end: solve, verify, analyze, estimate, report.
// Exit codes: 0 success, 2 bad input or data, 3 solver non-convergence,
// 4 verification or consistency failure.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cournet/cournet.hpp"

namespace {

using cournet::Game;
using cournet::Outcome;
using cournet::Vec;

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kNoConvergence = 3;
constexpr int kNotVerified = 4;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string num9(double v) {
  // Machine-file precision: 9 significant digits, shortest form.
  std::ostringstream os;
  os.precision(9);
  os << cournet::detail::round_sig(v, 9);
  return os.str();
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("CNET_THREADS")) {
    int k = std::atoi(env);
    if (k > 0) Eigen::setNbThreads(k);
  }
}

// --- solve ------------------------------------------------------------------

struct SolveArgs {
  std::string game_file;
  std::string out_file;
  double tol = 1e-9;
  long max_iters = 200000;
  int restarts = 1;
  std::uint64_t seed = 0;
  double grid = 0.0;
};

void print_outcome_tables(const Game& game, const Outcome& o) {
  std::printf("market        price            z\n");
  for (int j = 0; j < game.n_markets(); ++j)
    std::printf("%-10s %10.2f %12.2f\n", game.network.market_name(j).c_str(), o.prices[j], o.z[j]);
  if (game.n_producers() > 0) {
    std::printf("\nproducer      total\n");
    for (int i = 0; i < game.n_producers(); ++i)
      std::printf("%-10s %10.2f\n", game.network.producer_name(i).c_str(), o.x.row(i).sum());
  }
  if (game.n_links() > 0) {
    std::printf("\nlink          flow        cap\n");
    for (int k = 0; k < game.n_links(); ++k) {
      const cournet::Link& lk = game.network.links[k];
      std::printf("%-10s %10.2f %10.2f\n", lk.id.c_str(), o.y[k], lk.capacity);
    }
  }
  std::printf("\npotential %s   welfare %s\n", num9(o.potential_value).c_str(),
              num9(o.welfare_value).c_str());
  std::printf("iterations %ld   pg %.2e   time %.3fs\n", o.stats.iterations,
              o.stats.final_pg_norm, o.stats.wall_time_s);
}

int cmd_solve(const SolveArgs& a) {
  Game game = cournet::load_game(a.game_file);
  cournet::SolveOptions opts;
  opts.tol_pg = a.tol;
  opts.max_iters = a.max_iters;
  opts.restarts = a.restarts;
  opts.seed = a.seed;

  Outcome o = a.grid > 0.0 ? cournet::brute_force_equilibrium(game, a.grid)
                           : cournet::solve_equilibrium(game, opts);
  print_outcome_tables(game, o);
  if (a.restarts > 1)
    std::printf("restarts %d agree: x spread %.2e, net flow spread %.2e\n", a.restarts,
                o.stats.restart_x_spread, o.stats.restart_flow_spread);

  if (!a.out_file.empty()) {
    cournet::RunManifest man;
    man.command = a.grid > 0.0 ? "solve --grid" : "solve";
    man.inputs = {a.game_file};
    man.options = {{"tol", num9(a.tol)},
                   {"max_iters", std::to_string(a.max_iters)},
                   {"restarts", std::to_string(a.restarts)}};
    if (a.grid > 0.0) man.options["grid"] = num9(a.grid);
    man.seed = a.seed;
    cournet::save_outcome(game, o, man, a.out_file);
    std::printf("wrote %s\n", a.out_file.c_str());
  }
  return kOk;
}

// --- verify -----------------------------------------------------------------

int cmd_verify(const std::string& game_file, const std::string& outcome_file, double tol) {
  Game game = cournet::load_game(game_file);
  Outcome o = cournet::load_outcome(game, outcome_file);
  cournet::VerificationReport rep = cournet::verify_equilibrium(game, o, tol);

  std::printf("max producer improvement   %.2e", rep.max_producer_improvement);
  if (rep.best_improving_producer >= 0)
    std::printf("  (%s)", game.network.producer_name(rep.best_improving_producer).c_str());
  std::printf("\nmarket maker improvement   %.2e\n", rep.market_maker_improvement);
  std::printf("stationarity residual      %.2e\n", rep.stationarity_residual);
  std::printf("equilibrium: %s (tol %g)\n", rep.is_equilibrium ? "yes" : "no", tol);
  return rep.is_equilibrium ? kOk : kNotVerified;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  std::string game_file;
  std::string outcome_file;
  std::string dot_file;
  double tol = 1e-6;
  double eps_price = 1e-6;
  double eps_flow = 1e-6;
};

int cmd_analyze(const AnalyzeArgs& a) {
  Game game = cournet::load_game(a.game_file);
  Outcome o = cournet::load_outcome(game, a.outcome_file);

  cournet::VerificationReport rep = cournet::verify_equilibrium(game, o, a.tol);
  if (!rep.is_equilibrium) {
    std::fprintf(stderr, "error: outcome does not verify at tol %g; analysis needs an equilibrium\n",
                 a.tol);
    return kNotVerified;
  }

  std::vector<cournet::PriceGroup> groups = cournet::price_groups(game, o, a.eps_price);
  std::printf("price groups\n");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<std::string> names;
    for (int j : groups[g].markets) names.push_back(game.network.market_name(j));
    std::printf("  group %zu  p=%.2f  {%s}\n", g + 1, groups[g].group_price,
                join(names, ", ").c_str());
  }

  bool mismatch = false;
  if (game.n_links() > 0) {
    std::printf("\nlink            from -> to       p_tail  p_head       flow        cap  status\n");
    for (const cournet::LinkStatus& st : cournet::saturation_report(game, o, a.eps_price, a.eps_flow)) {
      const cournet::Link& lk = game.network.links[st.link];
      std::printf("%-12s %7s -> %-7s %7.2f %7.2f %10.2f %10.2f  %s\n", lk.id.c_str(),
                  game.network.market_name(lk.tail).c_str(),
                  game.network.market_name(lk.head).c_str(), st.price_tail, st.price_head, st.flow,
                  lk.capacity, cournet::to_string(st.classification));
      mismatch |= st.classification == cournet::LinkClass::PriceFlowMismatch;
    }
  }

  std::printf("\ncritical cuts\n");
  std::vector<cournet::CutReport> cuts = cournet::critical_cuts(game, o, a.eps_price, a.eps_flow);
  if (cuts.empty()) std::printf("  none\n");
  for (const cournet::CutReport& cut : cuts) {
    std::vector<std::string> names, in_names, out_names;
    for (int j : cut.cut_set) names.push_back(game.network.market_name(j));
    for (int k : cut.in_boundary) in_names.push_back(game.network.links[k].id);
    for (int k : cut.out_boundary) out_names.push_back(game.network.links[k].id);
    std::printf("  cut {%s}  in={%s}  out={%s}  saturated=%s\n", join(names, ", ").c_str(),
                join(in_names, ", ").c_str(), join(out_names, ", ").c_str(),
                cut.saturated ? "yes" : "no");
  }

  cournet::DemandSignReport sign = cournet::demand_sign_check(game, o);
  std::printf("\nmin consumption %.2f at %s\n", sign.min_z,
              game.network.market_name(sign.min_z_market).c_str());
  if (sign.negative_markets.empty()) {
    std::printf("negative consumption: none\n");
  } else {
    std::vector<std::string> names;
    for (int j : sign.negative_markets) names.push_back(game.network.market_name(j));
    std::printf("negative consumption: {%s}%s\n", join(names, ", ").c_str(),
                sign.equal_intercepts ? "  (unexpected under equal intercepts)" : "");
  }

  std::string dot = cournet::to_dot(game, o, a.eps_price, a.eps_flow);
  if (a.dot_file.empty()) {
    std::printf("\n%s", dot.c_str());
  } else {
    std::ofstream out(a.dot_file);
    if (!out) throw cournet::FileFormatError("cannot write " + a.dot_file);
    out << dot;
    std::printf("\nwrote %s\n", a.dot_file.c_str());
  }

  if (mismatch) {
    std::fprintf(stderr, "error: price/flow mismatch on a link; outcome or tolerances are bad\n");
    return kNotVerified;
  }
  return kOk;
}

// --- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string bids_file;
  std::string limits_file;
  std::string out_file;
  std::string audit_file;
  bool no_gamma_scaling = false;
  double price_window = 0.0;
};

int cmd_estimate(const EstimateArgs& a) {
  std::ifstream bids_in(a.bids_file);
  if (!bids_in) throw cournet::FileFormatError("cannot read bids file " + a.bids_file);
  cournet::BidParseResult bids = cournet::parse_bids(bids_in);
  for (const cournet::ParseIssue& issue : bids.issues)
    std::fprintf(stderr, "warning: bids line %ld: %s\n", issue.line, issue.reason.c_str());
  if (bids.records.empty()) {
    std::fprintf(stderr, "error: no usable bid records in %s\n", a.bids_file.c_str());
    return kBadInput;
  }

  std::vector<cournet::TransitLimit> limits;
  if (!a.limits_file.empty()) {
    std::ifstream limits_in(a.limits_file);
    if (!limits_in) throw cournet::FileFormatError("cannot read limits file " + a.limits_file);
    limits = cournet::parse_transit_limits(limits_in);
  }

  cournet::EstimateOptions opts;
  opts.gamma_scaling = !a.no_gamma_scaling;
  opts.price_window = a.price_window;
  cournet::BuildResult built = cournet::build_game(bids.records, limits, opts);

  std::map<std::string, int> units_per_zone;
  for (const cournet::UnitEstimate& u : built.params.units) ++units_per_zone[u.zone];
  std::printf("zone          alpha     beta     r2  points  units\n");
  for (const cournet::ZoneEstimate& zn : built.params.zones)
    std::printf("%-10s %10.2f %8.2f %6.2f %7d %6d\n", zn.zone.c_str(), zn.alpha, zn.beta,
                zn.r_squared, zn.points, units_per_zone[zn.zone]);
  std::printf("%d markets, %d producers, %d links\n", built.game.n_markets(),
              built.game.n_producers(), built.game.n_links());

  cournet::RunManifest man;
  man.command = "estimate";
  man.inputs = {a.bids_file};
  if (!a.limits_file.empty()) man.inputs.push_back(a.limits_file);
  man.options = {{"gamma_scaling", opts.gamma_scaling ? "true" : "false"},
                 {"price_window", num9(a.price_window)}};

  if (!a.out_file.empty()) {
    cournet::save_game(built.game, a.out_file);
    std::printf("wrote %s\n", a.out_file.c_str());
  }
  if (!a.audit_file.empty()) {
    std::ofstream out(a.audit_file);
    if (!out) throw cournet::FileFormatError("cannot write " + a.audit_file);
    out << cournet::audit_to_json(built.params, man).dump(2) << "\n";
    std::printf("wrote %s\n", a.audit_file.c_str());
  }
  return kOk;
}

// --- report -----------------------------------------------------------------

int cmd_report(const std::vector<std::string>& files, const std::string& out_file) {
  using Json = cournet::Json;
  std::vector<Json> docs;
  for (const std::string& path : files) {
    std::ifstream in(path);
    if (!in) throw cournet::FileFormatError("cannot read outcome file " + path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const std::exception& ex) {
      throw cournet::FileFormatError("outcome file " + path + " is not valid JSON: " + ex.what());
    }
    if (!j.is_object() || j.value("schema", "") != std::string("cournet-outcome-v1"))
      throw cournet::FileFormatError(path + " is not an outcome file (schema mismatch)");
    for (const char* key : {"markets", "links", "prices", "z", "y"})
      if (!j.contains(key))
        throw cournet::FileFormatError("outcome file " + path + " missing '" + key + "'");
    docs.push_back(std::move(j));
  }
  for (std::size_t f = 1; f < docs.size(); ++f)
    if (docs[f]["markets"] != docs[0]["markets"] || docs[f]["links"] != docs[0]["links"])
      throw cournet::DimensionMismatch("outcome files describe different games: " + files[f] +
                                       " vs " + files[0]);

  std::ostringstream csv;
  csv << "metric";
  for (const std::string& path : files) csv << "," << path;
  csv << "\n";
  const Json& markets = docs[0]["markets"];
  const Json& links = docs[0]["links"];
  auto row = [&](const std::string& label, const char* key, std::size_t idx) {
    csv << label;
    for (const Json& d : docs) csv << "," << num9(d[key][idx].get<double>());
    csv << "\n";
  };
  for (std::size_t j = 0; j < markets.size(); ++j)
    row("price[" + markets[j].get<std::string>() + "]", "prices", j);
  for (std::size_t j = 0; j < markets.size(); ++j)
    row("z[" + markets[j].get<std::string>() + "]", "z", j);
  for (std::size_t k = 0; k < links.size(); ++k)
    row("flow[" + links[k].get<std::string>() + "]", "y", k);

  if (out_file.empty()) {
    std::fputs(csv.str().c_str(), stdout);
  } else {
    std::ofstream out(out_file);
    if (!out) throw cournet::FileFormatError("cannot write " + out_file);
    out << csv.str();
    std::printf("wrote %s\n", out_file.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"equilibrium engine for capacitated network Cournot markets"};
  app.require_subcommand(1);

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "compute an equilibrium and write the outcome");
  solve->add_option("game", sa.game_file, "game file (JSON)")->required();
  solve->add_option("--tol", sa.tol, "stationarity tolerance");
  solve->add_option("--max-iters", sa.max_iters, "iteration cap");
  solve->add_option("--restarts", sa.restarts, "extra random starts for agreement checking");
  solve->add_option("--seed", sa.seed, "random seed for restarts");
  solve->add_option("--grid", sa.grid, "use the brute-force lattice oracle with this step");
  solve->add_option("--out", sa.out_file, "write the outcome file here");

  std::string vg, vo;
  double vtol = 1e-6;
  CLI::App* verify = app.add_subcommand("verify", "check an outcome is an equilibrium");
  verify->add_option("game", vg, "game file")->required();
  verify->add_option("outcome", vo, "outcome file")->required();
  verify->add_option("--tol", vtol, "relative acceptance tolerance");

  AnalyzeArgs aa;
  CLI::App* analyze = app.add_subcommand("analyze", "price groups, saturation, cuts, DOT graph");
  analyze->add_option("game", aa.game_file, "game file")->required();
  analyze->add_option("outcome", aa.outcome_file, "outcome file")->required();
  analyze->add_option("--tol", aa.tol, "verification tolerance (analysis requires an equilibrium)");
  analyze->add_option("--eps-price", aa.eps_price, "price equality tolerance");
  analyze->add_option("--eps-flow", aa.eps_flow, "flow saturation tolerance");
  analyze->add_option("--dot", aa.dot_file, "write the DOT graph here instead of stdout");

  EstimateArgs ea;
  CLI::App* estimate = app.add_subcommand("estimate", "fit a game from day-ahead bid data");
  estimate->add_option("bids", ea.bids_file, "bids CSV")->required();
  estimate->add_option("limits", ea.limits_file, "transit limits CSV");
  estimate->add_flag("--no-gamma-scaling", ea.no_gamma_scaling,
                     "use raw minimum offer prices for gamma");
  estimate->add_option("--price-window", ea.price_window,
                       "regress only demand points priced within this band");
  estimate->add_option("--out", ea.out_file, "write the estimated game file here");
  estimate->add_option("--audit", ea.audit_file, "write the estimation audit here");

  std::vector<std::string> report_files;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "side-by-side CSV across outcome files");
  report->add_option("outcomes", report_files, "outcome files")->required()->expected(-1);
  report->add_option("--out", report_out, "write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa);
    if (verify->parsed()) return cmd_verify(vg, vo, vtol);
    if (analyze->parsed()) return cmd_analyze(aa);
    if (estimate->parsed()) return cmd_estimate(ea);
    if (report->parsed()) return cmd_report(report_files, report_out);
  } catch (const cournet::NonConvergence& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kNoConvergence;
  } catch (const cournet::NonNegativityViolation& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kNotVerified;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kBadInput;
  }
  return kBadInput;
}

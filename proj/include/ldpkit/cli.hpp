#pragma once

// Command-line front end: argument parsing into a RunConfig, dispatch to the
// library, and JSON / CSV emission.
//
// Exit codes: 0 success, 1 usage error, 2 domain error (the error object
// carries the library's token).

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldpkit/cramer_rate.hpp"
#include "ldpkit/dist_core.hpp"
#include "ldpkit/gartner_ellis.hpp"
#include "ldpkit/io.hpp"
#include "ldpkit/iprojection.hpp"
#include "ldpkit/montecarlo.hpp"
#include "ldpkit/rng.hpp"
#include "ldpkit/sanov_types.hpp"
#include "ldpkit/strong_asymptotics.hpp"

namespace ldpkit::cli {

inline constexpr std::string_view kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Output { json, csv };

struct RunConfig {
  std::string subcommand;
  std::string dist;
  std::vector<std::string> fs;   // statistic specs; empty means identity
  std::string alpha;             // comma-separated
  std::string n;                 // comma-separated
  std::uint64_t N = 100000;
  std::uint64_t seed = 0;
  Output output = Output::json;
  int workers = 1;
  std::optional<double> lambda;
  std::string model;
  std::string kind = "equality";     // rate: equality | upper | lower
  bool inequality = false;           // iproject
  std::string direction = "ge";      // sanov-exact, gibbs
  bool empirical = false;            // tail-is
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"rate",         "tilt",        "iproject",
                                                 "tail-exact",   "tail-mc",     "tail-is",
                                                 "sanov-exact",  "strong-approx", "gibbs",
                                                 "markov-rate",  "markov-tail"};
  return names;
}

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv("LDPKIT_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw UsageError("LDPKIT_SEED must be a nonnegative integer");
    }
  }
  return 0;
}

// Parses argv into a RunConfig. Throws CLI::ParseError for CLI11-level
// problems (unknown flags included) and UsageError for semantic ones.
inline RunConfig parse_command_line(std::vector<std::string> args, CLI::App& app) {
  RunConfig cfg;
  cfg.seed = default_seed();
  app.require_subcommand(1);
  std::string output = "json";

  struct Flags {
    bool dist = false, f = false, alpha = false, n = false, N = false, seed = false, workers = false,
         lambda = false, model = false, kind = false, inequality = false, direction = false, empirical = false;
  };
  auto add = [&](const std::string& name, const std::string& help, Flags fl) {
    CLI::App* sc = app.add_subcommand(name, help);
    if (fl.dist) sc->add_option("--dist", cfg.dist, "distribution literal")->required();
    if (fl.f) sc->add_option("--f", cfg.fs, "statistic: id | affine:a,b | indicator:v1,...");
    if (fl.alpha) sc->add_option("--alpha", cfg.alpha, "threshold(s), comma-separated")->required();
    if (fl.n) sc->add_option("--n", cfg.n, "sample size(s), comma-separated")->required();
    if (fl.N) sc->add_option("--N", cfg.N, "Monte Carlo sample count");
    if (fl.seed) sc->add_option("--seed", cfg.seed, "RNG seed (default $LDPKIT_SEED or 0)");
    if (fl.workers) sc->add_option("--workers", cfg.workers, "worker threads");
    if (fl.lambda) sc->add_option("--lambda", cfg.lambda, "tilt parameter")->required();
    if (fl.model) sc->add_option("--model", cfg.model, "Markov model file")->required();
    if (fl.kind) sc->add_option("--kind", cfg.kind, "equality | upper | lower");
    if (fl.inequality) sc->add_flag("--inequality", cfg.inequality, "project onto {Q(f) >= alpha}");
    if (fl.direction) sc->add_option("--direction", cfg.direction, "ge | le");
    if (fl.empirical) sc->add_flag("--empirical", cfg.empirical, "tilt via the I-projection of the halfspace");
    sc->add_option("--output", output, "json | csv");
    return sc;
  };
  add("rate", "rate function gamma(alpha)", {.dist = true, .f = true, .alpha = true, .kind = true});
  add("tilt", "exponential tilt of a finite distribution", {.dist = true, .f = true, .lambda = true});
  add("iproject", "I-projection onto moment constraints",
      {.dist = true, .f = true, .alpha = true, .inequality = true});
  add("tail-exact", "exact P{mean f >= alpha}", {.dist = true, .f = true, .alpha = true, .n = true, .workers = true});
  add("tail-mc", "plain Monte Carlo tail estimate",
      {.dist = true, .f = true, .alpha = true, .n = true, .N = true, .seed = true, .workers = true});
  add("tail-is", "tilted importance-sampling tail estimate",
      {.dist = true, .f = true, .alpha = true, .n = true, .N = true, .seed = true, .workers = true,
       .empirical = true});
  add("sanov-exact", "exact halfspace probability and the Sanov bound",
      {.dist = true, .f = true, .alpha = true, .n = true, .workers = true, .direction = true});
  add("strong-approx", "sharp asymptotic approximation (CSV table for several n)",
      {.dist = true, .f = true, .alpha = true, .n = true, .workers = true});
  add("gibbs", "exact conditional law of X_1 given a halfspace event",
      {.dist = true, .f = true, .alpha = true, .n = true, .workers = true, .direction = true});
  add("markov-rate", "Gartner-Ellis rate for a Markov additive functional", {.alpha = true, .model = true});
  add("markov-tail", "exact Markov tail probability by dynamic programming",
      {.alpha = true, .n = true, .model = true});

  std::reverse(args.begin(), args.end());
  app.parse(args);

  for (const auto* sc : app.get_subcommands()) cfg.subcommand = sc->get_name();
  if (output == "json") cfg.output = Output::json;
  else if (output == "csv") cfg.output = Output::csv;
  else throw UsageError("--output must be json or csv");
  if (cfg.workers < 1 || cfg.workers > 256) throw UsageError("--workers must be in [1, 256]");
  if (cfg.kind != "equality" && cfg.kind != "upper" && cfg.kind != "lower")
    throw UsageError("--kind must be equality, upper or lower");
  if (cfg.direction != "ge" && cfg.direction != "le") throw UsageError("--direction must be ge or le");
  if (cfg.N < 1000) throw UsageError("--N must be at least 1000");
  return cfg;
}

namespace detail {

inline Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json atoms_json(const FiniteDist& P) {
  Json a = Json::array();
  for (const auto& at : P.atoms()) a.push_back(Json::array({num(at.value), num(at.prob)}));
  return a;
}

inline std::vector<Statistic> statistics(const RunConfig& cfg) {
  std::vector<Statistic> out;
  for (const auto& s : cfg.fs) out.push_back(parse_statistic(s));
  if (out.empty()) out.push_back(Statistic::identity());
  return out;
}

inline Statistic single_statistic(const RunConfig& cfg) {
  auto fs = statistics(cfg);
  if (fs.size() != 1) throw UsageError("this subcommand takes one --f");
  return fs.front();
}

inline double single_alpha(const RunConfig& cfg) {
  const auto a = parse_real_list(cfg.alpha);
  if (a.size() != 1) throw UsageError("this subcommand takes one --alpha");
  return a.front();
}

inline int single_n(const RunConfig& cfg) {
  const auto n = parse_int_list(cfg.n);
  if (n.size() != 1) throw UsageError("this subcommand takes one --n");
  if (n.front() < 1) throw UsageError("--n must be positive");
  return n.front();
}

inline Json input_echo(const RunConfig& cfg) {
  Json in;
  in["subcommand"] = cfg.subcommand;
  in["dist"] = cfg.dist;
  Json fs = Json::array();
  for (const auto& f : cfg.fs) fs.push_back(f);
  in["f"] = fs;
  in["alpha"] = cfg.alpha;
  in["n"] = cfg.n;
  in["N"] = cfg.N;
  in["seed"] = cfg.seed;
  in["workers"] = cfg.workers;
  if (cfg.lambda) in["lambda"] = *cfg.lambda;
  in["model"] = cfg.model;
  in["kind"] = cfg.kind;
  in["inequality"] = cfg.inequality;
  in["direction"] = cfg.direction;
  in["empirical"] = cfg.empirical;
  in["output"] = cfg.output == Output::json ? "json" : "csv";
  in["version"] = std::string(kVersion);
  in["rng"] = std::string(kRngName);
  return in;
}

inline Json rate_json(const RatePoint& rp) {
  Json r;
  r["alpha"] = num(rp.alpha);
  r["gamma"] = num(rp.gamma);
  r["lambda_star"] = rp.lambda_star ? num(*rp.lambda_star) : Json(nullptr);
  r["boundary"] = std::string(to_string(rp.boundary));
  r["tilted"] = rp.tilted ? Json(render_dist(*rp.tilted)) : Json(nullptr);
  return r;
}

inline Json estimate_json(const TailEstimate& e) {
  Json r;
  r["method"] = std::string(to_string(e.method));
  r["n"] = e.n;
  r["N"] = e.n_samples;
  r["seed"] = e.seed;
  r["workers"] = e.workers;
  r["log_p_hat"] = num(e.log_p_hat);
  r["std_err_rel"] = num(e.std_err_rel);
  r["flags"] = e.flags;
  r["rng"] = std::string(kRngName);
  return r;
}

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return ldpkit::detail::fmt17(v);
}

inline Halfspace halfspace(const RunConfig& cfg) {
  return Halfspace{single_statistic(cfg), single_alpha(cfg),
                   cfg.direction == "le" ? Direction::le : Direction::ge};
}

inline MarkovModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LdpError("io-error", "cannot open model file '" + path + "'");
  return parse_markov_model(in);
}

// Fills `res` for JSON subcommands; writes CSV directly and returns false for
// grid outputs.
inline bool dispatch(const RunConfig& cfg, Json& res, std::ostream& out) {
  const std::string& cmd = cfg.subcommand;
  if (cmd == "rate") {
    const Distribution d = parse_dist(cfg.dist);
    const CgfSpec spec = CgfSpec::from(d, single_statistic(cfg));
    const auto alphas = parse_real_list(cfg.alpha);
    auto eval = [&](double a) {
      if (cfg.kind == "upper") return rate_inequality(spec, a);
      if (cfg.kind == "lower") return rate_lower(spec, a);
      return rate_equality(spec, a);
    };
    if (cfg.output == Output::csv) {
      out << "alpha,gamma,lambda_star,boundary\n";
      for (double a : alphas) {
        const auto rp = eval(a);
        out << csv_num(a) << ',' << csv_num(rp.gamma) << ',' << (rp.lambda_star ? csv_num(*rp.lambda_star) : "")
            << ',' << to_string(rp.boundary) << '\n';
      }
      return false;
    }
    if (alphas.size() == 1) {
      res.update(rate_json(eval(alphas.front())));
    } else {
      Json pts = Json::array();
      for (double a : alphas) pts.push_back(rate_json(eval(a)));
      res["points"] = pts;
    }
    return true;
  }
  if (cmd == "tilt") {
    const FiniteDist P = parse_finite_dist(cfg.dist);
    const Statistic f = single_statistic(cfg);
    const FiniteDist Q = tilt(P, f, *cfg.lambda);
    res["tilted"] = render_dist(Q);
    res["atoms"] = atoms_json(Q);
    res["mean_f"] = num(mean_f(Q, f));
    res["divergence"] = num(kl_divergence(Q, P));
    return true;
  }
  if (cmd == "iproject") {
    const FiniteDist P = parse_finite_dist(cfg.dist);
    const auto fs = statistics(cfg);
    const auto alphas = parse_real_list(cfg.alpha);
    IProjectionResult r;
    if (cfg.inequality) {
      if (fs.size() != 1 || alphas.size() != 1) throw UsageError("--inequality takes one --f and one --alpha");
      r = iproject_inequality(P, fs.front(), alphas.front());
    } else {
      if (fs.size() != alphas.size()) throw UsageError("need one --alpha value per --f");
      r = iproject_equality(P, fs, alphas);
    }
    res["q_star"] = render_dist(r.q_star);
    res["divergence"] = num(r.divergence);
    Json m = Json::array(), rs = Json::array();
    for (double v : r.multipliers) m.push_back(num(v));
    for (double v : r.residuals) rs.push_back(num(v));
    res["multipliers"] = m;
    res["residuals"] = rs;
    res["active"] = r.active;
    res["notes"] = r.notes;
    return true;
  }
  if (cmd == "tail-exact") {
    const FiniteDist P = parse_finite_dist(cfg.dist);
    const Halfspace H{single_statistic(cfg), single_alpha(cfg), Direction::ge};
    const double lp = event_log_prob_exact(P, single_n(cfg), H, cfg.workers);
    res["method"] = "exact";
    res["log_prob"] = num(lp);
    res["prob"] = num(std::exp(lp));
    return true;
  }
  if (cmd == "tail-mc") {
    const Distribution d = parse_dist(cfg.dist);
    const auto e = mc_tail(d, single_statistic(cfg), single_alpha(cfg), single_n(cfg), cfg.N, cfg.seed, cfg.workers);
    res.update(estimate_json(e));
    return true;
  }
  if (cmd == "tail-is") {
    TailEstimate e;
    if (cfg.empirical) {
      const FiniteDist P = parse_finite_dist(cfg.dist);
      e = is_empirical_event(P, single_n(cfg), Halfspace{single_statistic(cfg), single_alpha(cfg), Direction::ge},
                             cfg.N, cfg.seed, cfg.workers);
    } else {
      const Distribution d = parse_dist(cfg.dist);
      e = is_tail(d, single_statistic(cfg), single_alpha(cfg), single_n(cfg), cfg.N, cfg.seed, cfg.workers);
    }
    res.update(estimate_json(e));
    return true;
  }
  if (cmd == "sanov-exact") {
    const FiniteDist P = parse_finite_dist(cfg.dist);
    const auto g = sanov_bound_gap(P, single_n(cfg), halfspace(cfg), cfg.workers);
    res["log_prob"] = num(g.exact_log);
    res["prob"] = num(std::exp(g.exact_log));
    res["divergence"] = num(g.divergence);
    res["bound_log"] = num(g.bound_log);
    res["bound_holds"] = g.exact_log <= g.bound_log + 1e-12;
    return true;
  }
  if (cmd == "strong-approx") {
    const FiniteDist P = parse_finite_dist(cfg.dist);
    const Statistic f = single_statistic(cfg);
    const double alpha = single_alpha(cfg);
    const auto ns = parse_int_list(cfg.n);
    for (int n : ns)
      if (n < 1) throw UsageError("--n must be positive");
    if (cfg.output == Output::csv) {
      out << "n,exact_log,approx_log,ratio\n";
      for (const auto& r : approx_vs_exact(P, alpha, ns, f, cfg.workers))
        out << r.n << ',' << csv_num(r.exact_log) << ',' << csv_num(r.approx_log) << ',' << csv_num(r.ratio) << '\n';
      return false;
    }
    const SharpApprox s = strong_cramer(CgfSpec::finite(P, f), alpha);
    res["D"] = num(s.D);
    res["V"] = num(s.V);
    res["lambda_star"] = num(s.lambda_star);
    res["c"] = num(s.c);
    res["lattice"] = s.lattice.is_lattice && !s.lattice.single_point;
    res["lattice_step"] = s.lattice.is_lattice ? num(s.lattice.step) : Json(nullptr);
    Json rows = Json::array();
    for (const auto& r : approx_vs_exact(P, alpha, ns, f, cfg.workers)) {
      Json row;
      row["n"] = r.n;
      row["exact_log"] = num(r.exact_log);
      row["approx_log"] = num(r.approx_log);
      row["ratio"] = num(r.ratio);
      rows.push_back(row);
    }
    res["rows"] = rows;
    return true;
  }
  if (cmd == "gibbs") {
    const FiniteDist P = parse_finite_dist(cfg.dist);
    const Halfspace H = halfspace(cfg);
    const FiniteDist Qn = gibbs_conditional(P, single_n(cfg), H, cfg.workers);
    Statistic f = H.f;
    double alpha = H.alpha;
    if (H.direction == Direction::le) {
      const Statistic orig = H.f;
      f = Statistic::custom([orig](double x) { return -orig(x); }, "neg");
      alpha = -alpha;
    }
    const auto proj = iproject_inequality(P, f, alpha);
    res["q_n"] = render_dist(Qn);
    res["q_star"] = render_dist(proj.q_star);
    res["divergence_to_q_star"] = num(kl_divergence(Qn, proj.q_star));
    return true;
  }
  if (cmd == "markov-rate") {
    const MarkovModel M = load_model(cfg.model);
    const auto rp = markov_rate(M, single_alpha(cfg));
    res["alpha"] = num(rp.alpha);
    res["gamma"] = num(rp.gamma);
    res["lambda_star"] = rp.lambda_star ? num(*rp.lambda_star) : Json(nullptr);
    res["boundary"] = std::string(to_string(rp.boundary));
    res["stationary_mean"] = num(M.stationary_mean());
    return true;
  }
  if (cmd == "markov-tail") {
    const MarkovModel M = load_model(cfg.model);
    const double lp = markov_tail_log_exact(M, single_alpha(cfg), single_n(cfg));
    res["method"] = "exact";
    res["log_prob"] = num(lp);
    res["prob"] = num(std::exp(lp));
    return true;
  }
  throw UsageError("unknown subcommand '" + cmd + "'");
}

}  // namespace detail

// Runs a parsed configuration. JSON goes to `out` as one object per run.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Json doc;
  doc["command"] = cfg.subcommand;
  doc["input"] = detail::input_echo(cfg);
  try {
    Json res;
    if (detail::dispatch(cfg, res, out)) {
      for (const auto& [k, v] : res.items()) doc[k] = v;
      out << doc.dump() << '\n';
    }
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const LdpError& e) {
    Json eobj;
    eobj["command"] = cfg.subcommand;
    eobj["input"] = detail::input_echo(cfg);
    eobj["error"] = {{"token", e.token()}, {"message", e.what()}};
    out << eobj.dump() << '\n';
    return 2;
  }
}

// argv front door: parses, runs, and maps errors to exit codes.
inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"ldpkit: large-deviation rates, I-projections and tail asymptotics", "ldpkit"};
  app.set_version_flag("--version", std::string(kVersion));
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  RunConfig cfg;
  try {
    cfg = parse_command_line(std::move(args), app);
  } catch (const CLI::Success& e) {
    // --help / --version
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return 1;
  }
  return run(cfg, out, err);
}

}  // namespace ldpkit::cli

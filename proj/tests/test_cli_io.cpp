#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ldpkit/cli.hpp"
#include "ldpkit/io.hpp"
#include "oracles.hpp"

using namespace ldpkit;
using Json = nlohmann::ordered_json;

namespace {

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ldpkit");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Json run_json(const std::vector<std::string>& args) {
  const auto r = run_cli(args);
  EXPECT_EQ(r.code, 0) << r.err << r.out;
  return Json::parse(r.out);
}

const std::string kModel = std::string(LDPKIT_SOURCE_DIR) + "/samples/two_state.txt";
const std::string kB3 = "finite:0:0.7,1:0.3";

Json schema() {
  std::ifstream in(std::string(LDPKIT_SOURCE_DIR) + "/schema/output_fields.json");
  return Json::parse(in);
}

std::vector<std::string> keys(const Json& j) {
  std::vector<std::string> k;
  for (const auto& [name, _] : j.items()) k.push_back(name);
  return k;
}

}  // namespace

TEST(ParseDist, Examples) {
  const auto b = std::get<FiniteDist>(parse_dist("finite:0:0.5,1:0.5"));
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.prob_of(1), 0.5);
  const auto g = std::get<Gaussian>(parse_dist("gaussian:0,1"));
  EXPECT_EQ(g.mu, 0.0);
  EXPECT_EQ(g.sigma, 1.0);
  EXPECT_EQ(std::get<Exponential>(parse_dist(" exponential : 2.5 ")).theta, 2.5);
  const auto spaced = std::get<FiniteDist>(parse_dist(" finite : 0 : 0.25 , 1:0.25,\t2: 0.5"));
  EXPECT_EQ(spaced.size(), 3u);
}

TEST(ParseDist, Errors) {
  auto token = [](const std::string& s) {
    try {
      parse_dist(s);
    } catch (const LdpError& e) {
      return std::string(e.token()) + "|" + e.what();
    }
    return std::string("ok");
  };
  EXPECT_EQ(token("finite:0:0.3,1:0.8").rfind("not-normalized", 0), 0u);
  const auto bad = token("finite:0:0.3,1:");
  EXPECT_EQ(bad.rfind("malformed-input", 0), 0u);
  EXPECT_NE(bad.find("column 16"), std::string::npos) << bad;
  EXPECT_EQ(token("poisson:1").rfind("malformed-input", 0), 0u);
  EXPECT_EQ(token("gaussian:0,-1").rfind("invalid", 0), 0u);
  EXPECT_EQ(token("finite:0:0.5,1:0.5 x").rfind("malformed-input", 0), 0u);
  // Within 1e-9 the sum is accepted and renormalized.
  const auto d = std::get<FiniteDist>(parse_dist("finite:0:0.5,1:0.5000000001"));
  EXPECT_NEAR(d.prob_of(0) + d.prob_of(1), 1.0, 1e-15);
}

TEST(ParseStatistic, Forms) {
  EXPECT_EQ(parse_statistic("id")(3.0), 3.0);
  EXPECT_EQ(parse_statistic("affine:2,-1")(3.0), 5.0);
  const auto ind = parse_statistic("indicator:1,2");
  EXPECT_EQ(ind(2.0), 1.0);
  EXPECT_EQ(ind(0.0), 0.0);
  EXPECT_THROW(parse_statistic("square"), LdpError);
  EXPECT_EQ(render_statistic(parse_statistic("affine:2,-1")), "affine:2,-1");
}

TEST(RoundTrip, RandomDistributions) {
  oracle::TestRng rng(61);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = static_cast<std::size_t>(rng.integer(1, 7));
    const auto w = rng.simplex(k, 0.0);
    std::vector<Atom> atoms;
    double v = rng.uniform(-100, 100);
    for (std::size_t i = 0; i < k; ++i) {
      atoms.push_back({v, w[i]});
      v += rng.uniform(1e-3, 10);
    }
    const auto P = FiniteDist::from_weights(atoms);
    const auto back = std::get<FiniteDist>(parse_dist(render_dist(P)));
    ASSERT_EQ(back.size(), P.size());
    for (std::size_t i = 0; i < P.size(); ++i) {
      EXPECT_EQ(back[i].value, P[i].value);
      EXPECT_NEAR(back[i].prob, P[i].prob, 1e-15);
    }
  }
  const Distribution g = make_gaussian(-0.1, 3.3);
  EXPECT_EQ(std::get<Gaussian>(parse_dist(render_dist(g))).mu, -0.1);
}

TEST(Cli, RateCanonical) {
  const auto j = run_json({"rate", "--dist", kB3, "--alpha", "0.5"});
  EXPECT_NEAR(j["gamma"].get<double>(), 0.087176, 1e-6);
  EXPECT_NEAR(j["lambda_star"].get<double>(), 0.847298, 1e-6);
  EXPECT_EQ(j["boundary"], "interior");
  EXPECT_EQ(j["input"]["dist"], kB3);
  EXPECT_EQ(j["input"]["version"], std::string(cli::kVersion));
}

TEST(Cli, SanovExactCanonical) {
  const auto j = run_json({"sanov-exact", "--dist", kB3, "--n", "10", "--alpha", "0.7"});
  EXPECT_NEAR(j["log_prob"].get<double>(), std::log(0.0105920784), 1e-9);
  EXPECT_EQ(j["bound_holds"], true);
}

TEST(Cli, ExitCodes) {
  const auto missing = run_cli({"rate", "--alpha", "0.5"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--dist"), std::string::npos);
  EXPECT_EQ(run_cli({"rate", "--dist", kB3, "--alpha", "0.5", "--bogus", "1"}).code, 1);
  EXPECT_EQ(run_cli({"nosuch"}).code, 1);
  EXPECT_EQ(run_cli({"tail-mc", "--dist", kB3, "--alpha", "0.5", "--n", "10", "--N", "10"}).code, 1);
  EXPECT_EQ(run_cli({"rate", "--dist", kB3, "--alpha", "0.5", "--output", "xml"}).code, 1);

  const auto dom = run_cli({"rate", "--dist", "finite:0:0.3,1:0.8", "--alpha", "0.5"});
  EXPECT_EQ(dom.code, 2);
  EXPECT_EQ(Json::parse(dom.out)["error"]["token"], "not-normalized");
  const auto tilt = run_cli({"tail-is", "--dist", kB3, "--alpha", "0.3", "--n", "10", "--N", "1000"});
  EXPECT_EQ(tilt.code, 2);
  EXPECT_EQ(Json::parse(tilt.out)["error"]["token"], "no-tilt-available");
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, RealBinaryExitCode) {
  const std::string cmd = std::string(LDPKIT_CLI_PATH) + " rate --alpha 0.5 >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}

TEST(Cli, SeedFromEnvironment) {
  setenv("LDPKIT_SEED", "31", 1);
  const auto j = run_json({"tail-mc", "--dist", kB3, "--alpha", "0.5", "--n", "10", "--N", "1000"});
  unsetenv("LDPKIT_SEED");
  EXPECT_EQ(j["seed"], 31);
  EXPECT_EQ(j["input"]["seed"], 31);
}

TEST(Cli, NonFiniteNumbersAreStrings) {
  const auto j = run_json({"rate", "--dist", kB3, "--alpha", "1.5"});
  EXPECT_EQ(j["gamma"], "inf");
  EXPECT_EQ(j["boundary"], "beyond_alpha_max");
}

TEST(Cli, EverySubcommandMatchesSchema) {
  const auto s = schema();
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"rate", {"rate", "--dist", kB3, "--alpha", "0.5"}},
      {"rate-grid", {"rate", "--dist", kB3, "--alpha", "0.5,0.6"}},
      {"tilt", {"tilt", "--dist", kB3, "--lambda", "1"}},
      {"iproject", {"iproject", "--dist", kB3, "--alpha", "0.5"}},
      {"tail-exact", {"tail-exact", "--dist", kB3, "--alpha", "0.7", "--n", "10"}},
      {"tail-mc", {"tail-mc", "--dist", kB3, "--alpha", "0.5", "--n", "10", "--N", "1000"}},
      {"tail-is", {"tail-is", "--dist", kB3, "--alpha", "0.5", "--n", "10", "--N", "1000"}},
      {"sanov-exact", {"sanov-exact", "--dist", kB3, "--alpha", "0.7", "--n", "10"}},
      {"strong-approx", {"strong-approx", "--dist", kB3, "--alpha", "0.5", "--n", "100,200"}},
      {"gibbs", {"gibbs", "--dist", kB3, "--alpha", "0.5", "--n", "20"}},
      {"markov-rate", {"markov-rate", "--model", kModel, "--alpha", "0.5"}},
      {"markov-tail", {"markov-tail", "--model", kModel, "--alpha", "0.7", "--n", "20"}},
  };
  for (const auto& [name, args] : runs) {
    const auto j = run_json(args);
    std::vector<std::string> want = s["common"].get<std::vector<std::string>>();
    for (const auto& k : s["subcommands"][name]) want.push_back(k.get<std::string>());
    EXPECT_EQ(keys(j), want) << name;
    auto in = keys(j["input"]);
    std::erase(in, "lambda");
    EXPECT_EQ(in, s["input"].get<std::vector<std::string>>()) << name;
  }
  const auto err = Json::parse(run_cli({"markov-rate", "--model", "/nonexistent", "--alpha", "0.5"}).out);
  EXPECT_EQ(keys(err["error"]), s["error"].get<std::vector<std::string>>());
}

TEST(Cli, CsvOutputs) {
  const auto s = schema();
  const auto rate = run_cli({"rate", "--dist", kB3, "--alpha", "0.4,0.5,0.6", "--output", "csv"});
  ASSERT_EQ(rate.code, 0);
  auto header = [&](const std::string& name) {
    std::string h;
    for (const auto& k : s["csv"][name]) h += (h.empty() ? "" : ",") + k.get<std::string>();
    return h;
  };
  EXPECT_EQ(rate.out.substr(0, rate.out.find('\n')), header("rate"));
  const auto sa = run_cli({"strong-approx", "--dist", kB3, "--alpha", "0.5", "--n", "500,1000", "--output", "csv"});
  ASSERT_EQ(sa.code, 0);
  EXPECT_EQ(sa.out.substr(0, sa.out.find('\n')), header("strong-approx"));
  EXPECT_EQ(std::count(sa.out.begin(), sa.out.end(), '\n'), 3);
  const auto again = run_cli({"strong-approx", "--dist", kB3, "--alpha", "0.5", "--n", "500,1000", "--output", "csv"});
  EXPECT_EQ(sa.out, again.out);
}

TEST(Cli, StochasticOutputIsByteStable) {
  const std::vector<std::string> args{"tail-is", "--dist", kB3, "--alpha", "0.7", "--n", "40",
                                      "--N", "20000", "--seed", "5", "--workers", "3"};
  EXPECT_EQ(run_cli(args).out, run_cli(args).out);
  const std::vector<std::string> emp{"tail-is", "--empirical", "--dist", "finite:0:0.2,1:0.3,2:0.5",
                                     "--alpha", "1.6", "--n", "50", "--N", "5000", "--seed", "5"};
  const auto a = run_cli(emp);
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, run_cli(emp).out);
}

TEST(Cli, OtherSubcommandValues) {
  const auto tilt = run_json({"tilt", "--dist", "finite:0:0.5,1:0.5", "--lambda", "1.0986122886681098"});
  EXPECT_NEAR(tilt["mean_f"].get<double>(), 0.75, 1e-12);
  const auto ip = run_json({"iproject", "--dist", "finite:0:0.3333333333333333,1:0.3333333333333333,2:0.3333333333333334",
                            "--f", "id", "--f", "indicator:2", "--alpha", "1.2,0.4"});
  EXPECT_NEAR(ip["residuals"][0].get<double>(), 0.0, 1e-9);
  const auto mr = run_json({"markov-rate", "--model", kModel, "--alpha", "0.7"});
  const auto mt = run_json({"markov-tail", "--model", kModel, "--alpha", "0.7", "--n", "3000"});
  EXPECT_LE(std::abs(-mt["log_prob"].get<double>() / 3000 - mr["gamma"].get<double>()), 0.01);
  const auto lower = run_json({"rate", "--dist", kB3, "--alpha", "0", "--kind", "lower"});
  EXPECT_NEAR(lower["gamma"].get<double>(), -std::log(0.7), 1e-15);
}

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ldpkit/cramer_rate.hpp"
#include "ldpkit/gartner_ellis.hpp"
#include "ldpkit/sanov_types.hpp"
#include "oracles.hpp"

using namespace ldpkit;

namespace {

const std::vector<std::vector<double>> kT{{0.9, 0.1}, {0.2, 0.8}};

MarkovModel two_state(std::vector<double> init = {0.5, 0.5}) { return MarkovModel(kT, init, {0, 1}); }

MarkovModel iid_rows(double p) { return MarkovModel({{1 - p, p}, {1 - p, p}}, {1 - p, p}, {0, 1}); }

}  // namespace

TEST(MarkovModel, Validation) {
  EXPECT_THROW(MarkovModel({{0.5, 0.6}, {0.5, 0.5}}, {0.5, 0.5}, {0, 1}), LdpError);
  EXPECT_THROW(MarkovModel({{1.0}}, {0.5, 0.5}, {0, 1}), LdpError);
  EXPECT_FALSE(MarkovModel({{1, 0}, {0.5, 0.5}}, {0.5, 0.5}, {0, 1}).irreducible());
  EXPECT_TRUE(two_state().irreducible());
  const auto pi = two_state().stationary();
  EXPECT_NEAR(pi[0], 2.0 / 3, 1e-12);
  EXPECT_NEAR(two_state().stationary_mean(), 1.0 / 3, 1e-12);
}

TEST(MarkovModel, ParseFile) {
  std::istringstream in("# two-state chain\n2\n0.9, 0.1\n0.2 0.8\n\n0.5 0.5\n0 1\n");
  const auto M = parse_markov_model(in);
  EXPECT_EQ(M.states(), 2u);
  EXPECT_EQ(M.transition()[1][0], 0.2);
  EXPECT_EQ(M.f()[1], 1.0);
  std::istringstream bad("2\n0.9 0.1\n0.2 x\n0.5 0.5\n0 1\n");
  try {
    parse_markov_model(bad);
    FAIL();
  } catch (const LdpError& e) {
    EXPECT_EQ(e.token(), "malformed-model");
  }
  std::istringstream short_file("2\n0.9 0.1\n0.2 0.8\n");
  EXPECT_THROW(parse_markov_model(short_file), LdpError);
}

TEST(MarkovCgf, Examples) {
  EXPECT_NEAR(markov_cgf(two_state(), 0.0), 0.0, 1e-14);
  const double e = std::exp(1.0);
  EXPECT_NEAR(markov_cgf(two_state(), 1.0), std::log(oracle::perron_2x2(0.9, 0.1 * e, 0.2, 0.8 * e)), 1e-12);
  for (double l : {-3.0, -0.5, 0.7, 2.5})
    EXPECT_NEAR(markov_cgf(two_state(), l),
                std::log(oracle::perron_2x2(0.9, 0.1 * std::exp(l), 0.2, 0.8 * std::exp(l))), 1e-12);
  const auto spec = CgfSpec::finite(FiniteDist::bernoulli(0.3));
  for (double l : {-2.0, 0.4, 3.0}) EXPECT_NEAR(markov_cgf(iid_rows(0.3), l), cgf(spec, l), 1e-12);
}

TEST(MarkovCgf, InitialLawIrrelevant) {
  EXPECT_EQ(markov_cgf(two_state({1, 0}), 0.8), markov_cgf(two_state({0, 1}), 0.8));
}

TEST(MarkovCgf, Reducible) {
  const MarkovModel M({{1, 0}, {0.5, 0.5}}, {0.5, 0.5}, {0, 1});
  try {
    markov_cgf(M, 1.0);
    FAIL();
  } catch (const LdpError& e) {
    EXPECT_EQ(e.token(), "not-irreducible");
  }
}

TEST(MarkovCgf, SlopeMatchesDifference) {
  for (double l : {-1.0, 0.0, 0.6, 2.0}) {
    const double h = 1e-5;
    const double fd = (markov_cgf(two_state(), l + h) - markov_cgf(two_state(), l - h)) / (2 * h);
    EXPECT_NEAR(markov_cgf_slope(two_state(), l), fd, 1e-8);
  }
  EXPECT_NEAR(markov_cgf_slope(two_state(), 0.0), 1.0 / 3, 1e-12);
}

TEST(MarkovRate, Examples) {
  const auto M = two_state();
  EXPECT_NEAR(markov_rate(M, M.stationary_mean()).gamma, 0.0, 1e-12);
  const auto rp = markov_rate(M, 0.5);
  EXPECT_EQ(rp.boundary, RateBoundary::interior);
  EXPECT_GT(rp.gamma, 0.0);
  EXPECT_NEAR(*rp.lambda_star * 0.5 - markov_cgf(M, *rp.lambda_star), rp.gamma, 1e-12);
  EXPECT_NEAR(markov_cgf_slope(M, *rp.lambda_star), 0.5, 1e-9);
  for (double a : {0.1, 0.45, 0.8}) {
    EXPECT_NEAR(markov_rate(iid_rows(0.3), a).gamma, rate_equality(CgfSpec::finite(FiniteDist::bernoulli(0.3)), a).gamma,
                1e-8);
  }
}

TEST(MarkovRate, Endpoints) {
  // Staying in state 1 forever has rate -log 0.8.
  const auto top = markov_rate(two_state(), 1.0);
  EXPECT_EQ(top.boundary, RateBoundary::at_alpha_max);
  EXPECT_NEAR(top.gamma, -std::log(0.8), 1e-12);
  EXPECT_TRUE(std::isinf(markov_rate(two_state(), 1.3).gamma));
}

TEST(MarkovTail, Examples) {
  EXPECT_EQ(markov_tail_exact(two_state(), 0.0, 30), 1.0);
  EXPECT_NEAR(markov_tail_exact(iid_rows(0.3), 0.7, 10), 0.0105920784, 1e-10);
  EXPECT_NEAR(markov_tail_log_exact(iid_rows(0.3), 0.7, 10), oracle::binom_log_tail(10, 0.3, 7), 1e-12);
  const std::vector<double> init{0.5, 0.5};
  EXPECT_NEAR(markov_tail_log_exact(two_state(init), 0.7, 20),
              oracle::markov_paths_log_tail(kT, init, {0, 1}, 20, 14), 1e-12);
}

TEST(MarkovTail, Guards) {
  const MarkovModel irrational({{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.4, 0.4, 0.2}}, {1, 0, 0}, {0, 1, std::sqrt(2.0)});
  try {
    markov_tail_exact(irrational, 0.5, 10);
    FAIL();
  } catch (const LdpError& e) {
    EXPECT_EQ(e.token(), "non-lattice-statistic");
  }
  try {
    markov_tail_exact(two_state(), 0.5, 5000);
    FAIL();
  } catch (const LdpError& e) {
    EXPECT_EQ(e.token(), "dp-too-large");
  }
}

TEST(Properties, CgfConvex) {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(markov_cgf(two_state(), -5 + 10 * i / 99.0));
  for (std::size_t i = 1; i + 1 < v.size(); ++i) EXPECT_GE(v[i - 1] - 2 * v[i] + v[i + 1], -1e-9);
}

TEST(Properties, DpMatchesPathEnumeration) {
  oracle::TestRng rng(51);
  for (int t = 0; t < 6; ++t) {
    const double a = rng.uniform(0.05, 0.95), b = rng.uniform(0.05, 0.95);
    const std::vector<std::vector<double>> T{{1 - a, a}, {b, 1 - b}};
    const double p0 = rng.uniform(0.1, 0.9);
    const std::vector<double> init{p0, 1 - p0};
    const MarkovModel M(T, init, {0, 1});
    for (int n = 1; n <= 16; ++n)
      for (double alpha : {0.3, 0.5, 0.7}) {
        const long long thr = static_cast<long long>(std::ceil(n * alpha - 1e-9));
        EXPECT_NEAR(markov_tail_log_exact(M, alpha, n), oracle::markov_paths_log_tail(T, init, {0, 1}, n, thr), 1e-12)
            << n << " " << alpha;
      }
  }
}

TEST(Properties, ThreeStateDpMatchesPaths) {
  const std::vector<std::vector<double>> T{{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.4, 0.4, 0.2}};
  const std::vector<double> init{0.2, 0.5, 0.3};
  const MarkovModel M(T, init, {0, 1, 2});
  for (int n = 1; n <= 9; ++n) {
    const long long thr = static_cast<long long>(std::ceil(n * 1.2 - 1e-9));
    EXPECT_NEAR(markov_tail_log_exact(M, 1.2, n), oracle::markov_paths_log_tail(T, init, {0, 1, 2}, n, thr), 1e-12);
  }
}

TEST(Properties, IidReductionOfTail) {
  const auto P = FiniteDist::bernoulli(0.3);
  for (int n : {5, 20, 60})
    EXPECT_NEAR(markov_tail_log_exact(iid_rows(0.3), 0.6, n),
                event_log_prob_exact(P, n, Halfspace{Statistic::identity(), 0.6, Direction::ge}), 1e-11);
}

TEST(Properties, ExponentConverges) {
  const auto M = two_state();
  const double rate = markov_rate(M, 0.7).gamma;
  const double ex = -markov_tail_log_exact(M, 0.7, 3000) / 3000;
  EXPECT_LE(std::abs(ex - rate), 0.01);
}

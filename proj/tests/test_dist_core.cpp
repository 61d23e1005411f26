#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ldpkit/dist_core.hpp"
#include "ldpkit/rng.hpp"
#include "oracles.hpp"

using namespace ldpkit;

namespace {

FiniteDist ternary(double a, double b, double c) { return FiniteDist({{0, a}, {1, b}, {2, c}}); }

FiniteDist random_dist(oracle::TestRng& rng, std::size_t k) {
  const auto w = rng.simplex(k, 0.0);
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < k; ++i) atoms.push_back({static_cast<double>(i), w[i]});
  return FiniteDist::from_weights(atoms);
}

}  // namespace

TEST(FiniteDist, SortsAndValidates) {
  FiniteDist d({{2, 0.5}, {0, 0.25}, {1, 0.25}});
  EXPECT_EQ(d.values(), (std::vector<double>{0, 1, 2}));
  EXPECT_THROW(FiniteDist({{0, 0.5}, {1, 0.6}}), LdpError);
  EXPECT_THROW(FiniteDist({{0, 0.5}, {0, 0.5}}), LdpError);
  EXPECT_THROW(FiniteDist({{0, -0.1}, {1, 1.1}}), LdpError);
  try {
    FiniteDist({{0, 0.3}, {1, 0.8}});
    FAIL();
  } catch (const LdpError& e) {
    EXPECT_EQ(e.token(), "not-normalized");
  }
}

TEST(FiniteDist, ZeroAtomsDroppedUnlessRetained) {
  EXPECT_EQ(FiniteDist({{0, 0.0}, {1, 1.0}}).size(), 1u);
  const FiniteDist kept({{0, 0.0}, {1, 1.0}}, ZeroAtoms::retain);
  EXPECT_EQ(kept.size(), 2u);
  EXPECT_TRUE(kept.retains_zero_atoms());
}

TEST(Divergence, KlExamples) {
  const auto b5 = FiniteDist::bernoulli(0.5), b3 = FiniteDist::bernoulli(0.3);
  EXPECT_EQ(kl_divergence(b5, b5), 0.0);
  EXPECT_NEAR(kl_divergence(b5, b3), 0.5 * std::log(0.5 / 0.3) + 0.5 * std::log(0.5 / 0.7), 1e-15);
  EXPECT_NEAR(kl_divergence(b5, b3), 0.087176, 1e-6);
  EXPECT_TRUE(std::isinf(kl_divergence(FiniteDist::point_mass(5.0), b3)));
}

TEST(Divergence, VarentropyExamples) {
  const auto b5 = FiniteDist::bernoulli(0.5), b3 = FiniteDist::bernoulli(0.3);
  EXPECT_NEAR(relative_varentropy(b3, b3), 0.0, 1e-15);
  const double l = std::log(7.0 / 3.0);
  EXPECT_NEAR(relative_varentropy(b5, b3), l * l * 0.25, 1e-14);
  EXPECT_NEAR(relative_varentropy(b5, b3), 0.1794784160541833, 1e-13);

  const auto P = ternary(0.2, 0.3, 0.5);
  const auto U = ternary(1.0 / 3, 1.0 / 3, 1.0 / 3);
  double m1 = 0, m2 = 0;
  for (double p : {0.2, 0.3, 0.5}) {
    const double r = std::log((1.0 / 3) / p);
    m1 += r / 3;
    m2 += r * r / 3;
  }
  EXPECT_NEAR(relative_varentropy(U, P), m2 - m1 * m1, 1e-14);
  try {
    relative_varentropy(FiniteDist::point_mass(7.0), b3);
    FAIL();
  } catch (const LdpError& e) {
    EXPECT_EQ(e.token(), "not-absolutely-continuous");
  }
}

TEST(Divergence, TotalVariation) {
  const auto b5 = FiniteDist::bernoulli(0.5), b3 = FiniteDist::bernoulli(0.3);
  EXPECT_EQ(tv_distance(b5, b5), 0.0);
  EXPECT_NEAR(tv_distance(b5, b3), 0.2, 1e-15);
  EXPECT_NEAR(tv_distance(FiniteDist::point_mass(0), FiniteDist::point_mass(1)), 1.0, 1e-15);
}

TEST(Tilt, Examples) {
  const auto id = Statistic::identity();
  const auto b3 = FiniteDist::bernoulli(0.3);
  const auto same = tilt(b3, id, 0.0);
  for (std::size_t i = 0; i < b3.size(); ++i) EXPECT_NEAR(same[i].prob, b3[i].prob, 1e-15);
  EXPECT_NEAR(tilt(FiniteDist::bernoulli(0.5), id, std::log(3.0)).prob_of(1), 0.75, 1e-15);
  const auto q = tilt(b3, id, std::log(7.0 / 3.0));
  EXPECT_NEAR(q.prob_of(1), 0.5, 1e-15);
  EXPECT_NEAR(mean_f(q), 0.5, 1e-15);
}

TEST(Tilt, NoOverflowAtLargeExponents) {
  const auto q = tilt(FiniteDist({{0, 0.5}, {700, 0.5}}), Statistic::identity(), 1.0);
  EXPECT_NEAR(q.prob_of(700), 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(q.prob_of(0)));
}

TEST(Condition, Examples) {
  const auto P = ternary(0.2, 0.3, 0.5);
  const auto full = condition(P, [](double) { return true; });
  EXPECT_EQ(full.size(), 3u);
  const auto U = condition(ternary(1.0 / 3, 1.0 / 3, 1.0 / 3), [](double v) { return v >= 1; });
  EXPECT_NEAR(U.prob_of(1), 0.5, 1e-15);
  const auto C = condition(P, [](double v) { return v >= 1; });
  EXPECT_NEAR(C.prob_of(1), 0.375, 1e-15);
  EXPECT_NEAR(C.prob_of(2), 0.625, 1e-15);
  try {
    condition(P, [](double v) { return v > 5; });
    FAIL();
  } catch (const LdpError& e) {
    EXPECT_EQ(e.token(), "conditioning-on-null");
  }
}

TEST(Lattice, Examples) {
  const std::vector<double> a{0, 1}, b{0.5, 2.0, 3.5}, c{0, 1, std::sqrt(2.0)}, d{4.2};
  const auto la = lattice_structure(a);
  EXPECT_TRUE(la.is_lattice);
  EXPECT_NEAR(la.step, 1.0, 1e-12);
  EXPECT_NEAR(la.offset, 0.0, 1e-12);
  const auto lb = lattice_structure(b);
  EXPECT_TRUE(lb.is_lattice);
  EXPECT_NEAR(lb.step, 1.5, 1e-12);
  EXPECT_FALSE(lattice_structure(c).is_lattice);
  const auto ld = lattice_structure(d);
  EXPECT_TRUE(ld.is_lattice);
  EXPECT_TRUE(ld.single_point);
}

TEST(Lattice, StepIsMaximal) {
  const std::vector<double> v{0.3, 0.9, 2.1, 3.3};
  const auto L = lattice_structure(v);
  ASSERT_TRUE(L.is_lattice);
  EXPECT_NEAR(L.step, 0.6, 1e-12);
  for (double x : v) {
    const double r = (x - L.offset) / L.step;
    EXPECT_NEAR(r, std::round(r), 1e-9);
  }
}

TEST(Moments, Examples) {
  EXPECT_NEAR(mean_f(FiniteDist::bernoulli(0.3)), 0.3, 1e-15);
  EXPECT_NEAR(mean_f(ternary(1.0 / 3, 1.0 / 3, 1.0 / 3)), 1.0, 1e-15);
  EXPECT_NEAR(mean_f(ternary(0.2, 0.3, 0.5)), 1.3, 1e-15);
  EXPECT_NEAR(var_f(FiniteDist::bernoulli(0.3)), 0.21, 1e-15);
  EXPECT_NEAR(mean_f(make_gaussian(1.5, 2.0)), 1.5, 0);
  EXPECT_NEAR(var_f(make_exponential(2.0)), 0.25, 1e-15);
  EXPECT_NEAR(mean_f(FiniteDist::bernoulli(0.3), Statistic::affine(2, 1)), 1.6, 1e-15);
  EXPECT_THROW(make_gaussian(0, 0), LdpError);
  EXPECT_THROW(make_exponential(-1), LdpError);
}

TEST(Sampling, DegenerateAndDeterministic) {
  CounterRng r1(42, 0), r2(42, 0), r3(42, 1);
  const auto c = sample(FiniteDist::point_mass(3.0), r1, 100);
  for (double x : c) EXPECT_EQ(x, 3.0);
  CounterRng a(7, 3), b(7, 3);
  EXPECT_EQ(sample(Distribution{make_gaussian(0, 1)}, a, 1000), sample(Distribution{make_gaussian(0, 1)}, b, 1000));
  EXPECT_NE(sample(FiniteDist::bernoulli(0.5), r2, 64), sample(FiniteDist::bernoulli(0.5), r3, 64));
}

TEST(Sampling, BernoulliMean) {
  CounterRng rng(2024, 0);
  const auto xs = sample(FiniteDist::bernoulli(0.5), rng, 1000000);
  EXPECT_NEAR(std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size(), 0.5, 0.002);
}

TEST(Sampling, ContinuousMoments) {
  CounterRng rng(99, 0);
  const auto g = sample(make_gaussian(1.0, 2.0), rng, 200000);
  const double m = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
  EXPECT_NEAR(m, 1.0, 3 * 2.0 / std::sqrt(200000.0) * 1.5);
  const auto e = sample(make_exponential(4.0), rng, 200000);
  EXPECT_NEAR(std::accumulate(e.begin(), e.end(), 0.0) / e.size(), 0.25, 0.003);
}

TEST(Properties, PinskerChain) {
  oracle::TestRng rng(1);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t k = static_cast<std::size_t>(rng.integer(2, 6));
    const auto Q = random_dist(rng, k), P = random_dist(rng, k);
    EXPECT_GE(std::sqrt(2.0 * kl_divergence(Q, P)), tv_distance(Q, P));
  }
}

TEST(Properties, KlZeroOnlyAtEquality) {
  oracle::TestRng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto P = random_dist(rng, 4);
    EXPECT_NEAR(kl_divergence(P, P), 0.0, 1e-15);
    const auto Q = random_dist(rng, 4);
    EXPECT_GT(kl_divergence(Q, P), 0.0);
  }
}

TEST(Properties, TiltComposes) {
  oracle::TestRng rng(3);
  const auto f = Statistic::affine(1.3, -0.4);
  for (int t = 0; t < 1000; ++t) {
    const auto P = random_dist(rng, 5);
    const double l1 = rng.uniform(-3, 3), l2 = rng.uniform(-3, 3);
    const auto a = tilt(tilt(P, f, l1), f, l2), b = tilt(P, f, l1 + l2);
    for (std::size_t i = 0; i < P.size(); ++i) EXPECT_NEAR(a[i].prob, b[i].prob, 1e-12);
  }
}

TEST(Properties, TiltIdentity) {
  oracle::TestRng rng(4);
  const auto f = Statistic::identity();
  for (int t = 0; t < 1000; ++t) {
    const auto P = random_dist(rng, 4), R = random_dist(rng, 4);
    const double lam = rng.uniform(-2, 2);
    const auto Q = tilt(P, f, lam);
    const double lhs = kl_divergence(R, P) - kl_divergence(Q, P);
    const double rhs = kl_divergence(R, Q) + lam * (mean_f(R) - mean_f(Q));
    EXPECT_NEAR(lhs, rhs, 1e-10);
  }
}

TEST(Properties, VarentropyNonnegative) {
  oracle::TestRng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const auto P = random_dist(rng, 4), Q = random_dist(rng, 4);
    EXPECT_GE(relative_varentropy(Q, P), 0.0);
    // A tilt by a constant statistic leaves the log-ratio constant.
    EXPECT_NEAR(relative_varentropy(tilt(P, Statistic::indicator({0, 1, 2, 3}), 1.7), P), 0.0, 1e-14);
  }
}

#pragma once

// Plain Monte Carlo and exponentially tilted importance sampling for
// P{ (1/n) sum f(X_i) >= alpha }.
//
// Work split: N blocks are cut into `workers` contiguous ranges; range w draws
// from CounterRng(seed, w). Partial sums merge in worker order, so a fixed
// (inputs, seed, workers) triple reproduces the estimate bit for bit.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "ldpkit/cramer_rate.hpp"
#include "ldpkit/dist_core.hpp"
#include "ldpkit/iprojection.hpp"
#include "ldpkit/rng.hpp"
#include "ldpkit/sanov_types.hpp"

namespace ldpkit {

enum class EstimateMethod { plain, tilted_is, exact };

inline std::string_view to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::plain: return "plain";
    case EstimateMethod::tilted_is: return "tilted_is";
    case EstimateMethod::exact: return "exact";
  }
  return "?";
}

struct TailEstimate {
  double log_p_hat = 0.0;
  double std_err_rel = 0.0;
  std::uint64_t n_samples = 0;
  EstimateMethod method = EstimateMethod::plain;
  std::uint64_t seed = 0;
  int n = 0;
  int workers = 1;
  std::vector<std::string> flags;
  double max_log_weight = -kInf;  // importance sampling only

  double p_hat() const { return std::exp(log_p_hat); }
};

inline constexpr double kUnreliableRelErr = 0.3;

namespace detail {

struct BlockSums {
  double sum = 0.0;     // of u
  double sum_sq = 0.0;  // of u^2
  double max_u = 0.0;
  std::uint64_t hits = 0;
};

// Draws N blocks of n values of f(X) and accumulates u = exp(-lambda (S - n alpha))
// on the event S >= n alpha (u = 1 when lambda = 0).
template <typename DrawF>
BlockSums run_blocks(const DrawF& draw_f, int n, double alpha, double lambda, std::uint64_t N,
                     std::uint64_t seed, int workers) {
  workers = std::max(1, workers);
  std::vector<BlockSums> parts(static_cast<std::size_t>(workers));
  const double target = n * alpha;
  const double tol = 1e-9 * (1.0 + std::abs(target));
  auto work = [&](int w) {
    const std::uint64_t begin = N * static_cast<std::uint64_t>(w) / workers;
    const std::uint64_t end = N * static_cast<std::uint64_t>(w + 1) / workers;
    CounterRng rng(seed, static_cast<std::uint64_t>(w));
    BlockSums& acc = parts[static_cast<std::size_t>(w)];
    for (std::uint64_t b = begin; b < end; ++b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += draw_f(rng);
      if (s - target >= -tol) {
        const double u = lambda == 0.0 ? 1.0 : std::exp(-lambda * (s - target));
        acc.sum += u;
        acc.sum_sq += u * u;
        acc.max_u = std::max(acc.max_u, u);
        ++acc.hits;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  BlockSums total;
  for (const auto& p : parts) {
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
    total.max_u = std::max(total.max_u, p.max_u);
    total.hits += p.hits;
  }
  return total;
}

inline void check_sampling_args(int n, std::uint64_t N) {
  if (n < 1) throw LdpError("invalid-argument", "block length n must be positive");
  if (N < 1000) throw LdpError("invalid-argument", "need at least 1000 samples");
}

// Turns weighted block sums into a log-scale estimate; log_scale is -n D for
// importance sampling and 0 for plain sampling.
inline TailEstimate finish(const BlockSums& b, double log_scale, std::uint64_t N) {
  TailEstimate est;
  est.n_samples = N;
  const double Nd = static_cast<double>(N);
  if (b.hits == 0 || b.sum == 0.0) {
    est.log_p_hat = -kInf;
    est.std_err_rel = kInf;
    est.flags.push_back("zero-hits");
    return est;
  }
  const double mean = b.sum / Nd;
  const double var = std::max(0.0, (b.sum_sq / Nd - mean * mean) * Nd / (Nd - 1.0));
  est.log_p_hat = log_scale + std::log(mean);
  est.std_err_rel = std::sqrt(var / Nd) / mean;
  if (b.max_u > 0.0) est.max_log_weight = log_scale + std::log(b.max_u);
  if (est.std_err_rel > kUnreliableRelErr) est.flags.push_back("unreliable");
  return est;
}

template <typename Sampler>
auto f_drawer(const Sampler& s, const Statistic& f) {
  return [&s, &f](CounterRng& rng) { return f(s(rng)); };
}

}  // namespace detail

// Fraction of N i.i.d. blocks of n draws whose f-mean reaches alpha.
inline TailEstimate mc_tail(const Distribution& P, const Statistic& f, double alpha, int n, std::uint64_t N,
                            std::uint64_t seed, int workers = 1) {
  detail::check_sampling_args(n, N);
  detail::BlockSums sums;
  if (const auto* fd = std::get_if<FiniteDist>(&P)) {
    const FiniteSampler s(*fd);
    sums = detail::run_blocks(detail::f_drawer(s, f), n, alpha, 0.0, N, seed, workers);
  } else if (const auto* g = std::get_if<Gaussian>(&P)) {
    auto draw = [g, &f](CounterRng& rng) { return f(gaussian_quantile(*g, rng.uniform())); };
    sums = detail::run_blocks(draw, n, alpha, 0.0, N, seed, workers);
  } else {
    const auto& e = std::get<Exponential>(P);
    auto draw = [&e, &f](CounterRng& rng) { return f(exponential_quantile(e, rng.uniform())); };
    sums = detail::run_blocks(draw, n, alpha, 0.0, N, seed, workers);
  }
  TailEstimate est = detail::finish(sums, 0.0, N);
  // Plain estimator: binomial standard error.
  if (sums.hits > 0) {
    const double p = static_cast<double>(sums.hits) / static_cast<double>(N);
    est.std_err_rel = std::sqrt(p * (1.0 - p) / static_cast<double>(N)) / p;
  }
  est.max_log_weight = -kInf;
  est.method = EstimateMethod::plain;
  est.seed = seed;
  est.n = n;
  est.workers = workers;
  return est;
}

// Importance sampling under the tilt Q* that puts the mean of f at alpha:
//   P{S >= n alpha} = e^{-n D} E_{Q*}[ 1{S >= n alpha} e^{-lambda*(S - n alpha)} ].
inline TailEstimate is_tail(const Distribution& P, const Statistic& f, double alpha, int n, std::uint64_t N,
                            std::uint64_t seed, int workers = 1) {
  detail::check_sampling_args(n, N);
  const CgfSpec spec = CgfSpec::from(P, f);
  const RatePoint rp = rate_equality(spec, alpha);
  if (rp.boundary != RateBoundary::interior || !rp.lambda_star || !(*rp.lambda_star > 1e-12))
    throw LdpError("no-tilt-available", "alpha must lie strictly between the mean and the essential supremum");
  const double lambda = *rp.lambda_star;
  const double log_scale = -n * rp.gamma;

  detail::BlockSums sums;
  if (rp.tilted) {
    const FiniteSampler s(*rp.tilted);
    sums = detail::run_blocks(detail::f_drawer(s, f), n, alpha, lambda, N, seed, workers);
  } else if (const auto* g = std::get_if<Gaussian>(&P)) {
    const Gaussian q{g->mu + g->sigma * g->sigma * lambda * f.slope(), g->sigma};
    auto draw = [q, &f](CounterRng& rng) { return f(gaussian_quantile(q, rng.uniform())); };
    sums = detail::run_blocks(draw, n, alpha, lambda, N, seed, workers);
  } else {
    const auto& e = std::get<Exponential>(P);
    const Exponential q{e.theta - lambda * f.slope()};
    auto draw = [q, &f](CounterRng& rng) { return f(exponential_quantile(q, rng.uniform())); };
    sums = detail::run_blocks(draw, n, alpha, lambda, N, seed, workers);
  }
  TailEstimate est = detail::finish(sums, log_scale, N);
  est.method = EstimateMethod::tilted_is;
  est.seed = seed;
  est.n = n;
  est.workers = workers;
  return est;
}

// Importance sampling for {L_n in Gamma} with Gamma a halfspace, using the
// I-projection Q* as the sampling law.
inline TailEstimate is_empirical_event(const FiniteDist& P, int n, const Halfspace& H, std::uint64_t N,
                                       std::uint64_t seed, int workers = 1) {
  detail::check_sampling_args(n, N);
  Statistic f = H.f;
  double alpha = H.alpha;
  if (H.direction == Direction::le) {
    const Statistic orig = H.f;
    f = Statistic::custom([orig](double x) { return -orig(x); }, "neg");
    alpha = -H.alpha;
  }
  IProjectionResult proj;
  try {
    proj = iproject_inequality(P, f, alpha);
  } catch (const LdpError& e) {
    if (e.token() == "infeasible-constraints") throw LdpError("no-tilt-available", e.what());
    throw;
  }
  const double lambda = proj.multipliers.front();
  if (!std::isfinite(lambda))
    throw LdpError("no-tilt-available", "alpha at the essential supremum has no interior tilt");
  const FiniteSampler s(proj.q_star);
  const auto sums = detail::run_blocks(detail::f_drawer(s, f), n, alpha, lambda, N, seed, workers);
  TailEstimate est = detail::finish(sums, -n * proj.divergence, N);
  if (!proj.active.front()) est.flags.push_back("untilted");
  est.method = EstimateMethod::tilted_is;
  est.seed = seed;
  est.n = n;
  est.workers = workers;
  return est;
}

}  // namespace ldpkit

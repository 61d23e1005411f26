#pragma once

// Counter-based random stream and inverse-CDF sampling.
//
// Generator: "splitmix64-ctr". The k-th output of stream s under seed S is
// mix64(key(S, s) + (k + 1) * 0x9E3779B97F4A7C15), where key(S, s) =
// mix64(S ^ mix64(s + 0xD1B54A32D192ED03)) and mix64 is the SplitMix64
// finalizer. Any (seed, stream, counter) triple therefore maps to a fixed
// 64-bit word, independent of platform and of how work is split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "ldpkit/dist_core.hpp"

namespace ldpkit {

inline constexpr std::string_view kRngName = "splitmix64-ctr";

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream + 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t next() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform on the open interval (0, 1): 53-bit grid shifted by half a step.
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Inverse-CDF sampler for a finite distribution; cumulative sums over atoms in
// increasing value order.
class FiniteSampler {
 public:
  explicit FiniteSampler(const FiniteDist& P) : values_(P.values()) {
    cdf_.reserve(P.size());
    double c = 0.0;
    for (const auto& a : P.atoms()) {
      c += a.prob;
      cdf_.push_back(c);
    }
    cdf_.back() = 1.0;
  }

  std::size_t index(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

  double operator()(CounterRng& rng) const { return values_[index(rng.uniform())]; }

  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
  std::vector<double> cdf_;
};

inline double gaussian_quantile(const Gaussian& g, double u) {
  return g.mu - g.sigma * std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

inline double exponential_quantile(const Exponential& e, double u) { return -std::log1p(-u) / e.theta; }

inline std::vector<double> sample(const FiniteDist& P, CounterRng& rng, std::size_t count) {
  FiniteSampler s(P);
  std::vector<double> out(count);
  for (auto& x : out) x = s(rng);
  return out;
}

inline std::vector<double> sample(const Gaussian& g, CounterRng& rng, std::size_t count) {
  std::vector<double> out(count);
  for (auto& x : out) x = gaussian_quantile(g, rng.uniform());
  return out;
}

inline std::vector<double> sample(const Exponential& e, CounterRng& rng, std::size_t count) {
  std::vector<double> out(count);
  for (auto& x : out) x = exponential_quantile(e, rng.uniform());
  return out;
}

inline std::vector<double> sample(const Distribution& d, CounterRng& rng, std::size_t count) {
  return std::visit([&](const auto& x) { return sample(x, rng, count); }, d);
}

}  // namespace ldpkit

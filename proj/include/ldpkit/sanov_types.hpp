#pragma once

// Exact empirical-measure probabilities on a finite alphabet by streaming
// enumeration of type classes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "ldpkit/dist_core.hpp"
#include "ldpkit/iprojection.hpp"
#include "ldpkit/numeric.hpp"

namespace ldpkit {

inline constexpr double kMaxTypes = 1e8;

struct TypeVector {
  std::vector<int> counts;
  int n = 0;
};

enum class Direction { ge, le };

struct Halfspace {
  Statistic f = Statistic::identity();
  double alpha = 0.0;
  Direction direction = Direction::ge;
};

struct TvBall {
  FiniteDist center;
  double radius = 0.0;
};

// Caller asserts the predicate describes the intended event; `values` is the
// alphabet in P's atom order.
struct TypePredicate {
  std::function<bool(const TypeVector&, std::span<const double> values)> test;
};

struct WholeSimplex {};

using EventSpec = std::variant<WholeSimplex, Halfspace, TvBall, TypePredicate>;

// C(n + k - 1, k - 1) as a double.
inline double type_count(int n, int k) {
  return std::exp(std::lgamma(n + k) - std::lgamma(n + 1) - std::lgamma(k));
}

inline void check_enumeration_guard(int n, int k) {
  if (n < 0 || k < 1) throw LdpError("invalid-argument", "need n >= 0 and k >= 1");
  if (std::round(type_count(n, k)) > kMaxTypes)
    throw LdpError("enumeration-too-large", "more than 1e8 type classes");
}

namespace detail {

// Visits all compositions of `remaining` into counts[pos..k-1] in decreasing
// lexicographic order.
template <typename Fn>
void enumerate_tail(std::vector<int>& counts, std::size_t pos, int remaining, Fn& fn) {
  const std::size_t k = counts.size();
  if (pos + 1 == k) {
    counts[pos] = remaining;
    fn(counts);
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    counts[pos] = c;
    enumerate_tail(counts, pos + 1, remaining - c, fn);
  }
}

}  // namespace detail

// Streams every type of n over k letters, starting at (n, 0, ..., 0).
template <typename Fn>
void enumerate_types(int n, int k, Fn&& fn) {
  check_enumeration_guard(n, k);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  TypeVector t;
  t.n = n;
  auto visit = [&](const std::vector<int>& c) {
    t.counts = c;
    fn(static_cast<const TypeVector&>(t));
  };
  detail::enumerate_tail(counts, 0, n, visit);
}

inline std::vector<TypeVector> list_types(int n, int k) {
  std::vector<TypeVector> out;
  enumerate_types(n, k, [&](const TypeVector& t) { out.push_back(t); });
  return out;
}

// log of the multinomial probability of the type class of T under P^n.
inline double type_log_prob(const TypeVector& T, const FiniteDist& P) {
  if (T.counts.size() != P.size()) throw LdpError("invalid-argument", "type length must match the alphabet");
  double lp = std::lgamma(T.n + 1.0);
  for (std::size_t i = 0; i < P.size(); ++i) {
    const int c = T.counts[i];
    if (c == 0) continue;
    if (P[i].prob == 0.0) return -kInf;
    lp += c * std::log(P[i].prob) - std::lgamma(c + 1.0);
  }
  return std::min(lp, 0.0);
}

namespace detail {

class EventTester {
 public:
  EventTester(const FiniteDist& P, const EventSpec& E) : values_(P.values()), event_(E) {
    if (const auto* h = std::get_if<Halfspace>(&E)) {
      for (double v : values_) fvals_.push_back(h->f(v));
    } else if (const auto* b = std::get_if<TvBall>(&E)) {
      for (double v : values_) center_.push_back(b->center.prob_of(v));
      outside_mass_ = 0.0;
      for (const auto& a : b->center.atoms())
        if (P.prob_of(a.value) == 0.0 && std::none_of(values_.begin(), values_.end(), [&](double v) {
              return std::abs(v - a.value) <= kValueTol;
            }))
          outside_mass_ += a.prob;
    }
  }

  bool operator()(const TypeVector& t) const {
    return std::visit(
        [&](const auto& e) -> bool {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, WholeSimplex>) {
            return true;
          } else if constexpr (std::is_same_v<T, Halfspace>) {
            // Integer counts against n*alpha with one subtraction.
            double s = 0.0, mag = 0.0;
            for (std::size_t i = 0; i < fvals_.size(); ++i) {
              s += t.counts[i] * fvals_[i];
              mag += t.counts[i] * std::abs(fvals_[i]);
            }
            const double diff = s - t.n * e.alpha;
            const double tol = 1e-9 * (1.0 + mag);
            return e.direction == Direction::ge ? diff >= -tol : diff <= tol;
          } else if constexpr (std::is_same_v<T, TvBall>) {
            double s = outside_mass_;
            for (std::size_t i = 0; i < center_.size(); ++i)
              s += std::abs(static_cast<double>(t.counts[i]) / t.n - center_[i]);
            return 0.5 * s <= e.radius + 1e-12;
          } else {
            return e.test(t, values_);
          }
        },
        event_);
  }

 private:
  std::vector<double> values_;
  std::vector<double> fvals_;
  std::vector<double> center_;
  double outside_mass_ = 0.0;
  const EventSpec& event_;
};

// Runs `visit(type, log_prob)` over all types, splitting by the first count
// across workers. Each first-count slice writes into its own slot so merges
// happen in slice order regardless of the worker count.
template <typename Acc, typename Visit>
std::vector<Acc> for_each_type_chunked(const FiniteDist& P, int n, int workers, Visit visit) {
  const int k = static_cast<int>(P.size());
  check_enumeration_guard(n, k);
  std::vector<double> logp(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) logp[i] = P[i].prob > 0.0 ? std::log(P[i].prob) : -kInf;
  std::vector<double> lfact(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) lfact[i] = std::lgamma(i + 1.0);

  std::vector<Acc> slots(static_cast<std::size_t>(n) + 1);
  auto run_slice = [&](int first) {
    TypeVector t;
    t.n = n;
    t.counts.assign(P.size(), 0);
    t.counts[0] = first;
    Acc& acc = slots[static_cast<std::size_t>(first)];
    auto leaf = [&](const std::vector<int>& c) {
      double lp = lfact[n];
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] == 0) continue;
        if (logp[i] == -kInf) return;
        lp += c[i] * logp[i] - lfact[c[i]];
      }
      t.counts = c;
      visit(acc, t, std::min(lp, 0.0));
    };
    if (k == 1) {
      if (first == n) leaf(t.counts);
      return;
    }
    std::vector<int> counts = t.counts;
    enumerate_tail(counts, 1, n - first, leaf);
  };

  workers = std::max(1, workers);
  if (workers == 1) {
    for (int first = n; first >= 0; --first) run_slice(first);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int first = n - w; first >= 0; first -= workers) run_slice(first);
      });
    for (auto& th : pool) th.join();
  }
  return slots;
}

}  // namespace detail

// log P{L_n in E} under P^n.
inline double event_log_prob_exact(const FiniteDist& P, int n, const EventSpec& E, int workers = 1) {
  const detail::EventTester in_event(P, E);
  auto slots = detail::for_each_type_chunked<LogSumAccumulator>(
      P, n, workers, [&](LogSumAccumulator& acc, const TypeVector& t, double lp) {
        if (in_event(t)) acc.add(lp);
      });
  LogSumAccumulator total;
  for (std::size_t i = slots.size(); i-- > 0;) total.merge(slots[i]);
  return std::min(total.value(), 0.0);
}

inline double event_prob_exact(const FiniteDist& P, int n, const EventSpec& E, int workers = 1) {
  return std::exp(event_log_prob_exact(P, n, E, workers));
}

struct SanovGap {
  double exact_log = 0.0;
  double bound_log = 0.0;  // -n D(Gamma||P)
  double divergence = 0.0;
};

// Exact log-probability of a halfspace event next to the Sanov bound
// -n D(Gamma||P), with D(Gamma||P) from the inequality I-projection.
inline SanovGap sanov_bound_gap(const FiniteDist& P, int n, const Halfspace& H, int workers = 1) {
  SanovGap g;
  g.exact_log = event_log_prob_exact(P, n, H, workers);
  Statistic f = H.f;
  double alpha = H.alpha;
  if (H.direction == Direction::le) {
    const Statistic orig = H.f;
    f = Statistic::custom([orig](double x) { return -orig(x); }, "neg");
    alpha = -H.alpha;
  }
  try {
    g.divergence = iproject_inequality(P, f, alpha).divergence;
  } catch (const LdpError& e) {
    if (e.token() != "infeasible-constraints") throw;
    g.divergence = kInf;
  }
  g.bound_log = -n * g.divergence;
  return g;
}

// Law of X_1 given L_n in E: by exchangeability, given the type T the first
// coordinate is distributed as T/n.
inline FiniteDist gibbs_conditional(const FiniteDist& P, int n, const EventSpec& E, int workers = 1) {
  if (n < 1) throw LdpError("invalid-argument", "n must be positive");
  const detail::EventTester in_event(P, E);
  const std::size_t k = P.size();
  struct Acc {
    LogSumAccumulator total;
    std::vector<LogSumAccumulator> coord;
  };
  std::vector<double> logc(static_cast<std::size_t>(n) + 1);
  for (int c = 0; c <= n; ++c) logc[c] = c > 0 ? std::log(static_cast<double>(c)) : -kInf;
  auto slots = detail::for_each_type_chunked<Acc>(P, n, workers, [&](Acc& acc, const TypeVector& t, double lp) {
    if (!in_event(t)) return;
    if (acc.coord.empty()) acc.coord.resize(k);
    acc.total.add(lp);
    for (std::size_t i = 0; i < k; ++i)
      if (t.counts[i] > 0) acc.coord[i].add(lp + logc[t.counts[i]]);
  });
  LogSumAccumulator total;
  std::vector<LogSumAccumulator> coord(k);
  for (std::size_t s = slots.size(); s-- > 0;) {
    total.merge(slots[s].total);
    for (std::size_t i = 0; i < slots[s].coord.size(); ++i) coord[i].merge(slots[s].coord[i]);
  }
  const double lz = total.value();
  if (lz == -kInf) throw LdpError("conditioning-on-null", "event has probability zero");
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < k; ++i) {
    const double lw = coord[i].value();
    atoms.push_back({P[i].value, lw == -kInf ? 0.0 : std::exp(lw - lz - std::log(static_cast<double>(n)))});
  }
  return FiniteDist::from_weights(std::move(atoms));
}

}  // namespace ldpkit

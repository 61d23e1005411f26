#pragma once

// Probability measures on finite supports plus the two continuous families
// with closed-form cumulant generating functions, divergences, exponential
// tilting and lattice detection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ldpkit/error.hpp"
#include "ldpkit/numeric.hpp"

namespace ldpkit {

// Absolute tolerance for matching atom values across distributions.
inline constexpr double kValueTol = 1e-12;
// Tolerance on the total mass of a constructed FiniteDist.
inline constexpr double kMassTol = 1e-12;

struct Atom {
  double value;
  double prob;
};

enum class ZeroAtoms { drop, retain };

class FiniteDist {
 public:
  FiniteDist() = default;

  // Atoms may arrive in any order; they are sorted by value. Probabilities must
  // already sum to 1 within kMassTol.
  explicit FiniteDist(std::vector<Atom> atoms, ZeroAtoms zeros = ZeroAtoms::drop)
      : atoms_(std::move(atoms)), retains_zero_(zeros == ZeroAtoms::retain) {
    validate_and_sort();
    double total = 0.0;
    for (const auto& a : atoms_) total += a.prob;
    if (std::abs(total - 1.0) > kMassTol)
      throw LdpError("not-normalized", "probabilities sum to " + std::to_string(total));
  }

  // Builds a distribution from nonnegative weights, dividing by their sum.
  static FiniteDist from_weights(std::vector<Atom> atoms, ZeroAtoms zeros = ZeroAtoms::drop) {
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!(a.prob >= 0.0) || !std::isfinite(a.prob))
        throw LdpError("invalid-distribution", "weights must be finite and nonnegative");
      total += a.prob;
    }
    if (total <= 0.0) throw LdpError("invalid-distribution", "total weight is zero");
    for (auto& a : atoms) a.prob /= total;
    FiniteDist d;
    d.atoms_ = std::move(atoms);
    d.retains_zero_ = zeros == ZeroAtoms::retain;
    d.validate_and_sort();
    return d;
  }

  static FiniteDist from_pmf(std::span<const double> values, std::span<const double> probs,
                             ZeroAtoms zeros = ZeroAtoms::drop) {
    if (values.size() != probs.size())
      throw LdpError("invalid-distribution", "values and probabilities differ in length");
    std::vector<Atom> atoms;
    atoms.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) atoms.push_back({values[i], probs[i]});
    return FiniteDist(std::move(atoms), zeros);
  }

  static FiniteDist point_mass(double value) { return FiniteDist({{value, 1.0}}); }

  static FiniteDist bernoulli(double p) {
    return FiniteDist({{0.0, 1.0 - p}, {1.0, p}}, ZeroAtoms::drop);
  }

  std::size_t size() const { return atoms_.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }
  bool retains_zero_atoms() const { return retains_zero_; }

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(atoms_.size());
    for (const auto& a : atoms_) v.push_back(a.value);
    return v;
  }

  std::vector<double> probs() const {
    std::vector<double> p;
    p.reserve(atoms_.size());
    for (const auto& a : atoms_) p.push_back(a.prob);
    return p;
  }

  // Probability of the atom at `value` (matched within kValueTol), 0 if absent.
  double prob_of(double value) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), value - kValueTol,
                               [](const Atom& a, double v) { return a.value < v; });
    if (it != atoms_.end() && std::abs(it->value - value) <= kValueTol) return it->prob;
    return 0.0;
  }

  double min_value() const { return atoms_.front().value; }
  double max_value() const { return atoms_.back().value; }

 private:
  void validate_and_sort() {
    if (atoms_.empty()) throw LdpError("invalid-distribution", "no atoms");
    for (const auto& a : atoms_) {
      if (!std::isfinite(a.value))
        throw LdpError("invalid-distribution", "atom values must be finite");
      if (!(a.prob >= 0.0) || a.prob > 1.0 + kMassTol)
        throw LdpError("invalid-distribution", "probabilities must lie in [0,1]");
    }
    if (!retains_zero_)
      std::erase_if(atoms_, [](const Atom& a) { return a.prob == 0.0; });
    if (atoms_.empty()) throw LdpError("invalid-distribution", "no atoms with positive mass");
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    for (std::size_t i = 1; i < atoms_.size(); ++i)
      if (atoms_[i].value - atoms_[i - 1].value <= kValueTol)
        throw LdpError("duplicate-atom", "atom values must be distinct");
  }

  std::vector<Atom> atoms_;
  bool retains_zero_ = false;
};

struct Gaussian {
  double mu = 0.0;
  double sigma = 1.0;
};

struct Exponential {
  double theta = 1.0;  // rate
};

using ParametricDist = std::variant<Gaussian, Exponential>;
using Distribution = std::variant<FiniteDist, Gaussian, Exponential>;

inline Gaussian make_gaussian(double mu, double sigma) {
  if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma))
    throw LdpError("invalid-distribution", "gaussian requires finite mu and sigma > 0");
  return {mu, sigma};
}

inline Exponential make_exponential(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw LdpError("invalid-distribution", "exponential requires rate theta > 0");
  return {theta};
}

// ---------------------------------------------------------------------------
// Statistics f: value -> real.

class Statistic {
 public:
  enum class Kind { identity, affine, indicator, custom };

  static Statistic identity() { return Statistic(Kind::identity); }

  static Statistic affine(double slope, double intercept) {
    Statistic s(Kind::affine);
    s.slope_ = slope;
    s.intercept_ = intercept;
    return s;
  }

  static Statistic indicator(std::vector<double> set) {
    Statistic s(Kind::indicator);
    std::sort(set.begin(), set.end());
    s.set_ = std::move(set);
    return s;
  }

  static Statistic custom(std::function<double(double)> fn, std::string label = "custom") {
    Statistic s(Kind::custom);
    s.fn_ = std::move(fn);
    s.label_ = std::move(label);
    return s;
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::identity:
        return x;
      case Kind::affine:
        return slope_ * x + intercept_;
      case Kind::indicator:
        for (double v : set_)
          if (std::abs(v - x) <= kValueTol) return 1.0;
        return 0.0;
      case Kind::custom:
        return fn_(x);
    }
    return kNaN;
  }

  Kind kind() const { return kind_; }
  double slope() const { return kind_ == Kind::identity ? 1.0 : slope_; }
  double intercept() const { return kind_ == Kind::identity ? 0.0 : intercept_; }
  const std::vector<double>& indicator_set() const { return set_; }
  const std::string& label() const { return label_; }
  bool is_affine() const { return kind_ == Kind::identity || kind_ == Kind::affine; }

 private:
  explicit Statistic(Kind k) : kind_(k) {}

  Kind kind_;
  double slope_ = 1.0;
  double intercept_ = 0.0;
  std::vector<double> set_;
  std::function<double(double)> fn_;
  std::string label_;
};

// Law of f(X) for X ~ P; atoms with equal f-values (within kValueTol) merge.
inline FiniteDist pushforward(const FiniteDist& P, const Statistic& f) {
  std::vector<Atom> out;
  out.reserve(P.size());
  for (const auto& a : P.atoms()) out.push_back({f(a.value), a.prob});
  std::sort(out.begin(), out.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
  std::vector<Atom> merged;
  for (const auto& a : out) {
    if (!merged.empty() && a.value - merged.back().value <= kValueTol)
      merged.back().prob += a.prob;
    else
      merged.push_back(a);
  }
  return FiniteDist::from_weights(std::move(merged));
}

// ---------------------------------------------------------------------------
// Divergences.

namespace detail {

// Visits the union of supports in value order, calling fn(q, p) per value.
template <typename Fn>
void for_each_aligned(const FiniteDist& Q, const FiniteDist& P, Fn&& fn) {
  std::size_t i = 0, j = 0;
  const auto& qa = Q.atoms();
  const auto& pa = P.atoms();
  while (i < qa.size() || j < pa.size()) {
    if (j == pa.size() || (i < qa.size() && qa[i].value < pa[j].value - kValueTol)) {
      fn(qa[i].prob, 0.0);
      ++i;
    } else if (i == qa.size() || pa[j].value < qa[i].value - kValueTol) {
      fn(0.0, pa[j].prob);
      ++j;
    } else {
      fn(qa[i].prob, pa[j].prob);
      ++i;
      ++j;
    }
  }
}

}  // namespace detail

// D(Q||P) in nats; +inf when Q is not absolutely continuous w.r.t. P.
inline double kl_divergence(const FiniteDist& Q, const FiniteDist& P) {
  double d = 0.0;
  bool infinite = false;
  detail::for_each_aligned(Q, P, [&](double q, double p) {
    if (q == 0.0) return;
    if (p == 0.0) {
      infinite = true;
      return;
    }
    d += q * std::log(q / p);
  });
  if (infinite) return kInf;
  return std::max(d, 0.0);
}

// Var_Q[log dQ/dP].
inline double relative_varentropy(const FiniteDist& Q, const FiniteDist& P) {
  const double D = kl_divergence(Q, P);
  if (!std::isfinite(D))
    throw LdpError("not-absolutely-continuous", "Q has mass where P has none");
  double v = 0.0;
  detail::for_each_aligned(Q, P, [&](double q, double p) {
    if (q == 0.0) return;
    const double dev = std::log(q / p) - D;
    v += q * dev * dev;
  });
  return v;
}

inline double tv_distance(const FiniteDist& Q, const FiniteDist& P) {
  double s = 0.0;
  detail::for_each_aligned(Q, P, [&](double q, double p) { s += std::abs(q - p); });
  return std::min(0.5 * s, 1.0);
}

// Q_lambda with dQ/dP proportional to exp(lambda f). Computed in log space.
inline FiniteDist tilt(const FiniteDist& P, const Statistic& f, double lambda) {
  if (lambda == 0.0) return P;
  std::vector<double> logw;
  logw.reserve(P.size());
  for (const auto& a : P.atoms())
    logw.push_back(a.prob > 0.0 ? std::log(a.prob) + lambda * f(a.value) : -kInf);
  const double lse = log_sum_exp(logw);
  std::vector<Atom> out;
  out.reserve(P.size());
  for (std::size_t i = 0; i < P.size(); ++i)
    out.push_back({P[i].value, logw[i] == -kInf ? 0.0 : std::exp(logw[i] - lse)});
  return FiniteDist::from_weights(std::move(out), P.retains_zero_atoms() ? ZeroAtoms::retain
                                                                         : ZeroAtoms::drop);
}

// P( . | A) for a value predicate A.
template <typename Pred>
FiniteDist condition(const FiniteDist& P, Pred&& in_event) {
  std::vector<Atom> kept;
  double mass = 0.0;
  for (const auto& a : P.atoms()) {
    if (in_event(a.value) && a.prob > 0.0) {
      kept.push_back(a);
      mass += a.prob;
    }
  }
  if (mass <= 0.0) throw LdpError("conditioning-on-null", "event has probability zero");
  return FiniteDist::from_weights(std::move(kept));
}

// ---------------------------------------------------------------------------
// Moments.

inline double mean_f(const FiniteDist& P, const Statistic& f = Statistic::identity()) {
  double m = 0.0;
  for (const auto& a : P.atoms()) m += a.prob * f(a.value);
  return m;
}

inline double var_f(const FiniteDist& P, const Statistic& f = Statistic::identity()) {
  const double m = mean_f(P, f);
  double v = 0.0;
  for (const auto& a : P.atoms()) {
    const double d = f(a.value) - m;
    v += a.prob * d * d;
  }
  return v;
}

inline double mean_f(const Gaussian& g, const Statistic& f = Statistic::identity()) {
  if (!f.is_affine()) throw LdpError("unsupported-statistic", "continuous families need affine f");
  return f.slope() * g.mu + f.intercept();
}

inline double var_f(const Gaussian& g, const Statistic& f = Statistic::identity()) {
  if (!f.is_affine()) throw LdpError("unsupported-statistic", "continuous families need affine f");
  return f.slope() * f.slope() * g.sigma * g.sigma;
}

inline double mean_f(const Exponential& e, const Statistic& f = Statistic::identity()) {
  if (!f.is_affine()) throw LdpError("unsupported-statistic", "continuous families need affine f");
  return f.slope() / e.theta + f.intercept();
}

inline double var_f(const Exponential& e, const Statistic& f = Statistic::identity()) {
  if (!f.is_affine()) throw LdpError("unsupported-statistic", "continuous families need affine f");
  return f.slope() * f.slope() / (e.theta * e.theta);
}

inline double mean_f(const Distribution& d, const Statistic& f = Statistic::identity()) {
  return std::visit([&](const auto& x) { return mean_f(x, f); }, d);
}

inline double var_f(const Distribution& d, const Statistic& f = Statistic::identity()) {
  return std::visit([&](const auto& x) { return var_f(x, f); }, d);
}

// ---------------------------------------------------------------------------
// Lattice detection.

struct LatticeInfo {
  bool is_lattice = false;
  double step = kNaN;    // maximal step d; NaN when the support is a single point
  double offset = kNaN;  // w0: every support value is offset + k * step
  bool single_point = false;
};

namespace detail {

inline double float_gcd(double a, double b, double tol) {
  a = std::abs(a);
  b = std::abs(b);
  if (a < b) std::swap(a, b);
  while (b > tol) {
    double r = std::fmod(a, b);
    if (b - r <= tol) r = 0.0;
    a = b;
    b = r;
  }
  return a;
}

}  // namespace detail

// Largest step d such that every value is w0 + k d, k integer. Values whose
// step would put more than 1e6 lattice points across the span are declared
// non-lattice (the continued-fraction denominator bound).
inline LatticeInfo lattice_structure(std::span<const double> values) {
  if (values.empty()) throw LdpError("invalid-argument", "lattice_structure needs >= 1 value");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::vector<double> uniq;
  for (double x : v)
    if (uniq.empty() || x - uniq.back() > kValueTol) uniq.push_back(x);

  LatticeInfo info;
  info.offset = uniq.front();
  if (uniq.size() == 1) {
    info.is_lattice = true;
    info.single_point = true;
    return info;
  }
  double scale = 0.0;
  for (double x : uniq) scale = std::max(scale, std::abs(x));
  const double tol = 1e-9 * scale;

  double g = uniq[1] - uniq[0];
  for (std::size_t i = 2; i < uniq.size(); ++i) g = detail::float_gcd(g, uniq[i] - uniq[0], tol);

  const double span = uniq.back() - uniq.front();
  const double steps = std::round(span / g);
  if (!(g > tol) || steps > 1e6) return info;
  g = span / steps;
  for (double x : uniq) {
    const double k = (x - uniq.front()) / g;
    if (std::abs(k - std::round(k)) > 1e-9) return info;
  }
  info.is_lattice = true;
  info.step = g;
  return info;
}

inline LatticeInfo lattice_structure(const FiniteDist& P, const Statistic& f = Statistic::identity()) {
  std::vector<double> vals;
  for (const auto& a : P.atoms())
    if (a.prob > 0.0) vals.push_back(f(a.value));
  return lattice_structure(vals);
}

}  // namespace ldpkit

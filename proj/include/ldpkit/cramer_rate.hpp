#pragma once

// Cumulant generating functions and their Fenchel-Legendre transforms:
// the equality rate gamma(alpha), the one-sided rates gamma_+ and gamma_-,
// infima over closed sets, and the vector rate for d <= 3.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ldpkit/detail/moment.hpp"
#include "ldpkit/dist_core.hpp"

namespace ldpkit {

// User-supplied analytic CGF. `value` must return +inf outside the domain;
// d1/d2 are the first two derivatives on the domain. The domain endpoints are
// [lambda_min, lambda_max] intersected with where `value` is finite.
struct ClosedFormCgf {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  double lambda_min = -kInf;
  double lambda_max = kInf;
  double ess_inf = -kInf;
  double ess_sup = kInf;
  double mass_at_inf = 0.0;
  double mass_at_sup = 0.0;
  std::string name = "closed-form";
};

class CgfSpec {
 public:
  static CgfSpec finite(const FiniteDist& P, const Statistic& f = Statistic::identity()) {
    CgfSpec s;
    s.base_ = P;
    s.f_ = f;
    s.law_ = pushforward(P, f);
    s.log_p_.reserve(s.law_->size());
    s.vals_.reserve(s.law_->size());
    for (const auto& a : s.law_->atoms()) {
      s.log_p_.push_back(std::log(a.prob));
      s.vals_.push_back(a.value);
    }
    s.ess_inf_ = s.law_->min_value();
    s.ess_sup_ = s.law_->max_value();
    s.mass_inf_ = s.law_->atoms().front().prob;
    s.mass_sup_ = s.law_->atoms().back().prob;
    s.name_ = "finite";
    return s;
  }

  static CgfSpec gaussian(const Gaussian& g, const Statistic& f = Statistic::identity()) {
    if (!f.is_affine()) throw LdpError("unsupported-statistic", "continuous families need affine f");
    if (f.slope() == 0.0) return finite(FiniteDist::point_mass(f.intercept()));
    const double m = f.slope() * g.mu + f.intercept();
    const double s2 = f.slope() * f.slope() * g.sigma * g.sigma;
    ClosedFormCgf c;
    c.value = [m, s2](double l) { return m * l + 0.5 * s2 * l * l; };
    c.d1 = [m, s2](double l) { return m + s2 * l; };
    c.d2 = [s2](double) { return s2; };
    c.name = "gaussian";
    CgfSpec spec = closed_form(std::move(c));
    spec.f_ = f;
    spec.parametric_ = g;
    return spec;
  }

  static CgfSpec exponential(const Exponential& e, const Statistic& f = Statistic::identity()) {
    if (!f.is_affine()) throw LdpError("unsupported-statistic", "continuous families need affine f");
    const double a = f.slope(), b = f.intercept(), th = e.theta;
    if (a == 0.0) return finite(FiniteDist::point_mass(b));
    ClosedFormCgf c;
    c.value = [a, b, th](double l) {
      const double r = 1.0 - a * l / th;
      return r > 0.0 ? b * l - std::log(r) : kInf;
    };
    c.d1 = [a, b, th](double l) { return b + a / (th - a * l); };
    c.d2 = [a, th](double l) { return a * a / ((th - a * l) * (th - a * l)); };
    if (a > 0.0) {
      c.lambda_max = th / a;
      c.ess_inf = b;
    } else {
      c.lambda_min = th / a;
      c.ess_sup = b;
    }
    c.name = "exponential";
    CgfSpec spec = closed_form(std::move(c));
    spec.f_ = f;
    spec.parametric_ = e;
    return spec;
  }

  static CgfSpec closed_form(ClosedFormCgf c) {
    if (!c.value || !c.d1 || !c.d2) throw LdpError("invalid-cgf", "closed form needs value, d1, d2");
    if (!(c.lambda_min <= 0.0 && 0.0 <= c.lambda_max) || !(c.lambda_min < c.lambda_max))
      throw LdpError("degenerate-domain", "effective domain of the CGF must be a nondegenerate interval containing 0");
    CgfSpec s;
    s.name_ = c.name;
    s.ess_inf_ = c.ess_inf;
    s.ess_sup_ = c.ess_sup;
    s.mass_inf_ = c.mass_at_inf;
    s.mass_sup_ = c.mass_at_sup;
    s.closed_ = std::move(c);
    return s;
  }

  static CgfSpec from(const Distribution& d, const Statistic& f = Statistic::identity()) {
    return std::visit(
        [&](const auto& x) -> CgfSpec {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, FiniteDist>) return finite(x, f);
          else if constexpr (std::is_same_v<T, Gaussian>) return gaussian(x, f);
          else return exponential(x, f);
        },
        d);
  }

  // Lambda(lambda) in (-inf, +inf].
  double value(double l) const {
    if (law_) {
      if (l == 0.0) return 0.0;
      std::vector<double> e(vals_.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = log_p_[i] + l * vals_[i];
      return log_sum_exp(e);
    }
    if (l < closed_->lambda_min || l > closed_->lambda_max) return kInf;
    return closed_->value(l);
  }

  // Lambda'(lambda): the mean of f under the tilt.
  double d1(double l) const {
    if (law_) {
      double m, v;
      tilted_moments(l, m, v);
      return m;
    }
    return closed_->d1(l);
  }

  // Lambda''(lambda): the variance of f under the tilt.
  double d2(double l) const {
    if (law_) {
      double m, v;
      tilted_moments(l, m, v);
      return v;
    }
    return closed_->d2(l);
  }

  double mean() const { return d1(0.0); }
  double lambda_min() const { return law_ ? -kInf : closed_->lambda_min; }
  double lambda_max() const { return law_ ? kInf : closed_->lambda_max; }
  double ess_inf() const { return ess_inf_; }
  double ess_sup() const { return ess_sup_; }
  double mass_at_inf() const { return mass_inf_; }
  double mass_at_sup() const { return mass_sup_; }
  const std::string& name() const { return name_; }

  bool has_finite_base() const { return base_.has_value(); }
  const std::optional<FiniteDist>& base() const { return base_; }
  const std::optional<FiniteDist>& law() const { return law_; }
  const Statistic& statistic() const { return f_; }
  const std::optional<ParametricDist>& parametric() const { return parametric_; }

  std::optional<FiniteDist> tilted(double l) const {
    if (!base_) return std::nullopt;
    return tilt(*base_, f_, l);
  }

 private:
  CgfSpec() : f_(Statistic::identity()) {}

  void tilted_moments(double l, double& mean, double& var) const {
    std::vector<double> e(vals_.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = log_p_[i] + l * vals_[i];
    const double lse = log_sum_exp(e);
    mean = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) mean += std::exp(e[i] - lse) * vals_[i];
    var = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double d = vals_[i] - mean;
      var += std::exp(e[i] - lse) * d * d;
    }
  }

  std::optional<FiniteDist> base_;
  std::optional<FiniteDist> law_;  // law of f(X)
  Statistic f_;
  std::optional<ParametricDist> parametric_;
  std::vector<double> log_p_, vals_;
  std::optional<ClosedFormCgf> closed_;
  double ess_inf_ = -kInf, ess_sup_ = kInf, mass_inf_ = 0.0, mass_sup_ = 0.0;
  std::string name_;
};

inline double cgf(const CgfSpec& spec, double lambda) { return spec.value(lambda); }

enum class RateBoundary {
  interior,
  at_alpha_max,
  beyond_alpha_max,
  dual_boundary,
  at_alpha_min,
  beyond_alpha_min,
  dual_boundary_left,
};

inline std::string_view to_string(RateBoundary b) {
  switch (b) {
    case RateBoundary::interior: return "interior";
    case RateBoundary::at_alpha_max: return "at_alpha_max";
    case RateBoundary::beyond_alpha_max: return "beyond_alpha_max";
    case RateBoundary::dual_boundary: return "dual_boundary";
    case RateBoundary::at_alpha_min: return "at_alpha_min";
    case RateBoundary::beyond_alpha_min: return "beyond_alpha_min";
    case RateBoundary::dual_boundary_left: return "dual_boundary_left";
  }
  return "?";
}

struct RatePoint {
  double alpha = 0.0;
  double gamma = 0.0;
  std::optional<double> lambda_star;
  std::optional<FiniteDist> tilted;
  RateBoundary boundary = RateBoundary::interior;
};

namespace detail {

inline constexpr int kMaxNewton = 200;

// Solves Lambda'(lambda) = alpha on the side of 0 given by `dir` (+1 / -1)
// using Newton with a bisection safeguard. Returns nullopt when Lambda' never
// reaches alpha inside the effective domain.
inline std::optional<double> solve_slope(const CgfSpec& spec, double alpha, int dir) {
  const double tol = 1e-11 * (1.0 + std::abs(alpha));
  const double edge = dir > 0 ? spec.lambda_max() : spec.lambda_min();
  auto beyond = [&](double l) { return dir > 0 ? spec.d1(l) >= alpha : spec.d1(l) <= alpha; };

  double inner = 0.0, outer = dir;
  int grow = 0;
  while (true) {
    const bool in_domain = (dir > 0 ? outer < edge : outer > edge) && std::isfinite(spec.value(outer));
    if (in_domain && beyond(outer)) break;
    if (++grow > 4000) return std::nullopt;
    if (in_domain) {
      inner = outer;
      double cand = 2.0 * outer;
      if (std::isfinite(edge) && !(dir > 0 ? cand < edge : cand > edge)) cand = inner + 0.5 * (edge - inner);
      outer = cand;
    } else {
      if (!std::isfinite(edge)) return std::nullopt;
      outer = inner + 0.5 * (edge - inner);
    }
    if (outer == inner || !std::isfinite(outer)) return std::nullopt;
  }

  double lo = std::min(inner, outer), hi = std::max(inner, outer);
  double l = std::abs(spec.d1(outer) - alpha) < std::abs(spec.d1(inner) - alpha) ? outer : inner;
  for (int it = 0; it < kMaxNewton; ++it) {
    const double g = spec.d1(l) - alpha;
    if (std::abs(g) <= tol) return l;
    if (g > 0.0) hi = l; else lo = l;
    const double h = spec.d2(l);
    double next = h > 0.0 ? l - g / h : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == l) break;
    l = next;
  }
  return l;
}

inline RatePoint interior_point(const CgfSpec& spec, double alpha, double lambda) {
  RatePoint rp;
  rp.alpha = alpha;
  rp.lambda_star = lambda;
  rp.gamma = std::max(0.0, lambda * alpha - spec.value(lambda));
  rp.tilted = spec.tilted(lambda);
  rp.boundary = RateBoundary::interior;
  return rp;
}

inline RatePoint zero_rate(const CgfSpec& spec, double alpha) {
  RatePoint rp;
  rp.alpha = alpha;
  rp.gamma = 0.0;
  rp.lambda_star = 0.0;
  rp.tilted = spec.base();
  return rp;
}

}  // namespace detail

// gamma(alpha) = sup_lambda lambda*alpha - Lambda(lambda), split into the four
// cases: interior slope match, alpha at/beyond the essential supremum (or
// infimum), and a bounded dual domain whose slope never reaches alpha.
inline RatePoint rate_equality(const CgfSpec& spec, double alpha) {
  const double mean = spec.mean();
  const double scale = 1.0 + std::abs(alpha);
  if (std::abs(alpha - mean) <= 1e-12 * scale) return detail::zero_rate(spec, alpha);

  const int dir = alpha > mean ? 1 : -1;
  const double ess = dir > 0 ? spec.ess_sup() : spec.ess_inf();
  const double mass = dir > 0 ? spec.mass_at_sup() : spec.mass_at_inf();
  const double edge = dir > 0 ? spec.lambda_max() : spec.lambda_min();

  RatePoint rp;
  rp.alpha = alpha;
  if (std::isfinite(ess)) {
    const double gap = dir > 0 ? alpha - ess : ess - alpha;
    if (gap > kValueTol) {
      rp.gamma = kInf;
      rp.boundary = dir > 0 ? RateBoundary::beyond_alpha_max : RateBoundary::beyond_alpha_min;
      return rp;
    }
    if (gap >= -kValueTol) {
      rp.boundary = dir > 0 ? RateBoundary::at_alpha_max : RateBoundary::at_alpha_min;
      rp.gamma = mass > 0.0 ? -std::log(mass) : kInf;
      if (mass > 0.0 && spec.has_finite_base()) {
        const auto& f = spec.statistic();
        rp.tilted = condition(*spec.base(), [&](double x) { return std::abs(f(x) - ess) <= kValueTol; });
      }
      return rp;
    }
  }

  // Bounded dual domain with the endpoint included: if the slope there falls
  // short of alpha, the supremum sits at the endpoint.
  if (std::isfinite(edge) && std::isfinite(spec.value(edge))) {
    const double slope = spec.d1(edge);
    if (dir > 0 ? slope < alpha : slope > alpha) {
      rp.gamma = edge * alpha - spec.value(edge);
      rp.lambda_star = edge;
      rp.boundary = dir > 0 ? RateBoundary::dual_boundary : RateBoundary::dual_boundary_left;
      return rp;
    }
  }

  const auto lambda = detail::solve_slope(spec, alpha, dir);
  if (!lambda) {
    // Lambda' saturates below alpha without reaching the ess sup; the
    // supremum is approached at the edge of the domain.
    if (std::isfinite(edge)) {
      rp.gamma = edge * alpha - spec.value(edge);
      rp.lambda_star = edge;
      rp.boundary = dir > 0 ? RateBoundary::dual_boundary : RateBoundary::dual_boundary_left;
      return rp;
    }
    // Lambda' stays below alpha on an unbounded domain: the dual objective
    // grows without bound.
    rp.gamma = kInf;
    rp.boundary = dir > 0 ? RateBoundary::beyond_alpha_max : RateBoundary::beyond_alpha_min;
    return rp;
  }
  return detail::interior_point(spec, alpha, *lambda);
}

// gamma_+(alpha) = inf { D(Q||P) : E_Q f >= alpha }.
inline RatePoint rate_inequality(const CgfSpec& spec, double alpha) {
  if (alpha <= spec.mean()) return detail::zero_rate(spec, alpha);
  return rate_equality(spec, alpha);
}

// gamma_-(alpha) = inf { D(Q||P) : E_Q f <= alpha }.
inline RatePoint rate_lower(const CgfSpec& spec, double alpha) {
  if (alpha >= spec.mean()) return detail::zero_rate(spec, alpha);
  return rate_equality(spec, alpha);
}

struct Interval {
  double lo;
  double hi;
};

// inf over a union of closed intervals of gamma. gamma is nonincreasing left
// of the mean and nondecreasing right of it, so only the endpoint nearest to
// the mean in each interval matters.
inline double rate_closed_set(const CgfSpec& spec, std::span<const Interval> F) {
  if (F.size() > 8) throw LdpError("too-many-intervals", "at most 8 intervals supported");
  const double mean = spec.mean();
  double best = kInf;
  for (const auto& iv : F) {
    if (!(iv.lo <= iv.hi)) throw LdpError("invalid-interval", "interval must satisfy lo <= hi");
    double g;
    if (iv.lo <= mean && mean <= iv.hi) g = 0.0;
    else if (iv.lo > mean) g = rate_equality(spec, iv.lo).gamma;
    else g = rate_equality(spec, iv.hi).gamma;
    best = std::min(best, g);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Vector rate.

struct VectorDist {
  std::size_t dim = 0;
  std::vector<std::vector<double>> points;
  std::vector<double> probs;

  VectorDist(std::vector<std::vector<double>> pts, std::vector<double> p)
      : points(std::move(pts)), probs(std::move(p)) {
    if (points.empty() || points.size() != probs.size())
      throw LdpError("invalid-distribution", "points and probabilities must match and be nonempty");
    dim = points.front().size();
    if (dim == 0 || dim > 3) throw LdpError("invalid-dimension", "vector rate supports 1 <= d <= 3");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != dim) throw LdpError("invalid-distribution", "ragged points");
      if (!(probs[i] > 0.0)) throw LdpError("invalid-distribution", "probabilities must be positive");
      total += probs[i];
    }
    if (std::abs(total - 1.0) > kMassTol) throw LdpError("not-normalized", "probabilities must sum to 1");
  }

  std::vector<double> mean() const {
    std::vector<double> m(dim, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t c = 0; c < dim; ++c) m[c] += probs[i] * points[i][c];
    return m;
  }

  // Independent product of one-dimensional coordinates.
  static VectorDist product(std::span<const FiniteDist> coords) {
    std::vector<std::vector<double>> pts{{}};
    std::vector<double> pr{1.0};
    for (const auto& c : coords) {
      std::vector<std::vector<double>> np;
      std::vector<double> npr;
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (const auto& a : c.atoms()) {
          auto p = pts[i];
          p.push_back(a.value);
          np.push_back(std::move(p));
          npr.push_back(pr[i] * a.prob);
        }
      pts = std::move(np);
      pr = std::move(npr);
    }
    double total = 0.0;
    for (double p : pr) total += p;
    for (double& p : pr) p /= total;
    return VectorDist(std::move(pts), std::move(pr));
  }
};

struct VectorRatePoint {
  std::vector<double> alpha;
  double gamma = 0.0;
  std::optional<std::vector<double>> lambda_star;
  std::optional<std::vector<double>> tilted_probs;  // aligned with VectorDist::points
  RateBoundary boundary = RateBoundary::interior;
};

// sup_lambda <lambda, alpha> - Lambda(lambda) over R^d by damped Newton in the
// affine hull of the support. On the boundary of the convex hull the rate is
// -log P(face) plus the rate of the conditional law on the minimal face.
inline VectorRatePoint rate_vector(const VectorDist& P, std::span<const double> alpha_in,
                                   std::vector<double> lambda0 = {}) {
  using detail::Vec;
  if (alpha_in.size() != P.dim) throw LdpError("invalid-dimension", "alpha dimension mismatch");
  VectorRatePoint out;
  out.alpha.assign(alpha_in.begin(), alpha_in.end());

  std::vector<std::size_t> active(P.points.size());
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
  double log_face_mass = 0.0;

  for (int depth = 0; depth <= 4; ++depth) {
    std::vector<Vec> pts;
    std::vector<double> pr;
    double mass = 0.0;
    for (auto i : active) {
      pts.push_back(P.points[i]);
      pr.push_back(P.probs[i]);
      mass += P.probs[i];
    }
    const auto geo = detail::analyze_moments(pts, out.alpha);
    if (geo.hull.position == detail::HullPosition::outside) {
      out.gamma = kInf;
      out.boundary = RateBoundary::beyond_alpha_max;
      return out;
    }
    if (geo.hull.position == detail::HullPosition::boundary) {
      const auto face = detail::minimal_face(geo);
      if (face.empty() || face.size() == active.size())
        throw LdpError("degenerate-support", "face reduction failed");
      std::vector<std::size_t> next;
      double fm = 0.0;
      for (auto j : face) {
        next.push_back(active[j]);
        fm += P.probs[active[j]];
      }
      log_face_mass += std::log(fm / mass);
      active = std::move(next);
      out.boundary = RateBoundary::at_alpha_max;
      continue;
    }

    detail::DualProblem prob;
    for (std::size_t i = 0; i < pts.size(); ++i) prob.log_p.push_back(std::log(pr[i] / mass));
    prob.z = geo.reduction.reduced;
    prob.t = geo.target;
    Vec mu0;
    if (!lambda0.empty() && out.boundary == RateBoundary::interior) mu0 = geo.reduction.reduce_direction(lambda0);
    const auto sol = detail::solve_dual(prob, mu0);
    out.gamma = std::max(0.0, sol.value - log_face_mass);
    std::vector<double> q(P.points.size(), 0.0);
    for (std::size_t j = 0; j < active.size(); ++j) q[active[j]] = sol.q[j];
    out.tilted_probs = std::move(q);
    if (out.boundary == RateBoundary::interior) out.lambda_star = geo.reduction.lift(sol.mu);
    return out;
  }
  throw LdpError("degenerate-support", "face reduction did not terminate");
}

}  // namespace ldpkit

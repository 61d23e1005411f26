#pragma once

// Shared machinery for multi-dimensional moment problems on finite supports:
// affine-hull reduction of feature vectors, exact relative-interior tests by
// facet enumeration, and the damped Newton solver for the concave dual
//   g(mu) = <mu, t> - log sum_i p_i exp(<mu, z_i>).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ldpkit/error.hpp"
#include "ldpkit/numeric.hpp"

namespace ldpkit::detail {

using Vec = std::vector<double>;

// Orthonormal basis of span{points[i] - points[0]} and reduced coordinates.
struct AffineReduction {
  std::size_t ambient_dim = 0;
  Vec origin;                  // points[0]
  std::vector<Vec> basis;      // r orthonormal vectors in R^m
  std::vector<Vec> reduced;    // K points in R^r

  std::size_t dim() const { return basis.size(); }

  Vec reduce(const Vec& y) const {
    Vec z(basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < ambient_dim; ++c) s += basis[j][c] * (y[c] - origin[c]);
      z[j] = s;
    }
    return z;
  }

  // Coordinates of a direction (no origin shift) in the basis.
  Vec reduce_direction(const Vec& v) const {
    Vec z(basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j) z[j] = dot(basis[j], v);
    return z;
  }

  // Distance from y to the affine hull.
  double residual(const Vec& y) const {
    const Vec z = reduce(y);
    double r2 = 0.0;
    for (std::size_t c = 0; c < ambient_dim; ++c) {
      double back = origin[c];
      for (std::size_t j = 0; j < basis.size(); ++j) back += basis[j][c] * z[j];
      r2 += (y[c] - back) * (y[c] - back);
    }
    return std::sqrt(r2);
  }

  // Maps a reduced multiplier back to ambient coordinates (minimum-norm).
  Vec lift(const Vec& mu) const {
    Vec lam(ambient_dim, 0.0);
    for (std::size_t j = 0; j < basis.size(); ++j)
      for (std::size_t c = 0; c < ambient_dim; ++c) lam[c] += basis[j][c] * mu[j];
    return lam;
  }
};

inline double scale_of(const std::vector<Vec>& pts) {
  double s = 0.0;
  for (const auto& p : pts)
    for (double v : p) s = std::max(s, std::abs(v));
  return std::max(s, 1.0);
}

// Modified Gram-Schmidt; `tol` is relative to the coordinate scale.
inline AffineReduction reduce_affine(const std::vector<Vec>& points, double tol = 1e-10) {
  AffineReduction red;
  red.ambient_dim = points.front().size();
  red.origin = points.front();
  const double abs_tol = tol * scale_of(points);
  for (const auto& p : points) {
    Vec d(red.ambient_dim);
    for (std::size_t c = 0; c < red.ambient_dim; ++c) d[c] = p[c] - red.origin[c];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : red.basis) {
        const double proj = dot(b, d);
        for (std::size_t c = 0; c < red.ambient_dim; ++c) d[c] -= proj * b[c];
      }
    const double nrm = std::sqrt(dot(d, d));
    if (nrm > abs_tol) {
      for (double& v : d) v /= nrm;
      red.basis.push_back(std::move(d));
    }
  }
  red.reduced.reserve(points.size());
  for (const auto& p : points) red.reduced.push_back(red.reduce(p));
  return red;
}

enum class HullPosition { interior, boundary, outside };

struct Facet {
  Vec normal;     // unit, pointing into the hull
  double offset;  // <normal, z> >= offset for every support point
};

struct HullTest {
  HullPosition position = HullPosition::interior;
  std::vector<Facet> active;  // facets containing the target (boundary case)
};

namespace hull_impl {

// Unit vector orthogonal to the given vectors in R^r, or empty if they are
// linearly dependent.
inline Vec orthogonal_complement_vector(const std::vector<Vec>& vs, std::size_t r, double tol) {
  std::vector<Vec> ortho;
  for (Vec d : vs) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : ortho) {
        const double proj = dot(b, d);
        for (std::size_t c = 0; c < r; ++c) d[c] -= proj * b[c];
      }
    const double nrm = std::sqrt(dot(d, d));
    if (nrm <= tol) return {};
    for (double& v : d) v /= nrm;
    ortho.push_back(std::move(d));
  }
  Vec best;
  double best_norm = 0.0;
  for (std::size_t e = 0; e < r; ++e) {
    Vec d(r, 0.0);
    d[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : ortho) {
        const double proj = dot(b, d);
        for (std::size_t c = 0; c < r; ++c) d[c] -= proj * b[c];
      }
    const double nrm = std::sqrt(dot(d, d));
    if (nrm > best_norm) {
      best_norm = nrm;
      best = d;
    }
  }
  for (double& v : best) v /= best_norm;
  return best;
}

inline void next_combination_or_end(std::vector<std::size_t>& idx, std::size_t n, bool& done) {
  const std::size_t k = idx.size();
  std::size_t i = k;
  while (i-- > 0) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return;
    }
  }
  done = true;
}

}  // namespace hull_impl

// Classifies target t against conv{pts} in full-dimensional reduced
// coordinates (pts must affinely span R^r). Enumerates r-subsets of distinct
// points; a subset defines a facet when every point lies on one side.
inline HullTest classify_in_hull(const std::vector<Vec>& pts, const Vec& t, double tol = 1e-10) {
  HullTest out;
  const std::size_t r = t.size();
  if (r == 0) return out;
  std::vector<Vec> uniq;
  const double abs_tol = tol * scale_of(pts);
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& u : uniq) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < r; ++c) d2 += (p[c] - u[c]) * (p[c] - u[c]);
      if (std::sqrt(d2) <= abs_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(p);
  }
  if (uniq.size() < r) throw LdpError("degenerate-support", "points do not span the reduced space");

  std::vector<Facet> facets;
  std::vector<std::size_t> idx(r);
  for (std::size_t i = 0; i < r; ++i) idx[i] = i;
  bool done = false;
  while (!done) {
    std::vector<Vec> diffs;
    for (std::size_t i = 1; i < r; ++i) {
      Vec d(r);
      for (std::size_t c = 0; c < r; ++c) d[c] = uniq[idx[i]][c] - uniq[idx[0]][c];
      diffs.push_back(std::move(d));
    }
    Vec nrm = hull_impl::orthogonal_complement_vector(diffs, r, abs_tol);
    if (!nrm.empty()) {
      const double off = dot(nrm, uniq[idx[0]]);
      bool any_pos = false, any_neg = false;
      for (const auto& p : uniq) {
        const double s = dot(nrm, p) - off;
        if (s > abs_tol) any_pos = true;
        if (s < -abs_tol) any_neg = true;
      }
      if (!(any_pos && any_neg)) {
        if (any_neg) {
          for (double& v : nrm) v = -v;
          facets.push_back({nrm, -off});
        } else {
          facets.push_back({nrm, off});
        }
      }
    }
    hull_impl::next_combination_or_end(idx, uniq.size(), done);
  }

  for (const auto& f : facets) {
    const double s = dot(f.normal, t) - f.offset;
    if (s < -abs_tol) {
      out.position = HullPosition::outside;
      out.active.clear();
      return out;
    }
    if (s <= abs_tol) {
      out.position = HullPosition::boundary;
      out.active.push_back(f);
    }
  }
  return out;
}

// Full classification in ambient coordinates: outside the affine hull counts
// as outside.
struct MomentGeometry {
  AffineReduction reduction;
  Vec target;  // reduced target
  HullTest hull;
};

inline MomentGeometry analyze_moments(const std::vector<Vec>& features, const Vec& alpha,
                                      double tol = 1e-10) {
  MomentGeometry g;
  g.reduction = reduce_affine(features, tol);
  const double abs_tol = tol * std::max(scale_of(features), scale_of({alpha}));
  if (g.reduction.residual(alpha) > abs_tol) {
    g.hull.position = HullPosition::outside;
    return g;
  }
  g.target = g.reduction.reduce(alpha);
  g.hull = classify_in_hull(g.reduction.reduced, g.target, tol);
  return g;
}

// Indices of support points lying on every active facet (the minimal face
// containing the target).
inline std::vector<std::size_t> minimal_face(const MomentGeometry& g, double tol = 1e-10) {
  const double abs_tol = tol * scale_of(g.reduction.reduced);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < g.reduction.reduced.size(); ++i) {
    bool on_all = true;
    for (const auto& f : g.hull.active)
      if (std::abs(dot(f.normal, g.reduction.reduced[i]) - f.offset) > abs_tol) on_all = false;
    if (on_all) keep.push_back(i);
  }
  return keep;
}

// ---------------------------------------------------------------------------
// Dual Newton.

struct DualSolution {
  Vec mu;
  double value = 0.0;     // g(mu) = <mu,t> - log Z(mu)
  double log_partition = 0.0;
  Vec q;                  // tilted probabilities
  double grad_norm = 0.0;
  int iterations = 0;
};

struct DualProblem {
  std::vector<double> log_p;  // K log-probabilities (finite)
  std::vector<Vec> z;         // K points in R^r
  Vec t;                      // target in R^r

  double log_partition(const Vec& mu) const {
    std::vector<double> e(log_p.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = log_p[i] + dot(mu, z[i]);
    return log_sum_exp(e);
  }

  double objective(const Vec& mu) const { return dot(mu, t) - log_partition(mu); }

  // Tilted weights, gradient t - E_q[z], and covariance Cov_q[z].
  void moments(const Vec& mu, Vec& q, Vec& grad, SmallMatrix& cov) const {
    const std::size_t K = log_p.size(), r = t.size();
    std::vector<double> e(K);
    for (std::size_t i = 0; i < K; ++i) e[i] = log_p[i] + dot(mu, z[i]);
    const double lse = log_sum_exp(e);
    q.assign(K, 0.0);
    for (std::size_t i = 0; i < K; ++i) q[i] = std::exp(e[i] - lse);
    Vec mean(r, 0.0);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t c = 0; c < r; ++c) mean[c] += q[i] * z[i][c];
    grad.assign(r, 0.0);
    for (std::size_t c = 0; c < r; ++c) grad[c] = t[c] - mean[c];
    cov = SmallMatrix(r);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b)
          cov(a, b) += q[i] * (z[i][a] - mean[a]) * (z[i][b] - mean[b]);
  }
};

// Damped Newton ascent. Requires t in the interior of conv{z_i}.
inline DualSolution solve_dual(const DualProblem& prob, Vec mu0 = {}, double grad_tol = 1e-13,
                               int max_iter = 500) {
  const std::size_t r = prob.t.size();
  if (mu0.empty()) mu0.assign(r, 0.0);
  DualSolution sol;
  sol.mu = std::move(mu0);
  double tscale = 1.0;
  for (double v : prob.t) tscale = std::max(tscale, std::abs(v));
  for (const auto& p : prob.z)
    for (double v : p) tscale = std::max(tscale, std::abs(v));

  Vec q, grad;
  SmallMatrix cov;
  double gnorm = kInf;
  for (int it = 0; it < max_iter; ++it) {
    prob.moments(sol.mu, q, grad, cov);
    gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    sol.iterations = it;
    if (gnorm <= grad_tol * tscale) break;
    Vec step;
    try {
      step = solve_linear(cov, grad, 1e-300);
    } catch (const LdpError&) {
      step = grad;  // flat curvature: fall back to gradient ascent
    }
    const double f0 = prob.objective(sol.mu);
    const double slope = dot(grad, step);
    double s = 1.0;
    Vec trial(r);
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls) {
      for (std::size_t c = 0; c < r; ++c) trial[c] = sol.mu[c] + s * step[c];
      const double f1 = prob.objective(trial);
      if (std::isfinite(f1) && f1 > f0 && f1 >= f0 + 1e-4 * s * slope) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      // Objective is flat to rounding; judge damped Newton steps by the gradient instead.
      Vec tq, tg;
      SmallMatrix tc;
      accepted = false;
      s = 1.0;
      for (int ls = 0; ls < 40 && !accepted; ++ls, s *= 0.5) {
        for (std::size_t c = 0; c < r; ++c) trial[c] = sol.mu[c] + s * step[c];
        prob.moments(trial, tq, tg, tc);
        double tn = 0.0;
        for (double g : tg) tn = std::max(tn, std::abs(g));
        accepted = std::isfinite(tn) && tn < gnorm;
      }
      if (!accepted) break;
    }
    sol.mu = trial;
  }
  prob.moments(sol.mu, q, grad, cov);
  gnorm = 0.0;
  for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
  if (!(gnorm <= 1e-9 * tscale))
    throw LdpError("no-convergence", "dual Newton did not reach the target moments");
  sol.q = std::move(q);
  sol.grad_norm = gnorm;
  sol.log_partition = prob.log_partition(sol.mu);
  sol.value = dot(sol.mu, prob.t) - sol.log_partition;
  return sol;
}

}  // namespace ldpkit::detail

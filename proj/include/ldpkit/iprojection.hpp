#pragma once

// I-projection of P onto moment-constraint sets on a finite alphabet.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ldpkit/cramer_rate.hpp"
#include "ldpkit/detail/moment.hpp"
#include "ldpkit/dist_core.hpp"

namespace ldpkit {

struct IProjectionResult {
  FiniteDist q_star;
  double divergence = 0.0;
  std::vector<double> multipliers;
  std::vector<double> residuals;  // Q*(f_j) - alpha_j
  std::vector<bool> active;       // inequality case only
  std::vector<std::string> notes;
};

// argmin D(Q||P) subject to Q(f_j) = alpha_j, j < m <= 4. Affinely dependent
// constraints are dropped (with a note); the returned multipliers are the
// minimum-norm ones.
inline IProjectionResult iproject_equality(const FiniteDist& P, std::span<const Statistic> fs,
                                           std::span<const double> alphas,
                                           std::vector<double> lambda0 = {}) {
  using detail::Vec;
  const std::size_t m = fs.size();
  if (m == 0 || m > 4) throw LdpError("too-many-constraints", "between 1 and 4 constraints supported");
  if (alphas.size() != m) throw LdpError("invalid-argument", "one alpha per constraint");

  std::vector<std::size_t> idx;
  std::vector<Vec> feats;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P[i].prob <= 0.0) continue;
    Vec y(m);
    for (std::size_t j = 0; j < m; ++j) y[j] = fs[j](P[i].value);
    idx.push_back(i);
    feats.push_back(std::move(y));
  }
  const Vec alpha(alphas.begin(), alphas.end());
  const auto geo = detail::analyze_moments(feats, alpha);
  if (geo.hull.position == detail::HullPosition::outside)
    throw LdpError("infeasible-constraints", "alpha lies outside the convex hull of the moment vectors");
  if (geo.hull.position == detail::HullPosition::boundary)
    throw LdpError("boundary-constraints", "alpha lies on the boundary of the moment polytope");

  IProjectionResult res;
  if (geo.reduction.dim() < m)
    res.notes.push_back("dropped " + std::to_string(m - geo.reduction.dim()) +
                        " affinely dependent constraint(s)");

  detail::DualProblem prob;
  for (auto i : idx) prob.log_p.push_back(std::log(P[i].prob));
  prob.z = geo.reduction.reduced;
  prob.t = geo.target;
  Vec mu0;
  if (!lambda0.empty()) mu0 = geo.reduction.reduce_direction(lambda0);
  const auto sol = detail::solve_dual(prob, mu0);

  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < P.size(); ++i) atoms.push_back({P[i].value, 0.0});
  for (std::size_t j = 0; j < idx.size(); ++j) atoms[idx[j]].prob = sol.q[j];
  res.q_star = FiniteDist::from_weights(std::move(atoms), P.retains_zero_atoms() ? ZeroAtoms::retain
                                                                                  : ZeroAtoms::drop);
  res.divergence = kl_divergence(res.q_star, P);
  res.multipliers = geo.reduction.lift(sol.mu);
  for (std::size_t j = 0; j < m; ++j) res.residuals.push_back(mean_f(res.q_star, fs[j]) - alphas[j]);
  return res;
}

inline IProjectionResult iproject_equality(const FiniteDist& P, const Statistic& f, double alpha) {
  const Statistic fs[] = {f};
  const double as[] = {alpha};
  return iproject_equality(P, fs, as);
}

// argmin D(Q||P) subject to Q(f) >= alpha.
inline IProjectionResult iproject_inequality(const FiniteDist& P, const Statistic& f, double alpha) {
  IProjectionResult res;
  const double mean = mean_f(P, f);
  if (mean >= alpha) {
    res.q_star = P;
    res.divergence = 0.0;
    res.multipliers = {0.0};
    res.residuals = {mean - alpha};
    res.active = {false};
    return res;
  }
  double sup = -kInf;
  for (const auto& a : P.atoms())
    if (a.prob > 0.0) sup = std::max(sup, f(a.value));
  if (alpha > sup + kValueTol)
    throw LdpError("infeasible-constraints", "alpha exceeds the essential supremum of f");
  if (alpha >= sup - kValueTol) {
    res.q_star = condition(P, [&](double x) { return std::abs(f(x) - sup) <= kValueTol; });
    res.divergence = kl_divergence(res.q_star, P);
    res.multipliers = {kInf};
    res.residuals = {mean_f(res.q_star, f) - alpha};
    res.active = {true};
    res.notes.push_back("alpha at the essential supremum: projection is P conditioned on argmax f");
    return res;
  }
  res = iproject_equality(P, f, alpha);
  res.active = {true};
  return res;
}

// D(R||P) - D(R||Q*) - D(Q*||P). Zero for equality constraints, and
// lambda* (R(f) - alpha) >= 0 for an active inequality.
inline double pythagorean_gap(const FiniteDist& R, const FiniteDist& P, const IProjectionResult& result) {
  return kl_divergence(R, P) - kl_divergence(R, result.q_star) - kl_divergence(result.q_star, P);
}

}  // namespace ldpkit

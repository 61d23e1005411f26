#pragma once

// Sharp tail asymptotics
//   P{ sum f(X_i) >= n alpha } ~ c / sqrt(2 pi n V) * exp(-n D)
// with D = D(Q*||P), V = Var_{Q*}[log dQ*/dP], and c the lattice correction
// of the information density.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "ldpkit/cramer_rate.hpp"
#include "ldpkit/dist_core.hpp"
#include "ldpkit/sanov_types.hpp"

namespace ldpkit {

struct SharpApprox {
  double alpha = 0.0;
  double D = 0.0;
  double V = 0.0;
  double lambda_star = 0.0;
  double log_partition = 0.0;  // Lambda(lambda*)
  LatticeInfo statistic_lattice;  // of the f-values
  LatticeInfo lattice;            // of the information density values
  double c = 1.0;
  FiniteDist q_star;

  double log_approx(int n) const {
    return -n * D + std::log(c) - 0.5 * std::log(2.0 * std::numbers::pi * n * V);
  }

  // Whether n*alpha is an attainable value of the lattice sum at this n.
  bool aligned(int n) const {
    if (!statistic_lattice.is_lattice || statistic_lattice.single_point) return false;
    const double k = n * (alpha - statistic_lattice.offset) / statistic_lattice.step;
    return std::abs(k - std::round(k)) <= 1e-9 * (1.0 + std::abs(k));
  }
};

// Strong Cramer approximation for a finite base and statistic f.
inline SharpApprox strong_cramer(const CgfSpec& spec, double alpha) {
  if (!spec.has_finite_base())
    throw LdpError("no-sharp-asymptotics", "sharp asymptotics need a finite base distribution");
  const RatePoint rp = rate_equality(spec, alpha);
  if (rp.boundary != RateBoundary::interior || !rp.lambda_star || !(*rp.lambda_star > 1e-12))
    throw LdpError("no-sharp-asymptotics", "alpha must lie strictly between the mean and the essential supremum");

  SharpApprox s;
  s.alpha = alpha;
  s.lambda_star = *rp.lambda_star;
  s.log_partition = spec.value(s.lambda_star);
  s.D = rp.gamma;
  s.q_star = *rp.tilted;
  s.V = s.lambda_star * s.lambda_star * var_f(s.q_star, spec.statistic());
  const double v_direct = relative_varentropy(s.q_star, *spec.base());
  if (std::abs(v_direct - s.V) > 1e-9 * std::max(1.0, s.V))
    throw LdpError("internal-error", "varentropy identity violated");

  s.statistic_lattice = lattice_structure(*spec.law());
  s.lattice = s.statistic_lattice;
  if (s.lattice.is_lattice && !s.lattice.single_point) {
    s.lattice.step = s.lambda_star * s.statistic_lattice.step;
    s.lattice.offset = s.lambda_star * s.statistic_lattice.offset - s.log_partition;
    s.c = lattice_factor(s.lattice.step);
  }
  return s;
}

// Strong Sanov approximation for a halfspace {Q : Q(f) >= alpha}. On halfspaces
// the I-projection is the exponential tilt, so this coincides with
// strong_cramer for the same statistic.
inline SharpApprox strong_sanov(const FiniteDist& P, const Halfspace& H) {
  if (H.direction != Direction::ge)
    throw LdpError("no-sharp-asymptotics", "strong Sanov is implemented for upper halfspaces");
  return strong_cramer(CgfSpec::finite(P, H.f), H.alpha);
}

struct ApproxRow {
  int n = 0;
  double exact_log = 0.0;
  double approx_log = 0.0;
  double ratio = 0.0;
  bool aligned = false;
};

inline std::vector<ApproxRow> approx_vs_exact(const FiniteDist& P, double alpha, std::span<const int> ns,
                                              const Statistic& f = Statistic::identity(), int workers = 1) {
  const SharpApprox s = strong_cramer(CgfSpec::finite(P, f), alpha);
  std::vector<ApproxRow> rows;
  for (int n : ns) {
    ApproxRow r;
    r.n = n;
    r.exact_log = event_log_prob_exact(P, n, Halfspace{f, alpha, Direction::ge}, workers);
    r.approx_log = s.log_approx(n);
    r.ratio = std::exp(r.exact_log - r.approx_log);
    r.aligned = s.aligned(n);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ldpkit

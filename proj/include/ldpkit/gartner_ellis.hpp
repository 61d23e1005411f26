#pragma once

// Finite-state Markov additive functionals Z_n = (1/n) sum f(X_i): the
// limiting CGF is the log Perron root of the tilted transfer matrix, and tail
// probabilities are computed exactly by dynamic programming over lattice sums.

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "ldpkit/cramer_rate.hpp"
#include "ldpkit/dist_core.hpp"
#include "ldpkit/numeric.hpp"

namespace ldpkit {

inline constexpr std::size_t kMaxStates = 16;

class MarkovModel {
 public:
  MarkovModel(std::vector<std::vector<double>> transition, std::vector<double> initial,
              std::vector<double> f, double row_tol = 1e-12)
      : transition_(std::move(transition)), initial_(std::move(initial)), f_(std::move(f)) {
    const std::size_t k = transition_.size();
    if (k == 0 || k > kMaxStates) throw LdpError("invalid-model", "need 1 to 16 states");
    if (initial_.size() != k || f_.size() != k) throw LdpError("invalid-model", "initial and f need k entries");
    for (auto& row : transition_) {
      if (row.size() != k) throw LdpError("invalid-model", "transition matrix must be k x k");
      double s = 0.0;
      for (double v : row) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw LdpError("invalid-model", "transition entries must be >= 0");
        s += v;
      }
      if (std::abs(s - 1.0) > row_tol) throw LdpError("not-normalized", "transition rows must sum to 1");
      for (double& v : row) v /= s;
    }
    double s = 0.0;
    for (double v : initial_) {
      if (!(v >= 0.0)) throw LdpError("invalid-model", "initial probabilities must be >= 0");
      s += v;
    }
    if (std::abs(s - 1.0) > row_tol) throw LdpError("not-normalized", "initial distribution must sum to 1");
    for (double& v : initial_) v /= s;
    for (double v : f_)
      if (!std::isfinite(v)) throw LdpError("invalid-model", "f values must be finite");
  }

  std::size_t states() const { return transition_.size(); }
  const std::vector<std::vector<double>>& transition() const { return transition_; }
  const std::vector<double>& initial() const { return initial_; }
  const std::vector<double>& f() const { return f_; }

  bool irreducible() const {
    const std::size_t k = states();
    for (std::size_t s = 0; s < k; ++s) {
      std::vector<bool> seen(k, false);
      std::vector<std::size_t> stack{s};
      seen[s] = true;
      while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < k; ++j)
          if (transition_[i][j] > 0.0 && !seen[j]) {
            seen[j] = true;
            stack.push_back(j);
          }
      }
      if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
    }
    return true;
  }

  // Stationary law by power iteration on the lazy chain (I + P) / 2.
  std::vector<double> stationary() const {
    const std::size_t k = states();
    std::vector<double> pi(k, 1.0 / k), next(k);
    for (int it = 0; it < 200000; ++it) {
      for (std::size_t j = 0; j < k; ++j) next[j] = 0.5 * pi[j];
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) next[j] += 0.5 * pi[i] * transition_[i][j];
      double diff = 0.0;
      for (std::size_t j = 0; j < k; ++j) diff = std::max(diff, std::abs(next[j] - pi[j]));
      pi.swap(next);
      if (diff < 1e-16) break;
    }
    return pi;
  }

  double stationary_mean() const {
    const auto pi = stationary();
    double m = 0.0;
    for (std::size_t j = 0; j < states(); ++j) m += pi[j] * f_[j];
    return m;
  }

 private:
  std::vector<std::vector<double>> transition_;
  std::vector<double> initial_;
  std::vector<double> f_;
};

// Plain-text model: line 1 k; next k lines transition rows; then the initial
// probabilities; then the f values. Stochasticity is validated to 1e-9.
inline MarkovModel parse_markov_model(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(line);
  }
  auto parse_row = [](const std::string& s, std::size_t line_no) {
    std::vector<double> row;
    std::string cleaned = s;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream is(cleaned);
    std::string tok;
    while (is >> tok) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size())
        throw LdpError("malformed-model", "line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      row.push_back(v);
    }
    return row;
  };
  if (lines.empty()) throw LdpError("malformed-model", "empty model file");
  const auto head = parse_row(lines[0], 1);
  if (head.size() != 1 || head[0] < 1 || head[0] != std::floor(head[0]))
    throw LdpError("malformed-model", "line 1 must hold the state count k");
  const auto k = static_cast<std::size_t>(head[0]);
  if (lines.size() != k + 3)
    throw LdpError("malformed-model", "expected " + std::to_string(k + 3) + " non-empty lines");
  std::vector<std::vector<double>> T;
  for (std::size_t i = 0; i < k; ++i) T.push_back(parse_row(lines[1 + i], 2 + i));
  return MarkovModel(std::move(T), parse_row(lines[k + 1], k + 2), parse_row(lines[k + 2], k + 3), 1e-9);
}

namespace detail {

struct PerronResult {
  double log_root = 0.0;  // log rho(T_lambda)
  double slope = 0.0;     // d/dlambda log rho
};

// Perron root of T_lambda[i][j] = P[i][j] exp(lambda f_j) by power iteration on
// T + sigma I, stopping when the Collatz-Wielandt bounds agree to 1e-13. The
// exponent is shifted by lambda * f_ref so that entries stay <= 1.
inline PerronResult perron(const MarkovModel& M, double lambda, bool with_slope) {
  const std::size_t k = M.states();
  const auto& P = M.transition();
  const auto& f = M.f();
  const double fmax = *std::max_element(f.begin(), f.end());
  const double fmin = *std::min_element(f.begin(), f.end());
  const double ref = lambda >= 0.0 ? fmax : fmin;

  SmallMatrix T(k);
  double max_row = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      T(i, j) = P[i][j] * std::exp(lambda * (f[j] - ref));
      rs += T(i, j);
    }
    max_row = std::max(max_row, rs);
  }
  const double sigma = 1e-3 * max_row;

  auto iterate = [&](bool transpose) {
    std::vector<double> v(k, 1.0), w(k);
    double lo = 0.0, hi = kInf;
    for (int it = 0; it < 100000; ++it) {
      for (std::size_t i = 0; i < k; ++i) {
        double s = sigma * v[i];
        for (std::size_t j = 0; j < k; ++j) s += (transpose ? T(j, i) : T(i, j)) * v[j];
        w[i] = s;
      }
      lo = kInf;
      hi = 0.0;
      double norm = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double r = w[i] / v[i];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        norm = std::max(norm, w[i]);
      }
      for (std::size_t i = 0; i < k; ++i) v[i] = std::max(w[i] / norm, 1e-300);
      if (hi - lo <= 1e-13 * lo) break;
    }
    return std::make_pair(0.5 * (lo + hi), v);
  };

  const auto [root_b, right] = iterate(false);
  const double rho = root_b - sigma;
  if (!(rho > 0.0)) throw LdpError("no-convergence", "Perron root is not positive");
  PerronResult res;
  res.log_root = lambda * ref + std::log(rho);
  if (with_slope) {
    const auto left = iterate(true).second;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      den += left[i] * right[i];
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += T(i, j) * (f[j] - ref) * right[j];
      num += left[i] * s;
    }
    res.slope = ref + num / (rho * den);
  }
  return res;
}

inline void require_irreducible(const MarkovModel& M) {
  if (!M.irreducible()) throw LdpError("not-irreducible", "transition graph is not strongly connected");
}

}  // namespace detail

// Lambda(lambda) = lim (1/n) log E exp(lambda sum f(X_i)).
inline double markov_cgf(const MarkovModel& M, double lambda) {
  detail::require_irreducible(M);
  return detail::perron(M, lambda, false).log_root;
}

// Lambda'(lambda) from the left/right Perron vectors.
inline double markov_cgf_slope(const MarkovModel& M, double lambda) {
  detail::require_irreducible(M);
  return detail::perron(M, lambda, true).slope;
}

// Wraps the limiting CGF as a closed-form spec so the one-dimensional
// Legendre solver applies unchanged. The mass at the top of the range is the
// Perron root of P restricted to argmax-f states: the exponential rate of
// staying there forever.
inline CgfSpec markov_cgf_spec(const MarkovModel& M) {
  detail::require_irreducible(M);
  const auto& f = M.f();
  const double fmax = *std::max_element(f.begin(), f.end());
  const double fmin = *std::min_element(f.begin(), f.end());
  auto restricted_root = [&](double level) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (std::abs(f[i] - level) <= kValueTol) keep.push_back(i);
    const std::size_t m = keep.size();
    std::vector<double> v(m, 1.0), w(m);
    double root = 0.0;
    for (int it = 0; it < 100000; ++it) {
      double norm = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < m; ++b) s += M.transition()[keep[a]][keep[b]] * v[b];
        w[a] = s;
        norm = std::max(norm, s);
      }
      if (norm == 0.0) return 0.0;
      const double prev = root;
      root = norm;
      for (std::size_t a = 0; a < m; ++a) v[a] = w[a] / norm;
      if (std::abs(root - prev) <= 1e-15 * root) break;
    }
    return root;
  };
  ClosedFormCgf c;
  c.value = [M](double l) { return detail::perron(M, l, false).log_root; };
  c.d1 = [M](double l) { return detail::perron(M, l, true).slope; };
  c.d2 = [M](double l) {
    const double h = 1e-5 * (1.0 + std::abs(l));
    return (detail::perron(M, l + h, true).slope - detail::perron(M, l - h, true).slope) / (2.0 * h);
  };
  c.ess_inf = fmin;
  c.ess_sup = fmax;
  c.mass_at_inf = restricted_root(fmin);
  c.mass_at_sup = restricted_root(fmax);
  c.name = "markov";
  return CgfSpec::closed_form(std::move(c));
}

// Lambda*(alpha) for the Markov additive functional.
inline RatePoint markov_rate(const MarkovModel& M, double alpha) {
  const CgfSpec spec = markov_cgf_spec(M);
  return rate_equality(spec, alpha);
}

// log P{ sum_{i=1}^n f(X_i) >= n alpha } with X_1 ~ initial, by forward DP over
// (state, lattice sum index) in log space.
inline double markov_tail_log_exact(const MarkovModel& M, double alpha, int n) {
  if (n < 1) throw LdpError("invalid-argument", "n must be positive");
  const std::size_t k = M.states();
  const auto lat = lattice_structure(M.f());
  if (!lat.is_lattice) throw LdpError("non-lattice-statistic", "exact DP needs lattice-valued f");
  std::vector<int> idx(k, 0);
  int kmax = 0;
  if (!lat.single_point) {
    for (std::size_t j = 0; j < k; ++j) {
      idx[j] = static_cast<int>(std::lround((M.f()[j] - lat.offset) / lat.step));
      kmax = std::max(kmax, idx[j]);
    }
  }
  const double cells = static_cast<double>(n) * (static_cast<double>(n) * kmax + 1.0);
  if (cells > 1e7) throw LdpError("dp-too-large", "more than 1e7 DP cells");

  // Event: n*w0 + step*K >= n*alpha.
  long long kmin;
  if (lat.single_point) {
    return n * lat.offset >= n * alpha - 1e-9 * (1.0 + std::abs(n * alpha)) ? 0.0 : -kInf;
  } else {
    const double thr = n * (alpha - lat.offset) / lat.step;
    kmin = static_cast<long long>(std::ceil(thr - 1e-9 * (1.0 + std::abs(thr))));
  }
  if (kmin <= 0) return 0.0;

  std::vector<std::vector<double>> logT(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      logT[i][j] = M.transition()[i][j] > 0.0 ? std::log(M.transition()[i][j]) : -kInf;

  const std::size_t width = static_cast<std::size_t>(n) * kmax + 1;
  std::vector<double> cur(k * width, -kInf), next(k * width, -kInf);
  for (std::size_t j = 0; j < k; ++j)
    if (M.initial()[j] > 0.0) cur[j * width + idx[j]] = std::log(M.initial()[j]);
  std::size_t top = static_cast<std::size_t>(kmax);  // largest reachable sum index
  for (int step = 1; step < n; ++step) {
    std::fill(next.begin(), next.end(), -kInf);
    for (std::size_t i = 0; i < k; ++i) {
      const double* src = &cur[i * width];
      for (std::size_t j = 0; j < k; ++j) {
        const double lt = logT[i][j];
        if (lt == -kInf) continue;
        double* dst = &next[j * width + idx[j]];
        for (std::size_t s = 0; s <= top; ++s) {
          if (src[s] == -kInf) continue;
          dst[s] = log_add_exp(dst[s], src[s] + lt);
        }
      }
    }
    top += static_cast<std::size_t>(kmax);
    cur.swap(next);
  }
  LogSumAccumulator acc;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t s = static_cast<std::size_t>(std::min<long long>(kmin, static_cast<long long>(width))); s < width; ++s)
      acc.add(cur[j * width + s]);
  return std::min(acc.value(), 0.0);
}

inline double markov_tail_exact(const MarkovModel& M, double alpha, int n) {
  return std::exp(markov_tail_log_exact(M, alpha, n));
}

}  // namespace ldpkit

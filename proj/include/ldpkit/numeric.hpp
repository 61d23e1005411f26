#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ldpkit/error.hpp"

namespace ldpkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log(sum(exp(x))) with max subtraction. Empty input or all -inf gives -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Streaming log-sum-exp. Accumulators merge exactly in a fixed order, which is
// what keeps chunked enumeration deterministic.
class LogSumAccumulator {
 public:
  void add(double log_term) {
    if (log_term == -kInf) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }

  void merge(const LogSumAccumulator& other) {
    if (other.max_ == -kInf) return;
    if (max_ == -kInf) {
      *this = other;
      return;
    }
    if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }

  double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_); }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

// x / (1 - e^{-x}); tends to 1 as x -> 0.
inline double lattice_factor(double x) {
  if (x == 0.0) return 1.0;
  return x / -std::expm1(-x);
}

// Dense row-major square matrix, just enough linear algebra for the small
// (<= 4x4) Newton systems and the <= 16-state transfer matrices.
struct SmallMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  explicit SmallMatrix(std::size_t dim = 0) : n(dim), a(dim * dim, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// Solves A x = b by Gaussian elimination with partial pivoting. Throws
// "singular-system" when a pivot falls below tol * max|A|.
inline std::vector<double> solve_linear(SmallMatrix A, std::vector<double> b,
                                        double tol = 1e-14) {
  const std::size_t n = A.n;
  double scale = 0.0;
  for (double v : A.a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw LdpError("singular-system", "zero matrix");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A(r, col)) > std::abs(A(piv, col))) piv = r;
    if (std::abs(A(piv, col)) <= tol * scale)
      throw LdpError("singular-system", "pivot below tolerance");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A(col, c), A(piv, c));
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = A(r, col) / A(col, col);
      if (m == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A(r, c) -= m * A(col, c);
      b[r] -= m * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= A(i, c) * x[c];
    x[i] = s / A(i, i);
  }
  return x;
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace ldpkit

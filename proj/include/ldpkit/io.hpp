#pragma once

// Text forms shared by the CLI and tests:
//
//   distribution:  finite: v1:p1, v2:p2, ...  |  gaussian: mu, sigma  |  exponential: theta
//   statistic:     id  |  affine: a, b  |  indicator: v1, v2, ...
//
// Whitespace is insignificant. Finite probabilities must sum to 1 within 1e-9
// and are renormalized when the sum is off by more than 1e-12.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "ldpkit/dist_core.hpp"
#include "ldpkit/error.hpp"

namespace ldpkit {

inline constexpr double kParseMassTol = 1e-9;

namespace detail {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }

  bool try_consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, std::string_view what) {
    if (!try_consume(c)) fail(std::string("expected '") + c + "' " + std::string(what));
  }

  std::string word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  double number(std::string_view what) {
    skip_ws();
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    if (begin < end && *begin == '+') ++begin;
    double v = 0.0;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || !std::isfinite(v)) fail("expected a finite number for " + std::string(what));
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw LdpError("malformed-input", "column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  std::size_t column() const { return pos_ + 1; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline Distribution parse_dist(std::string_view spec) {
  detail::Cursor cur(spec);
  const std::string family = cur.word();
  if (family.empty()) cur.fail("expected a family name (finite, gaussian, exponential)");
  cur.expect(':', "after the family name");
  if (family == "finite") {
    std::vector<Atom> atoms;
    do {
      const double v = cur.number("atom value");
      cur.expect(':', "between atom value and probability");
      const double p = cur.number("atom probability");
      if (p < 0.0 || p > 1.0) cur.fail("probability outside [0,1]");
      atoms.push_back({v, p});
    } while (cur.try_consume(','));
    if (!cur.at_end()) cur.fail("unexpected trailing input");
    double total = 0.0;
    for (const auto& a : atoms) total += a.prob;
    if (std::abs(total - 1.0) > kParseMassTol)
      throw LdpError("not-normalized", "probabilities sum to " + detail::fmt17(total));
    if (std::abs(total - 1.0) > kMassTol) return FiniteDist::from_weights(std::move(atoms));
    return FiniteDist(std::move(atoms));
  }
  if (family == "gaussian") {
    const double mu = cur.number("mu");
    cur.expect(',', "between mu and sigma");
    const double sigma = cur.number("sigma");
    if (!cur.at_end()) cur.fail("unexpected trailing input");
    return make_gaussian(mu, sigma);
  }
  if (family == "exponential") {
    const double theta = cur.number("theta");
    if (!cur.at_end()) cur.fail("unexpected trailing input");
    return make_exponential(theta);
  }
  throw LdpError("malformed-input", "column 1: unknown family '" + family + "'");
}

inline FiniteDist parse_finite_dist(std::string_view spec) {
  auto d = parse_dist(spec);
  if (auto* f = std::get_if<FiniteDist>(&d)) return std::move(*f);
  throw LdpError("unsupported-distribution", "a finite distribution is required here");
}

inline std::string render_dist(const FiniteDist& P) {
  std::string s = "finite:";
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (i) s += ',';
    s += detail::fmt17(P[i].value) + ":" + detail::fmt17(P[i].prob);
  }
  return s;
}

inline std::string render_dist(const Distribution& d) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, FiniteDist>) return render_dist(x);
        else if constexpr (std::is_same_v<T, Gaussian>) return "gaussian:" + detail::fmt17(x.mu) + "," + detail::fmt17(x.sigma);
        else return "exponential:" + detail::fmt17(x.theta);
      },
      d);
}

inline Statistic parse_statistic(std::string_view spec) {
  detail::Cursor cur(spec);
  const std::string kind = cur.word();
  if (kind == "id" || kind == "identity") {
    if (!cur.at_end()) cur.fail("unexpected trailing input");
    return Statistic::identity();
  }
  if (kind == "affine") {
    cur.expect(':', "after 'affine'");
    const double a = cur.number("slope");
    cur.expect(',', "between slope and intercept");
    const double b = cur.number("intercept");
    if (!cur.at_end()) cur.fail("unexpected trailing input");
    return Statistic::affine(a, b);
  }
  if (kind == "indicator") {
    cur.expect(':', "after 'indicator'");
    std::vector<double> set;
    do set.push_back(cur.number("indicator value"));
    while (cur.try_consume(','));
    if (!cur.at_end()) cur.fail("unexpected trailing input");
    return Statistic::indicator(std::move(set));
  }
  throw LdpError("malformed-input", "column 1: unknown statistic '" + kind + "' (id, affine, indicator)");
}

inline std::string render_statistic(const Statistic& f) {
  switch (f.kind()) {
    case Statistic::Kind::identity:
      return "id";
    case Statistic::Kind::affine:
      return "affine:" + detail::fmt17(f.slope()) + "," + detail::fmt17(f.intercept());
    case Statistic::Kind::indicator: {
      std::string s = "indicator:";
      for (std::size_t i = 0; i < f.indicator_set().size(); ++i) {
        if (i) s += ',';
        s += detail::fmt17(f.indicator_set()[i]);
      }
      return s;
    }
    case Statistic::Kind::custom:
      return f.label();
  }
  return "?";
}

// Comma-separated list of reals / integers (CLI flag values).
inline std::vector<double> parse_real_list(std::string_view s) {
  detail::Cursor cur(s);
  std::vector<double> out;
  do out.push_back(cur.number("list element"));
  while (cur.try_consume(','));
  if (!cur.at_end()) cur.fail("unexpected trailing input");
  return out;
}

inline std::vector<int> parse_int_list(std::string_view s) {
  std::vector<int> out;
  for (double v : parse_real_list(s)) {
    if (v != std::floor(v) || std::abs(v) > 2e9) throw LdpError("malformed-input", "expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace ldpkit

#pragma once

#include <cmath>
#include <sstream>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>

#include <boost/multiprecision/cpp_int.hpp>

#include "otf/core/error.hpp"

namespace otf {

// Exact rational scalar for budget arithmetic on decimal inputs.
using Rational = boost::multiprecision::cpp_rational;

// Annotation-time model of one scenario. Times are per-video averages in
// minutes; counts are numbers of videos.
template <class T>
struct BudgetModel {
  T t_bbox_per_video{};
  T t_otf_per_video{};
  std::int64_t n_box_otf = 0;
  std::int64_t n_weak_otf = 0;
  std::int64_t n_box_bbox = 0;
};

template <class T>
void validate_budget_model(const BudgetModel<T>& m) {
  if (!(m.t_bbox_per_video > T(0)) || !(m.t_otf_per_video > T(0)))
    throw Error(ErrorKind::invalid_argument, "non_positive_time");
  if (m.n_box_otf < 0 || m.n_weak_otf < 0 || m.n_box_bbox < 0)
    throw Error(ErrorKind::invalid_argument, "negative_count");
}

// Point-supervised scenario: box-level videos plus OTF-annotated videos.
template <class T>
T budget_otf(const BudgetModel<T>& m) {
  return m.t_bbox_per_video * T(m.n_box_otf) + m.t_otf_per_video * T(m.n_weak_otf);
}

// Box-only scenario.
template <class T>
T budget_bbox(const BudgetModel<T>& m) {
  return m.t_bbox_per_video * T(m.n_box_bbox);
}

namespace detail {

inline std::int64_t floor_to_int(double x) { return static_cast<std::int64_t>(std::floor(x)); }

inline std::int64_t floor_to_int(const Rational& x) {
  using boost::multiprecision::cpp_int;
  cpp_int num = boost::multiprecision::numerator(x);
  const cpp_int den = boost::multiprecision::denominator(x);
  cpp_int q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q.convert_to<std::int64_t>();
}

}  // namespace detail

// Nearest integer, ties to even.
template <class T>
std::int64_t round_half_even(const T& x) {
  const std::int64_t fl = detail::floor_to_int(x);
  const T frac = x - T(fl);
  const T half = T(1) / T(2);
  if (frac > half) return fl + 1;
  if (frac < half) return fl;
  return (fl % 2 == 0) ? fl : fl + 1;
}

template <class T>
struct BudgetMatch {
  std::int64_t n_box_bbox = 0;
  T budget_otf{};
  T budget_bbox{};
  T residual{};  // |budget_bbox - budget_otf| <= t_bbox / 2
};

// Number of box-annotated videos whose budget is closest to the OTF budget.
template <class T>
BudgetMatch<T> match_budget(const BudgetModel<T>& m) {
  if (!(m.t_bbox_per_video > T(0))) throw Error(ErrorKind::invalid_argument, "non_positive_time");
  BudgetMatch<T> r;
  r.budget_otf = budget_otf(m);
  r.n_box_bbox = round_half_even<T>(r.budget_otf / m.t_bbox_per_video);
  r.budget_bbox = m.t_bbox_per_video * T(r.n_box_bbox);
  r.residual = r.budget_bbox >= r.budget_otf ? r.budget_bbox - r.budget_otf : r.budget_otf - r.budget_bbox;
  return r;
}

// Parses a plain decimal ("8.2", "-3", "1e-2" is not accepted) or a fraction
// ("41/5") into an exact rational.
inline Rational parse_rational(std::string_view s) {
  using boost::multiprecision::cpp_int;
  auto bad = [&] { return Error(ErrorKind::parse, "bad_number", std::string(s)); };
  if (s.empty()) throw bad();
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_rational(s.substr(0, slash));
    const Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw bad();
    return num / den;
  }
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  cpp_int digits = 0;
  cpp_int scale = 1;
  bool seen_dot = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      if (seen_dot) scale *= 10;
      seen_digit = true;
    } else {
      throw bad();
    }
  }
  if (!seen_digit) throw bad();
  Rational r(digits, scale);
  return neg ? Rational(-r) : r;
}

inline std::string to_decimal_string(const Rational& r, int digits = 6) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << r.convert_to<double>();
  return ss.str();
}

}  // namespace otf

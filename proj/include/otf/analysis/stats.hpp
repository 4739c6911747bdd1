#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "otf/core/error.hpp"

namespace otf {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorKind::invalid_argument, "empty_sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorKind::invalid_argument, "sample_too_small");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(xs.size() - 1));
}

struct PairedTTest {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Two-sided one-sample t-test of the mean of paired differences against 0.
// Constant differences have no variance: p = 1 when they are all zero and
// p = 0 (the limit) otherwise.
inline PairedTTest paired_t_test(std::span<const double> diffs) {
  const std::size_t n = diffs.size();
  if (n < 2) throw Error(ErrorKind::invalid_argument, "sample_too_small", "paired test needs n >= 2");
  PairedTTest r;
  r.df = double(n - 1);
  const double m = mean(diffs);
  const bool constant = std::all_of(diffs.begin(), diffs.end(), [&](double d) { return d == diffs[0]; });
  if (constant) {
    r.t = diffs[0] == 0.0 ? 0.0 : std::copysign(INFINITY, diffs[0]);
    r.p_value = diffs[0] == 0.0 ? 1.0 : 0.0;
    return r;
  }
  const double se = sample_sd(diffs) / std::sqrt(double(n));
  r.t = m / se;
  boost::math::students_t dist(r.df);
  r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
  return r;
}

inline double paired_test(std::span<const double> diffs) { return paired_t_test(diffs).p_value; }

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of y on x. None when x has no spread.
inline std::optional<LinearFit> ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::invalid_argument, "bad_regression_input");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  const double slope = sxy / sxx;
  return LinearFit{slope, my - slope * mx};
}

}  // namespace otf

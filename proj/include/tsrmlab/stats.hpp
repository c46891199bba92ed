// Small statistics toolkit for Monte Carlo checks: proportion and mean
// intervals, the two-sample Kolmogorov-Smirnov test and least squares.

#ifndef TSRMLAB_STATS_HPP
#define TSRMLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tsrmlab/core.hpp"

namespace tsrmlab::stats {

inline constexpr double z95 = 1.959963984540054;

struct Interval {
  double estimate;
  double lo;
  double hi;
  double half_width() const noexcept { return 0.5 * (hi - lo); }
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson(std::size_t successes, std::size_t trials, double z = z95) {
  if (trials == 0) return {0.0, 0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct MeanSummary {
  double mean = 0.0;
  double sd = 0.0;
  double ci95 = 0.0;  ///< normal-approximation half width
  std::size_t n = 0;
};

inline MeanSummary mean_ci(const std::vector<double>& xs, double z = z95) {
  MeanSummary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    s.ci95 = z * s.sd / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

struct KsResult {
  double statistic;
  double critical_1pct;
  bool reject;  ///< statistic exceeds the 1% critical value
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic 1% critical
/// value 1.628 * sqrt((n+m)/(n m)).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::InvalidConfig, "KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double crit = 1.628 * std::sqrt((n + m) / (n * m));
  return {d, crit, d > crit};
}

struct LinearFit {
  double slope;
  double intercept;
  double slope_se;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::InvalidConfig, "regression needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorKind::InvalidConfig, "regression abscissae are constant");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - intercept - slope * x[k];
    rss += r * r;
  }
  const double se = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return {slope, intercept, se};
}

}  // namespace tsrmlab::stats

#endif  // TSRMLAB_STATS_HPP

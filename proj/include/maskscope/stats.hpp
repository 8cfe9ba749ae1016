#pragma once

// Correlation (with lag search), Mann-Kendall trend and Welch's t-test.
// All p-values are two-sided.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "maskscope/distributions.hpp"
#include "maskscope/error.hpp"
#include "maskscope/series.hpp"

namespace maskscope {

enum class CorrelationMethod { pearson, spearman };

inline const char* method_name(CorrelationMethod m) {
  return m == CorrelationMethod::pearson ? "pearson" : "spearman";
}

struct CorrelationResult {
  CorrelationMethod method = CorrelationMethod::pearson;
  int lag = 0;
  double r = 0.0;
  std::size_t n = 0;
  double p = 1.0;
};

struct TrendResult {
  std::int64_t s_statistic = 0;
  double variance = 0.0;
  double z = 0.0;
  double p = 1.0;
};

struct WelchSample {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct WelchResult {
  double mean_before = 0.0, mean_after = 0.0;
  double sd_before = 0.0, sd_after = 0.0;
  std::size_t n_before = 0, n_after = 0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// p-value for a sample correlation r over n pairs under the t approximation.
inline double correlation_p(double r, std::size_t n) {
  const double r2 = std::min(1.0, r * r);
  if (r2 >= 1.0) return 0.0;
  const double df = static_cast<double>(n) - 2.0;
  // df / (df + t^2) with t = r sqrt(df / (1 - r^2)) reduces to 1 - r^2
  return incomplete_beta(0.5 * df, 0.5, 1.0 - r2);
}

inline CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(Errc::length_mismatch, "series lengths differ: " + std::to_string(x.size()) +
                                           " vs " + std::to_string(y.size()));
  const std::size_t n = x.size();
  if (n < 3) throw Error(Errc::insufficient_data, "correlation needs at least 3 pairs");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::zero_variance, "correlation of a constant series");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return {CorrelationMethod::pearson, 0, r, n, correlation_p(r, n)};
}

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(Errc::length_mismatch, "series lengths differ: " + std::to_string(x.size()) +
                                           " vs " + std::to_string(y.size()));
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  CorrelationResult res = pearson(rx, ry);
  res.method = CorrelationMethod::spearman;
  return res;
}

inline CorrelationResult correlate(CorrelationMethod m, std::span<const double> x,
                                   std::span<const double> y) {
  return m == CorrelationMethod::pearson ? pearson(x, y) : spearman(x, y);
}

struct LagRange {
  int min = 0;
  int max = 7;
};

inline constexpr std::size_t kMinLagOverlap = 10;

/// Pairs each defined `metric` value on day t with `cases` on day t - k and
/// keeps the lag with the largest r (ties go to the smaller lag). The p-value
/// is not adjusted for having searched over lags.
inline CorrelationResult lag_max_correlation(const DatedSeries& cases, const DatedSeries& metric,
                                             LagRange lags, CorrelationMethod method) {
  if (lags.min < 0 || lags.max < lags.min) throw Error(Errc::out_of_range, "invalid lag range");
  std::map<Date, double> case_by_date;
  for (const auto& p : cases)
    if (p.value) case_by_date.emplace(p.date, *p.value);

  CorrelationResult best;
  bool have_best = false;
  std::vector<double> xs, ys;
  for (int k = lags.min; k <= lags.max; ++k) {
    xs.clear();
    ys.clear();
    for (const auto& p : metric) {
      if (!p.value) continue;
      const auto it = case_by_date.find(p.date - std::chrono::days{k});
      if (it == case_by_date.end()) continue;
      xs.push_back(it->second);
      ys.push_back(*p.value);
    }
    if (xs.size() < kMinLagOverlap)
      throw Error(Errc::insufficient_data, "lag " + std::to_string(k) + " leaves " +
                                               std::to_string(xs.size()) +
                                               " overlapping days, need " +
                                               std::to_string(kMinLagOverlap));
    CorrelationResult r = correlate(method, xs, ys);
    r.lag = k;
    if (!have_best || r.r > best.r) {
      best = r;
      have_best = true;
    }
  }
  return best;
}

namespace detail {

// Counts pairs i < j with v[i] > v[j], sorting v as a side effect.
inline std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch,
                                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace detail

inline constexpr std::size_t kMinTrendLength = 8;

/// Mann-Kendall test with tie-corrected variance and continuity correction.
/// S is computed in O(n log n) from the inversion count.
inline TrendResult mann_kendall(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < kMinTrendLength)
    throw Error(Errc::insufficient_data, "Mann-Kendall needs at least 8 observations, got " +
                                             std::to_string(n));
  std::vector<double> v(series.begin(), series.end());
  std::vector<double> scratch(n);
  const std::uint64_t discordant = detail::count_inversions(v, scratch, 0, n);

  // v is now sorted; walk tie groups
  std::uint64_t tied_pairs = 0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    tied_pairs += static_cast<std::uint64_t>((j - i) * (j - i - 1) / 2);
    tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
    i = j;
  }
  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  TrendResult res;
  res.s_statistic = static_cast<std::int64_t>(pairs - tied_pairs) - 2 * static_cast<std::int64_t>(discordant);
  const double nd = static_cast<double>(n);
  res.variance = (nd * (nd - 1.0) * (2.0 * nd + 5.0) - tie_term) / 18.0;
  if (res.variance <= 0.0 || res.s_statistic == 0) {
    res.z = 0.0;
    res.p = 1.0;
    return res;
  }
  const double sd = std::sqrt(res.variance);
  const double s = static_cast<double>(res.s_statistic);
  res.z = s > 0 ? (s - 1.0) / sd : (s + 1.0) / sd;
  res.p = normal_two_sided_p(res.z);
  return res;
}

inline WelchSample summarize(std::span<const double> xs) {
  WelchSample s;
  s.n = xs.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

/// Welch's unequal-variance t-test. Positive t means the `after` mean is larger.
inline WelchResult welch(const WelchSample& before, const WelchSample& after) {
  if (before.n < 2 || after.n < 2)
    throw Error(Errc::insufficient_data, "Welch's test needs at least 2 observations per side (got " +
                                             std::to_string(before.n) + " and " +
                                             std::to_string(after.n) + ")");
  if (before.sd < 0.0 || after.sd < 0.0) throw Error(Errc::out_of_range, "negative standard deviation");
  const double vb = before.sd * before.sd / static_cast<double>(before.n);
  const double va = after.sd * after.sd / static_cast<double>(after.n);
  if (vb + va == 0.0) throw Error(Errc::zero_variance, "both samples have zero variance");
  WelchResult r;
  r.mean_before = before.mean;
  r.mean_after = after.mean;
  r.sd_before = before.sd;
  r.sd_after = after.sd;
  r.n_before = before.n;
  r.n_after = after.n;
  r.t = (after.mean - before.mean) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (vb * vb / static_cast<double>(before.n - 1) + va * va / static_cast<double>(after.n - 1));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

inline WelchResult welch(std::span<const double> before, std::span<const double> after) {
  return welch(summarize(before), summarize(after));
}

}  // namespace maskscope

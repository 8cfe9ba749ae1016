#pragma once

// Brute-force reference implementations used only by tests. None of them
// call into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "maskscope/geometry.hpp"

namespace oracle {

using maskscope::Point;

/// Points not strictly inside any triangle of other points and not in the
/// open interior of a segment between two others.
inline std::vector<Point> hull_vertices(const std::vector<Point>& pts) {
  auto orient = [](const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  };
  std::vector<Point> out;
  const std::size_t n = pts.size();
  for (std::size_t p = 0; p < n; ++p) {
    bool inside = false;
    for (std::size_t i = 0; i < n && !inside; ++i)
      for (std::size_t j = i + 1; j < n && !inside; ++j) {
        if (i == p || j == p) continue;
        const Point &a = pts[i], &b = pts[j], &q = pts[p];
        if (orient(a, b, q) == 0 && std::min(a.x, b.x) <= q.x && q.x <= std::max(a.x, b.x) &&
            std::min(a.y, b.y) <= q.y && q.y <= std::max(a.y, b.y) && !(q.x == a.x && q.y == a.y) &&
            !(q.x == b.x && q.y == b.y))
          inside = true;
        for (std::size_t k = j + 1; k < n && !inside; ++k) {
          if (k == p) continue;
          const Point& c = pts[k];
          const double d1 = orient(a, b, q), d2 = orient(b, c, q), d3 = orient(c, a, q);
          if ((d1 > 0 && d2 > 0 && d3 > 0) || (d1 < 0 && d2 < 0 && d3 < 0)) inside = true;
        }
      }
    if (!inside) out.push_back(pts[p]);
  }
  std::sort(out.begin(), out.end(), [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  out.erase(std::unique(out.begin(), out.end(), [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
            out.end());
  return out;
}

/// Even-odd ray casting with an explicit boundary test, per pixel centre.
inline bool point_in_polygon(std::span<const Point> v, double px, double py) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % n];
    const double cr = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
    if (cr == 0.0 && px >= std::min(a.x, b.x) && px <= std::max(a.x, b.x) && py >= std::min(a.y, b.y) &&
        py <= std::max(a.y, b.y))
      return true;
  }
  bool in = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = v[i];
    const Point& b = v[j];
    if ((a.y > py) != (b.y > py)) {
      const double x = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
      if (px < x) in = !in;
    }
  }
  return in;
}

inline std::vector<std::uint8_t> raster(std::span<const Point> v, std::size_t w, std::size_t h) {
  std::vector<std::uint8_t> bits(w * h, 0);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) bits[r * w + c] = point_in_polygon(v, c + 0.5, r + 0.5);
  return bits;
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

/// Composite Simpson over [0, |x|] with a fixed fine step.
inline double normal_cdf(double x) {
  const double a = std::abs(x);
  const int n = std::max(2, 2 * static_cast<int>(std::ceil(a * 2000.0)));
  const double h = a / n;
  double s = normal_pdf(0.0) + normal_pdf(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * normal_pdf(i * h);
  const double half = s * h / 3.0;
  return x >= 0 ? 0.5 + half : 0.5 - half;
}

inline double t_pdf(double t, double df) {
  const double c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  return std::exp(c - (df + 1) / 2 * std::log1p(t * t / df));
}

/// Two-sided p by integrating the density over [0,|t|], or over the tail in
/// u = 1/t when |t| is large.
inline double t_two_sided_p(double t, double df) {
  const double a = std::abs(t);
  if (a == 0.0) return 1.0;
  auto simpson = [](auto f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
  };
  if (a <= 4.0) return 1.0 - 2.0 * simpson([&](double x) { return t_pdf(x, df); }, 0.0, a, 40000);
  // tail: integral_a^inf f(t) dt = integral_0^{1/a} f(1/u) / u^2 du
  return 2.0 * simpson([&](double u) { return u == 0.0 ? 0.0 : t_pdf(1.0 / u, df) / (u * u); }, 0.0, 1.0 / a, 40000);
}

inline double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / x.size();
}

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double correlation_p(double r, std::size_t n) {
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n) - 2.0;
  return t_two_sided_p(r * std::sqrt(df / (1.0 - r * r)), df);
}

/// Rank = 1 + number strictly smaller + (ties - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double u : v) {
      less += u < v[i];
      equal += u == v[i];
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_r(ranks(x), ranks(y));
}

struct Mk {
  long long s;
  double var;
};

inline Mk mann_kendall(const std::vector<double>& x) {
  const std::size_t n = x.size();
  long long s = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += (x[j] > x[i]) - (x[j] < x[i]);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double var = n * (n - 1.0) * (2.0 * n + 5.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = j - i;
    var -= t * (t - 1) * (2 * t + 5);
    i = j;
  }
  return {s, var / 18.0};
}

struct Welch {
  double t, df, p;
};

inline Welch welch(const std::vector<double>& before, const std::vector<double>& after) {
  auto var = [](const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return s / (x.size() - 1);
  };
  const double vb = var(before) / before.size(), va = var(after) / after.size();
  const double t = (mean(after) - mean(before)) / std::sqrt(vb + va);
  const double df = (vb + va) * (vb + va) / (vb * vb / (before.size() - 1) + va * va / (after.size() - 1));
  return {t, df, t_two_sided_p(t, df)};
}

}  // namespace oracle

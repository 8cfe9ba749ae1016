#pragma once

// Planar geometry for ROI construction: convex hulls, shoelace areas and
// pixel-center scanline rasterization onto boolean bitmaps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maskscope/error.hpp"

namespace maskscope {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// z-component of (b - a) x (c - a); positive when a, b, c turn counterclockwise.
inline double cross(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline double signed_area(std::span<const Point> pts) {
  double acc = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = pts[i];
    const Point& q = pts[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * acc;
}

/// Simple polygon with counterclockwise vertex order (positive signed area).
/// Clockwise input is reversed on construction; simplicity is the caller's
/// responsibility.
class Polygon {
 public:
  explicit Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3)
      throw Error(Errc::degenerate_geometry, "polygon needs at least 3 vertices");
    for (const auto& p : vertices_)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw Error(Errc::degenerate_geometry, "polygon vertex is not finite");
    const double a = signed_area(vertices_);
    if (a == 0.0) throw Error(Errc::degenerate_geometry, "polygon has zero area");
    if (a < 0.0) std::reverse(vertices_.begin(), vertices_.end());
  }

  std::span<const Point> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }

 private:
  std::vector<Point> vertices_;
};

inline double polygon_area(const Polygon& p) { return signed_area(p.vertices()); }

/// Andrew's monotone chain. Collinear boundary points are dropped; the result
/// starts at the lowest (x, y) vertex and runs counterclockwise.
inline Polygon convex_hull(std::span<const Point> points) {
  std::vector<Point> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3)
    throw Error(Errc::degenerate_geometry,
                "convex hull needs at least 3 distinct points, got " + std::to_string(pts.size()));

  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point& p = pts[i];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw Error(Errc::degenerate_geometry, "all points are collinear");
  return Polygon(std::move(hull));
}

/// Row-major boolean raster.
class BitMask {
 public:
  BitMask(std::size_t width, std::size_t height, bool fill = false)
      : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {
    if (width == 0 || height == 0)
      throw Error(Errc::shape_mismatch, "bitmask dimensions must be positive");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(std::size_t row, std::size_t col) const { return bits_[row * width_ + col] != 0; }
  void set(std::size_t row, std::size_t col, bool v = true) { bits_[row * width_ + col] = v; }

  std::span<const std::uint8_t> data() const { return bits_; }
  std::span<std::uint8_t> data() { return bits_; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  bool same_shape(const BitMask& o) const { return width_ == o.width_ && height_ == o.height_; }

  BitMask operator~() const {
    BitMask r(*this);
    for (auto& b : r.bits_) b = !b;
    return r;
  }

  BitMask& operator&=(const BitMask& o) { return combine(o, [](bool a, bool b) { return a && b; }); }
  BitMask& operator|=(const BitMask& o) { return combine(o, [](bool a, bool b) { return a || b; }); }

  friend BitMask operator&(BitMask a, const BitMask& b) { return a &= b; }
  friend BitMask operator|(BitMask a, const BitMask& b) { return a |= b; }
  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  template <class Op>
  BitMask& combine(const BitMask& o, Op op) {
    require_same_shape(o);
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] = op(bits_[i] != 0, o.bits_[i] != 0);
    return *this;
  }

  void require_same_shape(const BitMask& o) const {
    if (!same_shape(o))
      throw Error(Errc::shape_mismatch, "bitmask shapes differ: " + std::to_string(width_) + "x" +
                                            std::to_string(height_) + " vs " +
                                            std::to_string(o.width_) + "x" +
                                            std::to_string(o.height_));
  }

  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> bits_;
};

/// |pred & roi| without materializing the intersection.
inline std::size_t intersection_count(const BitMask& a, const BitMask& b) {
  if (!a.same_shape(b)) throw Error(Errc::shape_mismatch, "bitmask shapes differ");
  const auto da = a.data();
  const auto db = b.data();
  std::size_t n = 0;
  for (std::size_t i = 0; i < da.size(); ++i) n += (da[i] & db[i]);
  return n;
}

namespace detail {

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  if (cross(a, b, p) != 0.0) return false;
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
         p.y <= std::max(a.y, b.y);
}

// Shared crossing abscissa so the scanline and the per-point test agree bit for bit.
inline double crossing_x(const Point& a, const Point& b, double y) {
  return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
}

}  // namespace detail

inline bool on_boundary(const Polygon& poly, const Point& p) {
  const auto v = poly.vertices();
  for (std::size_t i = 0, n = v.size(); i < n; ++i)
    if (detail::on_segment(v[i], v[(i + 1) % n], p)) return true;
  return false;
}

/// Even-odd rule; points on the boundary count as inside.
inline bool contains(const Polygon& poly, const Point& p) {
  if (on_boundary(poly, p)) return true;
  const auto v = poly.vertices();
  bool inside = false;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % n];
    if ((a.y > p.y) != (b.y > p.y) && p.x < detail::crossing_x(a, b, p.y)) inside = !inside;
  }
  return inside;
}

/// Sets bit (row, col) iff the pixel center (col + 0.5, row + 0.5) lies inside
/// the polygon or on its boundary.
inline BitMask rasterize(const Polygon& poly, std::size_t width, std::size_t height) {
  BitMask mask(width, height);
  const auto v = poly.vertices();
  const std::size_t n = v.size();

  double ymin = v[0].y, ymax = v[0].y;
  for (const auto& p : v) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const long row_lo = std::max(0L, static_cast<long>(std::floor(ymin - 0.5)));
  const long row_hi = std::min(static_cast<long>(height) - 1, static_cast<long>(std::ceil(ymax)));
  const double w = static_cast<double>(width);

  // first column whose center satisfies pred, searching upward from a guess
  auto first_col_at_or_after = [w](double x) {
    double j = std::clamp(std::ceil(x - 0.5), 0.0, w);
    while (j > 0 && (j - 1) + 0.5 >= x) j -= 1;
    while (j < w && j + 0.5 < x) j += 1;
    return static_cast<std::size_t>(j);
  };

  std::vector<double> xs;
  for (long row = row_lo; row <= row_hi; ++row) {
    const double y = static_cast<double>(row) + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = v[i];
      const Point& b = v[(i + 1) % n];
      if ((a.y > y) != (b.y > y)) xs.push_back(detail::crossing_x(a, b, y));
    }
    std::sort(xs.begin(), xs.end());
    // center c is inside iff xs[2k] <= c < xs[2k+1] for some k
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const std::size_t from = first_col_at_or_after(xs[k]);
      const std::size_t to = first_col_at_or_after(xs[k + 1]);
      for (std::size_t col = from; col < to; ++col) mask.set(static_cast<std::size_t>(row), col);
    }
    // boundary pixels the half-open interiors miss
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = v[i];
      const Point& b = v[(i + 1) % n];
      if (y < std::min(a.y, b.y) || y > std::max(a.y, b.y)) continue;
      double lo = std::min(a.x, b.x);
      double hi = std::max(a.x, b.x);
      // near-horizontal edges keep the full extent; the crossing estimate is unreliable there
      if (std::abs(b.x - a.x) <= 1e6 * std::abs(b.y - a.y)) {
        const double x = detail::crossing_x(a, b, y);
        lo = std::max(lo, x - 1.0);
        hi = std::min(hi, x + 1.0);
      }
      const std::size_t from = first_col_at_or_after(lo);
      for (std::size_t col = from; col < width && col + 0.5 <= hi; ++col) {
        const Point c{static_cast<double>(col) + 0.5, y};
        if (detail::on_segment(a, b, c)) mask.set(static_cast<std::size_t>(row), col);
      }
    }
  }
  return mask;
}

}  // namespace maskscope

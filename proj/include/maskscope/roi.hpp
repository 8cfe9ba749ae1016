#pragma once

// Facial-landmark regions of interest. Landmarks follow the 68-point layout
// and are addressed 1-based: 1-17 jaw line, 18-27 brows, 28-36 nose,
// 37-48 eyes, 49-68 mouth.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "maskscope/error.hpp"
#include "maskscope/geometry.hpp"

namespace maskscope {

inline constexpr std::size_t kLandmarkCount = 68;

struct Rect {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

class LandmarkSet {
 public:
  LandmarkSet(std::vector<Point> points, Rect face_box)
      : points_(std::move(points)), face_box_(face_box) {
    if (points_.size() != kLandmarkCount)
      throw Error(Errc::parse, "landmark count " + std::to_string(points_.size()) + " != 68");
    for (const auto& p : points_)
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0)
        throw Error(Errc::parse, "landmark coordinates must be finite and non-negative");
    if (!(face_box_.width > 0.0) || !(face_box_.height > 0.0) || !std::isfinite(face_box_.x) ||
        !std::isfinite(face_box_.y) || !std::isfinite(face_box_.width) ||
        !std::isfinite(face_box_.height))
      throw Error(Errc::parse, "face box must have positive finite width and height");
  }

  /// 1-based access matching the landmark numbering.
  const Point& landmark(std::size_t index) const { return points_.at(index - 1); }
  const std::vector<Point>& points() const { return points_; }
  const Rect& face_box() const { return face_box_; }

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

 private:
  std::vector<Point> points_;
  Rect face_box_;
};

enum class RoiRegion { jaw, nose_mouth };

inline std::vector<int> roi_landmark_indices(RoiRegion region) {
  std::vector<int> idx;
  auto add = [&idx](int lo, int hi) {
    for (int i = lo; i <= hi; ++i) idx.push_back(i);
  };
  switch (region) {
    case RoiRegion::jaw:
      add(5, 13);
      add(31, 36);
      add(49, 68);
      break;
    case RoiRegion::nose_mouth:
      add(32, 36);
      add(49, 68);
      break;
  }
  return idx;
}

/// ROI polygon in image coordinates: convex hull of the region's landmarks.
inline Polygon roi_polygon(const LandmarkSet& l, RoiRegion region) {
  std::vector<Point> pts;
  for (int i : roi_landmark_indices(region)) pts.push_back(l.landmark(static_cast<std::size_t>(i)));
  return convex_hull(pts);
}

/// Rasterizes the ROI into a grid spanning the face box, e.g. the
/// segmentation model's output bitmap for this face crop.
inline BitMask build_roi_raster(const LandmarkSet& l, RoiRegion region, std::size_t grid_w,
                                std::size_t grid_h) {
  const Rect& box = l.face_box();
  const double sx = static_cast<double>(grid_w) / box.width;
  const double sy = static_cast<double>(grid_h) / box.height;
  std::vector<Point> pts;
  for (int i : roi_landmark_indices(region)) {
    const Point& p = l.landmark(static_cast<std::size_t>(i));
    pts.push_back({(p.x - box.x) * sx, (p.y - box.y) * sy});
  }
  BitMask raster = rasterize(convex_hull(pts), grid_w, grid_h);
  if (raster.count() == 0)
    throw Error(Errc::empty_roi, "ROI covers no pixel centers on the " + std::to_string(grid_w) +
                                     "x" + std::to_string(grid_h) + " grid");
  return raster;
}

/// Frontal face in a 200x200 box at the origin.
inline LandmarkSet canonical_landmarks() {
  std::vector<Point> p;
  p.reserve(kLandmarkCount);
  const double pi = std::numbers::pi;
  // 1-17 jaw: lower half-ellipse from left temple to right temple
  for (int i = 0; i < 17; ++i) {
    const double t = pi * i / 16.0;
    p.push_back({100.0 - 80.0 * std::cos(t), 60.0 + 130.0 * std::sin(t)});
  }
  // 18-22, 23-27 brows
  for (int i = 0; i < 5; ++i) p.push_back({35.0 + 12.5 * i, 48.0 - 6.0 * std::sin(pi * i / 4.0)});
  for (int i = 0; i < 5; ++i) p.push_back({115.0 + 12.5 * i, 48.0 - 6.0 * std::sin(pi * i / 4.0)});
  // 28-31 nose bridge, 32-36 nostrils
  for (int i = 0; i < 4; ++i) p.push_back({100.0, 70.0 + 15.0 * i});
  const std::array<Point, 5> nostrils{{{85, 125}, {92, 128}, {100, 130}, {108, 128}, {115, 125}}};
  p.insert(p.end(), nostrils.begin(), nostrils.end());
  // 37-42, 43-48 eyes
  for (double cx : {65.0, 135.0})
    for (int i = 0; i < 6; ++i) {
      const double t = pi * i / 3.0;
      p.push_back({cx - 15.0 * std::cos(t), 75.0 - 6.0 * std::sin(t)});
    }
  // 49-60 outer lip, 61-68 inner lip, both starting at the left corner
  for (int i = 0; i < 12; ++i) {
    const double t = 2.0 * pi * i / 12.0;
    p.push_back({100.0 - 30.0 * std::cos(t), 155.0 - 15.0 * std::sin(t)});
  }
  for (int i = 0; i < 8; ++i) {
    const double t = 2.0 * pi * i / 8.0;
    p.push_back({100.0 - 20.0 * std::cos(t), 155.0 - 6.0 * std::sin(t)});
  }
  return LandmarkSet(std::move(p), Rect{0.0, 0.0, 200.0, 200.0});
}

}  // namespace maskscope

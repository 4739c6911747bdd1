#pragma once

#include <algorithm>
#include <cmath>

namespace otf {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned box in pixel coordinates, (x_min, y_min) top-left.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  Point center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }

  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
           std::isfinite(y_max) && x_min < x_max && y_min < y_max;
  }

  // Closed containment.
  bool contains(Point p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  bool within_frame(int frame_width, int frame_height) const {
    return x_min >= 0.0 && y_min >= 0.0 && x_max <= frame_width && y_max <= frame_height;
  }

  Box translated(double dx, double dy) const {
    return {x_min + dx, y_min + dy, x_max + dx, y_max + dy};
  }

  Box clipped(int frame_width, int frame_height) const {
    return {std::clamp(x_min, 0.0, double(frame_width)), std::clamp(y_min, 0.0, double(frame_height)),
            std::clamp(x_max, 0.0, double(frame_width)), std::clamp(y_max, 0.0, double(frame_height))};
  }

  static Box from_center(Point c, double w, double h) {
    return {c.x - 0.5 * w, c.y - 0.5 * h, c.x + 0.5 * w, c.y + 0.5 * h};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

inline Box lerp(const Box& a, const Box& b, double alpha) {
  auto mix = [alpha](double u, double v) { return u + alpha * (v - u); };
  return {mix(a.x_min, b.x_min), mix(a.y_min, b.y_min), mix(a.x_max, b.x_max), mix(a.y_max, b.y_max)};
}

// Largest absolute coordinate difference.
inline double max_abs_diff(const Box& a, const Box& b) {
  return std::max({std::abs(a.x_min - b.x_min), std::abs(a.y_min - b.y_min),
                   std::abs(a.x_max - b.x_max), std::abs(a.y_max - b.y_max)});
}

// Euclidean distance from a point to the nearest point of a box (0 inside).
inline double distance_to_box(Point p, const Box& b) {
  const double dx = std::max({b.x_min - p.x, 0.0, p.x - b.x_max});
  const double dy = std::max({b.y_min - p.y, 0.0, p.y - b.y_max});
  return std::hypot(dx, dy);
}

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace otf

#pragma once

#include <algorithm>

#include "otf/core/geometry.hpp"

namespace otf {

inline double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

// Intersection over union; 0 for disjoint boxes.
inline double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

}  // namespace otf

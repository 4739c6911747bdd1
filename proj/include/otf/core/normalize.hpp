#pragma once

#include "otf/core/error.hpp"
#include "otf/core/geometry.hpp"

namespace otf {

struct NormalizedPoint {
  double u = 0.0;
  double v = 0.0;

  // True iff (u, v) lies in [0, 1]^2.
  bool inside() const { return u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0; }
  bool outside() const { return !inside(); }
};

// Point position relative to a box: (0,0) is the top-left corner, (1,1) the
// bottom-right one.
inline NormalizedPoint normalize_point(Point p, const Box& box) {
  const double w = box.x_max - box.x_min;
  const double h = box.y_max - box.y_min;
  if (!(w > 0.0) || !(h > 0.0))
    throw Error(ErrorKind::invalid_argument, "degenerate_box", "normalization needs positive width and height");
  return {(p.x - box.x_min) / w, (p.y - box.y_min) / h};
}

}  // namespace otf

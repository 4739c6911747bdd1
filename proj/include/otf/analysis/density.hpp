#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "otf/core/normalize.hpp"
#include "otf/core/types.hpp"

namespace otf {

struct PointBoxPair {
  Point point;
  Box box;
};

// Fraction of points whose normalized position lies in [0,1]^2.
inline double inside_rate(std::span<const PointBoxPair> pairs) {
  if (pairs.empty()) throw Error(ErrorKind::invalid_argument, "no_pairs");
  std::size_t inside = 0;
  for (const auto& p : pairs) inside += normalize_point(p.point, p.box).inside() ? 1 : 0;
  return double(inside) / double(pairs.size());
}

// Pairs every point annotation with the ground-truth box of the same
// (video, frame, instance). Missing pairings are reported all at once.
inline std::vector<PointBoxPair> pair_points_with_boxes(std::span<const FrameAnnotation> points,
                                                        const GroundTruth& gt) {
  std::vector<PointBoxPair> out;
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& a : points) {
    if (!a.point) continue;
    const Box* match = nullptr;
    if (auto it = gt.find({a.video_id, a.frame_idx}); it != gt.end())
      for (const auto& g : it->second)
        if (g.instance_id == a.instance_id) match = &g.box;
    if (!match) {
      if (n_missing++ < 20) missing += (missing.empty() ? "" : ", ") + a.video_id + "#" + std::to_string(a.frame_idx);
      continue;
    }
    out.push_back({*a.point, *match});
  }
  if (n_missing > 0)
    throw Error(ErrorKind::not_found, "missing_pairing",
                std::to_string(n_missing) + " point(s) without a box: " + missing + (n_missing > 20 ? ", ..." : ""));
  return out;
}

inline std::vector<NormalizedPoint> normalize_pairs(std::span<const PointBoxPair> pairs) {
  std::vector<NormalizedPoint> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(normalize_point(p.point, p.box));
  return out;
}

struct Bandwidth {
  double h_u = 0.0;
  double h_v = 0.0;
};

inline constexpr double kMinBandwidth = 1e-3;

// Scott's rule for a 2-d product kernel: h = n^(-1/6) * sd per axis.
inline Bandwidth scott_bandwidth(std::span<const NormalizedPoint> pts) {
  const double n = double(pts.size());
  double mu = 0, mv = 0;
  for (const auto& p : pts) {
    mu += p.u;
    mv += p.v;
  }
  mu /= n;
  mv /= n;
  double su = 0, sv = 0;
  for (const auto& p : pts) {
    su += (p.u - mu) * (p.u - mu);
    sv += (p.v - mv) * (p.v - mv);
  }
  const double factor = std::pow(n, -1.0 / 6.0);
  return {std::max(kMinBandwidth, factor * std::sqrt(su / (n - 1))),
          std::max(kMinBandwidth, factor * std::sqrt(sv / (n - 1)))};
}

// Density on a resolution x resolution grid over [0,1]^2, evaluated at cell
// centers. Row-major, row = v (vertical), column = u (horizontal).
struct DensityGrid {
  int resolution = 64;
  std::vector<double> cells;
  Bandwidth bandwidth;
  double in_bounds_mass = 0.0;  // KDE mass inside [0,1]^2
  std::size_t n_points = 0;

  double cell_area() const { return 1.0 / (double(resolution) * resolution); }
  double at(int col, int row) const { return cells[std::size_t(row) * resolution + col]; }
  double center(int i) const { return (i + 0.5) / resolution; }

  double mass() const {
    double s = 0.0;
    for (double c : cells) s += c;
    return s * cell_area();
  }

  // (col, row) of the densest cell; first one on ties.
  std::pair<int, int> argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < cells.size(); ++i)
      if (cells[i] > cells[best]) best = i;
    return {int(best % resolution), int(best / resolution)};
  }

  // Rescaled so the grid integrates to exactly 1.
  DensityGrid normalized() const {
    DensityGrid g = *this;
    const double m = mass();
    if (m > 0.0)
      for (auto& c : g.cells) c /= m;
    return g;
  }
};

namespace detail {
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double gauss(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
}  // namespace detail

// Gaussian product-kernel density estimate. Points outside the unit square
// still contribute; the grid is clipped to [0,1]^2 and scaled to integrate to
// the estimate's in-bounds mass.
inline DensityGrid kde_density(std::span<const NormalizedPoint> pts, int resolution = 64,
                               std::optional<Bandwidth> bandwidth = std::nullopt) {
  if (pts.size() < 2) throw Error(ErrorKind::invalid_argument, "too_few_points", "KDE needs n >= 2");
  if (resolution < 1) throw Error(ErrorKind::invalid_argument, "bad_resolution");
  DensityGrid g;
  g.resolution = resolution;
  g.n_points = pts.size();
  g.bandwidth = bandwidth ? *bandwidth : scott_bandwidth(pts);
  g.bandwidth.h_u = std::max(kMinBandwidth, g.bandwidth.h_u);
  g.bandwidth.h_v = std::max(kMinBandwidth, g.bandwidth.h_v);
  const double hu = g.bandwidth.h_u, hv = g.bandwidth.h_v;
  const std::size_t n = pts.size();

  // Separable kernel: K(u,v) = ku(u) * kv(v), so tabulate per-axis factors.
  std::vector<double> ku(n * resolution), kv(n * resolution);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < resolution; ++c) {
      const double x = (c + 0.5) / resolution;
      ku[i * resolution + c] = detail::gauss((x - pts[i].u) / hu) / hu;
      kv[i * resolution + c] = detail::gauss((x - pts[i].v) / hv) / hv;
    }
    const double mu = detail::std_normal_cdf((1.0 - pts[i].u) / hu) - detail::std_normal_cdf(-pts[i].u / hu);
    const double mv = detail::std_normal_cdf((1.0 - pts[i].v) / hv) - detail::std_normal_cdf(-pts[i].v / hv);
    mass += mu * mv;
  }
  g.in_bounds_mass = mass / double(n);

  g.cells.assign(std::size_t(resolution) * resolution, 0.0);
  for (int row = 0; row < resolution; ++row)
    for (int col = 0; col < resolution; ++col) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += ku[i * resolution + col] * kv[i * resolution + row];
      g.cells[std::size_t(row) * resolution + col] = s / double(n);
    }

  // Midpoint sums only approximate the integral; rescale to the exact mass.
  const double raw = g.mass();
  if (raw > 0.0)
    for (auto& c : g.cells) c *= g.in_bounds_mass / raw;
  return g;
}

}  // namespace otf

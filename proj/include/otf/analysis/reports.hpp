#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "otf/analysis/budget.hpp"
#include "otf/analysis/density.hpp"
#include "otf/analysis/timing.hpp"
#include "otf/core/json_io.hpp"
#include "otf/session/align.hpp"

namespace otf {

inline json density_json(const DensityGrid& g, std::optional<double> inside = std::nullopt) {
  const auto [col, row] = g.argmax();
  json rows = json::array();
  for (int r = 0; r < g.resolution; ++r) {
    json line = json::array();
    for (int c = 0; c < g.resolution; ++c) line.push_back(g.at(c, r));
    rows.push_back(std::move(line));
  }
  return {{"n_points", g.n_points},
          {"inside_rate", inside ? json(*inside) : json(nullptr)},
          {"resolution", g.resolution},
          {"bandwidth", {{"h_u", g.bandwidth.h_u}, {"h_v", g.bandwidth.h_v}}},
          {"in_bounds_mass", g.in_bounds_mass},
          {"argmax", {{"col", col}, {"row", row}, {"u", g.center(col)}, {"v", g.center(row)}}},
          {"cells", rows}};
}

inline void write_density_csv(std::ostream& out, const DensityGrid& g) {
  char buf[32];
  for (int r = 0; r < g.resolution; ++r) {
    for (int c = 0; c < g.resolution; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", g.at(c, r));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

// Ground truth from the interpolated box tracks of the same annotations.
inline GroundTruth ground_truth_from_box_tracks(const std::vector<VideoAnnotations>& annos) {
  GroundTruth gt;
  for (const auto& v : annos)
    for (const auto& t : v.box_tracks)
      for (const auto& f : box_track_frames(t, v.meta)) gt[{f.video_id, f.frame_idx}].push_back({f.instance_id, f.class_id, *f.box});
  return gt;
}

struct DensityAnalysis {
  std::vector<PointBoxPair> pairs;
  double inside_rate = 0.0;
  DensityGrid grid;
};

// Aligns every OTF track, pairs the points with `gt` and estimates the
// density of their box-normalized positions.
inline DensityAnalysis analyze_density(const std::vector<VideoAnnotations>& annos, const GroundTruth& gt,
                                       int resolution = 64) {
  std::vector<FrameAnnotation> points;
  for (const auto& v : annos)
    for (const auto& t : v.otf_tracks)
      for (auto& f : align_to_frames(t, v.meta)) points.push_back(std::move(f));
  if (points.empty()) throw Error(ErrorKind::not_found, "no_points");
  DensityAnalysis out;
  out.pairs = pair_points_with_boxes(points, gt);
  out.inside_rate = otf::inside_rate(out.pairs);
  const auto norm = normalize_pairs(out.pairs);
  out.grid = kde_density(norm, resolution);
  return out;
}

inline json budget_json(const BudgetModel<Rational>& m, bool match) {
  auto num = [](const Rational& r) {
    std::ostringstream exact;
    exact << r;
    return json{{"value", r.convert_to<double>()}, {"decimal", to_decimal_string(r)}, {"exact", exact.str()}};
  };
  json j = {{"t_bbox_per_video", num(m.t_bbox_per_video)},
            {"t_otf_per_video", num(m.t_otf_per_video)},
            {"n_box_otf", m.n_box_otf},
            {"n_weak_otf", m.n_weak_otf},
            {"budget_otf", num(budget_otf(m))}};
  if (match) {
    const auto r = match_budget(m);
    j["match"] = {{"n_box_bbox", r.n_box_bbox}, {"budget_bbox", num(r.budget_bbox)}, {"residual", num(r.residual)}};
  } else {
    j["n_box_bbox"] = m.n_box_bbox;
    j["budget_bbox"] = num(budget_bbox(m));
  }
  return j;
}

}  // namespace otf

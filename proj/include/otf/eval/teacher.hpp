#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "otf/core/json_io.hpp"
#include "otf/core/rng.hpp"
#include "otf/eval/ap.hpp"

namespace otf {

struct PseudoLabel {
  std::string video_id;
  std::int64_t frame_idx = 0;
  int instance_id = 0;
  int class_id = 0;
  Box box;
  Point source_point;
  std::string teacher_id;

  friend bool operator==(const PseudoLabel&, const PseudoLabel&) = default;
};

inline void to_json(json& j, const PseudoLabel& p) {
  j = {{"video_id", p.video_id}, {"frame_idx", p.frame_idx}, {"instance_id", p.instance_id},
       {"class_id", p.class_id}, {"point", p.source_point},  {"box", p.box},
       {"teacher_id", p.teacher_id}};
}

// Pseudo labels scored as detections (score 1, input order kept on ties).
inline std::vector<Detection> to_detections(std::span<const PseudoLabel> labels) {
  std::vector<Detection> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back({l.video_id, l.frame_idx, l.box, 1.0, l.class_id});
  return out;
}

struct OracleTeacherOptions {
  // Box translation of up to jitter * (width, height) per axis, uniform.
  double box_jitter = 0.0;
  std::uint64_t seed = 0;
  std::string teacher_id = "oracle";
};

// Smallest IoU a translated box can keep: shifting by a fraction j of its
// size along both axes leaves (1-j)^2 of the area in common.
inline double jittered_box_min_iou(double jitter) {
  const double keep = (1.0 - jitter) * (1.0 - jitter);
  return keep / (2.0 - keep);
}

// Ground-truth stand-in for a point-to-box model: returns the GT box holding
// the point (nearest center if several do, nearest box if none does).
inline std::vector<PseudoLabel> oracle_teacher(std::span<const FrameAnnotation> points, const GroundTruth& gt,
                                               const OracleTeacherOptions& opt = {}) {
  Rng rng(opt.seed);
  std::vector<PseudoLabel> out;
  out.reserve(points.size());
  for (const auto& a : points) {
    if (!a.point) continue;
    auto it = gt.find({a.video_id, a.frame_idx});
    if (it == gt.end() || it->second.empty())
      throw Error(ErrorKind::not_found, "frame_without_gt", a.video_id + "#" + std::to_string(a.frame_idx));
    const Point p = *a.point;
    const GtInstance* best = nullptr;
    auto better = [&](const GtInstance& cand) {
      if (!best) return true;
      const bool ci = cand.box.contains(p), bi = best->box.contains(p);
      if (ci != bi) return ci;
      if (!ci) {
        const double dc = distance_to_box(p, cand.box), db = distance_to_box(p, best->box);
        if (dc != db) return dc < db;
      }
      return distance(p, cand.box.center()) < distance(p, best->box.center());
    };
    for (const auto& g : it->second)
      if (better(g)) best = &g;

    Box box = best->box;
    const double du = rng.uniform(-1.0, 1.0), dv = rng.uniform(-1.0, 1.0);
    if (opt.box_jitter > 0.0) box = box.translated(du * opt.box_jitter * box.width(), dv * opt.box_jitter * box.height());
    out.push_back({a.video_id, a.frame_idx, a.instance_id, best->class_id, box, p, opt.teacher_id});
  }
  return out;
}

struct FrameSize {
  int width = 0;
  int height = 0;
};

// GT-free baseline: a fixed-size box centred on each point, clipped to the
// frame.
inline std::vector<PseudoLabel> heuristic_teacher(std::span<const FrameAnnotation> points, double prior_w,
                                                  double prior_h, const std::map<std::string, FrameSize>& frames,
                                                  const std::string& teacher_id = "heuristic") {
  if (!(prior_w > 0.0) || !(prior_h > 0.0)) throw Error(ErrorKind::invalid_argument, "non_positive_prior");
  std::vector<PseudoLabel> out;
  for (const auto& a : points) {
    if (!a.point) continue;
    auto it = frames.find(a.video_id);
    if (it == frames.end()) throw Error(ErrorKind::not_found, "unknown_video", a.video_id);
    Box box = Box::from_center(*a.point, prior_w, prior_h).clipped(it->second.width, it->second.height);
    out.push_back({a.video_id, a.frame_idx, a.instance_id, a.class_id, box, *a.point, teacher_id});
  }
  return out;
}

inline std::map<std::string, FrameSize> frame_sizes(std::span<const VideoMeta> videos) {
  std::map<std::string, FrameSize> out;
  for (const auto& v : videos) out[v.video_id] = {v.width, v.height};
  return out;
}

}  // namespace otf

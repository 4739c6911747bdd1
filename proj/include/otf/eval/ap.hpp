#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "otf/core/json_io.hpp"
#include "otf/eval/iou.hpp"

namespace otf {

inline constexpr double kApIouThreshold = 0.5;

struct Detection {
  std::string video_id;
  std::int64_t frame_idx = 0;
  Box box;
  double score = 1.0;
  int class_id = 0;
};

inline void to_json(json& j, const Detection& d) {
  j = {{"video_id", d.video_id}, {"frame_idx", d.frame_idx}, {"box", d.box}, {"score", d.score},
       {"class_id", d.class_id}};
}
inline void from_json(const json& j, Detection& d) {
  d.video_id = j.value("video_id", std::string());
  j.at("frame_idx").get_to(d.frame_idx);
  j.at("box").get_to(d.box);
  d.score = j.value("score", 1.0);
  d.class_id = j.value("class_id", 0);
}

// Either a bare array or {"detections": [...]}.
inline std::vector<Detection> detections_from_json(const json& j) {
  const json& arr = j.is_object() ? j.at("detections") : j;
  return arr.get<std::vector<Detection>>();
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct EvalReport {
  double ap50 = 0.0;
  std::size_t n_gt = 0;
  std::size_t n_det = 0;
  std::size_t n_tp = 0;
  std::vector<PrPoint> pr_curve;
};

inline void to_json(json& j, const EvalReport& r) {
  json curve = json::array();
  for (const auto& p : r.pr_curve) curve.push_back({p.recall, p.precision});
  j = {{"ap50", r.ap50}, {"n_gt", r.n_gt}, {"n_det", r.n_det}, {"n_tp", r.n_tp}, {"pr_curve", curve}};
}

// all_point: area under the precision envelope. points_101: mean envelope
// precision at recall 0, 0.01, ..., 1.
enum class ApInterpolation { all_point, points_101 };

// Single-class AP at IoU 0.5. Detections are ranked by descending score with
// ties kept in input order; each one greedily takes the unmatched GT of the
// same frame with the highest IoU and is a true positive iff that IoU >= 0.5.
inline EvalReport ap50(const GroundTruth& gts, std::span<const Detection> dets,
                       ApInterpolation mode = ApInterpolation::all_point) {
  EvalReport rep;
  rep.n_gt = count_boxes(gts);
  rep.n_det = dets.size();
  if (rep.n_gt == 0) throw Error(ErrorKind::invalid_argument, "no_ground_truth", "AP is undefined without GT boxes");
  if (dets.empty()) return rep;

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::map<FrameKey, std::vector<bool>> used;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& d = dets[order[k]];
    const FrameKey key{d.video_id, d.frame_idx};
    bool hit = false;
    if (auto it = gts.find(key); it != gts.end()) {
      auto& taken = used[key];
      taken.resize(it->second.size(), false);
      double best = -1.0;
      std::size_t best_i = 0;
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (taken[g]) continue;
        const double v = iou(d.box, it->second[g].box);
        if (v > best) {
          best = v;
          best_i = g;
        }
      }
      if (best >= kApIouThreshold) {
        taken[best_i] = true;
        hit = true;
      }
    }
    tp += hit ? 1 : 0;
    rep.pr_curve.push_back({double(tp) / double(rep.n_gt), double(tp) / double(k + 1)});
  }
  rep.n_tp = tp;

  // Precision envelope: running max from the right.
  std::vector<double> env(rep.pr_curve.size());
  double run = 0.0;
  for (std::size_t i = env.size(); i-- > 0;) {
    run = std::max(run, rep.pr_curve[i].precision);
    env[i] = run;
  }
  if (mode == ApInterpolation::all_point) {
    double prev_r = 0.0, ap = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
      ap += (rep.pr_curve[i].recall - prev_r) * env[i];
      prev_r = rep.pr_curve[i].recall;
    }
    rep.ap50 = std::clamp(ap, 0.0, 1.0);
  } else {
    double sum = 0.0;
    std::size_t i = 0;
    for (int s = 0; s <= 100; ++s) {
      const double r = s / 100.0;
      while (i < env.size() && rep.pr_curve[i].recall < r - 1e-12) ++i;
      sum += i < env.size() ? env[i] : 0.0;
    }
    rep.ap50 = sum / 101.0;
  }
  return rep;
}

// Per-class AP averaged over the classes present in the ground truth.
inline double mean_ap50(const GroundTruth& gts, std::span<const Detection> dets,
                        ApInterpolation mode = ApInterpolation::all_point) {
  std::map<int, GroundTruth> gt_by_class;
  for (const auto& [key, boxes] : gts)
    for (const auto& g : boxes) gt_by_class[g.class_id][key].push_back(g);
  if (gt_by_class.empty()) throw Error(ErrorKind::invalid_argument, "no_ground_truth");
  double sum = 0.0;
  for (const auto& [cls, gt] : gt_by_class) {
    std::vector<Detection> d;
    for (const auto& x : dets)
      if (x.class_id == cls) d.push_back(x);
    sum += ap50(gt, d, mode).ap50;
  }
  return sum / double(gt_by_class.size());
}

}  // namespace otf

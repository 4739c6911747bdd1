#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "otf/core/json_io.hpp"

namespace otf {

struct CocoExport {
  json document;
  std::vector<std::string> warnings;
  std::size_t n_images = 0;
  std::size_t n_annotations = 0;
};

inline std::string coco_file_name(const std::string& video_id, std::int64_t frame_idx) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.jpg", static_cast<long long>(frame_idx));
  return video_id + "/" + buf;
}

// COCO-style detection file. Images are the distinct (video, frame) pairs in
// (video_id, frame_idx) order, ids from 1; annotations follow in the same
// order. Frames without a box are skipped with a warning.
inline CocoExport export_coco(std::span<const FrameAnnotation> frames, std::span<const VideoMeta> videos) {
  CocoExport out;
  std::map<std::string, const VideoMeta*> meta;
  for (const auto& v : videos) meta[v.video_id] = &v;

  std::map<FrameKey, std::vector<const FrameAnnotation*>> by_frame;
  std::set<int> classes;
  for (const auto& f : frames) {
    if (!f.box) {
      out.warnings.push_back("frame without box skipped: " + f.video_id + "#" + std::to_string(f.frame_idx));
      continue;
    }
    if (!meta.contains(f.video_id)) {
      out.warnings.push_back("frame of unknown video skipped: " + f.video_id);
      continue;
    }
    by_frame[{f.video_id, f.frame_idx}].push_back(&f);
    classes.insert(f.class_id);
  }

  json images = json::array(), annotations = json::array(), categories = json::array();
  std::int64_t image_id = 0, ann_id = 0;
  for (const auto& [key, annos] : by_frame) {
    const auto* m = meta.at(key.video_id);
    ++image_id;
    images.push_back({{"id", image_id},
                      {"file_name", coco_file_name(key.video_id, key.frame_idx)},
                      {"width", m->width},
                      {"height", m->height},
                      {"video_id", key.video_id},
                      {"frame_idx", key.frame_idx}});
    for (const auto* a : annos) {
      const Box& b = *a->box;
      annotations.push_back({{"id", ++ann_id},
                             {"image_id", image_id},
                             {"category_id", a->class_id},
                             {"bbox", {b.x_min, b.y_min, b.width(), b.height()}},
                             {"area", b.area()},
                             {"iscrowd", 0},
                             {"instance_id", a->instance_id},
                             {"source", to_string(a->source)}});
    }
  }
  for (int c : classes) categories.push_back({{"id", c}, {"name", "class_" + std::to_string(c)}});
  out.n_images = images.size();
  out.n_annotations = annotations.size();
  out.document = {{"images", images}, {"annotations", annotations}, {"categories", categories}};
  return out;
}

}  // namespace otf

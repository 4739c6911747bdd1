#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "otf/core/error.hpp"
#include "otf/core/geometry.hpp"

namespace otf {

struct VideoMeta {
  std::string video_id;
  double fps = 25.0;
  int frame_count = 1;
  int width = 1;
  int height = 1;
  double duration_s = 0.04;

  static VideoMeta make(std::string id, double fps, int frame_count, int width, int height) {
    return {std::move(id), fps, frame_count, width, height, frame_count / fps};
  }

  double frame_time(std::int64_t frame_idx) const { return double(frame_idx) / fps; }

  friend bool operator==(const VideoMeta&, const VideoMeta&) = default;
};

// Frame index for a media time: round(media_t * fps), halves rounded up.
inline std::int64_t frame_index(double media_t, double fps) {
  return static_cast<std::int64_t>(std::floor(media_t * fps + 0.5));
}

struct PointSample {
  double media_t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double wall_t = 0.0;

  Point point() const { return {x, y}; }

  friend bool operator==(const PointSample&, const PointSample&) = default;
};

// Closed interval [start_t, end_t] in media seconds.
struct VisibilitySegment {
  double start_t = 0.0;
  double end_t = 0.0;

  bool contains(double t) const { return t >= start_t && t <= end_t; }
  double length() const { return end_t - start_t; }

  friend bool operator==(const VisibilitySegment&, const VisibilitySegment&) = default;
};

struct OtfTrack {
  std::string video_id;
  int instance_id = 0;
  int class_id = 0;
  std::vector<PointSample> samples;
  std::vector<VisibilitySegment> segments;
  double playback_speed = 0.2;
  // Temporal-edge window already removed from every segment (see trim_edges).
  double edge_trim_s = 0.0;

  friend bool operator==(const OtfTrack&, const OtfTrack&) = default;
};

struct BoxKeyframe {
  double media_t = 0.0;
  Box box;

  friend bool operator==(const BoxKeyframe&, const BoxKeyframe&) = default;
};

struct BoxTrack {
  std::string video_id;
  int instance_id = 0;
  int class_id = 0;
  std::vector<BoxKeyframe> keyframes;
  std::vector<VisibilitySegment> segments;

  friend bool operator==(const BoxTrack&, const BoxTrack&) = default;
};

enum class AnnotationSource { human_box, human_point, pseudo_box };

inline std::string_view to_string(AnnotationSource s) {
  switch (s) {
    case AnnotationSource::human_box: return "human_box";
    case AnnotationSource::human_point: return "human_point";
    case AnnotationSource::pseudo_box: return "pseudo_box";
  }
  return "human_point";
}

struct FrameAnnotation {
  std::string video_id;
  std::int64_t frame_idx = 0;
  int instance_id = 0;
  int class_id = 0;
  std::optional<Point> point;
  std::optional<Box> box;
  AnnotationSource source = AnnotationSource::human_point;

  friend bool operator==(const FrameAnnotation&, const FrameAnnotation&) = default;
};

enum class SplitRole { train_box, train_weak, val, test };

inline std::string_view to_string(SplitRole r) {
  switch (r) {
    case SplitRole::train_box: return "train_box";
    case SplitRole::train_weak: return "train_weak";
    case SplitRole::val: return "val";
    case SplitRole::test: return "test";
  }
  return "test";
}

inline SplitRole parse_split_role(std::string_view s) {
  if (s == "train_box") return SplitRole::train_box;
  if (s == "train_weak") return SplitRole::train_weak;
  if (s == "val") return SplitRole::val;
  if (s == "test") return SplitRole::test;
  throw Error(ErrorKind::parse, "unknown_split_role", std::string(s));
}

// Everything annotated on one video; the on-disk annotation file.
struct VideoAnnotations {
  VideoMeta meta;
  std::vector<OtfTrack> otf_tracks;
  std::vector<BoxTrack> box_tracks;

  friend bool operator==(const VideoAnnotations&, const VideoAnnotations&) = default;
};

struct Dataset {
  std::vector<VideoMeta> videos;
  std::vector<OtfTrack> otf_tracks;
  std::vector<BoxTrack> box_tracks;
  std::map<std::string, SplitRole> split;

  const VideoMeta* find_video(std::string_view id) const {
    for (const auto& v : videos)
      if (v.video_id == id) return &v;
    return nullptr;
  }

  const VideoMeta& video(std::string_view id) const {
    if (const auto* v = find_video(id)) return *v;
    throw Error(ErrorKind::not_found, "unknown_video", std::string(id));
  }

  std::vector<std::string> videos_with_role(SplitRole role) const {
    std::vector<std::string> out;
    for (const auto& v : videos) {
      auto it = split.find(v.video_id);
      if (it != split.end() && it->second == role) out.push_back(v.video_id);
    }
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Ground-truth boxes keyed by (video_id, frame_idx).
struct FrameKey {
  std::string video_id;
  std::int64_t frame_idx = 0;

  friend auto operator<=>(const FrameKey&, const FrameKey&) = default;
};

struct GtInstance {
  int instance_id = 0;
  int class_id = 0;
  Box box;

  friend bool operator==(const GtInstance&, const GtInstance&) = default;
};

using GroundTruth = std::map<FrameKey, std::vector<GtInstance>>;

inline std::size_t count_boxes(const GroundTruth& gt) {
  std::size_t n = 0;
  for (const auto& [key, boxes] : gt) n += boxes.size();
  return n;
}

}  // namespace otf

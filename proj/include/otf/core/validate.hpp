#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "otf/core/types.hpp"

namespace otf {

// One broken invariant; `index` points at the offending sample, keyframe or
// segment.
struct Violation {
  std::string code;
  std::size_t index = 0;

  std::string str() const { return code + "@" + std::to_string(index); }

  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {

inline void check_segments(const std::vector<VisibilitySegment>& segments, std::vector<Violation>& out) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].start_t < segments[i].end_t)) out.push_back({"empty_segment", i});
    if (i > 0 && !(segments[i].start_t > segments[i - 1].end_t)) out.push_back({"segment_overlap", i});
  }
}

inline bool inside_any(const std::vector<VisibilitySegment>& segments, double t) {
  for (const auto& s : segments)
    if (s.contains(t)) return true;
  return false;
}

}  // namespace detail

// Empty result iff every OtfTrack invariant holds. Frame bounds are only
// checked when the video is known.
inline std::vector<Violation> validate_track(const OtfTrack& track, const VideoMeta* meta = nullptr) {
  std::vector<Violation> out;
  detail::check_segments(track.segments, out);
  if (!(track.playback_speed > 0.0)) out.push_back({"non_positive_speed", 0});
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    const auto& s = track.samples[i];
    if (i > 0 && !(s.media_t > track.samples[i - 1].media_t)) out.push_back({"non_monotonic_time", i});
    if (!detail::inside_any(track.segments, s.media_t)) out.push_back({"sample_outside_segment", i});
    if (meta) {
      if (s.media_t < 0.0 || s.media_t > meta->duration_s) out.push_back({"time_out_of_range", i});
      if (s.x < 0.0 || s.x >= meta->width || s.y < 0.0 || s.y >= meta->height)
        out.push_back({"sample_out_of_frame", i});
    }
  }
  return out;
}

inline std::vector<Violation> validate_track(const BoxTrack& track, const VideoMeta* meta = nullptr) {
  std::vector<Violation> out;
  detail::check_segments(track.segments, out);
  for (std::size_t i = 0; i < track.keyframes.size(); ++i) {
    const auto& k = track.keyframes[i];
    if (i > 0 && !(k.media_t > track.keyframes[i - 1].media_t)) out.push_back({"non_monotonic_time", i});
    if (!k.box.valid()) out.push_back({"invalid_box", i});
    if (!detail::inside_any(track.segments, k.media_t)) out.push_back({"keyframe_outside_segment", i});
    if (meta) {
      if (k.media_t < 0.0 || k.media_t > meta->duration_s) out.push_back({"time_out_of_range", i});
      if (!k.box.within_frame(meta->width, meta->height)) out.push_back({"box_out_of_frame", i});
    }
  }
  for (std::size_t i = 0; i < track.segments.size(); ++i) {
    bool any = false;
    for (const auto& k : track.keyframes) any = any || track.segments[i].contains(k.media_t);
    if (!any) out.push_back({"segment_without_keyframe", i});
  }
  return out;
}

inline std::vector<Violation> validate_video_meta(const VideoMeta& m) {
  std::vector<Violation> out;
  if (m.video_id.empty()) out.push_back({"empty_video_id", 0});
  if (!(m.fps > 0.0)) out.push_back({"non_positive_fps", 0});
  if (m.frame_count < 1) out.push_back({"non_positive_frame_count", 0});
  if (m.width < 1 || m.height < 1) out.push_back({"non_positive_frame_size", 0});
  if (m.fps > 0.0 && std::abs(m.duration_s - m.frame_count / m.fps) > 1.0 / m.fps)
    out.push_back({"inconsistent_duration", 0});
  return out;
}

inline std::string join_violations(const std::vector<Violation>& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += ", ";
    s += x.str();
  }
  return s;
}

}  // namespace otf

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "otf/core/error.hpp"
#include "otf/core/types.hpp"
#include "otf/session/keyframes.hpp"

namespace otf {

namespace detail {

// Frame indices whose timestamp idx/fps lies in the closed segment, clipped to
// the video.
inline std::vector<std::int64_t> frames_in_segment(const VisibilitySegment& s, const VideoMeta& meta) {
  std::vector<std::int64_t> out;
  auto first = static_cast<std::int64_t>(std::floor(s.start_t * meta.fps)) - 1;
  auto last = static_cast<std::int64_t>(std::ceil(s.end_t * meta.fps)) + 1;
  first = std::max<std::int64_t>(first, 0);
  last = std::min<std::int64_t>(last, meta.frame_count - 1);
  for (auto f = first; f <= last; ++f)
    if (s.contains(meta.frame_time(f))) out.push_back(f);
  return out;
}

}  // namespace detail

// Sample-and-hold alignment of a point track onto video frames. Each frame
// whose timestamp lies in a visibility segment gets the latest sample at or
// before it (the segment's first sample when none precedes it).
inline std::vector<FrameAnnotation> align_to_frames(const OtfTrack& track, const VideoMeta& meta) {
  std::vector<FrameAnnotation> out;
  for (const auto& seg : track.segments) {
    auto lo = std::lower_bound(track.samples.begin(), track.samples.end(), seg.start_t,
                               [](const PointSample& p, double t) { return p.media_t < t; });
    auto hi = std::upper_bound(track.samples.begin(), track.samples.end(), seg.end_t,
                               [](double t, const PointSample& p) { return t < p.media_t; });
    if (lo == hi)
      throw Error(ErrorKind::invalid_argument, "empty_segment",
                  "segment [" + std::to_string(seg.start_t) + ", " + std::to_string(seg.end_t) + "] has no samples");
    std::span<const PointSample> in_seg(lo, hi);
    std::size_t cur = 0;
    for (auto f : detail::frames_in_segment(seg, meta)) {
      const double tf = meta.frame_time(f);
      while (cur + 1 < in_seg.size() && in_seg[cur + 1].media_t <= tf) ++cur;
      out.push_back({track.video_id, f, track.instance_id, track.class_id, in_seg[cur].point(), std::nullopt,
                     AnnotationSource::human_point});
    }
  }
  return out;
}

// Box-track frames: the interpolated box on every frame inside a segment.
inline std::vector<FrameAnnotation> box_track_frames(const BoxTrack& track, const VideoMeta& meta) {
  std::vector<FrameAnnotation> out;
  for (const auto& seg : track.segments)
    for (auto f : detail::frames_in_segment(seg, meta))
      if (auto b = interpolate_box(track, meta.frame_time(f)))
        out.push_back({track.video_id, f, track.instance_id, track.class_id, std::nullopt, *b,
                       AnnotationSource::human_box});
  return out;
}

// Keeps frames with frame_idx divisible by stride.
inline std::vector<FrameAnnotation> subsample_frames(std::span<const FrameAnnotation> annos, int stride) {
  if (stride < 1) throw Error(ErrorKind::invalid_argument, "bad_stride", std::to_string(stride));
  std::vector<FrameAnnotation> out;
  for (const auto& a : annos)
    if (a.frame_idx % stride == 0) out.push_back(a);
  return out;
}

}  // namespace otf

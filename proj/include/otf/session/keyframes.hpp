#pragma once

#include <algorithm>
#include <optional>

#include "otf/core/error.hpp"
#include "otf/core/types.hpp"

namespace otf {

// Box at media time t. Outside every segment: none. Between two keyframes of
// the same segment: component-wise linear interpolation. Before the first or
// after the last keyframe of the segment: the nearest keyframe is held.
inline std::optional<Box> interpolate_box(const BoxTrack& track, double t) {
  const VisibilitySegment* seg = nullptr;
  for (const auto& s : track.segments)
    if (s.contains(t)) {
      seg = &s;
      break;
    }
  if (!seg) return std::nullopt;

  const BoxKeyframe* before = nullptr;
  const BoxKeyframe* after = nullptr;
  for (const auto& k : track.keyframes) {
    if (!seg->contains(k.media_t)) continue;
    if (k.media_t <= t) before = &k;
    if (k.media_t >= t && !after) after = &k;
  }
  if (!before && !after) return std::nullopt;
  if (!before) return after->box;
  if (!after || after == before) return before->box;
  const double alpha = (t - before->media_t) / (after->media_t - before->media_t);
  return lerp(before->box, after->box, alpha);
}

// Inserts a keyframe at t, or replaces the box of the keyframe already at t.
inline BoxTrack upsert_keyframe(BoxTrack track, double t, const Box& box) {
  if (!box.valid()) throw Error(ErrorKind::invalid_argument, "invalid_box");
  auto it = std::lower_bound(track.keyframes.begin(), track.keyframes.end(), t,
                             [](const BoxKeyframe& k, double v) { return k.media_t < v; });
  if (it != track.keyframes.end() && it->media_t == t) it->box = box;
  else track.keyframes.insert(it, BoxKeyframe{t, box});
  return track;
}

// Removes the keyframe at exactly t.
inline BoxTrack delete_keyframe(BoxTrack track, double t) {
  auto it = std::find_if(track.keyframes.begin(), track.keyframes.end(),
                         [t](const BoxKeyframe& k) { return k.media_t == t; });
  if (it == track.keyframes.end())
    throw Error(ErrorKind::not_found, "no_keyframe_at_t", std::to_string(t));
  track.keyframes.erase(it);
  return track;
}

}  // namespace otf

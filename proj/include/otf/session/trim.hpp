#pragma once

#include <algorithm>

#include "otf/core/error.hpp"
#include "otf/core/types.hpp"

namespace otf {

// Temporal-edge exclusion: shrinks every visibility segment by `window`
// seconds at both ends and drops the samples that fall outside. Segments that
// vanish are removed. The applied window is recorded on the track, so
// trimming again with the same (or a smaller) window is a no-op.
inline OtfTrack trim_edges(OtfTrack track, double window) {
  if (!(window >= 0.0)) throw Error(ErrorKind::invalid_argument, "negative_window");
  const double delta = window - track.edge_trim_s;
  if (delta <= 0.0) return track;

  std::vector<VisibilitySegment> kept;
  for (const auto& s : track.segments) {
    VisibilitySegment shrunk{s.start_t + delta, s.end_t - delta};
    if (shrunk.start_t < shrunk.end_t) kept.push_back(shrunk);
  }
  std::erase_if(track.samples, [&](const PointSample& p) {
    return std::none_of(kept.begin(), kept.end(), [&](const VisibilitySegment& s) { return s.contains(p.media_t); });
  });
  track.segments = std::move(kept);
  track.edge_trim_s = window;
  return track;
}

}  // namespace otf

#pragma once

#include <algorithm>
#include <limits>
#include <string_view>

#include "otf/core/error.hpp"

namespace otf {

enum class PlaybackState { stopped, playing, paused };

inline std::string_view to_string(PlaybackState s) {
  switch (s) {
    case PlaybackState::stopped: return "stopped";
    case PlaybackState::playing: return "playing";
    case PlaybackState::paused: return "paused";
  }
  return "stopped";
}

inline constexpr double kDefaultPlaybackSpeed = 0.2;

// Media clock driven by wall-clock events. While playing,
// d(media_t) = speed * d(wall_t); media_t saturates at the video duration.
struct PlaybackClock {
  double speed = kDefaultPlaybackSpeed;
  PlaybackState state = PlaybackState::stopped;
  double media_t = 0.0;
  double last_wall_t = 0.0;
  double duration_s = std::numeric_limits<double>::infinity();

  // Media time the clock shows at wall_t (no mutation).
  double media_at(double wall_t) const {
    if (state != PlaybackState::playing) return media_t;
    return std::min(duration_s, media_t + speed * (wall_t - last_wall_t));
  }

  void advance_to(double wall_t) {
    media_t = media_at(wall_t);
    last_wall_t = wall_t;
  }

  void play(double wall_t) {
    advance_to(wall_t);
    state = PlaybackState::playing;
  }

  void pause(double wall_t) {
    advance_to(wall_t);
    state = PlaybackState::paused;
  }

  void seek(double wall_t, double target) {
    advance_to(wall_t);
    media_t = std::clamp(target, 0.0, duration_s);
  }

  friend bool operator==(const PlaybackClock&, const PlaybackClock&) = default;
};

}  // namespace otf

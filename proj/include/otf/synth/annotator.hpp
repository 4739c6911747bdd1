#pragma once

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "otf/session/engine.hpp"
#include "otf/synth/scene.hpp"

namespace otf {

// Behaviour and per-action cost model of a simulated expert. Costs are in
// wall-clock seconds.
struct SimAnnotatorSpec {
  double sampling_hz = 60.0;
  double reaction_lag_s = 0.3;
  double jitter_frac = 0.25;
  double jitter_trunc_frac = 0.25;
  double playback_speed = kDefaultPlaybackSpeed;
  double bbox_keyframe_period_s = 1.0;
  double bbox_playback_speed = 1.0;
  double bbox_corner_jitter_frac = 0.0;
  double pause_s = 2.0;
  double corner_click_s = 4.0;
  double navigate_s = 4.0;
  std::uint64_t seed = 0;
};

inline void validate_annotator(const SimAnnotatorSpec& a) {
  const double vals[] = {a.reaction_lag_s, a.jitter_frac,   a.jitter_trunc_frac, a.bbox_corner_jitter_frac,
                         a.pause_s,        a.corner_click_s, a.navigate_s};
  for (double v : vals)
    if (!(v >= 0.0)) throw Error(ErrorKind::invalid_argument, "negative_annotator_parameter");
  if (!(a.sampling_hz > 0.0) || !(a.playback_speed > 0.0) || !(a.bbox_playback_speed > 0.0) ||
      !(a.bbox_keyframe_period_s > 0.0))
    throw Error(ErrorKind::invalid_argument, "non_positive_annotator_rate");
}

// Gaussian of scale `sigma` truncated to [-bound, bound] by inverse CDF.
// Always consumes exactly one uniform.
inline double truncated_normal(Rng& rng, double sigma, double bound) {
  const double u = rng.uniform_open();
  if (!(sigma > 0.0) || !(bound > 0.0)) return 0.0;
  static const boost::math::normal_distribution<double> unit;
  const double c = bound / sigma;
  const double lo = boost::math::cdf(unit, -c), hi = boost::math::cdf(unit, c);
  const double p = std::clamp(lo + u * (hi - lo), lo, hi);
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return std::clamp(sigma * boost::math::quantile(unit, p), -bound, bound);
}

struct SimulatedOtf {
  OtfTrack track;
  SessionLog log;
  SessionTiming timing;
};

struct SimulatedBBox {
  BoxTrack track;
  SessionLog log;
  SessionTiming timing;
};

namespace detail {

inline SessionEngine fold_events(const SessionConfig& cfg, const std::vector<SessionEvent>& events) {
  SessionEngine engine(cfg);
  for (const auto& e : events) engine.apply(e);
  return engine;
}

// Noise stream of one (annotator, scene, object); splitmix64 finalizer.
inline std::uint64_t object_seed(std::uint64_t seed, std::uint64_t scene_seed, std::size_t obj) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + scene_seed * 0xD1B54A32D192ED03ull + obj * 0xBF58476D1CE4E5B9ull + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Live point annotation of one object. The annotator tracks the object center
// `reaction_lag_s` late, pauses when it leaves the view and resumes when it
// comes back.
inline SimulatedOtf simulate_otf(const Scene& scene, std::size_t obj, const SimAnnotatorSpec& a = {}) {
  validate_annotator(a);
  if (obj >= scene.object_count()) throw Error(ErrorKind::invalid_argument, "no_such_object");
  const auto& meta = scene.meta();
  const double speed = a.playback_speed, D = meta.duration_s;
  SessionConfig cfg{meta, SessionMode::otf, speed, int(obj), scene.spec().objects[obj].class_id};
  Rng rng(detail::object_seed(a.seed, scene.spec().seed, obj));

  std::vector<SessionEvent> evs;
  // Wall stamps are computed two ways; keep them non-decreasing under rounding.
  auto push = [&](double w, EventPayload p, std::optional<double> m = std::nullopt) {
    if (!evs.empty()) w = std::max(w, evs.back().wall_t);
    evs.push_back({w, p, m});
  };

  double wall = 0.0, media = 0.0;
  push(0.0, ev::Play{});
  const double dt_media = speed / a.sampling_hz;
  const double lag_media = a.reaction_lag_s * speed;
  for (const auto& win : scene.visibility(obj)) {
    if (win.start_t > media) {
      wall += (win.start_t - media) / speed;
      push(wall, ev::Pause{});
      wall += a.pause_s;
      push(wall, ev::BeginAnnotation{}, win.start_t);
      push(wall, ev::Play{});
    } else {
      push(wall, ev::BeginAnnotation{}, win.start_t);
    }
    const double w0 = wall;
    for (long k = 0;; ++k) {
      const double m = win.start_t + double(k) * dt_media;
      if (m > win.end_t + 1e-12) break;
      const double tau = std::max(0.0, m - lag_media);
      const Point c = scene.center(obj, tau);
      const Box b = scene.box_at(obj, tau);
      const double ox = truncated_normal(rng, a.jitter_frac * b.width(), a.jitter_trunc_frac * b.width());
      const double oy = truncated_normal(rng, a.jitter_frac * b.height(), a.jitter_trunc_frac * b.height());
      const double x = std::clamp(c.x + ox, 0.0, std::nextafter(double(meta.width), 0.0));
      const double y = std::clamp(c.y + oy, 0.0, std::nextafter(double(meta.height), 0.0));
      push(w0 + double(k) / a.sampling_hz, ev::Cursor{x, y}, std::min(m, win.end_t));
    }
    wall = w0 + (win.end_t - win.start_t) / speed;
    if (win.end_t < D) {
      push(wall, ev::Pause{});
      wall += a.pause_s;
      push(wall, ev::StopAnnotation{}, win.end_t);
      push(wall, ev::Play{});
    } else {
      push(wall, ev::StopAnnotation{}, win.end_t);
    }
    media = win.end_t;
  }
  if (media < D) wall += (D - media) / speed;
  push(wall, ev::EndSession{});

  const auto engine = detail::fold_events(cfg, evs);
  const auto fin = finalize_engine(engine);
  return {std::get<OtfTrack>(fin.track), engine.log(), fin.timing};
}

// Keyframe times of one visibility window: every `period` from its start,
// plus its end.
inline std::vector<double> keyframe_times(const VisibilitySegment& win, double period) {
  std::vector<double> out;
  for (long k = 0;; ++k) {
    const double t = win.start_t + double(k) * period;
    if (t >= win.end_t - 1e-9) break;
    out.push_back(t);
  }
  out.push_back(win.end_t);
  return out;
}

// Frame-based box annotation of one object: navigate to each keyframe, pause,
// click two corners; then one review pass over the video.
inline SimulatedBBox simulate_bbox(const Scene& scene, std::size_t obj, const SimAnnotatorSpec& a = {}) {
  validate_annotator(a);
  if (obj >= scene.object_count()) throw Error(ErrorKind::invalid_argument, "no_such_object");
  const auto& meta = scene.meta();
  SessionConfig cfg{meta, SessionMode::bbox, a.bbox_playback_speed, int(obj), scene.spec().objects[obj].class_id};
  Rng rng(detail::object_seed(a.seed, scene.spec().seed, obj) ^ 0xB0B0B0B0ull);

  std::vector<SessionEvent> evs;
  // Wall stamps are computed two ways; keep them non-decreasing under rounding.
  auto push = [&](double w, EventPayload p, std::optional<double> m = std::nullopt) {
    if (!evs.empty()) w = std::max(w, evs.back().wall_t);
    evs.push_back({w, p, m});
  };

  double wall = 0.0;
  push(0.0, ev::Play{});
  push(0.0, ev::Pause{});
  for (const auto& win : scene.visibility(obj)) {
    for (double t : keyframe_times(win, a.bbox_keyframe_period_s)) {
      wall += a.navigate_s;
      push(wall, ev::Seek{t});
      wall += a.pause_s + 2.0 * a.corner_click_s;
      Box b = scene.box_at(obj, t);
      const double jx = a.bbox_corner_jitter_frac * b.width(), jy = a.bbox_corner_jitter_frac * b.height();
      const double d[4] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      if (jx > 0.0 || jy > 0.0) {
        Box jb{b.x_min + d[0] * jx, b.y_min + d[1] * jy, b.x_max + d[2] * jx, b.y_max + d[3] * jy};
        jb = jb.clipped(meta.width, meta.height);
        if (jb.valid()) b = jb;
      }
      push(wall, ev::SetKeyframe{b}, t);
    }
    push(wall, ev::StopAnnotation{}, win.end_t);
  }
  push(wall, ev::Seek{0.0});
  push(wall, ev::Play{});
  wall += meta.duration_s / a.bbox_playback_speed;
  push(wall, ev::Pause{});
  push(wall, ev::EndSession{});

  const auto engine = detail::fold_events(cfg, evs);
  const auto fin = finalize_engine(engine);
  return {std::get<BoxTrack>(fin.track), engine.log(), fin.timing};
}

inline void to_json(json& j, const SimAnnotatorSpec& a) {
  j = {{"sampling_hz", a.sampling_hz},
       {"reaction_lag_s", a.reaction_lag_s},
       {"jitter_frac", a.jitter_frac},
       {"jitter_trunc_frac", a.jitter_trunc_frac},
       {"playback_speed", a.playback_speed},
       {"bbox_keyframe_period_s", a.bbox_keyframe_period_s},
       {"bbox_playback_speed", a.bbox_playback_speed},
       {"bbox_corner_jitter_frac", a.bbox_corner_jitter_frac},
       {"pause_s", a.pause_s},
       {"corner_click_s", a.corner_click_s},
       {"navigate_s", a.navigate_s},
       {"seed", a.seed}};
}

inline void from_json(const json& j, SimAnnotatorSpec& a) {
  a = SimAnnotatorSpec{};
  a.sampling_hz = j.value("sampling_hz", a.sampling_hz);
  a.reaction_lag_s = j.value("reaction_lag_s", a.reaction_lag_s);
  a.jitter_frac = j.value("jitter_frac", a.jitter_frac);
  a.jitter_trunc_frac = j.value("jitter_trunc_frac", a.jitter_trunc_frac);
  a.playback_speed = j.value("playback_speed", a.playback_speed);
  a.bbox_keyframe_period_s = j.value("bbox_keyframe_period_s", a.bbox_keyframe_period_s);
  a.bbox_playback_speed = j.value("bbox_playback_speed", a.bbox_playback_speed);
  a.bbox_corner_jitter_frac = j.value("bbox_corner_jitter_frac", a.bbox_corner_jitter_frac);
  a.pause_s = j.value("pause_s", a.pause_s);
  a.corner_click_s = j.value("corner_click_s", a.corner_click_s);
  a.navigate_s = j.value("navigate_s", a.navigate_s);
  a.seed = j.value("seed", a.seed);
}

}  // namespace otf

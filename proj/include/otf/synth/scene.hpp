#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "otf/core/json_io.hpp"
#include "otf/core/rng.hpp"

namespace otf {

enum class TrajectoryKind { linear, sinusoidal, random_walk };

inline std::string_view to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::linear: return "linear";
    case TrajectoryKind::sinusoidal: return "sinusoidal";
    case TrajectoryKind::random_walk: return "random_walk";
  }
  return "linear";
}

inline TrajectoryKind parse_trajectory_kind(std::string_view s) {
  if (s == "linear") return TrajectoryKind::linear;
  if (s == "sinusoidal") return TrajectoryKind::sinusoidal;
  if (s == "random_walk" || s == "random-walk") return TrajectoryKind::random_walk;
  throw Error(ErrorKind::parse, "unknown_trajectory", std::string(s));
}

struct ObjectSpec {
  TrajectoryKind trajectory = TrajectoryKind::linear;
  Point start{160.0, 120.0};  // box center at t = 0, pixels
  Point velocity{};           // linear: pixels per frame
  Point amplitude{};          // sinusoidal: pixels
  double period_s = 4.0;      // sinusoidal
  double phase = 0.0;         // sinusoidal, radians
  double step_sigma = 1.0;    // random walk: pixels per frame per axis
  double width = 40.0;
  double height = 40.0;
  double size_amplitude = 0.0;  // relative size oscillation
  double size_period_s = 5.0;
  std::vector<VisibilitySegment> visibility;  // empty: whole video
  int class_id = 0;
};

struct SceneSpec {
  std::string video_id = "scene";
  double duration_s = 10.0;
  double fps = 25.0;
  int width = 320;
  int height = 240;
  std::uint64_t seed = 0;
  std::vector<ObjectSpec> objects;
};

// A generated scene: resolved trajectories plus per-frame ground truth.
class Scene {
 public:
  const VideoMeta& meta() const { return meta_; }
  const SceneSpec& spec() const { return spec_; }
  const GroundTruth& ground_truth() const { return gt_; }
  std::size_t object_count() const { return spec_.objects.size(); }
  const std::vector<VisibilitySegment>& visibility(std::size_t obj) const { return windows_[obj]; }

  // Unclipped box center at media time t.
  Point center(std::size_t obj, double t) const {
    const auto& o = spec_.objects[obj];
    switch (o.trajectory) {
      case TrajectoryKind::linear:
        return {o.start.x + o.velocity.x * meta_.fps * t, o.start.y + o.velocity.y * meta_.fps * t};
      case TrajectoryKind::sinusoidal: {
        const double s = std::sin(2.0 * std::numbers::pi * t / o.period_s + o.phase);
        return {o.start.x + o.amplitude.x * s, o.start.y + o.amplitude.y * s};
      }
      case TrajectoryKind::random_walk: {
        const auto& path = walks_[obj];
        const double pos = std::clamp(t * meta_.fps, 0.0, double(path.size() - 1));
        const auto i = static_cast<std::size_t>(std::floor(pos));
        if (i + 1 >= path.size()) return path.back();
        const double a = pos - double(i);
        return {path[i].x + a * (path[i + 1].x - path[i].x), path[i].y + a * (path[i + 1].y - path[i].y)};
      }
    }
    return o.start;
  }

  std::pair<double, double> size(std::size_t obj, double t) const {
    const auto& o = spec_.objects[obj];
    const double f = 1.0 + o.size_amplitude * std::sin(2.0 * std::numbers::pi * t / o.size_period_s);
    return {o.width * f, o.height * f};
  }

  Box raw_box(std::size_t obj, double t) const {
    const auto [w, h] = size(obj, t);
    return Box::from_center(center(obj, t), w, h);
  }

  // Ground-truth box at media time t, clipped to the frame.
  Box box_at(std::size_t obj, double t) const { return raw_box(obj, t).clipped(meta_.width, meta_.height); }

  bool visible(std::size_t obj, double t) const {
    for (const auto& w : windows_[obj])
      if (w.contains(t)) return true;
    return false;
  }

 private:
  friend Scene generate_scene(const SceneSpec& spec);

  SceneSpec spec_;
  VideoMeta meta_;
  std::vector<std::vector<VisibilitySegment>> windows_;
  std::vector<std::vector<Point>> walks_;
  GroundTruth gt_;
};

// Deterministic in the spec (including its seed).
inline Scene generate_scene(const SceneSpec& spec) {
  if (spec.objects.empty()) throw Error(ErrorKind::invalid_argument, "no_objects");
  if (!(spec.fps > 0.0) || !(spec.duration_s > 0.0) || spec.width < 1 || spec.height < 1)
    throw Error(ErrorKind::invalid_argument, "bad_scene_geometry");
  Scene s;
  s.spec_ = spec;
  const int frames = std::max(1, int(std::lround(spec.duration_s * spec.fps)));
  s.meta_ = VideoMeta::make(spec.video_id, spec.fps, frames, spec.width, spec.height);
  const double dur = s.meta_.duration_s;

  Rng rng(spec.seed);
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const auto& o = spec.objects[k];
    const double max_scale = 1.0 + std::abs(o.size_amplitude);
    if (!(o.width > 0.0) || !(o.height > 0.0) || std::abs(o.size_amplitude) >= 1.0)
      throw Error(ErrorKind::invalid_argument, "bad_object_size", "object " + std::to_string(k));
    if (o.width * max_scale > spec.width || o.height * max_scale > spec.height)
      throw Error(ErrorKind::invalid_argument, "object_larger_than_frame", "object " + std::to_string(k));

    auto windows = o.visibility.empty() ? std::vector<VisibilitySegment>{{0.0, dur}} : o.visibility;
    std::sort(windows.begin(), windows.end(), [](auto& a, auto& b) { return a.start_t < b.start_t; });
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      if (!(w.start_t < w.end_t) || w.start_t < 0.0 || w.end_t > dur + 1e-9)
        throw Error(ErrorKind::invalid_argument, "bad_visibility_window", "object " + std::to_string(k));
      if (i > 0 && !(w.start_t > windows[i - 1].end_t))
        throw Error(ErrorKind::invalid_argument, "overlapping_visibility_windows", "object " + std::to_string(k));
    }
    for (auto& w : windows) w.end_t = std::min(w.end_t, dur);
    s.windows_.push_back(windows);

    std::vector<Point> walk;
    if (o.trajectory == TrajectoryKind::random_walk) {
      // Reflect the center so the whole box stays in frame.
      const double hx = 0.5 * o.width * max_scale, hy = 0.5 * o.height * max_scale;
      auto reflect = [](double v, double lo, double hi) {
        if (hi <= lo) return 0.5 * (lo + hi);
        for (int guard = 0; guard < 8 && (v < lo || v > hi); ++guard) v = v < lo ? 2 * lo - v : 2 * hi - v;
        return std::clamp(v, lo, hi);
      };
      Point c{reflect(o.start.x, hx, spec.width - hx), reflect(o.start.y, hy, spec.height - hy)};
      walk.push_back(c);
      for (int f = 1; f < frames + 1; ++f) {
        c.x = reflect(c.x + o.step_sigma * rng.normal(), hx, spec.width - hx);
        c.y = reflect(c.y + o.step_sigma * rng.normal(), hy, spec.height - hy);
        walk.push_back(c);
      }
    }
    s.walks_.push_back(std::move(walk));
  }

  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    for (int f = 0; f < frames; ++f) {
      const double t = s.meta_.frame_time(f);
      if (!s.visible(k, t)) continue;
      const Box raw = s.raw_box(k, t);
      const Box clipped = raw.clipped(spec.width, spec.height);
      if (!clipped.valid() || clipped.area() < 0.5 * raw.area())
        throw Error(ErrorKind::invalid_argument, "object_leaves_frame",
                    "object " + std::to_string(k) + " at frame " + std::to_string(f));
      s.gt_[{spec.video_id, f}].push_back({int(k), spec.objects[k].class_id, clipped});
    }
  }
  return s;
}

// Knobs for randomly drawn, always-feasible scenes.
struct RandomSceneOptions {
  int n_objects = 1;
  double min_duration_s = 8.0;
  double max_duration_s = 12.0;
  double fps = 25.0;
  int width = 320;
  int height = 240;
  double min_size = 40.0;
  double max_size = 90.0;
  double max_speed_px_s = 40.0;
  // Probability that an object leaves the view at least once.
  double gap_probability = 0.4;
};

inline SceneSpec random_scene_spec(std::uint64_t seed, const RandomSceneOptions& opt = {},
                                   std::string video_id = "") {
  Rng rng(seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull);
  SceneSpec spec;
  spec.video_id = video_id.empty() ? "scene_" + std::to_string(seed) : std::move(video_id);
  spec.fps = opt.fps;
  spec.width = opt.width;
  spec.height = opt.height;
  const int frames = int(std::lround(rng.uniform(opt.min_duration_s, opt.max_duration_s) * opt.fps));
  spec.duration_s = frames / opt.fps;
  spec.seed = rng.next();
  const double dur = spec.duration_s;

  for (int k = 0; k < opt.n_objects; ++k) {
    ObjectSpec o;
    o.width = rng.uniform(opt.min_size, opt.max_size);
    o.height = rng.uniform(opt.min_size, opt.max_size);
    o.size_amplitude = rng.uniform(0.0, 0.15);
    o.size_period_s = rng.uniform(3.0, 8.0);
    const double scale = 1.0 + o.size_amplitude;
    const double hx = 0.5 * o.width * scale, hy = 0.5 * o.height * scale;
    const double lo_x = hx, hi_x = opt.width - hx, lo_y = hy, hi_y = opt.height - hy;
    o.start = {rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)};
    switch (rng.below(3)) {
      case 0: {
        o.trajectory = TrajectoryKind::linear;
        Point end{rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)};
        const double dist = distance(o.start, end);
        const double max_dist = opt.max_speed_px_s * dur;
        if (dist > max_dist) {
          const double a = max_dist / dist;
          end = {o.start.x + a * (end.x - o.start.x), o.start.y + a * (end.y - o.start.y)};
        }
        o.velocity = {(end.x - o.start.x) / (dur * opt.fps), (end.y - o.start.y) / (dur * opt.fps)};
        break;
      }
      case 1: {
        o.trajectory = TrajectoryKind::sinusoidal;
        const double ax = std::min(o.start.x - lo_x, hi_x - o.start.x);
        const double ay = std::min(o.start.y - lo_y, hi_y - o.start.y);
        o.amplitude = {rng.uniform(0.0, ax), rng.uniform(0.0, ay)};
        o.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amp = std::hypot(o.amplitude.x, o.amplitude.y);
        o.period_s = std::max(rng.uniform(3.0, 8.0), 2.0 * std::numbers::pi * amp / opt.max_speed_px_s);
        break;
      }
      default:
        o.trajectory = TrajectoryKind::random_walk;
        o.step_sigma = rng.uniform(0.2, 0.8);
        break;
    }
    if (rng.uniform() < opt.gap_probability && dur > 4.0) {
      // One disappearance of 0.5..2 s somewhere in the middle.
      const double gap = rng.uniform(0.5, 2.0);
      const double at = rng.uniform(1.5, dur - 1.5 - gap);
      o.visibility = {{0.0, at}, {at + gap, dur}};
    }
    spec.objects.push_back(o);
  }
  return spec;
}

inline void to_json(json& j, const ObjectSpec& o) {
  j = {{"trajectory", to_string(o.trajectory)},
       {"start", o.start},
       {"velocity", o.velocity},
       {"amplitude", o.amplitude},
       {"period_s", o.period_s},
       {"phase", o.phase},
       {"step_sigma", o.step_sigma},
       {"size", {o.width, o.height}},
       {"size_amplitude", o.size_amplitude},
       {"size_period_s", o.size_period_s},
       {"visibility", o.visibility},
       {"class_id", o.class_id}};
}

inline void from_json(const json& j, ObjectSpec& o) {
  o = ObjectSpec{};
  if (j.contains("trajectory")) o.trajectory = parse_trajectory_kind(j["trajectory"].get<std::string>());
  if (j.contains("start")) o.start = j["start"].get<Point>();
  if (j.contains("velocity")) o.velocity = j["velocity"].get<Point>();
  if (j.contains("amplitude")) o.amplitude = j["amplitude"].get<Point>();
  o.period_s = j.value("period_s", o.period_s);
  o.phase = j.value("phase", o.phase);
  o.step_sigma = j.value("step_sigma", o.step_sigma);
  if (j.contains("size")) {
    o.width = j["size"].at(0).get<double>();
    o.height = j["size"].at(1).get<double>();
  }
  o.size_amplitude = j.value("size_amplitude", o.size_amplitude);
  o.size_period_s = j.value("size_period_s", o.size_period_s);
  o.visibility = j.value("visibility", std::vector<VisibilitySegment>{});
  o.class_id = j.value("class_id", 0);
}

inline void to_json(json& j, const SceneSpec& s) {
  j = {{"video_id", s.video_id}, {"duration_s", s.duration_s}, {"fps", s.fps},        {"width", s.width},
       {"height", s.height},     {"seed", s.seed},             {"objects", s.objects}};
}

inline void from_json(const json& j, SceneSpec& s) {
  s = SceneSpec{};
  s.video_id = j.value("video_id", s.video_id);
  s.duration_s = j.value("duration_s", s.duration_s);
  s.fps = j.value("fps", s.fps);
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.seed = j.value("seed", s.seed);
  j.at("objects").get_to(s.objects);
}

inline void to_json(json& j, const RandomSceneOptions& o) {
  j = {{"n_objects", o.n_objects},       {"min_duration_s", o.min_duration_s}, {"max_duration_s", o.max_duration_s},
       {"fps", o.fps},                   {"width", o.width},                   {"height", o.height},
       {"min_size", o.min_size},         {"max_size", o.max_size},             {"max_speed_px_s", o.max_speed_px_s},
       {"gap_probability", o.gap_probability}};
}

inline void from_json(const json& j, RandomSceneOptions& o) {
  o = RandomSceneOptions{};
  o.n_objects = j.value("n_objects", o.n_objects);
  o.min_duration_s = j.value("min_duration_s", o.min_duration_s);
  o.max_duration_s = j.value("max_duration_s", o.max_duration_s);
  o.fps = j.value("fps", o.fps);
  o.width = j.value("width", o.width);
  o.height = j.value("height", o.height);
  o.min_size = j.value("min_size", o.min_size);
  o.max_size = j.value("max_size", o.max_size);
  o.max_speed_px_s = j.value("max_speed_px_s", o.max_speed_px_s);
  o.gap_probability = j.value("gap_probability", o.gap_probability);
}

}  // namespace otf

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "otf/core/error.hpp"
#include "otf/core/types.hpp"
#include "otf/core/validate.hpp"

namespace otf {

using json = nlohmann::json;

// Boxes travel as [x_min, y_min, x_max, y_max], points as [x, y].
inline void to_json(json& j, const Box& b) { j = json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }
inline void from_json(const json& j, Box& b) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::parse, "bad_box", "expected [x_min,y_min,x_max,y_max]");
  b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline void to_json(json& j, const Point& p) { j = json::array({p.x, p.y}); }
inline void from_json(const json& j, Point& p) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::parse, "bad_point", "expected [x,y]");
  p = {j[0].get<double>(), j[1].get<double>()};
}

inline void to_json(json& j, const VideoMeta& m) {
  j = {{"video_id", m.video_id}, {"fps", m.fps},     {"frame_count", m.frame_count},
       {"width", m.width},       {"height", m.height}, {"duration_s", m.duration_s}};
}
inline void from_json(const json& j, VideoMeta& m) {
  j.at("video_id").get_to(m.video_id);
  j.at("fps").get_to(m.fps);
  j.at("frame_count").get_to(m.frame_count);
  j.at("width").get_to(m.width);
  j.at("height").get_to(m.height);
  m.duration_s = j.contains("duration_s") ? j.at("duration_s").get<double>() : m.frame_count / m.fps;
}

inline void to_json(json& j, const PointSample& s) {
  j = {{"media_t", s.media_t}, {"x", s.x}, {"y", s.y}, {"wall_t", s.wall_t}};
}
inline void from_json(const json& j, PointSample& s) {
  j.at("media_t").get_to(s.media_t);
  j.at("x").get_to(s.x);
  j.at("y").get_to(s.y);
  s.wall_t = j.value("wall_t", 0.0);
}

inline void to_json(json& j, const VisibilitySegment& s) { j = {{"start_t", s.start_t}, {"end_t", s.end_t}}; }
inline void from_json(const json& j, VisibilitySegment& s) {
  j.at("start_t").get_to(s.start_t);
  j.at("end_t").get_to(s.end_t);
}

inline void to_json(json& j, const OtfTrack& t) {
  j = {{"video_id", t.video_id},
       {"instance_id", t.instance_id},
       {"class_id", t.class_id},
       {"samples", t.samples},
       {"segments", t.segments},
       {"playback_speed", t.playback_speed},
       {"edge_trim_s", t.edge_trim_s}};
}
inline void from_json(const json& j, OtfTrack& t) {
  j.at("video_id").get_to(t.video_id);
  t.instance_id = j.value("instance_id", 0);
  t.class_id = j.value("class_id", 0);
  j.at("samples").get_to(t.samples);
  j.at("segments").get_to(t.segments);
  t.playback_speed = j.value("playback_speed", 0.2);
  t.edge_trim_s = j.value("edge_trim_s", 0.0);
}

inline void to_json(json& j, const BoxKeyframe& k) { j = {{"media_t", k.media_t}, {"box", k.box}}; }
inline void from_json(const json& j, BoxKeyframe& k) {
  j.at("media_t").get_to(k.media_t);
  j.at("box").get_to(k.box);
}

inline void to_json(json& j, const BoxTrack& t) {
  j = {{"video_id", t.video_id},   {"instance_id", t.instance_id}, {"class_id", t.class_id},
       {"keyframes", t.keyframes}, {"segments", t.segments}};
}
inline void from_json(const json& j, BoxTrack& t) {
  j.at("video_id").get_to(t.video_id);
  t.instance_id = j.value("instance_id", 0);
  t.class_id = j.value("class_id", 0);
  j.at("keyframes").get_to(t.keyframes);
  j.at("segments").get_to(t.segments);
}

inline void to_json(json& j, const FrameAnnotation& a) {
  j = {{"video_id", a.video_id},
       {"frame_idx", a.frame_idx},
       {"instance_id", a.instance_id},
       {"class_id", a.class_id},
       {"source", to_string(a.source)}};
  j["point"] = a.point ? json(*a.point) : json(nullptr);
  j["box"] = a.box ? json(*a.box) : json(nullptr);
}
inline void from_json(const json& j, FrameAnnotation& a) {
  j.at("video_id").get_to(a.video_id);
  j.at("frame_idx").get_to(a.frame_idx);
  a.instance_id = j.value("instance_id", 0);
  a.class_id = j.value("class_id", 0);
  a.point.reset();
  a.box.reset();
  if (j.contains("point") && !j["point"].is_null()) a.point = j["point"].get<Point>();
  if (j.contains("box") && !j["box"].is_null()) a.box = j["box"].get<Box>();
  const auto src = j.value("source", std::string("human_point"));
  if (src == "human_box") a.source = AnnotationSource::human_box;
  else if (src == "human_point") a.source = AnnotationSource::human_point;
  else if (src == "pseudo_box") a.source = AnnotationSource::pseudo_box;
  else throw Error(ErrorKind::parse, "unknown_source", src);
}

inline void to_json(json& j, const VideoAnnotations& v) {
  j = {{"meta", v.meta}, {"otf_tracks", v.otf_tracks}, {"box_tracks", v.box_tracks}};
}
inline void from_json(const json& j, VideoAnnotations& v) {
  j.at("meta").get_to(v.meta);
  v.otf_tracks = j.value("otf_tracks", std::vector<OtfTrack>{});
  v.box_tracks = j.value("box_tracks", std::vector<BoxTrack>{});
}

// Dataset index: {videos[], split{video_id: role}}. Tracks live in the
// per-video annotation files.
inline json dataset_index_json(const Dataset& d) {
  json split = json::object();
  for (const auto& [id, role] : d.split) split[id] = std::string(to_string(role));
  return {{"videos", d.videos}, {"split", split}};
}

inline void to_json(json& j, const Dataset& d) {
  j = dataset_index_json(d);
  j["otf_tracks"] = d.otf_tracks;
  j["box_tracks"] = d.box_tracks;
}
inline void from_json(const json& j, Dataset& d) {
  j.at("videos").get_to(d.videos);
  d.split.clear();
  if (j.contains("split"))
    for (const auto& [id, role] : j.at("split").items()) d.split[id] = parse_split_role(role.get<std::string>());
  d.otf_tracks = j.value("otf_tracks", std::vector<OtfTrack>{});
  d.box_tracks = j.value("box_tracks", std::vector<BoxTrack>{});
}

inline void to_json(json& j, const GtInstance& g) {
  j = {{"instance_id", g.instance_id}, {"class_id", g.class_id}, {"box", g.box}};
}

// Flat ground-truth list: [{video_id, frame_idx, instance_id, class_id, box}].
inline json ground_truth_json(const GroundTruth& gt) {
  json arr = json::array();
  for (const auto& [key, boxes] : gt)
    for (const auto& g : boxes)
      arr.push_back({{"video_id", key.video_id},
                     {"frame_idx", key.frame_idx},
                     {"instance_id", g.instance_id},
                     {"class_id", g.class_id},
                     {"box", g.box}});
  return {{"gt", arr}};
}

inline GroundTruth ground_truth_from_json(const json& j) {
  GroundTruth gt;
  for (const auto& e : j.at("gt")) {
    FrameKey key{e.at("video_id").get<std::string>(), e.at("frame_idx").get<std::int64_t>()};
    gt[key].push_back({e.value("instance_id", 0), e.value("class_id", 0), e.at("box").get<Box>()});
  }
  return gt;
}

// 1-based line of a byte offset within `text`.
inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
}

inline json parse_json_text(const std::string& text, const std::string& what = "input") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, "malformed_json",
                what + " line " + std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " +
                    e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot_open", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot_write", path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write_failed", path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

// Wraps nlohmann's type/field errors so callers see a single error type.
template <class T>
T decode(const json& j, const std::string& what = "document") {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "schema_error", what + ": " + e.what());
  }
}

inline VideoAnnotations load_annotation_file(const std::filesystem::path& path) {
  return decode<VideoAnnotations>(read_json_file(path), path.string());
}

inline void save_annotation_file(const std::filesystem::path& path, const VideoAnnotations& v) {
  write_text_file(path, json(v).dump(2) + "\n");
}

// Loads {videos[], split{}} plus `<annotations_dir>/<video_id>.json` for every
// video that has one.
inline Dataset load_dataset(const std::filesystem::path& index_path, const std::filesystem::path& annotations_dir) {
  Dataset d = decode<Dataset>(read_json_file(index_path), index_path.string());
  for (const auto& v : d.videos) {
    const auto file = annotations_dir / (v.video_id + ".json");
    if (!std::filesystem::exists(file)) continue;
    auto anno = load_annotation_file(file);
    for (auto& t : anno.otf_tracks) d.otf_tracks.push_back(std::move(t));
    for (auto& t : anno.box_tracks) d.box_tracks.push_back(std::move(t));
  }
  return d;
}

inline void save_dataset(const std::filesystem::path& index_path, const std::filesystem::path& annotations_dir,
                         const Dataset& d) {
  write_text_file(index_path, dataset_index_json(d).dump(2) + "\n");
  for (const auto& v : d.videos) {
    VideoAnnotations anno{v, {}, {}};
    for (const auto& t : d.otf_tracks)
      if (t.video_id == v.video_id) anno.otf_tracks.push_back(t);
    for (const auto& t : d.box_tracks)
      if (t.video_id == v.video_id) anno.box_tracks.push_back(t);
    save_annotation_file(annotations_dir / (v.video_id + ".json"), anno);
  }
}

// Dataset-level invariants: split is a partition of the videos, ids unique,
// tracks reference known videos.
inline std::vector<std::string> validate_dataset(const Dataset& d) {
  std::vector<std::string> problems;
  std::map<std::string, int> seen;
  for (const auto& v : d.videos) {
    if (++seen[v.video_id] > 1) problems.push_back("duplicate_video_id:" + v.video_id);
    for (const auto& x : validate_video_meta(v)) problems.push_back(v.video_id + ":" + x.str());
    if (!d.split.empty() && !d.split.contains(v.video_id)) problems.push_back("unsplit_video:" + v.video_id);
  }
  for (const auto& [id, role] : d.split)
    if (!seen.contains(id)) problems.push_back("split_references_unknown_video:" + id);
  for (const auto& t : d.otf_tracks)
    if (!seen.contains(t.video_id)) problems.push_back("track_references_unknown_video:" + t.video_id);
  for (const auto& t : d.box_tracks)
    if (!seen.contains(t.video_id)) problems.push_back("track_references_unknown_video:" + t.video_id);
  return problems;
}

}  // namespace otf

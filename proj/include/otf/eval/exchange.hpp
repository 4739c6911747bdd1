#pragma once

#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "otf/core/json_io.hpp"
#include "otf/eval/teacher.hpp"
#include "otf/session/align.hpp"

namespace otf {

inline constexpr int kDefaultFrameStride = 8;

// One weakly annotated frame handed to an external point-to-box teacher.
struct ExchangeFrame {
  std::string video_id;
  std::int64_t frame_idx = 0;
  int instance_id = 0;
  int class_id = 0;
  Point point;

  friend bool operator==(const ExchangeFrame&, const ExchangeFrame&) = default;
};

inline void to_json(json& j, const ExchangeFrame& f) {
  j = {{"video_id", f.video_id}, {"frame_idx", f.frame_idx}, {"instance_id", f.instance_id},
       {"class_id", f.class_id}, {"point", f.point}};
}

using FrameRef = std::tuple<std::string, std::int64_t, int>;  // video, frame, instance

// Aligned, subsampled OTF points of every weakly annotated (train_weak) video.
inline std::vector<ExchangeFrame> export_weak_frames(const Dataset& d, int stride = kDefaultFrameStride) {
  const auto weak = d.videos_with_role(SplitRole::train_weak);
  if (weak.empty()) throw Error(ErrorKind::invalid_argument, "empty_weak_split");
  std::vector<ExchangeFrame> out;
  for (const auto& vid : weak) {
    const auto& meta = d.video(vid);
    for (const auto& t : d.otf_tracks) {
      if (t.video_id != vid) continue;
      const auto aligned = align_to_frames(t, meta);
      for (const auto& a : subsample_frames(aligned, stride))
        out.push_back({a.video_id, a.frame_idx, a.instance_id, a.class_id, *a.point});
    }
  }
  return out;
}

// One frame entry per line so that import errors can name a line.
inline std::string format_frames_document(const std::vector<json>& entries) {
  std::string s = "{\"frames\": [\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    s += "  " + entries[i].dump();
    s += i + 1 < entries.size() ? ",\n" : "\n";
  }
  s += "]}\n";
  return s;
}

inline std::string write_exchange(std::span<const ExchangeFrame> frames) {
  std::vector<json> entries(frames.begin(), frames.end());
  return format_frames_document(entries);
}

inline std::string write_pseudo_labels(std::span<const PseudoLabel> labels) {
  std::vector<json> entries;
  for (const auto& l : labels) entries.push_back(l);
  return format_frames_document(entries);
}

namespace detail {

// Line number at which each object of the top-level "frames" array starts.
inline std::vector<std::size_t> frame_entry_lines(const std::string& text) {
  std::vector<std::size_t> lines;
  std::size_t line = 1;
  int depth = 0;
  bool in_string = false, escaped = false;
  std::string token, last_key_depth1;
  bool frames_array_open = false;
  for (char c : text) {
    if (c == '\n') ++line;
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      else token += c;
      continue;
    }
    switch (c) {
      case '"':
        in_string = true;
        token.clear();
        break;
      case ':':
        if (depth == 1) last_key_depth1 = token;
        break;
      case '[':
        ++depth;
        if (depth == 2 && last_key_depth1 == "frames") frames_array_open = true;
        break;
      case '{':
        ++depth;
        if (depth == 3 && frames_array_open) lines.push_back(line);
        break;
      case ']':
        if (depth == 2) frames_array_open = false;
        --depth;
        break;
      case '}': --depth; break;
      default: break;
    }
  }
  return lines;
}

template <class F>
void for_each_frame_entry(const std::string& text, const std::string& what, F&& fn) {
  const json doc = parse_json_text(text, what);
  if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array())
    throw Error(ErrorKind::parse, "malformed_exchange", what + " line 1: expected {\"frames\": [...]}");
  const auto lines = frame_entry_lines(text);
  const auto& frames = doc["frames"];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto line = i < lines.size() ? lines[i] : 0;
    try {
      fn(frames[i]);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::parse, "malformed_entry",
                  what + " line " + std::to_string(line) + " (frames[" + std::to_string(i) + "]): " + e.what());
    }
  }
}

}  // namespace detail

inline std::vector<ExchangeFrame> read_exchange(const std::string& text, const std::string& what = "exchange file") {
  std::vector<ExchangeFrame> out;
  detail::for_each_frame_entry(text, what, [&](const json& e) {
    out.push_back({e.at("video_id").get<std::string>(), e.at("frame_idx").get<std::int64_t>(),
                   e.at("instance_id").get<int>(), e.value("class_id", 0), e.at("point").get<Point>()});
  });
  return out;
}

inline std::vector<PseudoLabel> read_pseudo_labels(const std::string& text,
                                                   const std::string& what = "pseudo-label file") {
  std::vector<PseudoLabel> out;
  detail::for_each_frame_entry(text, what, [&](const json& e) {
    PseudoLabel p;
    e.at("video_id").get_to(p.video_id);
    e.at("frame_idx").get_to(p.frame_idx);
    e.at("instance_id").get_to(p.instance_id);
    p.class_id = e.value("class_id", 0);
    p.source_point = e.at("point").get<Point>();
    p.box = e.at("box").get<Box>();
    p.teacher_id = e.value("teacher_id", std::string("unknown"));
    if (!p.box.valid()) throw Error(ErrorKind::parse, "invalid_box");
    out.push_back(std::move(p));
  });
  return out;
}

// Box-level frames plus pseudo-labelled weak frames, ready for detector
// training.
struct MergedSet {
  std::vector<FrameAnnotation> frames;
  std::vector<std::string> warnings;
  std::size_t containment_warnings = 0;
  std::size_t n_box_frames = 0;
  std::size_t n_weak_frames = 0;
};

inline void to_json(json& j, const MergedSet& m) {
  j = {{"frames", m.frames},
       {"warnings", m.warnings},
       {"containment_warnings", m.containment_warnings},
       {"n_box_frames", m.n_box_frames},
       {"n_weak_frames", m.n_weak_frames}};
}

inline void from_json(const json& j, MergedSet& m) {
  j.at("frames").get_to(m.frames);
  m.warnings = j.value("warnings", std::vector<std::string>{});
  m.containment_warnings = j.value("containment_warnings", std::size_t{0});
  m.n_box_frames = j.value("n_box_frames", std::size_t{0});
  m.n_weak_frames = j.value("n_weak_frames", std::size_t{0});
}

// Interpolated box frames of every box-level (train_box) video.
inline std::vector<FrameAnnotation> box_level_frames(const Dataset& d, int stride = kDefaultFrameStride) {
  std::vector<FrameAnnotation> out;
  for (const auto& vid : d.videos_with_role(SplitRole::train_box)) {
    const auto& meta = d.video(vid);
    for (const auto& t : d.box_tracks) {
      if (t.video_id != vid) continue;
      for (auto& f : subsample_frames(box_track_frames(t, meta), stride)) out.push_back(std::move(f));
    }
  }
  return out;
}

// Attaches teacher boxes to the exported weak frames. Every label must refer
// to an exported (video, frame, instance); boxes that miss their source point
// only raise a warning.
inline MergedSet import_pseudo_labels(const Dataset& d, std::span<const PseudoLabel> labels,
                                      int stride = kDefaultFrameStride) {
  MergedSet out;
  std::map<FrameRef, FrameAnnotation> weak;
  std::vector<FrameRef> order;
  for (const auto& f : export_weak_frames(d, stride)) {
    FrameRef ref{f.video_id, f.frame_idx, f.instance_id};
    order.push_back(ref);
    weak[ref] = {f.video_id, f.frame_idx, f.instance_id, f.class_id, f.point, std::nullopt,
                 AnnotationSource::human_point};
  }
  for (const auto& l : labels) {
    auto it = weak.find({l.video_id, l.frame_idx, l.instance_id});
    if (it == weak.end())
      throw Error(ErrorKind::not_found, "unknown_frame_ref",
                  l.video_id + "#" + std::to_string(l.frame_idx) + "/" + std::to_string(l.instance_id));
    if (!l.box.contains(*it->second.point)) {
      ++out.containment_warnings;
      out.warnings.push_back("pseudo box does not contain its point: " + l.video_id + "#" +
                             std::to_string(l.frame_idx) + "/" + std::to_string(l.instance_id));
    }
    it->second.box = l.box;
    it->second.source = AnnotationSource::pseudo_box;
  }

  out.frames = box_level_frames(d, stride);
  out.n_box_frames = out.frames.size();
  for (const auto& ref : order) {
    const auto& f = weak.at(ref);
    if (!f.box)
      out.warnings.push_back("weak frame without pseudo label: " + f.video_id + "#" + std::to_string(f.frame_idx));
    out.frames.push_back(f);
  }
  out.n_weak_frames = order.size();
  return out;
}

}  // namespace otf

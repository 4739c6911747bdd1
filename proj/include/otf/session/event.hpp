#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "otf/core/json_io.hpp"
#include "otf/session/clock.hpp"

namespace otf {

namespace ev {
struct Play {};
struct Pause {};
struct Cursor {
  double x = 0.0;
  double y = 0.0;
};
struct BeginAnnotation {};
struct StopAnnotation {};
struct SetKeyframe {
  Box box;
};
struct DeleteKeyframe {
  double t = 0.0;
};
struct Seek {
  double t = 0.0;
};
struct EndSession {};

inline bool operator==(const Play&, const Play&) { return true; }
inline bool operator==(const Pause&, const Pause&) { return true; }
inline bool operator==(const Cursor& a, const Cursor& b) { return a.x == b.x && a.y == b.y; }
inline bool operator==(const BeginAnnotation&, const BeginAnnotation&) { return true; }
inline bool operator==(const StopAnnotation&, const StopAnnotation&) { return true; }
inline bool operator==(const SetKeyframe& a, const SetKeyframe& b) { return a.box == b.box; }
inline bool operator==(const DeleteKeyframe& a, const DeleteKeyframe& b) { return a.t == b.t; }
inline bool operator==(const Seek& a, const Seek& b) { return a.t == b.t; }
inline bool operator==(const EndSession&, const EndSession&) { return true; }
}  // namespace ev

using EventPayload = std::variant<ev::Play, ev::Pause, ev::Cursor, ev::BeginAnnotation, ev::StopAnnotation,
                                  ev::SetKeyframe, ev::DeleteKeyframe, ev::Seek, ev::EndSession>;

// One user action. `media_t` is the optional client-side stamp: when present
// on cursor/begin/stop/set_keyframe it is used instead of the server clock.
struct SessionEvent {
  double wall_t = 0.0;
  EventPayload payload;
  std::optional<double> media_t;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

inline std::string_view event_kind(const EventPayload& p) {
  static constexpr std::string_view names[] = {"play",           "pause",        "cursor",
                                               "begin_annotation", "stop_annotation", "set_keyframe",
                                               "delete_keyframe",  "seek",         "end_session"};
  return names[p.index()];
}

enum class SessionMode { otf, bbox };

inline std::string_view to_string(SessionMode m) { return m == SessionMode::otf ? "OTF" : "BBox"; }

inline SessionMode parse_session_mode(std::string_view s) {
  if (s == "OTF" || s == "otf") return SessionMode::otf;
  if (s == "BBox" || s == "bbox") return SessionMode::bbox;
  throw Error(ErrorKind::parse, "unknown_mode", std::string(s));
}

inline void to_json(json& j, const SessionEvent& e) {
  j = {{"wall_t", e.wall_t}, {"kind", event_kind(e.payload)}};
  std::visit(
      [&j](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ev::Cursor>) {
          j["x"] = p.x;
          j["y"] = p.y;
        } else if constexpr (std::is_same_v<P, ev::SetKeyframe>) {
          j["box"] = p.box;
        } else if constexpr (std::is_same_v<P, ev::DeleteKeyframe> || std::is_same_v<P, ev::Seek>) {
          j["t"] = p.t;
        }
      },
      e.payload);
  if (e.media_t) j["media_t"] = *e.media_t;
}

inline void from_json(const json& j, SessionEvent& e) {
  j.at("wall_t").get_to(e.wall_t);
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "play") e.payload = ev::Play{};
  else if (kind == "pause") e.payload = ev::Pause{};
  else if (kind == "cursor") e.payload = ev::Cursor{j.at("x").get<double>(), j.at("y").get<double>()};
  else if (kind == "begin_annotation") e.payload = ev::BeginAnnotation{};
  else if (kind == "stop_annotation") e.payload = ev::StopAnnotation{};
  else if (kind == "set_keyframe") e.payload = ev::SetKeyframe{j.at("box").get<Box>()};
  else if (kind == "delete_keyframe") e.payload = ev::DeleteKeyframe{j.at("t").get<double>()};
  else if (kind == "seek") e.payload = ev::Seek{j.at("t").get<double>()};
  else if (kind == "end_session") e.payload = ev::EndSession{};
  else throw Error(ErrorKind::parse, "unknown_event_kind", kind);
  e.media_t.reset();
  if (j.contains("media_t") && !j["media_t"].is_null()) e.media_t = j["media_t"].get<double>();
}

// Static description of a session; first line of a session log file.
struct SessionConfig {
  VideoMeta meta;
  SessionMode mode = SessionMode::otf;
  double speed = kDefaultPlaybackSpeed;
  int instance_id = 0;
  int class_id = 0;
  // Paused gaps longer than this are excluded from active annotation time.
  double idle_gap_s = 30.0;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

inline void to_json(json& j, const SessionConfig& c) {
  j = {{"video_id", c.meta.video_id}, {"meta", c.meta},           {"mode", to_string(c.mode)},
       {"speed", c.speed},            {"instance_id", c.instance_id}, {"class_id", c.class_id},
       {"idle_gap_s", c.idle_gap_s}};
}

inline void from_json(const json& j, SessionConfig& c) {
  j.at("meta").get_to(c.meta);
  c.mode = parse_session_mode(j.at("mode").get<std::string>());
  c.speed = j.value("speed", kDefaultPlaybackSpeed);
  c.instance_id = j.value("instance_id", 0);
  c.class_id = j.value("class_id", 0);
  c.idle_gap_s = j.value("idle_gap_s", 30.0);
}

struct SessionLog {
  SessionConfig config;
  std::vector<SessionEvent> events;
  double active_annotation_s = 0.0;
  double total_wall_s = 0.0;

  const std::string& video_id() const { return config.meta.video_id; }
  SessionMode mode() const { return config.mode; }

  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

// JSON-lines session log: a {"session": config} header line followed by one
// event object per line.
inline void write_session_log(std::ostream& out, const SessionLog& log) {
  out << json{{"session", log.config}}.dump() << '\n';
  for (const auto& e : log.events) out << json(e).dump() << '\n';
}

inline SessionLog read_session_log(std::istream& in, const std::string& what = "session log") {
  SessionLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = what + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::parse, "malformed_json", where + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (!j.contains("session")) throw Error(ErrorKind::parse, "missing_header", where);
        j.at("session").get_to(log.config);
        have_header = true;
      } else if (j.contains("event")) {
        // Server logs wrap events as {"seq": n, "event": {...}}.
        log.events.push_back(j.at("event").get<SessionEvent>());
      } else {
        log.events.push_back(j.get<SessionEvent>());
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, "schema_error", where + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::parse, "missing_header", what + " is empty");
  return log;
}

}  // namespace otf

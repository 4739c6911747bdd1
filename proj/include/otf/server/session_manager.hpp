#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "otf/analysis/reports.hpp"
#include "otf/eval/ap.hpp"
#include "otf/session/engine.hpp"

namespace otf {

namespace fs = std::filesystem;

// Append-only file; every line reaches the disk before append() returns.
class AppendLog {
 public:
  AppendLog() = default;
  AppendLog(const fs::path& path, bool sync) : sync_(sync) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorKind::io, "cannot_open_log", path.string() + ": " + std::strerror(errno));
  }
  AppendLog(AppendLog&& o) noexcept : fd_(std::exchange(o.fd_, -1)), sync_(o.sync_) {}
  AppendLog& operator=(AppendLog&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
      sync_ = o.sync_;
    }
    return *this;
  }
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;
  ~AppendLog() { close(); }

  void append(std::string line) {
    line += '\n';
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      const auto n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::io, "log_write_failed", std::strerror(errno));
      }
      p += n;
      left -= std::size_t(n);
    }
    if (sync_ && ::fdatasync(fd_) != 0) throw Error(ErrorKind::io, "log_sync_failed", std::strerror(errno));
  }

  bool is_open() const { return fd_ >= 0; }

 private:
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  int fd_ = -1;
  bool sync_ = true;
};

struct ServerOptions {
  fs::path data_dir = "data";
  double default_speed = kDefaultPlaybackSpeed;
  bool sync_writes = true;
};

struct CreateSessionRequest {
  std::string annotator = "anonymous";
  std::string video_id;
  SessionMode mode = SessionMode::otf;
  std::optional<double> speed;
  int instance_id = 0;
  int class_id = 0;
  double idle_gap_s = 30.0;
};

inline void from_json(const json& j, CreateSessionRequest& r) {
  r = CreateSessionRequest{};
  r.annotator = j.value("annotator", r.annotator);
  j.at("video_id").get_to(r.video_id);
  if (j.contains("mode")) r.mode = parse_session_mode(j["mode"].get<std::string>());
  if (j.contains("speed") && !j["speed"].is_null()) r.speed = j["speed"].get<double>();
  r.instance_id = j.value("instance_id", 0);
  r.class_id = j.value("class_id", 0);
  r.idle_gap_s = j.value("idle_gap_s", 30.0);
}

// Outcome of one wire event.
struct IngestResult {
  bool accepted = false;
  std::int64_t seq = 0;
  std::int64_t last_seq = 0;
  std::string reason;
  std::string kind;
  std::string detail;
  json state;
};

inline void to_json(json& j, const IngestResult& r) {
  if (r.accepted) {
    j = {{"type", "ack"}, {"seq", r.seq}, {"last_seq", r.last_seq}, {"state", r.state}};
  } else {
    j = {{"type", "reject"}, {"seq", r.seq},   {"last_seq", r.last_seq},
         {"reason", r.reason}, {"kind", r.kind}, {"detail", r.detail}};
  }
}

// Owns all sessions of one data directory:
//   dataset.json                 video index and split
//   videos/                      static media
//   sessions/<id>.jsonl          append-only event log
//   sessions/<id>.final.json     finalized track and timing
//   annotations/<video>.json     finalized tracks per video
//   timing.csv, gt.json, detections.json   optional analysis inputs
class SessionManager {
 public:
  explicit SessionManager(ServerOptions opt) : opt_(std::move(opt)) {
    fs::create_directories(opt_.data_dir / "sessions");
    fs::create_directories(opt_.data_dir / "annotations");
    fs::create_directories(opt_.data_dir / "videos");
    const auto index = opt_.data_dir / "dataset.json";
    if (fs::exists(index)) dataset_ = decode<Dataset>(read_json_file(index), index.string());
    recover();
  }

  const ServerOptions& options() const { return opt_; }

  json videos() const {
    json out = json::array();
    for (const auto& v : dataset_.videos) {
      json j = v;
      auto it = dataset_.split.find(v.video_id);
      j["split"] = it == dataset_.split.end() ? json(nullptr) : json(to_string(it->second));
      out.push_back(std::move(j));
    }
    return out;
  }

  json create_session(const CreateSessionRequest& req) {
    const VideoMeta* meta = dataset_.find_video(req.video_id);
    if (!meta) throw Error(ErrorKind::not_found, "unknown_video", req.video_id);
    std::lock_guard lock(registry_mu_);
    for (const auto& [id, s] : sessions_)
      if (s->live && s->annotator == req.annotator && s->video_id == req.video_id && s->mode == req.mode)
        throw Error(ErrorKind::conflict, "duplicate_session", "live session " + id);

    SessionConfig cfg{*meta, req.mode, req.speed.value_or(opt_.default_speed), req.instance_id, req.class_id,
                      req.idle_gap_s};
    auto s = std::make_unique<Session>(cfg);
    s->id = next_id();
    s->annotator = req.annotator;
    s->video_id = req.video_id;
    s->mode = req.mode;
    s->created_at =
        std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
    const auto path = log_path(s->id);
    s->log = AppendLog(path, opt_.sync_writes);
    s->log.append(json{{"session", cfg}, {"session_id", s->id}, {"annotator", s->annotator},
                       {"created_at", s->created_at}}
                      .dump());
    auto& ref = *s;
    sessions_[s->id] = std::move(s);
    std::lock_guard slock(ref.mu);
    return info(ref);
  }

  // Applies one sequenced event. Accepted events are on disk before the
  // engine state changes.
  IngestResult ingest(const std::string& id, std::int64_t seq, const SessionEvent& e) {
    Session& s = find(id);
    std::lock_guard lock(s.mu);
    IngestResult r;
    r.seq = seq;
    r.last_seq = s.last_seq;
    if (!s.live) return reject(r, "session_closed", ErrorKind::conflict);
    if (seq != s.last_seq + 1)
      return reject(r, seq <= s.last_seq ? "duplicate_seq" : "seq_gap", ErrorKind::out_of_order,
                    "expected " + std::to_string(s.last_seq + 1));
    SessionEngine::Transition tr;
    try {
      tr = s.engine.plan(e);
    } catch (const Error& err) {
      return reject(r, err.reason(), err.kind(), err.what());
    }
    s.log.append(json{{"seq", seq}, {"event", e}}.dump());
    s.engine.commit(tr);
    s.last_seq = seq;
    r.accepted = true;
    r.last_seq = seq;
    r.state = state_snapshot(s.engine);
    return r;
  }

  // Wire form {"seq": n, "event": {...}}.
  IngestResult ingest_wire(const std::string& id, const json& msg) {
    std::int64_t seq = 0;
    SessionEvent e;
    try {
      seq = msg.at("seq").get<std::int64_t>();
      e = msg.at("event").get<SessionEvent>();
    } catch (const std::exception& ex) {
      IngestResult r;
      r.seq = msg.is_object() && msg.contains("seq") && msg["seq"].is_number_integer() ? msg["seq"].get<std::int64_t>() : 0;
      r.last_seq = last_seq(id);
      return reject(r, "malformed_message", ErrorKind::parse, ex.what());
    }
    return ingest(id, seq, e);
  }

  std::int64_t last_seq(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mu);
    return s.last_seq;
  }

  json session(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mu);
    return info(s);
  }

  json sessions() {
    std::vector<Session*> all;
    {
      std::lock_guard lock(registry_mu_);
      for (auto& [id, s] : sessions_) all.push_back(s.get());
    }
    json out = json::array();
    for (auto* s : all) {
      std::lock_guard lock(s->mu);
      json j = info(*s);
      j.erase("state");
      out.push_back(std::move(j));
    }
    return out;
  }

  json state(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mu);
    return state_snapshot(s.engine);
  }

  // Sent when a stream (re)connects.
  json sync(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mu);
    return {{"type", "sync"}, {"session_id", id}, {"last_seq", s.last_seq}, {"live", bool(s.live)},
            {"state", state_snapshot(s.engine)}};
  }

  // Closes the session: appends end_session if the log lacks one, persists
  // the track and records it with the video's annotations.
  json finalize(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.mu);
    if (!s.live) throw Error(ErrorKind::conflict, "session_closed", id);
    if (!s.engine.ended()) {
      const double w = s.engine.history().empty() ? 0.0 : s.engine.history().back().wall_t;
      SessionEvent end{w, ev::EndSession{}, std::nullopt};
      const auto tr = s.engine.plan(end);
      s.log.append(json{{"seq", s.last_seq + 1}, {"event", end}}.dump());
      s.engine.commit(tr);
      ++s.last_seq;
    }
    const auto fin = finalize_engine(s.engine);
    json track;
    std::visit([&](const auto& t) { track = t; }, fin.track);
    json out = {{"session_id", id},         {"video_id", s.video_id}, {"mode", to_string(s.mode)},
                {"annotator", s.annotator}, {"track", track},         {"timing", fin.timing}};
    {
      std::lock_guard alock(annotations_mu_);
      const auto path = opt_.data_dir / "annotations" / (s.video_id + ".json");
      VideoAnnotations va{s.engine.config().meta, {}, {}};
      if (fs::exists(path)) va = load_annotation_file(path);
      std::visit(
          [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, OtfTrack>) va.otf_tracks.push_back(t);
            else va.box_tracks.push_back(t);
          },
          fin.track);
      save_annotation_file(path, va);
    }
    write_text_file(final_path(id), out.dump(2) + "\n");
    s.live = false;
    s.log = AppendLog();
    return out;
  }

  // kind: timing | density | budget | ap50.
  json analysis(const std::string& kind, const std::map<std::string, std::string>& params) const {
    auto param = [&](const std::string& k) -> std::optional<std::string> {
      auto it = params.find(k);
      if (it == params.end()) return std::nullopt;
      return it->second;
    };
    if (kind == "timing") {
      const auto source = param("source").value_or("auto");
      const auto csv = data_file(param("file").value_or("timing.csv"));
      std::vector<TimingRecord> records;
      if (source == "csv" || (source == "auto" && fs::exists(csv))) {
        if (!fs::exists(csv)) throw Error(ErrorKind::not_found, "no_timing_data", csv.string());
        std::ifstream in(csv);
        records = read_timing_csv(in);
      } else {
        records = session_timing_records();
      }
      if (records.empty()) throw Error(ErrorKind::not_found, "no_timing_data");
      return speedup_stats(records);
    }
    if (kind == "density") {
      auto annos = load_annotations(param("video_id"));
      if (annos.empty()) throw Error(ErrorKind::not_found, "no_annotations");
      GroundTruth gt;
      const auto gt_name = param("gt");
      if (gt_name || fs::exists(data_file("gt.json"))) {
        const auto p = data_file(gt_name.value_or("gt.json"));
        if (!fs::exists(p)) throw Error(ErrorKind::not_found, "missing_ground_truth", p.string());
        gt = ground_truth_from_json(read_json_file(p));
      } else {
        gt = ground_truth_from_box_tracks(annos);
      }
      const int res = param("resolution") ? std::stoi(*param("resolution")) : 64;
      const auto d = analyze_density(annos, gt, res);
      return density_json(d.grid, d.inside_rate);
    }
    if (kind == "budget") {
      BudgetModel<Rational> m;
      auto req = [&](const char* k) {
        auto v = param(k);
        if (!v) throw Error(ErrorKind::invalid_argument, "missing_parameter", k);
        return *v;
      };
      m.t_bbox_per_video = parse_rational(req("t_bbox"));
      m.t_otf_per_video = parse_rational(req("t_otf"));
      m.n_box_otf = std::stoll(req("n_box"));
      m.n_weak_otf = std::stoll(req("n_weak"));
      if (auto n = param("n_box_bbox")) m.n_box_bbox = std::stoll(*n);
      validate_budget_model(m);
      const bool match = param("match").value_or("true") != "false";
      return budget_json(m, match);
    }
    if (kind == "ap50") {
      const auto gt_path = data_file(param("gt").value_or("gt.json"));
      const auto det_path = data_file(param("det").value_or("detections.json"));
      if (!fs::exists(gt_path)) throw Error(ErrorKind::not_found, "missing_ground_truth", gt_path.string());
      if (!fs::exists(det_path)) throw Error(ErrorKind::not_found, "missing_detections", det_path.string());
      const auto gt = ground_truth_from_json(read_json_file(gt_path));
      const auto dets = detections_from_json(read_json_file(det_path));
      const auto mode = param("interp").value_or("all") == "101" ? ApInterpolation::points_101 : ApInterpolation::all_point;
      return ap50(gt, dets, mode);
    }
    throw Error(ErrorKind::not_found, "unknown_analysis", kind);
  }

  // Paired per-video wall times of finalized OTF and BBox sessions.
  std::vector<TimingRecord> session_timing_records() const {
    std::map<std::string, std::pair<double, double>> acc;
    std::map<std::string, std::pair<bool, bool>> seen;
    for (const auto& entry : fs::directory_iterator(opt_.data_dir / "sessions")) {
      const auto name = entry.path().filename().string();
      if (!name.ends_with(".final.json")) continue;
      const auto j = read_json_file(entry.path());
      const auto vid = j.at("video_id").get<std::string>();
      const double wall = j.at("timing").at("wall_s").get<double>();
      if (parse_session_mode(j.at("mode").get<std::string>()) == SessionMode::otf) {
        acc[vid].first += wall;
        seen[vid].first = true;
      } else {
        acc[vid].second += wall;
        seen[vid].second = true;
      }
    }
    std::vector<TimingRecord> out;
    for (const auto& [vid, t] : acc)
      if (seen[vid].first && seen[vid].second) out.push_back({vid, t.first, t.second});
    return out;
  }

  fs::path log_path(const std::string& id) const { return opt_.data_dir / "sessions" / (id + ".jsonl"); }
  fs::path final_path(const std::string& id) const { return opt_.data_dir / "sessions" / (id + ".final.json"); }

  // Resolves a path inside the data directory; rejects escapes.
  fs::path data_file(const std::string& rel) const { return contained(opt_.data_dir, rel); }

  static fs::path contained(const fs::path& root, const std::string& rel) {
    const auto base = fs::weakly_canonical(root);
    const auto p = fs::weakly_canonical(base / fs::path(rel).relative_path());
    auto [a, b] = std::mismatch(base.begin(), base.end(), p.begin(), p.end());
    if (a != base.end()) throw Error(ErrorKind::invalid_argument, "path_outside_data_dir", rel);
    return p;
  }

 private:
  struct Session {
    explicit Session(const SessionConfig& cfg) : engine(cfg) {}
    std::mutex mu;
    SessionEngine engine;
    AppendLog log;
    std::string id, annotator, video_id;
    SessionMode mode = SessionMode::otf;
    double created_at = 0.0;
    std::int64_t last_seq = 0;
    std::atomic<bool> live{true};
  };

  static IngestResult reject(IngestResult r, std::string reason, ErrorKind kind, std::string detail = {}) {
    r.accepted = false;
    r.reason = std::move(reason);
    r.kind = std::string(to_string(kind));
    r.detail = std::move(detail);
    return r;
  }

  json info(const Session& s) const {
    return {{"session_id", s.id},
            {"annotator", s.annotator},
            {"video_id", s.video_id},
            {"mode", to_string(s.mode)},
            {"speed", s.engine.config().speed},
            {"created_at", s.created_at},
            {"live", bool(s.live)},
            {"last_seq", s.last_seq},
            {"state", state_snapshot(s.engine)}};
  }

  Session& find(const std::string& id) {
    std::lock_guard lock(registry_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorKind::not_found, "unknown_session", id);
    return *it->second;
  }

  std::string next_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06lld", static_cast<long long>(++max_id_));
    return buf;
  }

  std::vector<VideoAnnotations> load_annotations(const std::optional<std::string>& only) const {
    std::vector<VideoAnnotations> out;
    for (const auto& v : dataset_.videos) {
      if (only && v.video_id != *only) continue;
      const auto p = opt_.data_dir / "annotations" / (v.video_id + ".json");
      if (fs::exists(p)) out.push_back(load_annotation_file(p));
    }
    return out;
  }

  // Rebuilds every session from its log. A torn final line (crash during a
  // write) is cut off.
  void recover() {
    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(opt_.data_dir / "sessions"))
      if (entry.path().extension() == ".jsonl") logs.push_back(entry.path());
    std::sort(logs.begin(), logs.end());
    for (const auto& path : logs) {
      const auto id = path.stem().string();
      if (id.size() > 1 && id[0] == 's') {
        try {
          max_id_ = std::max<std::int64_t>(max_id_, std::stoll(id.substr(1)));
        } catch (const std::exception&) {
        }
      }
      std::string text = read_text_file(path);
      if (!text.empty() && text.back() != '\n') {
        const auto cut = text.rfind('\n');
        text.resize(cut == std::string::npos ? 0 : cut + 1);
        fs::resize_file(path, text.size());
      }
      std::istringstream in(text);
      std::string line;
      std::size_t line_no = 0;
      std::unique_ptr<Session> s;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = parse_json_text(line, path.string() + " line " + std::to_string(line_no));
        if (!s) {
          s = std::make_unique<Session>(decode<SessionConfig>(j.at("session"), path.string()));
          s->id = j.value("session_id", id);
          s->annotator = j.value("annotator", std::string("anonymous"));
          s->created_at = j.value("created_at", 0.0);
          s->video_id = s->engine.config().meta.video_id;
          s->mode = s->engine.config().mode;
          continue;
        }
        s->engine.apply(j.at("event").get<SessionEvent>());
        s->last_seq = j.at("seq").get<std::int64_t>();
      }
      if (!s) continue;
      s->live = !fs::exists(final_path(s->id));
      if (s->live) s->log = AppendLog(path, opt_.sync_writes);
      sessions_[s->id] = std::move(s);
    }
  }

  ServerOptions opt_;
  Dataset dataset_;
  std::mutex registry_mu_;
  std::mutex annotations_mu_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::int64_t max_id_ = 0;
};

}  // namespace otf

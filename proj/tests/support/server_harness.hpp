#pragma once

// Scratch data directories and transport drivers for server tests.

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "gen.hpp"
#include "otf/server/client.hpp"
#include "otf/server/http_server.hpp"
#include "otf/server/session_manager.hpp"

namespace harness {

namespace fs = std::filesystem;
using otf::json;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("otf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline void write_dataset(const fs::path& dir, const std::vector<otf::VideoMeta>& videos) {
  otf::Dataset d;
  d.videos = videos;
  otf::write_text_file(dir / "dataset.json", otf::dataset_index_json(d).dump(2) + "\n");
}

inline otf::ServerOptions options(const fs::path& dir) {
  otf::ServerOptions o;
  o.data_dir = dir;
  o.sync_writes = false;
  return o;
}

inline json wire(std::int64_t seq, const otf::SessionEvent& e) { return {{"seq", seq}, {"event", e}}; }

inline otf::CreateSessionRequest request(const std::string& annotator, const std::string& video) {
  otf::CreateSessionRequest r;
  r.annotator = annotator;
  r.video_id = video;
  return r;
}

// Result of pushing one event sequence through a transport.
struct Folded {
  json state;
  json final_doc;
  std::size_t rejects = 0;
};

inline Folded fold_in_process(const otf::SessionConfig& cfg, const std::vector<otf::SessionEvent>& events) {
  Folded f;
  otf::SessionEngine e(cfg);
  for (const auto& ev : events) {
    try {
      e.apply(ev);
    } catch (const otf::Error&) {
      ++f.rejects;
    }
  }
  f.state = otf::state_snapshot(e);
  const auto fin = otf::finalize_engine(e);
  std::visit([&](const auto& t) { f.final_doc = {{"track", t}, {"timing", fin.timing}}; }, fin.track);
  return f;
}

inline json strip_final(const json& j) { return {{"track", j.at("track")}, {"timing", j.at("timing")}}; }

inline Folded fold_manager(otf::SessionManager& mgr, const std::string& annotator, const std::string& video,
                           const std::vector<otf::SessionEvent>& events) {
  Folded f;
  const auto id = mgr.create_session(request(annotator, video)).at("session_id").get<std::string>();
  std::int64_t seq = 1;
  for (const auto& ev : events) {
    if (mgr.ingest(id, seq, ev).accepted) ++seq;
    else ++f.rejects;
  }
  f.state = mgr.state(id);
  f.final_doc = strip_final(mgr.finalize(id));
  return f;
}

inline Folded fold_http(const otf::HttpClient& c, const std::string& annotator, const std::string& video,
                        const std::vector<otf::SessionEvent>& events) {
  Folded f;
  const auto created = c.post("/sessions", {{"annotator", annotator}, {"video_id", video}});
  const auto id = created.body.at("session_id").get<std::string>();
  std::int64_t seq = 1;
  for (const auto& ev : events) {
    const auto r = c.post("/sessions/" + id + "/events", wire(seq, ev));
    if (r.status == 200) ++seq;
    else ++f.rejects;
  }
  f.state = c.get("/sessions/" + id).body.at("state");
  f.final_doc = strip_final(c.post("/sessions/" + id + "/finalize").body);
  return f;
}

inline Folded fold_stream(const otf::HttpClient& c, unsigned short port, const std::string& annotator,
                          const std::string& video, const std::vector<otf::SessionEvent>& events) {
  Folded f;
  const auto created = c.post("/sessions", {{"annotator", annotator}, {"video_id", video}});
  const auto id = created.body.at("session_id").get<std::string>();
  {
    otf::StreamClient ws("127.0.0.1", port, "/sessions/" + id + "/events");
    const auto hello = ws.receive();
    if (hello.value("type", "") != "sync") throw std::runtime_error("expected sync");
    std::int64_t seq = 1;
    for (const auto& ev : events) {
      const auto r = ws.call(wire(seq, ev));
      if (r.value("type", "") == "ack") ++seq;
      else ++f.rejects;
    }
    f.state = ws.call({{"type", "sync"}}).at("state");
  }
  f.final_doc = strip_final(c.post("/sessions/" + id + "/finalize").body);
  return f;
}

// A random OTF session with a few injected invalid events. All valid events
// have strictly ordered wall stamps.
inline std::vector<otf::SessionEvent> noisy_session(otf::Rng& r, const otf::VideoMeta& m, double speed) {
  auto evs = gen::otf_session(r, m, speed);
  std::vector<otf::SessionEvent> out;
  for (std::size_t i = 0; i < evs.size(); ++i) {
    if (i > 0 && r.below(10) == 0) {
      const double w = out.back().wall_t;
      switch (r.below(3)) {
        case 0: out.push_back({w, otf::ev::Cursor{-5.0, 1.0}, std::nullopt}); break;
        case 1: out.push_back({w - 1.0, otf::ev::Pause{}, std::nullopt}); break;
        default: out.push_back({w, otf::ev::Seek{-1.0}, std::nullopt}); break;
      }
    }
    out.push_back(evs[i]);
  }
  return out;
}

}  // namespace harness

#include <gtest/gtest.h>

#include <fstream>

#include "support/server_harness.hpp"

using namespace otf;
using harness::TempDir;
using harness::wire;

namespace {

VideoMeta clip(const std::string& id) { return VideoMeta::make(id, 25.0, 250, 320, 240); }

SessionEvent at(double w, EventPayload p, std::optional<double> m = std::nullopt) { return {w, p, m}; }

std::vector<SessionEvent> short_otf() {
  return {at(0, ev::Play{}),          at(1, ev::BeginAnnotation{}), at(1.1, ev::Cursor{10, 10}),
          at(1.2, ev::Cursor{12, 11}), at(1.3, ev::Pause{}),         at(1.3, ev::StopAnnotation{}),
          at(2.0, ev::EndSession{})};
}

std::vector<SessionEvent> short_bbox(double extra) {
  return {at(0, ev::Seek{1}),
          at(2, ev::SetKeyframe{{10, 10, 40, 40}}),
          at(4 + extra, ev::Seek{3}),
          at(6 + extra, ev::SetKeyframe{{12, 10, 42, 40}}),
          at(7 + extra, ev::StopAnnotation{}, 3.5),
          at(8 + extra, ev::EndSession{})};
}

struct Fixture : ::testing::Test {
  TempDir dir;
  void SetUp() override { harness::write_dataset(dir.path(), {clip("a"), clip("b"), clip("c")}); }
  SessionManager manager() { return SessionManager(harness::options(dir.path())); }
  std::string create(SessionManager& m, const std::string& who = "ann", const std::string& video = "a",
                     SessionMode mode = SessionMode::otf) {
    auto r = harness::request(who, video);
    r.mode = mode;
    return m.create_session(r).at("session_id").get<std::string>();
  }
  void push(SessionManager& m, const std::string& id, const std::vector<SessionEvent>& evs) {
    for (const auto& e : evs) {
      const auto r = m.ingest(id, m.last_seq(id) + 1, e);
      ASSERT_TRUE(r.accepted) << r.reason << " " << r.detail;
    }
  }
};

using Manager = Fixture;
using Recovery = Fixture;
using Routes = Fixture;
using Transport = Fixture;

}  // namespace

TEST_F(Manager, ListsVideos) {
  auto m = manager();
  const auto v = m.videos();
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].at("video_id"), "a");
  EXPECT_TRUE(v[0].at("split").is_null());
}

TEST_F(Manager, CreateErrors) {
  auto m = manager();
  try {
    create(m, "ann", "zzz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_found);
    EXPECT_EQ(e.reason(), "unknown_video");
  }
  create(m);
  try {
    create(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conflict);
    EXPECT_EQ(e.reason(), "duplicate_session");
  }
  EXPECT_NO_THROW(create(m, "other"));
  EXPECT_NO_THROW(create(m, "ann", "a", SessionMode::bbox));
}

TEST_F(Manager, SequenceRules) {
  auto m = manager();
  const auto id = create(m);
  EXPECT_TRUE(m.ingest(id, 1, at(0, ev::Play{})).accepted);
  auto r = m.ingest(id, 3, at(1, ev::Pause{}));
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.reason, "seq_gap");
  EXPECT_EQ(r.kind, "out_of_order");
  EXPECT_EQ(r.last_seq, 1);
  r = m.ingest(id, 1, at(1, ev::Pause{}));
  EXPECT_EQ(r.reason, "duplicate_seq");
  EXPECT_TRUE(m.ingest(id, 2, at(1, ev::Pause{})).accepted);
  r = m.ingest(id, 3, at(1.5, ev::Cursor{1, 1}));
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.reason, "no_active_annotation");
  EXPECT_EQ(m.last_seq(id), 2);
}

TEST_F(Manager, AckCarriesState) {
  auto m = manager();
  const auto id = create(m);
  const auto r = m.ingest(id, 1, at(0, ev::Play{}));
  EXPECT_EQ(json(r).at("type"), "ack");
  EXPECT_EQ(r.state, m.state(id));
  EXPECT_EQ(r.state.at("clock").at("state"), "playing");
}

TEST_F(Manager, MalformedWire) {
  auto m = manager();
  const auto id = create(m);
  const auto r = m.ingest_wire(id, {{"seq", 1}, {"event", {{"type", "warp"}}}});
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.reason, "malformed_message");
  EXPECT_EQ(r.seq, 1);
  EXPECT_EQ(m.ingest_wire(id, json::array()).reason, "malformed_message");
  EXPECT_TRUE(m.ingest_wire(id, wire(1, at(0, ev::Play{}))).accepted);
}

TEST_F(Manager, UnknownSession) {
  auto m = manager();
  EXPECT_THROW(m.state("s999"), Error);
  EXPECT_THROW(m.ingest("nope", 1, at(0, ev::Play{})), Error);
}

TEST_F(Manager, FinalizeWritesTrackOnce) {
  auto m = manager();
  const auto id = create(m);
  push(m, id, short_otf());
  const auto out = m.finalize(id);
  EXPECT_EQ(out.at("mode"), "OTF");
  EXPECT_EQ(out.at("track").at("samples").size(), 2u);
  EXPECT_TRUE(fs::exists(m.final_path(id)));
  const auto va = load_annotation_file(dir.path() / "annotations" / "a.json");
  EXPECT_EQ(va.otf_tracks.size(), 1u);
  try {
    m.finalize(id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conflict);
  }
  EXPECT_EQ(m.ingest(id, m.last_seq(id) + 1, at(9, ev::Play{})).reason, "session_closed");
  EXPECT_FALSE(m.session(id).at("live").get<bool>());
  EXPECT_NO_THROW(create(m));
}

TEST_F(Manager, FinalizeAppendsEnd) {
  auto m = manager();
  const auto id = create(m);
  auto evs = short_otf();
  evs.pop_back();
  push(m, id, evs);
  m.finalize(id);
  EXPECT_EQ(m.last_seq(id), std::int64_t(evs.size()) + 1);
  EXPECT_TRUE(m.state(id).at("ended").get<bool>());
}

TEST_F(Manager, FinalizeUnclosedFails) {
  auto m = manager();
  const auto id = create(m);
  push(m, id, {at(0, ev::Play{}), at(1, ev::BeginAnnotation{}), at(1.1, ev::Cursor{3, 3})});
  try {
    m.finalize(id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.reason(), "unclosed_segment");
  }
}

TEST_F(Manager, TimingAnalysisMatchesDirectStats) {
  auto m = manager();
  std::vector<TimingRecord> expected;
  for (const std::string v : {"a", "b", "c"}) {
    const auto o = create(m, "ann", v);
    push(m, o, short_otf());
    const double t_otf = m.finalize(o).at("timing").at("wall_s").get<double>();
    const auto b = create(m, "ann", v, SessionMode::bbox);
    push(m, b, short_bbox(v == "a" ? 0.0 : v == "b" ? 3.0 : 7.0));
    const double t_bbox = m.finalize(b).at("timing").at("wall_s").get<double>();
    expected.push_back({v, t_otf, t_bbox});
  }
  EXPECT_EQ(m.session_timing_records(), expected);
  EXPECT_EQ(m.analysis("timing", {}).dump(), json(speedup_stats(expected)).dump());

  std::ofstream(dir.path() / "timing.csv") << "video_id,t_otf_s,t_bbox_s\nx,10,30\ny,12,41\nz,9,28\n";
  const auto csv = m.analysis("timing", {});
  EXPECT_EQ(csv.at("n"), 3);
  EXPECT_EQ(m.analysis("timing", {{"source", "sessions"}}).dump(), json(speedup_stats(expected)).dump());
}

TEST_F(Manager, BudgetAnalysis) {
  auto m = manager();
  const auto j = m.analysis("budget", {{"t_bbox", "4"}, {"t_otf", "1"}, {"n_box", "5"}, {"n_weak", "20"}});
  const BudgetModel<Rational> model{4, 1, 5, 20, 0};
  EXPECT_EQ(j.dump(), budget_json(model, true).dump());
  EXPECT_THROW(m.analysis("budget", {{"t_bbox", "4"}}), Error);
  EXPECT_THROW(m.analysis("warp", {}), Error);
}

TEST_F(Manager, PathContainment) {
  EXPECT_EQ(SessionManager::contained(dir.path(), "x/y.json"), fs::weakly_canonical(dir.path() / "x/y.json"));
  EXPECT_EQ(SessionManager::contained(dir.path(), "/x.json"), fs::weakly_canonical(dir.path() / "x.json"));
  EXPECT_THROW(SessionManager::contained(dir.path(), "../x.json"), Error);
  EXPECT_THROW(SessionManager::contained(dir.path(), "a/../../x.json"), Error);
  auto m = manager();
  EXPECT_THROW(m.analysis("timing", {{"file", "../../etc/passwd"}, {"source", "csv"}}), Error);
}

TEST_F(Recovery, RestartReproducesState) {
  std::string id, closed;
  json before, before_closed;
  std::int64_t seq = 0;
  {
    auto m = manager();
    closed = create(m, "x");
    push(m, closed, short_otf());
    m.finalize(closed);
    before_closed = m.session(closed);
    id = create(m);
    auto evs = short_otf();
    evs.resize(4);
    push(m, id, evs);
    before = m.state(id);
    seq = m.last_seq(id);
  }
  auto m = manager();
  EXPECT_EQ(m.state(id).dump(), before.dump());
  EXPECT_EQ(m.last_seq(id), seq);
  EXPECT_EQ(m.session(closed).dump(), before_closed.dump());
  EXPECT_TRUE(m.ingest(id, seq + 1, at(1.3, ev::Pause{})).accepted);
  const auto fresh = create(m, "y");
  EXPECT_GT(fresh, id);
}

TEST_F(Recovery, TornLastLineIsDropped) {
  std::string id;
  json before;
  {
    auto m = manager();
    id = create(m);
    push(m, id, {at(0, ev::Play{}), at(1, ev::BeginAnnotation{}), at(1.1, ev::Cursor{5, 5})});
    before = m.state(id);
    std::ofstream(m.log_path(id), std::ios::app) << R"({"seq":4,"event":{"type":"cur)";
  }
  auto m = manager();
  EXPECT_EQ(m.state(id).dump(), before.dump());
  EXPECT_EQ(m.last_seq(id), 3);
  EXPECT_TRUE(m.ingest(id, 4, at(1.2, ev::Cursor{6, 6})).accepted);
  const auto after = m.state(id);
  auto again = manager();
  EXPECT_EQ(again.state(id).dump(), after.dump());
}

TEST_F(Recovery, RandomCrashPoints) {
  Rng r(77);
  for (int trial = 0; trial < 40; ++trial) {
    TempDir d;
    harness::write_dataset(d.path(), {clip("a")});
    const auto evs = gen::otf_session(r, clip("a"), kDefaultPlaybackSpeed);
    const std::size_t cut = r.below(evs.size() + 1);
    std::string id;
    json before;
    {
      SessionManager m(harness::options(d.path()));
      id = m.create_session(harness::request("ann", "a")).at("session_id").get<std::string>();
      for (std::size_t i = 0; i < cut; ++i) ASSERT_TRUE(m.ingest(id, i + 1, evs[i]).accepted);
      before = m.state(id);
      if (r.below(2)) std::ofstream(m.log_path(id), std::ios::app) << R"({"seq":)";
    }
    SessionManager m(harness::options(d.path()));
    ASSERT_EQ(m.state(id).dump(), before.dump()) << "trial " << trial;
    ASSERT_EQ(m.last_seq(id), std::int64_t(cut));
  }
}

TEST(HttpHelpers, StatusMapping) {
  EXPECT_EQ(http_status(ErrorKind::not_found), boost::beast::http::status::not_found);
  EXPECT_EQ(http_status(ErrorKind::conflict), boost::beast::http::status::conflict);
  EXPECT_EQ(http_status(ErrorKind::out_of_order), boost::beast::http::status::conflict);
  EXPECT_EQ(http_status(ErrorKind::parse), boost::beast::http::status::bad_request);
  EXPECT_EQ(http_status(ErrorKind::io), boost::beast::http::status::internal_server_error);
}

TEST(HttpHelpers, Targets) {
  const auto t = parse_target("/analyses/timing?source=csv&file=a%20b.csv");
  EXPECT_EQ(t.segments, (std::vector<std::string>{"analyses", "timing"}));
  EXPECT_EQ(t.query.at("source"), "csv");
  EXPECT_EQ(t.query.at("file"), "a b.csv");
  EXPECT_EQ(percent_decode("%2e%2E%2f"), "../");
  EXPECT_EQ(mime_type("x.mp4"), "video/mp4");
  EXPECT_EQ(mime_type("x.json"), "application/json");
}

namespace {
HttpServer::Request make_req(boost::beast::http::verb v, const std::string& target, const std::string& body = {}) {
  HttpServer::Request req{v, target, 11};
  req.body() = body;
  req.prepare_payload();
  return req;
}
}  // namespace

TEST_F(Routes, InProcess) {
  namespace http = boost::beast::http;
  auto m = manager();
  HttpServer srv(m, "127.0.0.1", 0);
  auto res = srv.route(make_req(http::verb::get, "/health"));
  EXPECT_EQ(res.result(), http::status::ok);
  EXPECT_EQ(json::parse(res.body()).at("ok"), true);
  res = srv.route(make_req(http::verb::get, "/videos"));
  EXPECT_EQ(json::parse(res.body()).size(), 3u);
  EXPECT_EQ(srv.route(make_req(http::verb::get, "/nowhere")).result(), http::status::not_found);
  EXPECT_EQ(srv.route(make_req(http::verb::delete_, "/sessions")).result(), http::status::not_found);

  res = srv.route(make_req(http::verb::post, "/sessions", R"({"video_id":"zzz"})"));
  EXPECT_EQ(res.result(), http::status::not_found);
  EXPECT_EQ(json::parse(res.body()).at("error"), "unknown_video");
  EXPECT_EQ(srv.route(make_req(http::verb::post, "/sessions", "{oops")).result(), http::status::bad_request);
  res = srv.route(make_req(http::verb::post, "/sessions", R"({"video_id":"a","mode":"OTF"})"));
  EXPECT_EQ(res.result(), http::status::created);
  const auto id = json::parse(res.body()).at("session_id").get<std::string>();
  EXPECT_EQ(srv.route(make_req(http::verb::post, "/sessions", R"({"video_id":"a"})")).result(), http::status::conflict);

  const json batch = {wire(1, at(0, ev::Play{})), wire(2, at(1, ev::Pause{})), wire(4, at(2, ev::Play{}))};
  res = srv.route(make_req(http::verb::post, "/sessions/" + id + "/events", batch.dump()));
  EXPECT_EQ(res.result(), http::status::conflict);
  const auto replies = json::parse(res.body());
  ASSERT_EQ(replies.size(), 3u);
  EXPECT_EQ(replies[2].at("reason"), "seq_gap");
  res = srv.route(make_req(http::verb::get, "/sessions/" + id + "/events"));
  EXPECT_EQ(json::parse(res.body()).at("last_seq"), 2);
  EXPECT_EQ(srv.route(make_req(http::verb::options, "/sessions")).result(), http::status::no_content);
  EXPECT_EQ(srv.route(make_req(http::verb::get, "/analyses/warp")).result(), http::status::not_found);
}

TEST_F(Routes, StaticFilesStayInside) {
  namespace http = boost::beast::http;
  write_text_file(dir.path() / "videos" / "a.mp4", "MP4DATA");
  write_text_file(dir.path() / "secret.txt", "no");
  auto m = manager();
  HttpServer srv(m, "127.0.0.1", 0);
  auto res = srv.route(make_req(http::verb::get, "/static/a.mp4"));
  EXPECT_EQ(res.result(), http::status::ok);
  EXPECT_EQ(res.body(), "MP4DATA");
  EXPECT_EQ(res[http::field::content_type], "video/mp4");
  res = srv.route(make_req(http::verb::get, "/static/%2e%2e/secret.txt"));
  EXPECT_EQ(res.result(), http::status::bad_request);
  EXPECT_EQ(srv.route(make_req(http::verb::get, "/static/none.mp4")).result(), http::status::not_found);
}

TEST_F(Transport, SocketsAgreeWithInProcess) {
  auto m = manager();
  HttpServer srv(m, "127.0.0.1", 0);
  srv.start();
  HttpClient c("127.0.0.1", srv.port());
  EXPECT_EQ(c.get("/health").status, 200);
  const auto meta = clip("a");
  const SessionConfig cfg{meta, SessionMode::otf, kDefaultPlaybackSpeed, 0, 0, 30.0};
  Rng r(5);
  std::size_t rejects = 0;
  for (int i = 0; i < 12; ++i) {
    const auto evs = harness::noisy_session(r, meta, cfg.speed);
    const auto ref = harness::fold_in_process(cfg, evs);
    rejects += ref.rejects;
    const auto who = "t" + std::to_string(i);
    const auto a = harness::fold_manager(m, who + "m", "a", evs);
    const auto b = harness::fold_http(c, who + "h", "a", evs);
    const auto d = harness::fold_stream(c, srv.port(), who + "w", "a", evs);
    for (const auto* f : {&a, &b, &d}) {
      EXPECT_EQ(f->state.dump(), ref.state.dump()) << i;
      EXPECT_EQ(f->final_doc.dump(), ref.final_doc.dump()) << i;
      EXPECT_EQ(f->rejects, ref.rejects) << i;
    }
  }
  EXPECT_GT(rejects, 0u);
  srv.stop();
}

TEST_F(Transport, StreamResync) {
  auto m = manager();
  HttpServer srv(m, "127.0.0.1", 0);
  srv.start();
  HttpClient c("127.0.0.1", srv.port());
  const auto id = c.post("/sessions", {{"video_id", "a"}}).body.at("session_id").get<std::string>();
  {
    StreamClient ws("127.0.0.1", srv.port(), "/sessions/" + id + "/events");
    EXPECT_EQ(ws.receive().at("last_seq"), 0);
    EXPECT_EQ(ws.call(wire(1, at(0, ev::Play{}))).at("type"), "ack");
    const auto rej = ws.call(wire(1, at(1, ev::Pause{})));
    EXPECT_EQ(rej.at("type"), "reject");
    EXPECT_EQ(rej.at("reason"), "duplicate_seq");
  }
  StreamClient ws("127.0.0.1", srv.port(), "/sessions/" + id + "/events");
  const auto hello = ws.receive();
  EXPECT_EQ(hello.at("last_seq"), 1);
  EXPECT_EQ(hello.at("state").at("clock").at("state"), "playing");
  EXPECT_THROW(StreamClient("127.0.0.1", srv.port(), "/sessions/s999/events"), std::exception);
  srv.stop();
}

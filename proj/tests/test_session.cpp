#include <gtest/gtest.h>

#include <sstream>

#include "otf/otf.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace otf;

namespace {

VideoMeta meta10() { return VideoMeta::make("v", 25.0, 250, 320, 240); }

SessionConfig otf_cfg(double speed = 0.2) { return {meta10(), SessionMode::otf, speed}; }
SessionConfig bbox_cfg(double speed = 1.0) { return {meta10(), SessionMode::bbox, speed}; }

SessionEvent at(double w, EventPayload p, std::optional<double> m = std::nullopt) { return {w, p, m}; }

std::string reason_of(SessionEngine& e, const SessionEvent& ev) {
  try {
    e.apply(ev);
  } catch (const Error& err) {
    return err.reason();
  }
  return "";
}

}  // namespace

TEST(Clock, PauseFreezesMedia) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(5, ev::Pause{}));
  EXPECT_EQ(e.clock().state, PlaybackState::paused);
  EXPECT_DOUBLE_EQ(e.clock().media_t, 1.0);
  e.apply(at(9, ev::BeginAnnotation{}));
  EXPECT_DOUBLE_EQ(*e.open_segment_start(), 1.0);
}

TEST(Clock, CursorStampedWithClock) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(0, ev::BeginAnnotation{}));
  e.apply(at(5.0, ev::Cursor{10, 10}));
  ASSERT_EQ(e.samples().size(), 1u);
  EXPECT_DOUBLE_EQ(e.samples()[0].media_t, 1.0);
  EXPECT_DOUBLE_EQ(e.samples()[0].wall_t, 5.0);
}

TEST(Clock, SaturatesAtDuration) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(100, ev::Pause{}));
  EXPECT_DOUBLE_EQ(e.clock().media_t, 10.0);
}

TEST(Clock, LawMatchesReferenceAccumulator) {
  Rng r(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const double speed = r.uniform(0.05, 2.0);
    SessionEngine e(otf_cfg(speed));
    std::vector<std::pair<double, oracle::ClockOp>> ops;
    double w = r.uniform(0, 3);
    bool playing = false;
    const int n = 1 + int(r.below(30));
    for (int i = 0; i < n; ++i) {
      const auto op = playing ? oracle::ClockOp::pause : oracle::ClockOp::play;
      if (op == oracle::ClockOp::play) e.apply(at(w, ev::Play{}));
      else e.apply(at(w, ev::Pause{}));
      ops.push_back({w, op});
      playing = !playing;
      const double ref = oracle::reference_media_t(ops, speed, 10.0, w);
      ASSERT_NEAR(e.clock().media_t, ref, 1e-9) << "trial " << trial;
      w += r.uniform(0.0, 4.0);
    }
  }
}

TEST(Rejections, OutOfOrderWallTime) {
  SessionEngine e(otf_cfg());
  e.apply(at(5, ev::Play{}));
  try {
    e.apply(at(4, ev::Pause{}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::out_of_order);
  }
  EXPECT_EQ(e.history().size(), 1u);
}

TEST(Rejections, CursorWithoutAnnotationWhilePaused) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(1, ev::Pause{}));
  const auto before = e;
  EXPECT_EQ(reason_of(e, at(2, ev::Cursor{1, 1})), "no_active_annotation");
  EXPECT_EQ(e, before);
}

TEST(Rejections, Catalogue) {
  SessionEngine e(otf_cfg());
  EXPECT_EQ(reason_of(e, at(0, ev::Pause{})), "not_playing");
  e.apply(at(0, ev::Play{}));
  EXPECT_EQ(reason_of(e, at(0, ev::Play{})), "already_playing");
  EXPECT_EQ(reason_of(e, at(1, ev::Seek{5})), "seek_while_playing");
  EXPECT_EQ(reason_of(e, at(1, ev::SetKeyframe{{0, 0, 1, 1}})), "wrong_mode");
  EXPECT_EQ(reason_of(e, at(1, ev::Cursor{320, 5})), "point_out_of_frame");
  EXPECT_EQ(reason_of(e, at(1, ev::StopAnnotation{})), "no_active_annotation");
  e.apply(at(1, ev::BeginAnnotation{}));
  EXPECT_EQ(reason_of(e, at(1, ev::BeginAnnotation{})), "annotation_already_active");
  e.apply(at(2, ev::Cursor{5, 5}));
  EXPECT_EQ(reason_of(e, at(3, ev::Cursor{5, 5}, 0.1)), "non_monotonic_media_t");
  e.apply(at(4, ev::Pause{}));
  EXPECT_EQ(reason_of(e, at(4, ev::Seek{9})), "seek_while_annotating");
  e.apply(at(4, ev::StopAnnotation{}));
  EXPECT_EQ(reason_of(e, at(4, ev::Seek{0.1})), "backward_seek");
  EXPECT_EQ(reason_of(e, at(4, ev::Seek{11})), "seek_out_of_range");
  EXPECT_EQ(reason_of(e, at(4, ev::BeginAnnotation{}, 0.5)), "segment_overlap");
  EXPECT_EQ(reason_of(e, at(4, ev::Cursor{1, 1}, 20.0)), "media_t_out_of_range");
  e.apply(at(5, ev::EndSession{}));
  EXPECT_EQ(reason_of(e, at(6, ev::Play{})), "session_ended");
}

TEST(Engine, StopClosesSegmentAtStamp) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(0, ev::BeginAnnotation{}));
  e.apply(at(1, ev::Cursor{3, 3}));
  e.apply(at(16, ev::StopAnnotation{}, 3.2));
  ASSERT_EQ(e.segments().size(), 1u);
  EXPECT_DOUBLE_EQ(e.segments()[0].end_t, 3.2);
}

TEST(Engine, ImplicitBeginIsLogged) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(1, ev::Cursor{3, 3}));
  ASSERT_TRUE(e.annotating());
  EXPECT_DOUBLE_EQ(*e.open_segment_start(), 0.2);
  ASSERT_EQ(e.history().size(), 3u);
  EXPECT_EQ(event_kind(e.history()[1].payload), "begin_annotation");
  // Replaying the recorded history gives the same state.
  EXPECT_EQ(replay(e.config(), e.history()), e);
}

TEST(Engine, EqualStampReplacesSample) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(0, ev::BeginAnnotation{}));
  e.apply(at(1, ev::Pause{}));
  e.apply(at(2, ev::Cursor{3, 3}));
  e.apply(at(3, ev::Cursor{4, 4}));
  ASSERT_EQ(e.samples().size(), 1u);
  EXPECT_EQ(e.samples()[0].x, 4.0);
}

TEST(Engine, ZeroLengthAnnotationDropped) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::BeginAnnotation{}));
  e.apply(at(1, ev::Cursor{1, 1}, 0.0));
  e.apply(at(2, ev::StopAnnotation{}));
  EXPECT_TRUE(e.segments().empty());
  EXPECT_TRUE(e.samples().empty());
}

TEST(Finalize, EmptyLogHasNoEnd) {
  SessionLog log{otf_cfg(), {}, 0, 0};
  try {
    finalize_session(log);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.reason(), "no_end_session");
  }
}

TEST(Finalize, UnclosedSegmentListed) {
  SessionEngine e(otf_cfg());
  e.apply(at(0, ev::Play{}));
  e.apply(at(5, ev::BeginAnnotation{}));
  e.apply(at(6, ev::EndSession{}));
  try {
    finalize_engine(e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.reason(), "unclosed_segment");
    EXPECT_NE(std::string(err.what()).find("1"), std::string::npos);
  }
}

TEST(Finalize, SingleEpisode) {
  std::vector<SessionEvent> evs{at(0, ev::Play{}), at(0.5, ev::BeginAnnotation{})};
  const int n = 17;
  for (int i = 1; i <= n; ++i) evs.push_back(at(0.5 + 0.1 * i, ev::Cursor{double(i), 2}));
  evs.push_back(at(3, ev::StopAnnotation{}));
  evs.push_back(at(4, ev::EndSession{}));
  const auto fin = finalize_session({otf_cfg(), evs, 0, 0});
  const auto& t = std::get<OtfTrack>(fin.track);
  EXPECT_EQ(t.segments.size(), 1u);
  EXPECT_EQ(t.samples.size(), std::size_t(n));
  EXPECT_DOUBLE_EQ(fin.timing.wall_s, 4.0);
  const auto m = meta10();
  EXPECT_TRUE(validate_track(t, &m).empty());
}

// Walks the events by hand: begin/stop pairs at clock times.
TEST(Finalize, TwoEpisodesAgainstReplayOracle) {
  std::vector<SessionEvent> evs{at(0, ev::Play{}),        at(1, ev::BeginAnnotation{}), at(2, ev::Cursor{1, 1}),
                                at(3, ev::StopAnnotation{}), at(5, ev::BeginAnnotation{}), at(6, ev::Cursor{2, 2}),
                                at(7, ev::Cursor{3, 3}),     at(8, ev::StopAnnotation{}),  at(9, ev::EndSession{})};
  std::vector<VisibilitySegment> expect;
  double open = -1;
  for (const auto& e : evs) {
    if (std::holds_alternative<ev::BeginAnnotation>(e.payload)) open = 0.2 * e.wall_t;
    if (std::holds_alternative<ev::StopAnnotation>(e.payload)) expect.push_back({open, 0.2 * e.wall_t});
  }
  const auto t = std::get<OtfTrack>(finalize_session({otf_cfg(), evs, 0, 0}).track);
  ASSERT_EQ(t.segments.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_NEAR(t.segments[i].start_t, expect[i].start_t, 1e-12);
    EXPECT_NEAR(t.segments[i].end_t, expect[i].end_t, 1e-12);
  }
  EXPECT_EQ(t.samples.size(), 3u);
}

TEST(Finalize, IdleGapsExcludedFromActiveTime) {
  auto cfg = otf_cfg();
  cfg.idle_gap_s = 30;
  std::vector<SessionEvent> evs{at(0, ev::Play{}), at(1, ev::Cursor{1, 1}), at(2, ev::Pause{}),
                                at(102, ev::StopAnnotation{}), at(103, ev::EndSession{})};
  const auto fin = finalize_session({cfg, evs, 0, 0});
  EXPECT_DOUBLE_EQ(fin.timing.wall_s, 103);
  EXPECT_DOUBLE_EQ(fin.timing.active_s, 3);
  EXPECT_GE(fin.timing.wall_s, fin.timing.active_s);
}

TEST(Replay, DeterministicAndValid) {
  Rng r(99);
  for (int i = 0; i < 300; ++i) {
    const auto cfg = otf_cfg(r.uniform(0.1, 1.0));
    const auto evs = gen::otf_session(r, cfg.meta, cfg.speed);
    const auto a = replay(cfg, evs), b = replay(cfg, evs);
    ASSERT_EQ(a, b);
    ASSERT_EQ(state_snapshot(a).dump(), state_snapshot(b).dump());
    const auto fin = finalize_engine(a);
    EXPECT_TRUE(validate_track(std::get<OtfTrack>(fin.track), &cfg.meta).empty());
    EXPECT_GE(a.log().total_wall_s, a.log().active_annotation_s);
  }
}

TEST(Replay, LogFileRoundTrip) {
  Rng r(4);
  const auto cfg = otf_cfg();
  const auto engine = replay(cfg, gen::otf_session(r, cfg.meta, cfg.speed));
  std::stringstream ss;
  write_session_log(ss, engine.log());
  const auto back = read_session_log(ss);
  EXPECT_EQ(back.config, cfg);
  EXPECT_EQ(back.events, engine.history());
  EXPECT_EQ(replay(back.config, back.events), engine);
}

TEST(Replay, LogErrorsCarryLine) {
  std::stringstream ss;
  ss << json{{"session", otf_cfg()}}.dump() << "\n" << R"({"wall_t": 0, "kind": "play"})" << "\n{oops\n";
  try {
    read_session_log(ss, "x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("x.jsonl line 3"), std::string::npos) << e.what();
  }
}

TEST(BBoxEngine, KeyframesAndBackwardSeek) {
  SessionEngine e(bbox_cfg());
  e.apply(at(0, ev::Seek{4}));
  e.apply(at(1, ev::SetKeyframe{{10, 10, 20, 20}}));
  EXPECT_TRUE(e.annotating());
  e.apply(at(2, ev::Seek{2}));
  EXPECT_EQ(reason_of(e, at(3, ev::SetKeyframe{{0, 0, 10, 10}})), "keyframe_outside_segment");
  e.apply(at(3, ev::Seek{6}));
  e.apply(at(3, ev::SetKeyframe{{0, 0, 10, 10}}));
  EXPECT_EQ(reason_of(e, at(3, ev::StopAnnotation{}, 5.0)), "segment_end_before_keyframe");
  e.apply(at(4, ev::StopAnnotation{}, 7.0));
  EXPECT_EQ(reason_of(e, at(4, ev::SetKeyframe{{0, 0, 0, 10}})), "invalid_box");
  e.apply(at(5, ev::Play{}));
  EXPECT_EQ(reason_of(e, at(5, ev::SetKeyframe{{0, 0, 1, 10}})), "keyframe_while_playing");
  EXPECT_EQ(reason_of(e, at(5, ev::Cursor{1, 1})), "wrong_mode");
  e.apply(at(6, ev::Pause{}));
  EXPECT_EQ(reason_of(e, at(6, ev::DeleteKeyframe{3.0})), "no_keyframe_at_t");
  e.apply(at(6, ev::EndSession{}));
  const auto t = std::get<BoxTrack>(finalize_engine(e).track);
  ASSERT_EQ(t.keyframes.size(), 2u);
  EXPECT_DOUBLE_EQ(t.keyframes[0].media_t, 4.0);
  EXPECT_DOUBLE_EQ(t.keyframes[1].media_t, 6.0);
  EXPECT_EQ(t.segments, (std::vector<VisibilitySegment>{{4.0, 7.0}}));
}

TEST(Trim, WindowZeroIsIdentity) {
  Rng r(1);
  const auto m = gen::video(r);
  const auto t = gen::otf_track(r, m);
  EXPECT_EQ(trim_edges(t, 0.0).samples, t.samples);
  EXPECT_EQ(trim_edges(t, 0.0).segments, t.segments);
}

TEST(Trim, ShrinksAndDrops) {
  OtfTrack t{"v", 0, 0, {{1.0, 0, 0, 0}, {1.4, 0, 0, 0}, {2.0, 0, 0, 0}, {2.6, 0, 0, 0}, {4.0, 0, 0, 0}},
             {{1.0, 3.0}, {4.0, 4.8}}};
  const auto out = trim_edges(t, 0.5);
  ASSERT_EQ(out.segments.size(), 1u);
  EXPECT_DOUBLE_EQ(out.segments[0].start_t, 1.5);
  EXPECT_DOUBLE_EQ(out.segments[0].end_t, 2.5);
  ASSERT_EQ(out.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(out.samples[0].media_t, 2.0);
  OtfTrack short_seg{"v", 0, 0, {{1.2, 0, 0, 0}}, {{1.0, 1.8}}};
  EXPECT_TRUE(trim_edges(short_seg, 0.5).segments.empty());
  EXPECT_THROW(trim_edges(t, -1.0), Error);
}

TEST(Trim, IdempotentProperty) {
  Rng r(77);
  for (int i = 0; i < 200; ++i) {
    const auto m = gen::video(r);
    const auto t = gen::otf_track(r, m);
    const double w = r.uniform(0.0, 1.0);
    const auto once = trim_edges(t, w);
    const auto twice = trim_edges(once, w);
    ASSERT_EQ(once, twice) << "track " << i;
    for (const auto& s : once.samples) {
      bool ok = false;
      for (const auto& seg : t.segments) ok = ok || (s.media_t >= seg.start_t + w && s.media_t <= seg.end_t - w);
      EXPECT_TRUE(ok);
    }
  }
}

TEST(Align, SampleAndHold) {
  const auto m = VideoMeta::make("v", 2.0, 4, 100, 100);
  OtfTrack t{"v", 0, 0, {{0.0, 10, 10, 0}, {1.0, 20, 20, 0}}, {{0.0, 1.0}}};
  const auto f = align_to_frames(t, m);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(*f[0].point, (Point{10, 10}));
  EXPECT_EQ(*f[1].point, (Point{10, 10}));
  EXPECT_EQ(*f[2].point, (Point{20, 20}));
  EXPECT_EQ(f[2].frame_idx, 2);
  EXPECT_EQ(f[0].source, AnnotationSource::human_point);
}

TEST(Align, FirstSampleBeforeAnyHoldAndGaps) {
  const auto m = VideoMeta::make("v", 2.0, 10, 100, 100);
  OtfTrack t{"v", 0, 0, {{0.7, 5, 5, 0}, {3.2, 7, 7, 0}}, {{0.5, 1.5}, {3.0, 3.5}}};
  const auto f = align_to_frames(t, m);
  std::vector<std::int64_t> idx;
  for (const auto& a : f) idx.push_back(a.frame_idx);
  EXPECT_EQ(idx, (std::vector<std::int64_t>{1, 2, 3, 6, 7}));
  EXPECT_EQ(*f[0].point, (Point{5, 5}));
  EXPECT_EQ(*f[3].point, (Point{7, 7}));
}

TEST(Align, EmptySegmentFails) {
  const auto m = VideoMeta::make("v", 2.0, 10, 100, 100);
  OtfTrack t{"v", 0, 0, {{0.7, 5, 5, 0}}, {{0.5, 1.5}, {3.0, 3.5}}};
  EXPECT_THROW(align_to_frames(t, m), Error);
}

TEST(Align, PointsComeFromSamplesProperty) {
  Rng r(8);
  for (int i = 0; i < 200; ++i) {
    const auto m = gen::video(r);
    const auto t = gen::otf_track(r, m);
    for (const auto& a : align_to_frames(t, m)) {
      const double tf = m.frame_time(a.frame_idx);
      bool in_seg = false;
      for (const auto& s : t.segments) in_seg = in_seg || s.contains(tf);
      EXPECT_TRUE(in_seg);
      bool from_sample = false;
      for (const auto& s : t.samples) from_sample = from_sample || (s.x == a.point->x && s.y == a.point->y);
      EXPECT_TRUE(from_sample);
    }
  }
}

TEST(Subsample, StrideRule) {
  std::vector<FrameAnnotation> f;
  for (int i = 0; i < 16; ++i) f.push_back({"v", i, 0, 0, Point{1, 1}, std::nullopt, AnnotationSource::human_point});
  auto keep = [](const std::vector<FrameAnnotation>& a) {
    std::vector<std::int64_t> out;
    for (const auto& x : a) out.push_back(x.frame_idx);
    return out;
  };
  EXPECT_EQ(keep(subsample_frames(f, 8)), (std::vector<std::int64_t>{0, 8}));
  EXPECT_EQ(subsample_frames(f, 1).size(), 16u);
  std::vector<FrameAnnotation> g{f[3], f[8], f[15]};
  g[2].frame_idx = 16;
  EXPECT_EQ(keep(subsample_frames(g, 8)), (std::vector<std::int64_t>{8, 16}));
  EXPECT_THROW(subsample_frames(f, 0), Error);
}

TEST(Interpolate, MidpointKeyframeAndHold) {
  BoxTrack t{"v", 0, 0, {{0, {0, 0, 10, 10}}, {10, {10, 10, 20, 20}}}, {{0, 12}}};
  EXPECT_EQ(*interpolate_box(t, 5), (Box{5, 5, 15, 15}));
  EXPECT_EQ(*interpolate_box(t, 10), (Box{10, 10, 20, 20}));
  EXPECT_EQ(*interpolate_box(t, 11), (Box{10, 10, 20, 20}));
  EXPECT_FALSE(interpolate_box(t, 12.5).has_value());
}

TEST(Interpolate, ContinuousAtKeyframes) {
  Rng r(12);
  for (int i = 0; i < 100; ++i) {
    const auto m = gen::video(r);
    const auto t = gen::box_track(r, m);
    for (const auto& k : t.keyframes) {
      const auto here = interpolate_box(t, k.media_t);
      ASSERT_TRUE(here);
      for (double eps : {1e-7, -1e-7}) {
        const auto near = interpolate_box(t, k.media_t + eps);
        if (near) {
          EXPECT_LT(max_abs_diff(*here, *near), 1e-3);
        }
      }
    }
  }
}

TEST(Keyframes, UpsertDelete) {
  BoxTrack t{"v", 0, 0, {{1, {0, 0, 10, 10}}}, {{0, 5}}};
  auto a = upsert_keyframe(t, 2, {1, 1, 2, 2});
  EXPECT_EQ(a.keyframes.size(), 2u);
  auto b = upsert_keyframe(a, 2, {3, 3, 4, 4});
  EXPECT_EQ(b.keyframes.size(), 2u);
  EXPECT_EQ(b.keyframes[1].box, (Box{3, 3, 4, 4}));
  auto c = upsert_keyframe(b, 0.5, {3, 3, 4, 4});
  EXPECT_DOUBLE_EQ(c.keyframes.front().media_t, 0.5);
  EXPECT_THROW(delete_keyframe(c, 7), Error);
  BoxTrack only{"v", 0, 0, {{1, {0, 0, 10, 10}}}, {{0, 5}}};
  const auto v = validate_track(delete_keyframe(only, 1));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, "segment_without_keyframe");
}

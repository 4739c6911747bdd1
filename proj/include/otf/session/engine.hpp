#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "otf/core/validate.hpp"
#include "otf/session/clock.hpp"
#include "otf/session/event.hpp"
#include "otf/session/keyframes.hpp"

namespace otf {

struct SessionTiming {
  double wall_s = 0.0;
  double active_s = 0.0;

  friend bool operator==(const SessionTiming&, const SessionTiming&) = default;
};

inline void to_json(json& j, const SessionTiming& t) { j = {{"wall_s", t.wall_s}, {"active_s", t.active_s}}; }

// A rejected event. The engine state is untouched when this is thrown.
inline Error rejected(std::string reason, const std::string& detail = {}) {
  return Error(ErrorKind::invalid_state, std::move(reason), detail);
}

// Live annotation state machine for one session. Events are applied strictly
// in order; plan() validates an event and computes its effect without
// mutating anything, commit() applies a planned transition.
class SessionEngine {
 public:
  enum class Action {
    none,
    append_sample,
    replace_sample,
    open_segment,
    close_segment,
    drop_segment,
    upsert_keyframe,
    delete_keyframe,
    end_session,
  };

  struct Transition {
    SessionEvent event;
    PlaybackClock clock;
    Action action = Action::none;
    bool implicit_begin = false;
    double record_t = 0.0;
    double idle_excluded_s = 0.0;
  };

  explicit SessionEngine(SessionConfig config) : config_(std::move(config)) {
    clock_.speed = config_.speed;
    clock_.duration_s = config_.meta.duration_s;
    if (!(config_.speed > 0.0)) throw Error(ErrorKind::invalid_argument, "non_positive_speed");
  }

  Transition plan(const SessionEvent& e) const {
    if (ended_) throw rejected("session_ended");
    if (!std::isfinite(e.wall_t)) throw rejected("bad_wall_t");
    if (!history_.empty() && e.wall_t < last_wall_t_)
      throw Error(ErrorKind::out_of_order, "out_of_order_wall_t",
                  std::to_string(e.wall_t) + " < " + std::to_string(last_wall_t_));

    Transition tr;
    tr.event = e;
    tr.clock = clock_;
    if (history_.empty()) tr.clock.last_wall_t = e.wall_t;
    if (!history_.empty() && clock_.state != PlaybackState::playing &&
        e.wall_t - last_wall_t_ > config_.idle_gap_s)
      tr.idle_excluded_s = e.wall_t - last_wall_t_;
    tr.clock.advance_to(e.wall_t);

    if (e.media_t) {
      if (!std::isfinite(*e.media_t) || *e.media_t < 0.0 || *e.media_t > config_.meta.duration_s)
        throw rejected("media_t_out_of_range", std::to_string(*e.media_t));
    }
    tr.record_t = e.media_t.value_or(tr.clock.media_t);

    std::visit([&](const auto& p) { plan_payload(p, tr); }, e.payload);

    // Client stamps are authoritative; the clock follows them (forward only
    // in OTF mode, where media time never rewinds).
    if (e.media_t && tr.action != Action::none) {
      if (config_.mode == SessionMode::otf) tr.clock.media_t = std::max(tr.clock.media_t, *e.media_t);
      else tr.clock.media_t = *e.media_t;
    }
    return tr;
  }

  void commit(const Transition& tr) {
    const double t = tr.record_t;
    if (history_.empty()) first_wall_t_ = tr.event.wall_t;
    last_wall_t_ = tr.event.wall_t;
    idle_excluded_s_ += tr.idle_excluded_s;
    clock_ = tr.clock;

    if (tr.implicit_begin) {
      history_.push_back({tr.event.wall_t, ev::BeginAnnotation{}, tr.event.media_t});
      open_start_ = t;
      open_sample_mark_ = samples_.size();
    }

    switch (tr.action) {
      case Action::none: break;
      case Action::append_sample: {
        const auto& c = std::get<ev::Cursor>(tr.event.payload);
        samples_.push_back({t, c.x, c.y, tr.event.wall_t});
        break;
      }
      case Action::replace_sample: {
        const auto& c = std::get<ev::Cursor>(tr.event.payload);
        samples_.back() = {t, c.x, c.y, tr.event.wall_t};
        break;
      }
      case Action::open_segment:
        open_start_ = t;
        open_sample_mark_ = samples_.size();
        break;
      case Action::close_segment: {
        VisibilitySegment seg{*open_start_, t};
        auto it = std::lower_bound(segments_.begin(), segments_.end(), seg.start_t,
                                   [](const VisibilitySegment& s, double v) { return s.start_t < v; });
        segments_.insert(it, seg);
        open_start_.reset();
        break;
      }
      case Action::drop_segment: {
        // Zero-length annotation: discard it together with anything recorded
        // at that single instant.
        samples_.resize(open_sample_mark_);
        const double s = *open_start_;
        std::erase_if(keyframes_, [&](const BoxKeyframe& k) { return k.media_t == s && !in_closed_segment(s); });
        open_start_.reset();
        break;
      }
      case Action::upsert_keyframe: {
        BoxTrack tmp;
        tmp.keyframes = std::move(keyframes_);
        keyframes_ = upsert_keyframe(std::move(tmp), t, std::get<ev::SetKeyframe>(tr.event.payload).box).keyframes;
        break;
      }
      case Action::delete_keyframe: {
        BoxTrack tmp;
        tmp.keyframes = std::move(keyframes_);
        keyframes_ = delete_keyframe(std::move(tmp), std::get<ev::DeleteKeyframe>(tr.event.payload).t).keyframes;
        break;
      }
      case Action::end_session: ended_ = true; break;
    }
    history_.push_back(tr.event);
  }

  void apply(const SessionEvent& e) { commit(plan(e)); }

  const SessionConfig& config() const { return config_; }
  const PlaybackClock& clock() const { return clock_; }
  const std::vector<SessionEvent>& history() const { return history_; }
  const std::vector<PointSample>& samples() const { return samples_; }
  const std::vector<BoxKeyframe>& keyframes() const { return keyframes_; }
  const std::vector<VisibilitySegment>& segments() const { return segments_; }
  std::optional<double> open_segment_start() const { return open_start_; }
  bool annotating() const { return open_start_.has_value(); }
  bool ended() const { return ended_; }

  SessionTiming timing() const {
    if (history_.empty()) return {};
    const double wall = last_wall_t_ - first_wall_t_;
    return {wall, std::max(0.0, wall - idle_excluded_s_)};
  }

  SessionLog log() const {
    const auto t = timing();
    return {config_, history_, t.active_s, t.wall_s};
  }

  OtfTrack otf_track() const {
    return {config_.meta.video_id, config_.instance_id, config_.class_id, samples_, segments_, config_.speed, 0.0};
  }

  BoxTrack box_track() const {
    return {config_.meta.video_id, config_.instance_id, config_.class_id, keyframes_, segments_};
  }

  friend bool operator==(const SessionEngine&, const SessionEngine&) = default;

 private:
  bool in_closed_segment(double t) const {
    for (const auto& s : segments_)
      if (s.contains(t)) return true;
    return false;
  }

  bool overlaps_closed(double a, double b) const {
    for (const auto& s : segments_)
      if (!(b < s.start_t || a > s.end_t)) return true;
    return false;
  }

  void check_begin(double t) const {
    if (in_closed_segment(t)) throw rejected("segment_overlap", "begin at " + std::to_string(t));
    if (config_.mode == SessionMode::otf && !segments_.empty() && t <= segments_.back().end_t)
      throw rejected("segment_overlap", "begin at " + std::to_string(t));
  }

  void require_mode(SessionMode m) const {
    if (config_.mode != m) throw rejected("wrong_mode", std::string("event requires ") + std::string(to_string(m)));
  }

  void plan_payload(const ev::Play&, Transition& tr) const {
    if (clock_.state == PlaybackState::playing) throw rejected("already_playing");
    tr.clock.state = PlaybackState::playing;
  }

  void plan_payload(const ev::Pause&, Transition& tr) const {
    if (clock_.state != PlaybackState::playing) throw rejected("not_playing");
    tr.clock.state = PlaybackState::paused;
  }

  void plan_payload(const ev::Seek& s, Transition& tr) const {
    if (clock_.state == PlaybackState::playing) throw rejected("seek_while_playing");
    if (!std::isfinite(s.t) || s.t < 0.0 || s.t > config_.meta.duration_s)
      throw rejected("seek_out_of_range", std::to_string(s.t));
    if (config_.mode == SessionMode::otf) {
      if (annotating()) throw rejected("seek_while_annotating");
      if (s.t < tr.clock.media_t) throw rejected("backward_seek");
    }
    tr.clock.media_t = s.t;
  }

  void plan_payload(const ev::Cursor& c, Transition& tr) const {
    require_mode(SessionMode::otf);
    const auto& m = config_.meta;
    if (!(c.x >= 0.0 && c.x < m.width && c.y >= 0.0 && c.y < m.height))
      throw rejected("point_out_of_frame", std::to_string(c.x) + "," + std::to_string(c.y));
    const double t = tr.record_t;
    if (!annotating()) {
      if (clock_.state != PlaybackState::playing) throw rejected("no_active_annotation");
      check_begin(t);
      tr.implicit_begin = true;
      tr.action = Action::append_sample;
      return;
    }
    if (t < *open_start_) throw rejected("non_monotonic_media_t", "sample before segment start");
    if (samples_.size() > open_sample_mark_) {
      const double last = samples_.back().media_t;
      if (t < last) throw rejected("non_monotonic_media_t", std::to_string(t) + " < " + std::to_string(last));
      if (t == last) {
        tr.action = Action::replace_sample;
        return;
      }
    }
    tr.action = Action::append_sample;
  }

  void plan_payload(const ev::BeginAnnotation&, Transition& tr) const {
    if (annotating()) throw rejected("annotation_already_active");
    check_begin(tr.record_t);
    tr.action = Action::open_segment;
  }

  void plan_payload(const ev::StopAnnotation&, Transition& tr) const {
    if (!annotating()) throw rejected("no_active_annotation");
    const double t = tr.record_t;
    if (t < *open_start_) throw rejected("segment_end_before_start");
    if (config_.mode == SessionMode::otf && samples_.size() > open_sample_mark_ && t < samples_.back().media_t)
      throw rejected("segment_end_before_sample");
    if (config_.mode == SessionMode::bbox)
      for (const auto& k : keyframes_)
        if (k.media_t > t && k.media_t >= *open_start_ && !in_closed_segment(k.media_t))
          throw rejected("segment_end_before_keyframe");
    if (t == *open_start_) {
      tr.action = Action::drop_segment;
      return;
    }
    if (overlaps_closed(*open_start_, t)) throw rejected("segment_overlap");
    tr.action = Action::close_segment;
  }

  void plan_payload(const ev::SetKeyframe& k, Transition& tr) const {
    require_mode(SessionMode::bbox);
    if (clock_.state == PlaybackState::playing) throw rejected("keyframe_while_playing");
    if (!k.box.valid() || !k.box.within_frame(config_.meta.width, config_.meta.height))
      throw rejected("invalid_box");
    const double t = tr.record_t;
    tr.action = Action::upsert_keyframe;
    if (in_closed_segment(t)) return;
    if (annotating()) {
      if (t < *open_start_) throw rejected("keyframe_outside_segment");
      return;
    }
    check_begin(t);
    tr.implicit_begin = true;
  }

  void plan_payload(const ev::DeleteKeyframe& d, Transition& tr) const {
    require_mode(SessionMode::bbox);
    bool found = false;
    for (const auto& k : keyframes_) found = found || k.media_t == d.t;
    if (!found) throw Error(ErrorKind::not_found, "no_keyframe_at_t", std::to_string(d.t));
    tr.action = Action::delete_keyframe;
  }

  void plan_payload(const ev::EndSession&, Transition& tr) const {
    if (tr.clock.state == PlaybackState::playing) tr.clock.state = PlaybackState::paused;
    tr.action = Action::end_session;
  }

  SessionConfig config_;
  PlaybackClock clock_;
  std::vector<SessionEvent> history_;
  std::vector<PointSample> samples_;
  std::vector<BoxKeyframe> keyframes_;
  std::vector<VisibilitySegment> segments_;
  std::optional<double> open_start_;
  std::size_t open_sample_mark_ = 0;
  double first_wall_t_ = 0.0;
  double last_wall_t_ = 0.0;
  double idle_excluded_s_ = 0.0;
  bool ended_ = false;
};

// Value-semantics form of SessionEngine::apply.
inline SessionEngine apply_event(SessionEngine state, const SessionEvent& e) {
  state.apply(e);
  return state;
}

inline SessionEngine replay(const SessionConfig& config, const std::vector<SessionEvent>& events) {
  SessionEngine engine(config);
  for (const auto& e : events) engine.apply(e);
  return engine;
}

struct FinalizedSession {
  std::variant<OtfTrack, BoxTrack> track;
  SessionTiming timing;

  const OtfTrack& otf() const { return std::get<OtfTrack>(track); }
  const BoxTrack& bbox() const { return std::get<BoxTrack>(track); }
};

// Checks that an engine is complete and returns its track.
inline FinalizedSession finalize_engine(const SessionEngine& engine) {
  if (!engine.ended()) throw Error(ErrorKind::invalid_state, "no_end_session");
  if (auto open = engine.open_segment_start())
    throw Error(ErrorKind::invalid_state, "unclosed_segment", "segment opened at media_t=" + std::to_string(*open));
  FinalizedSession out;
  std::vector<Violation> violations;
  if (engine.config().mode == SessionMode::otf) {
    auto track = engine.otf_track();
    violations = validate_track(track, &engine.config().meta);
    out.track = std::move(track);
  } else {
    auto track = engine.box_track();
    violations = validate_track(track, &engine.config().meta);
    out.track = std::move(track);
  }
  if (!violations.empty()) throw Error(ErrorKind::invalid_state, "invalid_track", join_violations(violations));
  out.timing = engine.timing();
  return out;
}

// Replays a session log and produces its track plus timing.
inline FinalizedSession finalize_session(const SessionLog& log) {
  return finalize_engine(replay(log.config, log.events));
}

// Deterministic snapshot used for acks, resync and durability checks.
inline json state_snapshot(const SessionEngine& e) {
  json j = {{"video_id", e.config().meta.video_id},
            {"mode", to_string(e.config().mode)},
            {"clock",
             {{"state", to_string(e.clock().state)},
              {"media_t", e.clock().media_t},
              {"speed", e.clock().speed},
              {"last_wall_t", e.clock().last_wall_t}}},
            {"annotating", e.annotating()},
            {"open_segment_start", e.open_segment_start() ? json(*e.open_segment_start()) : json(nullptr)},
            {"segments", e.segments()},
            {"samples", e.samples()},
            {"keyframes", e.keyframes()},
            {"n_events", e.history().size()},
            {"ended", e.ended()},
            {"timing", e.timing()}};
  return j;
}

}  // namespace otf

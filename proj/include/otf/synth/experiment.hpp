#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "otf/analysis/budget.hpp"
#include "otf/analysis/split.hpp"
#include "otf/analysis/stats.hpp"
#include "otf/eval/exchange.hpp"
#include "otf/synth/annotator.hpp"

namespace otf {

enum class TeacherKind { oracle, heuristic, imported };

inline std::string_view to_string(TeacherKind k) {
  switch (k) {
    case TeacherKind::oracle: return "oracle";
    case TeacherKind::heuristic: return "heuristic";
    case TeacherKind::imported: return "imported";
  }
  return "oracle";
}

inline TeacherKind parse_teacher_kind(std::string_view s) {
  if (s == "oracle") return TeacherKind::oracle;
  if (s == "heuristic") return TeacherKind::heuristic;
  if (s == "imported") return TeacherKind::imported;
  throw Error(ErrorKind::parse, "unknown_teacher", std::string(s));
}

inline constexpr const char* kExperimentNote =
    "label-quality AP@50 of pseudo labels (S_OTF) and interpolated box labels (S_BBox) against scene ground "
    "truth; no student detector is trained";

struct ExperimentConfig {
  double budget_minutes = 0.0;  // 0: no cap
  std::vector<double> box_fractions = box_fraction_sweep();
  TeacherKind teacher = TeacherKind::oracle;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int n_videos = 40;
  int frame_stride = kDefaultFrameStride;
  double teacher_jitter = 0.0;  // oracle box translation
  double heuristic_w = 60.0;
  double heuristic_h = 60.0;
  std::string imported_dir;  // pseudo_f<fraction>_s<seed>.json files
  RandomSceneOptions scene;
  SimAnnotatorSpec annotator;
};

inline void validate_experiment(const ExperimentConfig& c) {
  if (c.box_fractions.empty()) throw Error(ErrorKind::invalid_argument, "empty_sweep");
  for (double f : c.box_fractions) {
    const double bp = f * 10000.0;
    const auto r = std::llround(bp);
    if (std::abs(bp - double(r)) > 1e-6 || r < 2000 || r > 6000 || r % 500 != 0)
      throw Error(ErrorKind::invalid_argument, "fraction_off_grid", std::to_string(f));
  }
  if (c.seeds.empty()) throw Error(ErrorKind::invalid_argument, "no_seeds");
  if (c.n_videos < 10) throw Error(ErrorKind::invalid_argument, "too_few_videos");
  if (c.frame_stride < 1) throw Error(ErrorKind::invalid_argument, "bad_stride");
  if (c.budget_minutes < 0.0) throw Error(ErrorKind::invalid_argument, "negative_budget");
  if (c.teacher == TeacherKind::imported && c.imported_dir.empty())
    throw Error(ErrorKind::invalid_argument, "missing_imported_dir");
  validate_annotator(c.annotator);
}

struct CellResult {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  int n_box = 0;
  int n_weak = 0;
  double t_bbox_per_video_min = 0.0;
  double t_otf_per_video_min = 0.0;
  double b_otf_min = 0.0;
  double b_bbox_min = 0.0;
  double residual_min = 0.0;
  std::int64_t n_box_bbox = 0;
  bool capped = false;
  bool over_budget = false;
  double ap50_otf = 0.0;
  std::optional<double> ap50_bbox;
  std::size_t n_labels_otf = 0;
  std::size_t n_labels_bbox = 0;
};

struct Aggregate {
  double fraction = 0.0;
  std::size_t n_cells = 0;
  double ap50_otf_mean = 0.0, ap50_otf_sd = 0.0;
  double ap50_bbox_mean = 0.0, ap50_bbox_sd = 0.0;
  double b_otf_min_mean = 0.0, b_otf_min_sd = 0.0;
};

struct ExperimentReport {
  std::string note = kExperimentNote;
  ExperimentConfig config;
  std::vector<CellResult> cells;
  std::vector<Aggregate> aggregates;
};

// Everything one seed's videos produce, independent of the box fraction.
struct SeedData {
  std::vector<Scene> scenes;
  std::vector<std::string> video_ids;
  std::vector<std::vector<SimulatedOtf>> otf;    // [video][object]
  std::vector<std::vector<SimulatedBBox>> bbox;  // [video][object]
  std::vector<double> t_otf_s;                   // per video, summed over objects
  std::vector<double> t_bbox_s;
};

inline std::string experiment_video_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "v%03d", i);
  return buf;
}

inline SeedData simulate_seed(const ExperimentConfig& c, std::uint64_t seed) {
  SeedData d;
  for (int i = 0; i < c.n_videos; ++i) {
    const auto id = experiment_video_id(i);
    d.video_ids.push_back(id);
    d.scenes.push_back(generate_scene(random_scene_spec(seed * 100003ull + std::uint64_t(i), c.scene, id)));
    const auto& sc = d.scenes.back();
    SimAnnotatorSpec a = c.annotator;
    a.seed = c.annotator.seed * 7919ull + seed * 100003ull + std::uint64_t(i);
    std::vector<SimulatedOtf> o;
    std::vector<SimulatedBBox> b;
    double to = 0.0, tb = 0.0;
    for (std::size_t k = 0; k < sc.object_count(); ++k) {
      o.push_back(simulate_otf(sc, k, a));
      b.push_back(simulate_bbox(sc, k, a));
      to += o.back().timing.wall_s;
      tb += b.back().timing.wall_s;
    }
    d.otf.push_back(std::move(o));
    d.bbox.push_back(std::move(b));
    d.t_otf_s.push_back(to);
    d.t_bbox_s.push_back(tb);
  }
  return d;
}

namespace detail {

inline std::string imported_file_name(double fraction, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "pseudo_f%.2f_s%llu.json", fraction, static_cast<unsigned long long>(seed));
  return buf;
}

// Ground truth restricted to the labelled (frame, instance) pairs.
inline GroundTruth gt_for(const std::vector<FrameAnnotation>& frames, const std::map<std::string, const Scene*>& scenes) {
  GroundTruth gt;
  for (const auto& f : frames) {
    const FrameKey key{f.video_id, f.frame_idx};
    const auto& all = scenes.at(f.video_id)->ground_truth();
    auto it = all.find(key);
    if (it == all.end()) continue;
    for (const auto& g : it->second)
      if (g.instance_id == f.instance_id) gt[key].push_back(g);
  }
  return gt;
}

}  // namespace detail

inline CellResult run_cell(const ExperimentConfig& c, std::uint64_t seed, double fraction, const SeedData& d) {
  CellResult r;
  r.fraction = fraction;
  r.seed = seed;
  const auto plan = split_plan(c.n_videos, seed, fraction);
  r.n_box = plan.counts.train_box;
  r.n_weak = plan.counts.train_weak;

  Dataset ds;
  std::map<std::string, const Scene*> scenes;
  std::vector<int> box_idx, weak_idx;
  for (int i = 0; i < c.n_videos; ++i) {
    ds.videos.push_back(d.scenes[i].meta());
    scenes[d.video_ids[i]] = &d.scenes[i];
    ds.split[d.video_ids[i]] = plan.roles[i];
    if (plan.roles[i] == SplitRole::train_box) {
      box_idx.push_back(i);
      for (const auto& s : d.bbox[i]) ds.box_tracks.push_back(s.track);
    } else if (plan.roles[i] == SplitRole::train_weak) {
      weak_idx.push_back(i);
      for (const auto& s : d.otf[i]) ds.otf_tracks.push_back(s.track);
    }
  }

  // Per-video times: BBox averaged over all training videos, OTF over the
  // weak ones.
  double sum_b = 0.0, sum_o = 0.0;
  for (int i : box_idx) sum_b += d.t_bbox_s[i];
  for (int i : weak_idx) sum_b += d.t_bbox_s[i], sum_o += d.t_otf_s[i];
  BudgetModel<double> m;
  m.t_bbox_per_video = sum_b / double(box_idx.size() + weak_idx.size()) / 60.0;
  m.t_otf_per_video = weak_idx.empty() ? 0.0 : sum_o / double(weak_idx.size()) / 60.0;
  m.n_box_otf = r.n_box;
  m.n_weak_otf = r.n_weak;
  r.t_bbox_per_video_min = m.t_bbox_per_video;
  r.t_otf_per_video_min = m.t_otf_per_video;
  const auto match = match_budget(m);
  r.b_otf_min = match.budget_otf;
  r.b_bbox_min = match.budget_bbox;
  r.residual_min = match.residual;
  r.n_box_bbox = match.n_box_bbox;
  if (c.budget_minutes > 0.0) r.over_budget = r.b_otf_min > c.budget_minutes;

  // S_OTF: teacher boxes on the weak frames.
  const auto exported = export_weak_frames(ds, c.frame_stride);
  std::vector<FrameAnnotation> points;
  for (const auto& f : exported)
    points.push_back({f.video_id, f.frame_idx, f.instance_id, f.class_id, f.point, std::nullopt,
                      AnnotationSource::human_point});
  std::vector<PseudoLabel> labels;
  switch (c.teacher) {
    case TeacherKind::oracle: {
      GroundTruth all;
      for (int i : weak_idx)
        for (const auto& [k, v] : d.scenes[i].ground_truth()) all[k] = v;
      labels = oracle_teacher(points, all, {c.teacher_jitter, seed * 31ull + std::uint64_t(fraction * 10000.0)});
      break;
    }
    case TeacherKind::heuristic:
      labels = heuristic_teacher(points, c.heuristic_w, c.heuristic_h, frame_sizes(ds.videos));
      break;
    case TeacherKind::imported: {
      const auto path = std::filesystem::path(c.imported_dir) / detail::imported_file_name(fraction, seed);
      labels = read_pseudo_labels(read_text_file(path), path.string());
      break;
    }
  }
  const auto merged = import_pseudo_labels(ds, labels, c.frame_stride);
  std::vector<FrameAnnotation> weak_frames(merged.frames.begin() + std::ptrdiff_t(merged.n_box_frames),
                                           merged.frames.end());
  std::vector<Detection> dets;
  for (const auto& f : weak_frames)
    if (f.box) dets.push_back({f.video_id, f.frame_idx, *f.box, 1.0, f.class_id});
  r.n_labels_otf = dets.size();
  r.ap50_otf = ap50(detail::gt_for(weak_frames, scenes), dets).ap50;

  // S_BBox at the matched budget: interpolated boxes of the first n_box_bbox
  // training videos (box-level ones first).
  std::vector<int> train = box_idx;
  train.insert(train.end(), weak_idx.begin(), weak_idx.end());
  if (r.n_box_bbox > std::int64_t(train.size())) {
    r.n_box_bbox = std::int64_t(train.size());
    r.capped = true;
  }
  std::vector<FrameAnnotation> bbox_frames;
  for (std::int64_t k = 0; k < r.n_box_bbox; ++k) {
    const int i = train[std::size_t(k)];
    for (const auto& s : d.bbox[i])
      for (auto& f : subsample_frames(box_track_frames(s.track, d.scenes[i].meta()), c.frame_stride))
        bbox_frames.push_back(std::move(f));
  }
  std::vector<Detection> bdets;
  for (const auto& f : bbox_frames) bdets.push_back({f.video_id, f.frame_idx, *f.box, 1.0, f.class_id});
  r.n_labels_bbox = bdets.size();
  if (!bbox_frames.empty()) r.ap50_bbox = ap50(detail::gt_for(bbox_frames, scenes), bdets).ap50;
  return r;
}

inline std::vector<Aggregate> aggregate_cells(const std::vector<CellResult>& cells, const std::vector<double>& fractions) {
  std::vector<Aggregate> out;
  for (double f : fractions) {
    Aggregate a;
    a.fraction = f;
    std::vector<double> otf, bbox, budget;
    for (const auto& c : cells) {
      if (c.fraction != f || c.error) continue;
      otf.push_back(c.ap50_otf);
      budget.push_back(c.b_otf_min);
      if (c.ap50_bbox) bbox.push_back(*c.ap50_bbox);
    }
    a.n_cells = otf.size();
    auto fill = [](const std::vector<double>& v, double& mu, double& sd) {
      mu = v.empty() ? 0.0 : mean(v);
      sd = v.size() < 2 ? 0.0 : sample_sd(v);
    };
    fill(otf, a.ap50_otf_mean, a.ap50_otf_sd);
    fill(bbox, a.ap50_bbox_mean, a.ap50_bbox_sd);
    fill(budget, a.b_otf_min_mean, a.b_otf_min_sd);
    out.push_back(a);
  }
  return out;
}

// Every (fraction, seed) cell. A failing cell records its reason and the
// others still run.
inline ExperimentReport run_experiment(const ExperimentConfig& c) {
  validate_experiment(c);
  ExperimentReport rep;
  rep.config = c;
  for (auto seed : c.seeds) {
    std::optional<SeedData> data;
    std::string seed_error;
    try {
      data = simulate_seed(c, seed);
    } catch (const std::exception& e) {
      seed_error = e.what();
    }
    for (double f : c.box_fractions) {
      CellResult cell;
      cell.fraction = f;
      cell.seed = seed;
      if (!data) {
        cell.error = "simulation: " + seed_error;
      } else {
        try {
          cell = run_cell(c, seed, f, *data);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      }
      rep.cells.push_back(std::move(cell));
    }
  }
  rep.aggregates = aggregate_cells(rep.cells, c.box_fractions);
  return rep;
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = {{"budget_minutes", c.budget_minutes},
       {"box_fractions", c.box_fractions},
       {"teacher", to_string(c.teacher)},
       {"seeds", c.seeds},
       {"n_videos", c.n_videos},
       {"frame_stride", c.frame_stride},
       {"teacher_jitter", c.teacher_jitter},
       {"heuristic_prior", {c.heuristic_w, c.heuristic_h}},
       {"imported_dir", c.imported_dir}};
}

// Experiment fields only; "scene" and "annotator" live beside it in the
// config document.
inline void from_json(const json& j, ExperimentConfig& c) {
  const ExperimentConfig def;
  c.budget_minutes = j.value("budget_minutes", def.budget_minutes);
  c.box_fractions = j.value("box_fractions", def.box_fractions);
  if (j.contains("teacher")) c.teacher = parse_teacher_kind(j["teacher"].get<std::string>());
  c.seeds = j.value("seeds", def.seeds);
  c.n_videos = j.value("n_videos", def.n_videos);
  c.frame_stride = j.value("frame_stride", def.frame_stride);
  c.teacher_jitter = j.value("teacher_jitter", def.teacher_jitter);
  if (j.contains("heuristic_prior")) {
    c.heuristic_w = j["heuristic_prior"].at(0).get<double>();
    c.heuristic_h = j["heuristic_prior"].at(1).get<double>();
  }
  c.imported_dir = j.value("imported_dir", def.imported_dir);
}

// {"scene": RandomSceneOptions, "annotator": SimAnnotatorSpec, "experiment": ...}
inline ExperimentConfig experiment_config_from_json(const json& doc) {
  ExperimentConfig c;
  if (doc.contains("experiment")) doc["experiment"].get_to(c);
  if (doc.contains("scene")) doc["scene"].get_to(c.scene);
  if (doc.contains("annotator")) doc["annotator"].get_to(c.annotator);
  return c;
}

inline json experiment_config_json(const ExperimentConfig& c) {
  return {{"scene", c.scene}, {"annotator", c.annotator}, {"experiment", c}};
}

inline void to_json(json& j, const CellResult& r) {
  j = {{"fraction", r.fraction},
       {"seed", r.seed},
       {"error", r.error ? json(*r.error) : json(nullptr)},
       {"n_box", r.n_box},
       {"n_weak", r.n_weak},
       {"t_bbox_per_video_min", r.t_bbox_per_video_min},
       {"t_otf_per_video_min", r.t_otf_per_video_min},
       {"b_otf_min", r.b_otf_min},
       {"b_bbox_min", r.b_bbox_min},
       {"residual_min", r.residual_min},
       {"n_box_bbox", r.n_box_bbox},
       {"capped", r.capped},
       {"over_budget", r.over_budget},
       {"ap50_otf", r.ap50_otf},
       {"ap50_bbox", r.ap50_bbox ? json(*r.ap50_bbox) : json(nullptr)},
       {"n_labels_otf", r.n_labels_otf},
       {"n_labels_bbox", r.n_labels_bbox}};
}

inline void to_json(json& j, const Aggregate& a) {
  j = {{"fraction", a.fraction},           {"n_cells", a.n_cells},
       {"ap50_otf_mean", a.ap50_otf_mean}, {"ap50_otf_sd", a.ap50_otf_sd},
       {"ap50_bbox_mean", a.ap50_bbox_mean}, {"ap50_bbox_sd", a.ap50_bbox_sd},
       {"b_otf_min_mean", a.b_otf_min_mean}, {"b_otf_min_sd", a.b_otf_min_sd}};
}

inline void to_json(json& j, const ExperimentReport& r) {
  j = {{"note", r.note}, {"config", experiment_config_json(r.config)}, {"cells", r.cells}, {"aggregates", r.aggregates}};
}

inline void write_experiment_csv(std::ostream& out, const ExperimentReport& r) {
  out << "fraction,seed,b_otf_min,b_bbox_min,n_box_bbox,ap50_otf,ap50_bbox\n";
  char buf[256];
  for (const auto& c : r.cells) {
    if (c.error) {
      std::snprintf(buf, sizeof buf, "%.2f,%llu,,,,,\n", c.fraction, static_cast<unsigned long long>(c.seed));
    } else {
      std::snprintf(buf, sizeof buf, "%.2f,%llu,%.6f,%.6f,%lld,%.6f,", c.fraction,
                    static_cast<unsigned long long>(c.seed), c.b_otf_min, c.b_bbox_min,
                    static_cast<long long>(c.n_box_bbox), c.ap50_otf);
      out << buf;
      if (c.ap50_bbox) {
        std::snprintf(buf, sizeof buf, "%.6f", *c.ap50_bbox);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, "\n");
    }
    out << buf;
  }
}

}  // namespace otf

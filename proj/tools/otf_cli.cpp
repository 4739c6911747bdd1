// otf: command-line front end for session replay, analyses, the teacher
// bridge, simulation and the annotation server.

#include <CLI11.hpp>

#include <pthread.h>
#include <signal.h>
#include <fstream>
#include <set>
#include <iostream>

#include "otf/otf.hpp"
#include "otf/server/http_server.hpp"

using namespace otf;
namespace fs = std::filesystem;

namespace {

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_text_file(out, j.dump(2) + "\n");
  }
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::io, "cannot_write", p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::io, "cannot_read", p.string());
  return in;
}

Dataset load(const std::string& index, const std::string& annotations) {
  const fs::path dir = annotations.empty() ? fs::path(index).parent_path() / "annotations" : fs::path(annotations);
  return load_dataset(index, dir);
}

// Coarse shading of a density grid, top row first.
void ascii_density(std::ostream& out, const DensityGrid& g, int cols = 32) {
  static const char* shades = " .:-=+*#%@";
  double hi = 0.0;
  for (double c : g.cells) hi = std::max(hi, c);
  const int step = std::max(1, g.resolution / cols);
  for (int r = 0; r < g.resolution; r += step) {
    for (int c = 0; c < g.resolution; c += step) {
      const double v = hi > 0.0 ? g.at(c, r) / hi : 0.0;
      out << shades[std::min(9, int(v * 9.999))];
    }
    out << '\n';
  }
}

std::string object_file(const Scene& sc, std::size_t k, const char* mode) {
  return sc.meta().video_id + "_obj" + std::to_string(k) + "." + mode + ".jsonl";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-the-fly video annotation toolkit"};
  app.require_subcommand(1);

  // annotate replay
  auto* annotate = app.add_subcommand("annotate", "Session logs");
  annotate->require_subcommand(1);
  std::string log_file, replay_out;
  auto* replay = annotate->add_subcommand("replay", "Replay a session log into its track and timing");
  replay->add_option("log", log_file, "Session log (JSON lines)")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "Write the result here instead of stdout");

  // analyze timing|density
  auto* analyze = app.add_subcommand("analyze", "Timing and density analyses");
  analyze->require_subcommand(1);
  std::string timing_csv, pairs_csv, timing_out;
  auto* timing = analyze->add_subcommand("timing", "Paired speedup statistics");
  timing->add_option("records", timing_csv, "CSV with video_id,t_otf_s,t_bbox_s")->required()->check(CLI::ExistingFile);
  timing->add_option("--pairs", pairs_csv, "Write the validated pairs as CSV");
  timing->add_option("--out", timing_out, "Write the report JSON here instead of stdout");

  std::vector<std::string> density_files;
  std::string density_gt, density_csv, density_json_out;
  int resolution = 64;
  auto* density = analyze->add_subcommand("density", "Normalized point density inside GT boxes");
  density->add_option("annotations", density_files, "Per-video annotation files")->required()->check(CLI::ExistingFile);
  density->add_option("--gt", density_gt, "Ground truth file; default: the files' box tracks");
  density->add_option("--resolution", resolution, "Grid cells per axis")->check(CLI::Range(2, 1024));
  density->add_option("--csv", density_csv, "Write the grid as a CSV matrix");
  density->add_option("--json", density_json_out, "Write the full grid report as JSON");

  // budget plan
  auto* budget = app.add_subcommand("budget", "Annotation budgets");
  budget->require_subcommand(1);
  std::string t_bbox, t_otf;
  std::int64_t n_box = 0, n_weak = 0, n_box_bbox = 0;
  bool match = false;
  auto* plan = budget->add_subcommand("plan", "Budget of a mixed OTF plan and its BBox equivalent");
  plan->add_option("--t-bbox", t_bbox, "BBox minutes per video (decimal)")->required();
  plan->add_option("--t-otf", t_otf, "OTF minutes per video (decimal)")->required();
  plan->add_option("--n-box", n_box, "Box-level videos in the OTF plan")->required();
  plan->add_option("--n-weak", n_weak, "Weakly annotated videos in the OTF plan")->required();
  plan->add_option("--n-box-bbox", n_box_bbox, "Box-level videos in the BBox plan");
  plan->add_flag("--match", match, "Pick the BBox video count whose budget is closest");

  // eval ap50
  auto* eval = app.add_subcommand("eval", "Detection scoring");
  eval->require_subcommand(1);
  std::string gt_file, det_file;
  bool points101 = false;
  auto* ap = eval->add_subcommand("ap50", "AP at IoU 0.5");
  ap->add_option("--gt", gt_file, "Ground truth JSON")->required()->check(CLI::ExistingFile);
  ap->add_option("--det", det_file, "Detections or pseudo-label JSON")->required()->check(CLI::ExistingFile);
  ap->add_flag("--101", points101, "101-point interpolation instead of all-point");
  bool det_frames_only = false;
  ap->add_flag("--det-frames-only", det_frames_only, "Score only the frames that carry detections");

  // bridge export|teach|import
  auto* bridge = app.add_subcommand("bridge", "Point-to-box teacher exchange");
  bridge->require_subcommand(1);
  std::string dataset_index, annotations_dir, bridge_out, labels_file, exchange_file, teacher = "heuristic";
  int stride = kDefaultFrameStride;
  double prior_w = 60.0, prior_h = 60.0, box_jitter = 0.0;
  auto add_dataset = [&](CLI::App* c) {
    c->add_option("--dataset", dataset_index, "Dataset index JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--annotations", annotations_dir, "Per-video annotation directory");
    c->add_option("--stride", stride, "Frame subsampling stride")->check(CLI::PositiveNumber);
  };
  auto* bexport = bridge->add_subcommand("export", "Write weak frames for an external teacher");
  add_dataset(bexport);
  bexport->add_option("--out", bridge_out, "Exchange file")->required();
  auto* bteach = bridge->add_subcommand("teach", "Run a built-in teacher on an exchange file");
  bteach->add_option("--exchange", exchange_file, "Exchange file")->required()->check(CLI::ExistingFile);
  bteach->add_option("--teacher", teacher, "heuristic or oracle")->check(CLI::IsMember({"heuristic", "oracle"}));
  bteach->add_option("--dataset", dataset_index, "Dataset index (frame sizes for the heuristic)");
  bteach->add_option("--gt", gt_file, "Ground truth (oracle)");
  bteach->add_option("--prior-w", prior_w, "Heuristic box width");
  bteach->add_option("--prior-h", prior_h, "Heuristic box height");
  bteach->add_option("--box-jitter", box_jitter, "Oracle box translation fraction");
  bteach->add_option("--out", bridge_out, "Pseudo-label file")->required();
  auto* bimport = bridge->add_subcommand("import", "Merge pseudo labels with the box-level frames");
  add_dataset(bimport);
  bimport->add_option("--labels", labels_file, "Pseudo-label file")->required()->check(CLI::ExistingFile);
  bimport->add_option("--out", bridge_out, "Merged training set JSON")->required();

  // export coco
  auto* exp = app.add_subcommand("export", "Interchange formats");
  exp->require_subcommand(1);
  std::string merged_file, coco_out;
  auto* coco = exp->add_subcommand("coco", "COCO-style detection file from a merged training set");
  coco->add_option("--merged", merged_file, "Merged training set JSON")->required()->check(CLI::ExistingFile);
  coco->add_option("--dataset", dataset_index, "Dataset index JSON")->required()->check(CLI::ExistingFile);
  coco->add_option("--out", coco_out, "Output file")->required();

  // simulate scene|otf|bbox|experiment
  auto* simulate = app.add_subcommand("simulate", "Synthetic scenes, annotators and experiments");
  simulate->require_subcommand(1);
  std::string config_file, sim_out;
  auto add_sim = [&](const char* name, const char* help) {
    auto* c = simulate->add_subcommand(name, help);
    c->add_option("--config", config_file, "JSON config")->required()->check(CLI::ExistingFile);
    c->add_option("--out", sim_out, "Output directory")->required();
    return c;
  };
  auto* sim_scene = add_sim("scene", "Scene spec and ground truth");
  auto* sim_otf = add_sim("otf", "Simulated OTF sessions for every object");
  auto* sim_bbox = add_sim("bbox", "Simulated BBox sessions for every object");
  auto* sim_exp = add_sim("experiment", "Budget-matched OTF vs BBox sweep");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the annotation server");
  std::string data_dir = "data", bind = "127.0.0.1:8080";
  double default_speed = kDefaultPlaybackSpeed;
  bool no_sync = false;
  serve->add_option("--data-dir", data_dir, "Data directory")->capture_default_str();
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--default-speed", default_speed, "Playback speed of new sessions")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve->add_flag("--no-sync", no_sync, "Skip fsync after each log append");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*replay) {
      auto in = open_in(log_file);
      const auto fin = finalize_session(read_session_log(in, log_file));
      json track;
      std::visit([&](const auto& t) { track = t; }, fin.track);
      emit({{"track", track}, {"timing", fin.timing}}, replay_out);
    } else if (*timing) {
      auto in = open_in(timing_csv);
      const auto records = read_timing_csv(in);
      emit(json(speedup_stats(records)), timing_out);
      if (!pairs_csv.empty()) {
        auto out = open_out(pairs_csv);
        write_timing_csv(out, records);
      }
    } else if (*density) {
      std::vector<VideoAnnotations> annos;
      for (const auto& f : density_files) annos.push_back(load_annotation_file(f));
      const GroundTruth gt =
          density_gt.empty() ? ground_truth_from_box_tracks(annos) : ground_truth_from_json(read_json_file(density_gt));
      const auto d = analyze_density(annos, gt, resolution);
      const auto [col, row] = d.grid.argmax();
      std::cout << "points " << d.pairs.size() << "  inside_rate " << d.inside_rate << "  argmax (u, v) = ("
                << d.grid.center(col) << ", " << d.grid.center(row) << ")\n";
      ascii_density(std::cout, d.grid);
      if (!density_csv.empty()) {
        auto out = open_out(density_csv);
        write_density_csv(out, d.grid);
      }
      if (!density_json_out.empty()) write_text_file(density_json_out, density_json(d.grid, d.inside_rate).dump() + "\n");
    } else if (*plan) {
      BudgetModel<Rational> m{parse_rational(t_bbox), parse_rational(t_otf), n_box, n_weak, n_box_bbox};
      validate_budget_model(m);
      emit(budget_json(m, match), "");
    } else if (*ap) {
      auto gt = ground_truth_from_json(read_json_file(gt_file));
      const auto doc = read_json_file(det_file);
      const auto dets = doc.contains("frames") ? to_detections(read_pseudo_labels(doc.dump(), det_file))
                                               : detections_from_json(doc);
      if (det_frames_only) {
        std::set<FrameKey> keep;
        for (const auto& d : dets) keep.insert({d.video_id, d.frame_idx});
        std::erase_if(gt, [&](const auto& kv) { return !keep.contains(kv.first); });
      }
      emit(json(ap50(gt, dets, points101 ? ApInterpolation::points_101 : ApInterpolation::all_point)), "");
    } else if (*bexport) {
      const auto d = load(dataset_index, annotations_dir);
      const auto frames = export_weak_frames(d, stride);
      write_text_file(bridge_out, write_exchange(frames));
      std::cerr << frames.size() << " weak frames\n";
    } else if (*bteach) {
      const auto frames = read_exchange(read_text_file(exchange_file), exchange_file);
      std::vector<FrameAnnotation> points;
      for (const auto& f : frames)
        points.push_back({f.video_id, f.frame_idx, f.instance_id, f.class_id, f.point, std::nullopt,
                          AnnotationSource::human_point});
      std::vector<PseudoLabel> labels;
      if (teacher == "oracle") {
        if (gt_file.empty()) throw Error(ErrorKind::invalid_argument, "missing_option", "--gt is required for oracle");
        OracleTeacherOptions opt;
        opt.box_jitter = box_jitter;
        labels = oracle_teacher(points, ground_truth_from_json(read_json_file(gt_file)), opt);
      } else {
        if (dataset_index.empty())
          throw Error(ErrorKind::invalid_argument, "missing_option", "--dataset is required for heuristic");
        const auto d = decode<Dataset>(read_json_file(dataset_index), dataset_index);
        labels = heuristic_teacher(points, prior_w, prior_h, frame_sizes(d.videos));
      }
      write_text_file(bridge_out, write_pseudo_labels(labels));
      std::cerr << labels.size() << " pseudo labels\n";
    } else if (*bimport) {
      const auto d = load(dataset_index, annotations_dir);
      const auto labels = read_pseudo_labels(read_text_file(labels_file), labels_file);
      const auto merged = import_pseudo_labels(d, labels, stride);
      for (const auto& w : merged.warnings) std::cerr << "warning: " << w << '\n';
      write_text_file(bridge_out, json(merged).dump(2) + "\n");
    } else if (*coco) {
      const auto merged = decode<MergedSet>(read_json_file(merged_file), merged_file);
      const auto d = decode<Dataset>(read_json_file(dataset_index), dataset_index);
      const auto c = export_coco(merged.frames, d.videos);
      for (const auto& w : c.warnings) std::cerr << "warning: " << w << '\n';
      write_text_file(coco_out, c.document.dump(2) + "\n");
      std::cerr << c.n_images << " images, " << c.n_annotations << " annotations\n";
    } else if (*sim_scene || *sim_otf || *sim_bbox) {
      // {"scene": SceneSpec, "annotator": SimAnnotatorSpec}
      const auto cfg = read_json_file(config_file);
      const auto spec = decode<SceneSpec>(cfg.at("scene"), config_file + ": scene");
      const auto a = cfg.contains("annotator") ? decode<SimAnnotatorSpec>(cfg["annotator"], config_file + ": annotator")
                                               : SimAnnotatorSpec{};
      const Scene sc = generate_scene(spec);
      const fs::path out = sim_out;
      fs::create_directories(out);
      if (*sim_scene) {
        write_text_file(out / "scene.json", json(sc.spec()).dump(2) + "\n");
        write_text_file(out / "gt.json", ground_truth_json(sc.ground_truth()).dump() + "\n");
        write_text_file(out / "video.json", json(sc.meta()).dump(2) + "\n");
      } else {
        VideoAnnotations va{sc.meta(), {}, {}};
        json timings = json::array();
        for (std::size_t k = 0; k < sc.object_count(); ++k) {
          SessionLog log;
          SessionTiming t;
          if (*sim_otf) {
            auto s = simulate_otf(sc, k, a);
            log = std::move(s.log);
            t = s.timing;
            va.otf_tracks.push_back(std::move(s.track));
          } else {
            auto s = simulate_bbox(sc, k, a);
            log = std::move(s.log);
            t = s.timing;
            va.box_tracks.push_back(std::move(s.track));
          }
          auto f = open_out(out / object_file(sc, k, *sim_otf ? "otf" : "bbox"));
          write_session_log(f, log);
          timings.push_back({{"object", k}, {"timing", t}});
        }
        save_annotation_file(out / (sc.meta().video_id + ".json"), va);
        emit(timings, "");
      }
    } else if (*sim_exp) {
      const auto c = experiment_config_from_json(read_json_file(config_file));
      const auto rep = run_experiment(c);
      const fs::path out = sim_out;
      fs::create_directories(out);
      write_text_file(out / "report.json", json(rep).dump(2) + "\n");
      auto csv = open_out(out / "report.csv");
      write_experiment_csv(csv, rep);
      for (const auto& g : rep.aggregates)
        std::cout << "fraction " << g.fraction << "  AP50 S_OTF " << g.ap50_otf_mean << " +- " << g.ap50_otf_sd
                  << "  S_BBox " << g.ap50_bbox_mean << " +- " << g.ap50_bbox_sd << '\n';
    } else if (*serve) {
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw Error(ErrorKind::invalid_argument, "bad_bind", bind);
      const std::string host = bind.substr(0, colon);
      const int port = std::stoi(bind.substr(colon + 1));
      if (port < 0 || port > 65535) throw Error(ErrorKind::invalid_argument, "bad_port", bind);
      SessionManager mgr(ServerOptions{data_dir, default_speed, !no_sync});
      HttpServer srv(mgr, host, static_cast<unsigned short>(port));
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      srv.start();
      std::cerr << "listening on " << host << ":" << srv.port() << " data " << data_dir << '\n';
      int sig = 0;
      sigwait(&stop_signals, &sig);
      srv.stop();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::io ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

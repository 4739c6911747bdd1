#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "otf/analysis/stats.hpp"
#include "otf/core/json_io.hpp"

namespace otf {

struct TimingRecord {
  std::string video_id;
  double t_otf_s = 0.0;
  double t_bbox_s = 0.0;

  friend bool operator==(const TimingRecord&, const TimingRecord&) = default;
};

struct TimingReport {
  std::size_t n = 0;
  double mean_ratio = 0.0;       // mean(t_bbox) / mean(t_otf)
  double mean_of_ratios = 0.0;   // mean(t_bbox / t_otf)
  double mean_t_otf = 0.0;
  double mean_t_bbox = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::string test = "paired_t_two_sided";
  std::optional<LinearFit> fit;  // t_bbox ~ t_otf
};

inline TimingReport speedup_stats(std::span<const TimingRecord> records) {
  if (records.size() < 2) throw Error(ErrorKind::invalid_argument, "sample_too_small", "need at least 2 records");
  std::vector<double> otf, bbox, diffs, ratios;
  for (const auto& r : records) {
    if (!(r.t_otf_s > 0.0) || !(r.t_bbox_s > 0.0))
      throw Error(ErrorKind::invalid_argument, "non_positive_time", r.video_id);
    otf.push_back(r.t_otf_s);
    bbox.push_back(r.t_bbox_s);
    diffs.push_back(r.t_bbox_s - r.t_otf_s);
    ratios.push_back(r.t_bbox_s / r.t_otf_s);
  }
  TimingReport rep;
  rep.n = records.size();
  rep.mean_t_otf = mean(otf);
  rep.mean_t_bbox = mean(bbox);
  rep.mean_ratio = rep.mean_t_bbox / rep.mean_t_otf;
  rep.mean_of_ratios = mean(ratios);
  const auto test = paired_t_test(diffs);
  rep.t_statistic = test.t;
  rep.p_value = test.p_value;
  rep.fit = ols_fit(otf, bbox);
  return rep;
}

inline void to_json(json& j, const TimingReport& r) {
  j = {{"n", r.n},
       {"mean_ratio", r.mean_ratio},
       {"mean_of_ratios", r.mean_of_ratios},
       {"mean_t_otf", r.mean_t_otf},
       {"mean_t_bbox", r.mean_t_bbox},
       {"test", r.test},
       {"t_statistic", std::isfinite(r.t_statistic) ? json(r.t_statistic) : json(nullptr)},
       {"p_value", r.p_value}};
  j["fit_slope"] = r.fit ? json(r.fit->slope) : json(nullptr);
  j["fit_intercept"] = r.fit ? json(r.fit->intercept) : json(nullptr);
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}
}  // namespace detail

// CSV with header video_id,t_otf_s,t_bbox_s (columns located by name).
inline std::vector<TimingRecord> read_timing_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  int c_id = -1, c_otf = -1, c_bbox = -1;
  std::vector<TimingRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (c_id < 0) {
      for (int i = 0; i < int(cells.size()); ++i) {
        if (cells[i] == "video_id") c_id = i;
        if (cells[i] == "t_otf_s") c_otf = i;
        if (cells[i] == "t_bbox_s") c_bbox = i;
      }
      if (c_id < 0 || c_otf < 0 || c_bbox < 0)
        throw Error(ErrorKind::parse, "bad_csv_header", "expected video_id,t_otf_s,t_bbox_s");
      continue;
    }
    const int need = std::max({c_id, c_otf, c_bbox});
    if (int(cells.size()) <= need) throw Error(ErrorKind::parse, "short_csv_row", "line " + std::to_string(line_no));
    try {
      out.push_back({cells[c_id], std::stod(cells[c_otf]), std::stod(cells[c_bbox])});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::parse, "bad_csv_number", "line " + std::to_string(line_no));
    }
  }
  return out;
}

// Shortest text that reads back to the same double.
inline std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_timing_csv(std::ostream& out, std::span<const TimingRecord> records) {
  out << "video_id,t_otf_s,t_bbox_s,ratio\n";
  for (const auto& r : records)
    out << r.video_id << ',' << shortest(r.t_otf_s) << ',' << shortest(r.t_bbox_s) << ','
        << shortest(r.t_bbox_s / r.t_otf_s) << '\n';
}

}  // namespace otf

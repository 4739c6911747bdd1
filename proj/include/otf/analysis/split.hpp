#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "otf/core/rng.hpp"
#include "otf/core/types.hpp"

namespace otf {

inline constexpr double kMinBoxFraction = 0.20;
inline constexpr double kMaxBoxFraction = 0.60;
inline constexpr double kBoxFractionStep = 0.05;

// Box-level fractions of the training split swept in the budget experiments.
inline std::vector<double> box_fraction_sweep() {
  std::vector<double> out;
  for (int bp = 2000; bp <= 6000; bp += 500) out.push_back(bp / 10000.0);
  return out;
}

struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
  int train_box = 0;
  int train_weak = 0;

  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct SplitPlan {
  std::vector<SplitRole> roles;  // indexed by video position
  SplitCounts counts;
  std::vector<std::string> warnings;

  std::map<std::string, SplitRole> assign(const std::vector<std::string>& video_ids) const {
    if (video_ids.size() != roles.size()) throw Error(ErrorKind::invalid_argument, "id_count_mismatch");
    std::map<std::string, SplitRole> out;
    for (std::size_t i = 0; i < roles.size(); ++i) out[video_ids[i]] = roles[i];
    return out;
  }

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

// Largest-remainder apportionment of n items over integer shares (basis
// points summing to 10000). Ties in remainder go to the smaller share, then
// to the earlier entry.
template <std::size_t K>
std::array<int, K> apportion(int n, const std::array<std::int64_t, K>& shares_bp) {
  std::array<int, K> counts{};
  std::array<std::int64_t, K> rem{};
  int assigned = 0;
  for (std::size_t i = 0; i < K; ++i) {
    const std::int64_t q = std::int64_t(n) * shares_bp[i];
    counts[i] = int(q / 10000);
    rem[i] = q % 10000;
    assigned += counts[i];
  }
  std::array<std::size_t, K> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return shares_bp[a] < shares_bp[b];
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[order[k % K]] += 1;
  return counts;
}

// 70/10/20 train/val/test partition by count, then the training videos split
// into box-level and weakly (point) annotated by box_fraction. Deterministic
// in (n_videos, seed, box_fraction).
inline SplitPlan split_plan(int n_videos, std::uint64_t seed, double box_fraction) {
  if (n_videos < 10) throw Error(ErrorKind::invalid_argument, "too_few_videos", "need n >= 10");
  if (!(box_fraction >= 0.0 && box_fraction <= 1.0))
    throw Error(ErrorKind::invalid_argument, "bad_box_fraction", std::to_string(box_fraction));
  SplitPlan plan;
  const auto box_bp = std::llround(box_fraction * 10000.0);
  if (std::abs(box_fraction * 10000.0 - double(box_bp)) > 1e-6 || box_bp < 2000 || box_bp > 6000 || box_bp % 500 != 0)
    plan.warnings.push_back("box_fraction " + std::to_string(box_fraction) + " is off the 0.20..0.60 step 0.05 grid");

  const auto tvt = apportion<3>(n_videos, {7000, 1000, 2000});
  plan.counts.train = tvt[0];
  plan.counts.val = tvt[1];
  plan.counts.test = tvt[2];
  const auto bw = apportion<2>(plan.counts.train, {box_bp, 10000 - box_bp});
  plan.counts.train_box = bw[0];
  plan.counts.train_weak = bw[1];

  std::vector<int> order(n_videos);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  plan.roles.assign(n_videos, SplitRole::train_weak);
  int pos = 0;
  auto take = [&](int count, SplitRole role) {
    for (int i = 0; i < count; ++i) plan.roles[order[pos++]] = role;
  };
  take(plan.counts.test, SplitRole::test);
  take(plan.counts.val, SplitRole::val);
  take(plan.counts.train_box, SplitRole::train_box);
  take(plan.counts.train_weak, SplitRole::train_weak);
  return plan;
}

}  // namespace otf

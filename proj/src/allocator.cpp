#include "corrcache/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corrcache {

std::string to_string(AllocationMethod method) {
  return method == AllocationMethod::greedy_marginal ? "greedy-marginal" : "exhaustive";
}

AllocationProblem AllocationProblem::from_config(const LibraryConfig& config) {
  AllocationProblem problem{config, {}};
  for (int l = 1; l <= config.n_files; ++l) problem.curves.push_back(level_rate_curve(config, l));
  return problem;
}

namespace {

struct Segment {
  int level;
  int t_from;
  int t_to;
  double bits;        // cache bits consumed per user by moving t_from -> t_to
  double rate_drop;   // positive
  double efficiency;  // rate_drop / bits
};

}  // namespace

AllocationSolution optimize_allocation(const LibraryConfig& input) {
  input.validate();
  if (input.cache_capacity < 0.0) throw std::invalid_argument("cache capacity must be nonnegative");
  const LibraryConfig config = input.clamped();
  const int n = config.n_files, k = config.n_users;
  const AllocationProblem problem = AllocationProblem::from_config(config);

  std::vector<Segment> segments;
  for (int l = 1; l <= n; ++l) {
    const double fl = config.subfile_sizes[l - 1];
    if (fl <= 0.0) continue;
    const auto& env = problem.curves[l - 1].envelope;
    const auto& v = env.vertices();
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const double drop = env.values()[v[i]] - env.values()[v[i + 1]];
      if (drop <= 0.0) break;  // flat or rising: caching more of this level never helps
      const double bits = static_cast<double>(binom(n, l)) * fl * (v[i + 1] - v[i]) / k;
      segments.push_back({l, v[i], v[i + 1], bits, drop, drop / bits});
    }
  }
  // Within a level efficiencies strictly decrease along t, so this order
  // also respects each level's segment sequence.
  std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    if (a.efficiency != b.efficiency) return a.efficiency > b.efficiency;
    if (a.level != b.level) return a.level < b.level;
    return a.t_from < b.t_from;
  });

  std::vector<double> t(n, 0.0);
  double budget = config.cache_capacity * file_size(config);
  for (const auto& seg : segments) {
    if (budget <= 0.0) break;
    if (seg.bits <= budget) {
      t[seg.level - 1] = seg.t_to;
      budget -= seg.bits;
    } else {
      t[seg.level - 1] = seg.t_from + (seg.t_to - seg.t_from) * (budget / seg.bits);
      budget = 0.0;
    }
  }

  AllocationSolution sol;
  sol.alloc = CacheAllocation::from_t(t, k);
  sol.rate = cacc_rate(config, sol.alloc);
  sol.method = AllocationMethod::greedy_marginal;
  return sol;
}

AllocationSolution exhaustive_allocation_oracle(const LibraryConfig& input, double grid_step,
                                                std::size_t max_points) {
  input.validate();
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const LibraryConfig config = input.clamped();
  const int n = config.n_files, k = config.n_users;

  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double v = i * grid_step;
    if (v > k + 1e-12) break;
    grid.push_back(std::min(v, static_cast<double>(k)));
  }
  if (grid.back() < k) grid.push_back(k);
  const std::size_t g = grid.size();
  double points = 1.0;
  for (int l = 0; l < n; ++l) points *= static_cast<double>(g);
  if (points > static_cast<double>(max_points))
    throw std::length_error("allocation grid has " + std::to_string(points) + " points, above the enumeration guard");

  // rate[l][i], bits[l][i] for t_l = grid[i]
  std::vector<std::vector<double>> rate(n, std::vector<double>(g)), bits(n, std::vector<double>(g));
  for (int l = 1; l <= n; ++l) {
    const auto curve = level_rate_curve(config, l);
    for (std::size_t i = 0; i < g; ++i) {
      rate[l - 1][i] = curve.envelope.at(grid[i]);
      bits[l - 1][i] = static_cast<double>(binom(n, l)) * config.subfile_sizes[l - 1] * grid[i] / k;
    }
  }
  const double f = file_size(config);
  const double budget = config.cache_capacity * f + 1e-9 * f;

  std::vector<std::size_t> idx(n, 0), best_idx(n, 0);
  double best = INFINITY;
  while (true) {
    double used = 0.0, r = 0.0;
    for (int l = 0; l < n; ++l) {
      used += bits[l][idx[l]];
      r += rate[l][idx[l]];
    }
    if (used <= budget && r < best) {
      best = r;
      best_idx = idx;
    }
    int pos = n - 1;
    while (pos >= 0 && ++idx[pos] == g) idx[pos--] = 0;
    if (pos < 0) break;
  }

  std::vector<double> t(n);
  for (int l = 0; l < n; ++l) t[l] = grid[best_idx[l]];
  AllocationSolution sol;
  sol.alloc = CacheAllocation::from_t(t, k);
  sol.rate = cacc_rate(config, sol.alloc);
  sol.method = AllocationMethod::exhaustive;
  return sol;
}

}  // namespace corrcache

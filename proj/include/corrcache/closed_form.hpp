#pragma once

// Closed-form delivery rates and bounds. All rates are normalized by the
// file size F and all memories are in units of one file.

#include <vector>

#include "corrcache/library_model.hpp"

namespace corrcache {

struct RatePoint {
  double memory = 0.0;
  double rate = 0.0;
};

/// Two integer cache parameters and the fraction of content run at t_low.
/// Realizes t = weight_low * t_low + (1 - weight_low) * t_high.
struct MemorySharing {
  int t_low = 0;
  int t_high = 0;
  double weight_low = 1.0;

  bool single() const { return t_low == t_high; }
};

/// Lower convex envelope of rate values sampled at t = 0, 1, ..., K.
class ConvexEnvelope {
 public:
  ConvexEnvelope() = default;
  explicit ConvexEnvelope(std::vector<double> values);

  int max_t() const { return static_cast<int>(values_.size()) - 1; }
  const std::vector<double>& values() const { return values_; }
  /// Integer t of the hull vertices, ascending; collinear points dropped.
  const std::vector<int>& vertices() const { return vertices_; }
  /// Envelope value; throws std::out_of_range outside [0, K].
  double at(double t) const;
  /// The hull vertices bracketing t.
  MemorySharing split(double t) const;

 private:
  std::vector<double> values_;
  std::vector<int> vertices_;
};

struct LevelRateCurve {
  int level = 0;
  /// R_l(t) = min{alpha_l(t), m_l(t)} for t = 0..K.
  std::vector<double> points;
  ConvexEnvelope envelope;
};

/// C(l) = sum_{i >= l} binom(N, i) F_i, with C(N+1) = 0.
double cumulative_tail(const LibraryConfig& config, int level);

/// Worst-case rate of correlation-aware uncoded caching.
double cauc_rate(const LibraryConfig& config, const CacheAllocation& alloc);
/// Fills the cache with the most widely shared subfiles first.
CacheAllocation cauc_optimal_allocation(const LibraryConfig& config);

/// Coded-delivery rate of one level at integer cache parameter t.
double cacc_alpha(const LibraryConfig& config, int level, int t);
/// Random-combination delivery rate of one level at integer t.
double cacc_m(const LibraryConfig& config, int level, int t);
LevelRateCurve level_rate_curve(const LibraryConfig& config, int level);
/// Envelope of the level's achievable points at real t in [0, K].
double cacc_level_rate(const LibraryConfig& config, int level, double t);
double cacc_rate(const LibraryConfig& config, const CacheAllocation& alloc);

/// Correlation-ignorant baseline: N independent files of F bits, t = KM/N.
ConvexEnvelope cicc_envelope(const LibraryConfig& config);
double cicc_rate(const LibraryConfig& config);

/// Cut-set lower bound on the optimal rate, clamped at 0.
double cutset_bound(const LibraryConfig& config);

}  // namespace corrcache

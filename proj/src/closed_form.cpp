#include "corrcache/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace corrcache {

namespace {

double b(long long n, long long k) { return static_cast<double>(binom(n, k)); }

long long ceil_div(long long a, long long d) { return (a + d - 1) / d; }

}  // namespace

ConvexEnvelope::ConvexEnvelope(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("envelope needs at least one point");
  double scale = 1.0;
  for (double v : values_) scale = std::max(scale, std::abs(v));
  const double eps = 1e-12 * scale;
  // Monotone chain, lower hull only. Collinear points are dropped.
  for (int t = 0; t <= max_t(); ++t) {
    while (vertices_.size() >= 2) {
      const int a = vertices_[vertices_.size() - 2];
      const int m = vertices_.back();
      const double cross = (m - a) * (values_[t] - values_[a]) - (values_[m] - values_[a]) * (t - a);
      if (cross > eps) break;
      vertices_.pop_back();
    }
    vertices_.push_back(t);
  }
}

double ConvexEnvelope::at(double t) const {
  const MemorySharing s = split(t);
  if (s.single()) return values_[s.t_low];
  return s.weight_low * values_[s.t_low] + (1.0 - s.weight_low) * values_[s.t_high];
}

MemorySharing ConvexEnvelope::split(double t) const {
  if (!(t >= -1e-12 && t <= max_t() + 1e-12)) throw std::out_of_range("cache parameter t outside [0, K]");
  t = std::clamp(t, 0.0, static_cast<double>(max_t()));
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const int v = vertices_[i];
    if (std::abs(t - v) <= 1e-12) return {v, v, 1.0};
    if (t < v) {
      const int lo = vertices_[i - 1];
      return {lo, v, (v - t) / static_cast<double>(v - lo)};
    }
  }
  const int last = vertices_.back();
  return {last, last, 1.0};
}

// ---------------------------------------------------------------------------

double cumulative_tail(const LibraryConfig& config, int level) {
  if (level < 1 || level > config.n_files + 1) throw std::out_of_range("level must be in [1, N+1]");
  double c = 0.0;
  for (int i = level; i <= config.n_files; ++i) c += b(config.n_files, i) * config.subfile_sizes[i - 1];
  return c;
}

namespace {

// Number of l-subfiles touching a worst-case demand set: those not shared
// exclusively among never-requested files.
double requested_subfile_count(const LibraryConfig& config, int level) {
  const int n = config.n_files;
  return b(n, level) - b(std::max(n - config.n_users, 0), level);
}

}  // namespace

double cauc_rate(const LibraryConfig& config, const CacheAllocation& alloc) {
  double bits = 0.0;
  for (int l = 1; l <= config.n_files; ++l)
    bits += (1.0 - alloc.fractions.at(l - 1)) * config.subfile_sizes[l - 1] * requested_subfile_count(config, l);
  return bits / file_size(config);
}

CacheAllocation cauc_optimal_allocation(const LibraryConfig& config) {
  config.validate();
  const LibraryConfig c = config.clamped();
  const double budget = c.cache_capacity * file_size(c);
  const double tol = 1e-12 * std::max(1.0, budget);
  CacheAllocation alloc;
  for (int l = 1; l <= c.n_files; ++l) {
    const double tail = cumulative_tail(c, l);
    const double next = cumulative_tail(c, l + 1);
    double p = 0.0;
    if (tail <= budget + tol)
      p = 1.0;
    else if (next < budget && budget < tail)
      p = (budget - next) / (b(c.n_files, l) * c.subfile_sizes[l - 1]);
    alloc.fractions.push_back(std::clamp(p, 0.0, 1.0));
  }
  return alloc;
}

// ---------------------------------------------------------------------------

double cacc_alpha(const LibraryConfig& config, int level, int t) {
  const long long n = config.n_files, k = config.n_users, l = level;
  if (t < 0 || t > k) throw std::out_of_range("t must be in [0, K]");
  if (level < 1 || level > n) throw std::out_of_range("level must be in [1, N]");
  const long long nk = std::min(n, k);
  const long long s_lo = std::max(l - k, 0LL);
  const long long s_hi = std::max(std::min(l - 1, n - k), 0LL);
  double sum = 0.0;
  for (long long s = s_lo; s <= s_hi; ++s) {
    const long long width = ceil_div(nk, l - s);
    const double steps = b(std::max(n - k, 0LL), s) * b(nk - 1, l - s - 1);
    const double per_step = b(k, t + 1) - b(std::max(k - width - 1, 0LL), t + 1);
    sum += steps * per_step;
  }
  return sum * config.subfile_sizes[level - 1] / (file_size(config) * b(k, t));
}

double cacc_m(const LibraryConfig& config, int level, int t) {
  const int k = config.n_users;
  if (t < 0 || t > k) throw std::out_of_range("t must be in [0, K]");
  const double fl = config.subfile_sizes.at(level - 1);
  return requested_subfile_count(config, level) * (fl - t * fl / k) / file_size(config);
}

LevelRateCurve level_rate_curve(const LibraryConfig& config, int level) {
  LevelRateCurve curve;
  curve.level = level;
  for (int t = 0; t <= config.n_users; ++t)
    curve.points.push_back(std::min(cacc_alpha(config, level, t), cacc_m(config, level, t)));
  curve.envelope = ConvexEnvelope(curve.points);
  return curve;
}

double cacc_level_rate(const LibraryConfig& config, int level, double t) {
  return level_rate_curve(config, level).envelope.at(t);
}

double cacc_rate(const LibraryConfig& config, const CacheAllocation& alloc) {
  double rate = 0.0;
  for (int l = 1; l <= config.n_files; ++l)
    rate += cacc_level_rate(config, l, alloc.t(l, config.n_users));
  return rate;
}

// ---------------------------------------------------------------------------

ConvexEnvelope cicc_envelope(const LibraryConfig& config) {
  const long long n = config.n_files, k = config.n_users;
  std::vector<double> values;
  for (long long t = 0; t <= k; ++t)
    values.push_back((b(k, t + 1) - b(k - std::min(n, k), t + 1)) / b(k, t));
  return ConvexEnvelope(std::move(values));
}

double cicc_rate(const LibraryConfig& config) {
  const double m = std::clamp(config.cache_capacity, 0.0, static_cast<double>(config.n_files));
  const double t = config.n_users * m / config.n_files;
  return cicc_envelope(config).at(t);
}

// ---------------------------------------------------------------------------

double cutset_bound(const LibraryConfig& config) {
  const int n = config.n_files;
  const double f = file_size(config);
  double best = 0.0;
  for (int p = 1; p <= std::min(n, config.n_users); ++p) {
    const int rounds = n / p;
    const int covered = p * rounds;
    const int rest = n - covered;
    double bits = 0.0;
    for (int s = 0; s <= rest; ++s)
      for (int l = 1; l <= covered; ++l)
        if (l + s <= n) bits += b(rest, s) * b(covered, l) * config.subfile_sizes[l + s - 1];
    best = std::max(best, (bits / f - p * config.cache_capacity) / rounds);
  }
  return best;
}

}  // namespace corrcache

#include "doctest.h"

#include <random>

#include "corrcache/allocator.hpp"
#include "oracles.hpp"

using namespace corrcache;

namespace {

// Exact optimum from the hull points: integer t-vectors plus one fractional level.
double reference_rate(const LibraryConfig& c) {
  std::vector<std::vector<double>> hulls;
  std::vector<double> cost;
  const double f = oracle::file_bits(c.n_files, c.subfile_sizes);
  for (int l = 1; l <= c.n_files; ++l) {
    const auto points = level_rate_curve(c, l).points;
    std::vector<double> h;
    for (int t = 0; t <= c.n_users; ++t) h.push_back(oracle::hull_at(points, t));
    hulls.push_back(h);
    cost.push_back(oracle::choose(c.n_files, l) * c.subfile_sizes[l - 1] / (c.n_users * f));
  }
  return oracle::separable_min(hulls, cost, c.cache_capacity);
}

}  // namespace

TEST_CASE("boundary memories") {
  LibraryConfig c{3, 3, 0, {1, 1, 1}};
  auto zero = optimize_allocation(c);
  for (double p : zero.alloc.fractions) CHECK(p == 0);
  double sum = 0;
  for (int l = 1; l <= 3; ++l) sum += level_rate_curve(c, l).points[0];
  CHECK(zero.rate == doctest::Approx(sum));

  c.cache_capacity = library_size(c) / file_size(c);
  auto full = optimize_allocation(c);
  for (double p : full.alloc.fractions) CHECK(p == doctest::Approx(1));
  CHECK(full.rate == doctest::Approx(0).epsilon(1e-12));

  c.cache_capacity = -1;
  CHECK_THROWS_AS(optimize_allocation(c), std::invalid_argument);
}

TEST_CASE("greedy matches the exact separable optimum") {
  LibraryConfig c{3, 3, 1, {1, 1, 1}};
  const auto sol = optimize_allocation(c);
  CHECK(sol.rate == doctest::Approx(reference_rate(c)).epsilon(1e-12));
  CHECK(sol.method == AllocationMethod::greedy_marginal);

  std::mt19937_64 rng(41);
  for (int i = 0; i < 150; ++i) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const int k = 1 + static_cast<int>(rng() % 5);
    std::vector<double> f;
    for (int l = 0; l < n; ++l) f.push_back(rng() % 3 == 0 ? 0.0 : static_cast<double>(1 + rng() % 30));
    if (oracle::file_bits(n, f) == 0) f[0] = 1;
    LibraryConfig cfg{n, k, 0, f};
    cfg.cache_capacity = (rng() % 1000) / 1000.0 * library_size(cfg) / file_size(cfg);
    const auto s = optimize_allocation(cfg);
    INFO(n, " ", k, " ", cfg.cache_capacity);
    CHECK(s.alloc.feasible(cfg));
    CHECK(s.rate == doctest::Approx(cacc_rate(cfg, s.alloc)).epsilon(1e-9));
    CHECK(std::abs(s.rate - reference_rate(cfg)) <= 1e-9);
  }
}

TEST_CASE("optimal rate is non-increasing in memory") {
  LibraryConfig c{4, 4, 0, {3, 1, 2, 5}};
  double prev = 1e9;
  const double top = library_size(c) / file_size(c);
  for (int s = 0; s <= 40; ++s) {
    c.cache_capacity = top * s / 40;
    const double r = optimize_allocation(c).rate;
    CHECK(r <= prev + 1e-12);
    prev = r;
  }
}

TEST_CASE("exhaustive grid search") {
  LibraryConfig c{3, 3, 0, {1, 1, 1}};
  const auto zero = exhaustive_allocation_oracle(c, 0.5);
  for (double p : zero.alloc.fractions) CHECK(p == 0);
  CHECK(zero.method == AllocationMethod::exhaustive);

  c.cache_capacity = 0.5;
  const auto grid = exhaustive_allocation_oracle(c, 0.25);
  const auto greedy = optimize_allocation(c);
  CHECK(greedy.rate <= grid.rate + 1e-9);
  CHECK(grid.alloc.feasible(c));
  CHECK(grid.rate == doctest::Approx(cacc_rate(c, grid.alloc)));

  CHECK_THROWS(exhaustive_allocation_oracle(c, 0.0));
  CHECK_THROWS(exhaustive_allocation_oracle(LibraryConfig{5, 5, 1, {1, 1, 1, 1, 1}}, 0.01, 1000));
}

#pragma once

// Exhaustive demand enumeration: deliver and decode every demand vector and
// compare measured rates with the closed forms.

#include <cstdint>
#include <string>
#include <vector>

#include "corrcache/delivery_engine.hpp"

namespace corrcache {

struct DemandResult {
  DemandVector demand;
  std::size_t bits = 0;
  double measured_rate = 0.0;
  double formula_rate = 0.0;
  double slack_bits = 0.0;  // padding plus random-combination overshoot
  bool decode_ok = false;
};

struct GridReport {
  std::string config_digest;
  Scheme scheme = Scheme::cacc;
  std::vector<DemandResult> results;  // demand vectors in lexicographic order
  double max_rate = 0.0;
  double formula_rate = 0.0;
  double max_slack_bits = 0.0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// "N=2 K=2 M=1 F_l=1000,1000"
std::string config_digest(const LibraryConfig& config);

/// All N^K demand vectors, lexicographic in (d_1, ..., d_K).
std::vector<DemandVector> all_demands(int n_files, int n_users);

/// Throws std::length_error when N^K exceeds 10^6. `alloc` is ignored for
/// CICC. Without memory sharing the CACC formula is the sum of the raw
/// per-level points at the integer t_l.
GridReport verify_all_demands(const LibraryConfig& config, const CacheAllocation& alloc, Scheme scheme,
                              std::uint64_t seed = 1, bool memory_sharing = true);

/// sum_l min{alpha_l(t_l), m_l(t_l)} for integer t_l.
double cacc_point_rate(const LibraryConfig& config, const CacheAllocation& alloc);

/// Header `demand,measured_rate,formula_rate,decode_ok`; demands written as 1-2-3.
std::string format_report_csv(const GridReport& report);

/// (1..K) when N >= K, otherwise 1..N repeated.
DemandVector worst_case_demand(const LibraryConfig& config);

struct SchemeRate {
  std::string scheme;  // cauc, cacc, cicc, cutset
  double memory = 0.0;
  double rate = 0.0;
};

/// CAUC at its optimal allocation, CACC at the optimized allocation, CICC
/// and the cut-set bound, all at the config's M.
std::vector<SchemeRate> compare_schemes(const LibraryConfig& config);

}  // namespace corrcache

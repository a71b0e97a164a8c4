#pragma once

// Rate sweeps over the share of one commonness level.

#include <string>
#include <vector>

#include "corrcache/library_model.hpp"

namespace corrcache {

struct SweepSpec {
  int n_files = 10;
  int n_users = 10;
  double cache_capacity = 1.0;
  int level = 2;    // r_level is swept, r_1 = 1 - r_level, all other r_l = 0
  int points = 11;  // grid 0, 1/(points-1), ..., 1
};

struct SweepResult {
  SweepSpec spec;
  std::vector<double> x;
  std::vector<double> cauc;
  std::vector<double> cacc;
  std::vector<double> cicc;
  std::vector<double> cutset;
};

/// Ratios of one sweep point.
std::vector<double> sweep_ratios(const SweepSpec& spec, double x);

/// Throws std::invalid_argument for a level outside [1, N] or fewer than 1 point.
SweepResult run_sweep(const SweepSpec& spec);

/// `#` comment lines echoing the spec, then header `x,r_cauc,r_cacc,r_cicc,r_cutset`.
std::string format_sweep_csv(const SweepResult& result);

}  // namespace corrcache

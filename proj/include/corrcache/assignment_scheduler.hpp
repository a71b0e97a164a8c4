#pragma once

// Step-assignment schedules for per-level coded delivery.
//
// For a window R of files, a fixed part Rbar (disjoint from R) and a level
// l, the subfiles handled are S = T u Rbar with T a (l - |Rbar|)-subset of R.
// A schedule has binom(|R| - 1, l - |Rbar| - 1) columns; column j names, for
// every file i in R, the one subfile c_ij containing i that users
// requesting i recover in step j.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "corrcache/library_model.hpp"

namespace corrcache {

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssignmentSchedule {
  std::vector<int> window;      // R, ascending
  std::vector<int> fixed_part;  // Rbar, ascending
  int level = 0;
  /// columns[j][p] is c_{window[p], j}.
  std::vector<std::vector<SubfileId>> columns;

  int block_size() const { return level - static_cast<int>(fixed_part.size()); }
  std::size_t expected_columns() const;
  /// Subfile for `file` in column j; empty for files in the fixed part.
  SubfileId entry(int file, std::size_t column) const;
  /// ceil(|R| / (l - s)) + 1
  std::size_t width_bound() const;
};

struct StepDemand {
  std::vector<SubfileId> per_user;  // entry k-1 is d^j_k
  std::size_t distinct() const;
};

struct ScheduleOptions {
  int max_restarts = 1000;
  bool allow_backtracking = true;
};

/// Carry-over greedy: each column is filled with blocks of l - s window
/// files drawn uniformly from the unused subsets; a short remainder takes an
/// unused subset covering it and its other members receive that subset at
/// the head of the next column. Restarts on a stall, then falls back to
/// exhaustive backtracking. Throws ScheduleError if no schedule is found.
AssignmentSchedule generate_schedule(const std::vector<int>& window, const std::vector<int>& fixed_part, int level,
                                     std::uint64_t seed, const ScheduleOptions& options = {});

enum class ViolationKind { shape, membership, coverage, width };

struct ScheduleViolation {
  long step = 0;  // 1-based column; 0 when not tied to one column
  ViolationKind kind = ViolationKind::shape;
  std::string message;
};

std::string to_string(ViolationKind kind);

/// Empty iff membership, coverage and width invariants all hold.
std::vector<ScheduleViolation> validate_schedule(const AssignmentSchedule& schedule);

/// d^j_k = c_{d_k, j}. Throws std::invalid_argument for a demand outside the window.
StepDemand step_demands(const AssignmentSchedule& schedule, const DemandVector& demands, std::size_t column);

/// Plain-text fixture: optional `window=`, `fixed=` and `level=` header
/// lines, then one column per line with one whitespace-separated entry per
/// window file, each a comma-separated index set (braces optional).
/// Blank lines and `#` comments are ignored.
AssignmentSchedule parse_schedule_fixture(const std::string& text, int n_files);
std::string format_schedule_fixture(const AssignmentSchedule& schedule);

/// A fixed four-column schedule for N = 5, l = 2 (data/fixtures/example1.txt).
AssignmentSchedule example1_schedule();

}  // namespace corrcache

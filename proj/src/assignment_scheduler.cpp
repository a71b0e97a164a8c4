#include "corrcache/assignment_scheduler.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace corrcache {

std::size_t AssignmentSchedule::expected_columns() const {
  const long long n = static_cast<long long>(window.size());
  return binom(n - 1, block_size() - 1);
}

SubfileId AssignmentSchedule::entry(int file, std::size_t column) const {
  const auto& col = columns.at(column);
  for (std::size_t p = 0; p < window.size(); ++p)
    if (window[p] == file) return col.at(p);
  if (std::find(fixed_part.begin(), fixed_part.end(), file) != fixed_part.end()) return SubfileId{};
  throw std::invalid_argument("file " + std::to_string(file) + " is outside the schedule window");
}

std::size_t AssignmentSchedule::width_bound() const {
  const std::size_t n = window.size(), b = static_cast<std::size_t>(block_size());
  return (n + b - 1) / b + 1;
}

std::size_t StepDemand::distinct() const {
  std::set<std::uint32_t> seen;
  for (auto id : per_user) seen.insert(id.mask());
  return seen.size();
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::shape: return "shape";
    case ViolationKind::membership: return "membership";
    case ViolationKind::coverage: return "coverage";
    case ViolationKind::width: return "width";
  }
  return "?";
}

// ---------------------------------------------------------------------------

namespace {

using LocalColumn = std::vector<std::uint32_t>;  // position -> local subset mask

// Enumerates the b-subsets of {0..n-1} as bitmasks, in canonical order.
std::vector<std::uint32_t> local_subsets(int n, int b) {
  std::vector<std::uint32_t> out;
  for (auto id : subfiles_of_level(n, b)) out.push_back(id.mask());
  return out;
}

class ScheduleBuilder {
 public:
  ScheduleBuilder(int n, int b, std::size_t columns)
      : n_(n), b_(b), columns_(columns), full_((n == 32) ? ~0u : ((1u << n) - 1)), subsets_(local_subsets(n, b)) {}

  bool greedy(std::mt19937_64& rng, std::vector<LocalColumn>& out) const {
    std::vector<char> used(subsets_.size(), 0);
    std::uint32_t carry_members = 0, carry_subset = 0;
    std::vector<std::size_t> eligible;
    out.clear();
    for (std::size_t j = 0; j < columns_; ++j) {
      LocalColumn col(n_, 0);
      std::uint32_t open = full_;
      assign(col, carry_members, carry_subset);
      open &= ~carry_members;
      carry_members = carry_subset = 0;
      while (std::popcount(open) >= b_) {
        collect(used, [&](std::uint32_t s) { return (s & ~open) == 0; }, eligible);
        if (eligible.empty()) return false;
        const std::size_t pick = eligible[pick_index(rng, eligible.size())];
        used[pick] = 1;
        assign(col, subsets_[pick], subsets_[pick]);
        open &= ~subsets_[pick];
      }
      if (open != 0) {
        collect(used, [&](std::uint32_t s) { return (open & ~s) == 0; }, eligible);
        if (eligible.empty()) return false;
        const std::size_t pick = eligible[pick_index(rng, eligible.size())];
        used[pick] = 1;
        assign(col, open, subsets_[pick]);
        carry_members = subsets_[pick] & ~open;
        carry_subset = subsets_[pick];
      }
      out.push_back(std::move(col));
    }
    return carry_members == 0;
  }

  /// Depth-first search over the same decisions as greedy(), in subset order.
  bool backtrack(std::vector<LocalColumn>& out, std::uint64_t node_budget) const {
    State st;
    st.used.assign(subsets_.size(), 0);
    st.col.assign(n_, 0);
    st.open = full_;
    std::uint64_t nodes = 0;
    out.clear();
    if (!search(st, out, nodes, node_budget)) return false;
    return true;
  }

 private:
  struct State {
    std::vector<char> used;
    LocalColumn col;
    std::uint32_t open = 0;
    std::uint32_t carry_members = 0, carry_subset = 0;
  };

  static std::size_t pick_index(std::mt19937_64& rng, std::size_t count) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
  }

  template <typename Pred>
  void collect(const std::vector<char>& used, Pred pred, std::vector<std::size_t>& out) const {
    out.clear();
    for (std::size_t i = 0; i < subsets_.size(); ++i)
      if (!used[i] && pred(subsets_[i])) out.push_back(i);
  }

  static void assign(LocalColumn& col, std::uint32_t positions, std::uint32_t subset) {
    for (std::uint32_t m = positions; m != 0; m &= m - 1) col[std::countr_zero(m)] = subset;
  }

  bool search(State& st, std::vector<LocalColumn>& out, std::uint64_t& nodes, std::uint64_t budget) const {
    if (++nodes > budget) throw ScheduleError("schedule backtracking exceeded its node budget");
    if (st.open == 0) {
      // Column complete.
      out.push_back(st.col);
      if (out.size() == columns_) {
        if (st.carry_members == 0) return true;
        out.pop_back();
        return false;
      }
      State next = st;
      next.col.assign(n_, 0);
      next.open = full_;
      assign(next.col, st.carry_members, st.carry_subset);
      next.open &= ~st.carry_members;
      next.carry_members = next.carry_subset = 0;
      if (search(next, out, nodes, budget)) return true;
      out.pop_back();
      return false;
    }
    const bool block = std::popcount(st.open) >= b_;
    // Fill the lowest open position first so each block is enumerated once.
    const std::uint32_t lowest = st.open & (~st.open + 1);
    for (std::size_t i = 0; i < subsets_.size(); ++i) {
      if (st.used[i]) continue;
      const std::uint32_t s = subsets_[i];
      if (block ? ((s & ~st.open) != 0 || (s & lowest) == 0) : ((st.open & ~s) != 0)) continue;
      State next = st;
      next.used[i] = 1;
      if (block) {
        assign(next.col, s, s);
        next.open &= ~s;
      } else {
        assign(next.col, st.open, s);
        next.carry_members = s & ~st.open;
        next.carry_subset = s;
        next.open = 0;
      }
      if (search(next, out, nodes, budget)) return true;
    }
    return false;
  }

  int n_;
  int b_;
  std::size_t columns_;
  std::uint32_t full_;
  std::vector<std::uint32_t> subsets_;
};

std::uint32_t mask_of(const std::vector<int>& files) {
  return SubfileId::from_members(files).mask();
}

void check_schedule_inputs(const std::vector<int>& window, const std::vector<int>& fixed_part, int level) {
  if (window.empty()) throw std::invalid_argument("schedule window must be nonempty");
  if (!std::is_sorted(window.begin(), window.end()) || !std::is_sorted(fixed_part.begin(), fixed_part.end()))
    throw std::invalid_argument("window and fixed part must be sorted ascending");
  if (std::adjacent_find(window.begin(), window.end()) != window.end() ||
      std::adjacent_find(fixed_part.begin(), fixed_part.end()) != fixed_part.end())
    throw std::invalid_argument("window and fixed part must not repeat files");
  if ((mask_of(window) & mask_of(fixed_part)) != 0)
    throw std::invalid_argument("window and fixed part must be disjoint");
  const int b = level - static_cast<int>(fixed_part.size());
  if (b < 1 || b > static_cast<int>(window.size()))
    throw std::invalid_argument("level minus fixed-part size must lie in [1, |window|]");
}

}  // namespace

AssignmentSchedule generate_schedule(const std::vector<int>& window, const std::vector<int>& fixed_part, int level,
                                     std::uint64_t seed, const ScheduleOptions& options) {
  check_schedule_inputs(window, fixed_part, level);
  AssignmentSchedule schedule{window, fixed_part, level, {}};
  const int n = static_cast<int>(window.size());
  const int b = schedule.block_size();
  const ScheduleBuilder builder(n, b, schedule.expected_columns());

  std::vector<LocalColumn> local;
  bool ok = false;
  for (int attempt = 0; attempt <= options.max_restarts && !ok; ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    ok = builder.greedy(rng, local);
  }
  if (!ok && options.allow_backtracking) ok = builder.backtrack(local, 50'000'000);
  if (!ok)
    throw ScheduleError("no assignment schedule found for |R|=" + std::to_string(n) + ", l=" + std::to_string(level) +
                        ", s=" + std::to_string(fixed_part.size()));

  const std::uint32_t fixed = mask_of(fixed_part);
  for (const auto& col : local) {
    std::vector<SubfileId> entries;
    for (std::uint32_t subset : col) {
      std::uint32_t global = fixed;
      for (std::uint32_t m = subset; m != 0; m &= m - 1) global |= 1u << (window[std::countr_zero(m)] - 1);
      entries.emplace_back(global);
    }
    schedule.columns.push_back(std::move(entries));
  }
  return schedule;
}

// ---------------------------------------------------------------------------

std::vector<ScheduleViolation> validate_schedule(const AssignmentSchedule& s) {
  std::vector<ScheduleViolation> out;
  try {
    check_schedule_inputs(s.window, s.fixed_part, s.level);
  } catch (const std::invalid_argument& e) {
    out.push_back({0, ViolationKind::shape, e.what()});
    return out;
  }
  const std::size_t n = s.window.size();
  if (s.columns.size() != s.expected_columns())
    out.push_back({0, ViolationKind::shape,
                   "expected " + std::to_string(s.expected_columns()) + " columns, found " +
                       std::to_string(s.columns.size())});

  const std::uint32_t window = mask_of(s.window);
  const std::uint32_t fixed = mask_of(s.fixed_part);
  std::vector<std::set<std::uint32_t>> seen(n);
  for (std::size_t j = 0; j < s.columns.size(); ++j) {
    const long step = static_cast<long>(j) + 1;
    const auto& col = s.columns[j];
    if (col.size() != n) {
      out.push_back({step, ViolationKind::shape, "column has " + std::to_string(col.size()) + " entries"});
      continue;
    }
    std::set<std::uint32_t> distinct;
    for (std::size_t p = 0; p < n; ++p) {
      const SubfileId c = col[p];
      const int file = s.window[p];
      distinct.insert(c.mask());
      if (!c.contains(file) || (c.mask() & fixed) != fixed || (c.mask() & ~fixed & ~window) != 0 ||
          c.level() != s.level) {
        out.push_back({step, ViolationKind::membership,
                       "entry for file " + std::to_string(file) + " is " + c.to_string()});
        continue;
      }
      if (!seen[p].insert(c.mask()).second)
        out.push_back({step, ViolationKind::coverage,
                       "file " + std::to_string(file) + " receives " + c.to_string() + " more than once"});
    }
    if (distinct.size() > s.width_bound())
      out.push_back({step, ViolationKind::width,
                     std::to_string(distinct.size()) + " distinct subfiles exceed the bound " +
                         std::to_string(s.width_bound())});
  }
  const std::size_t per_file = s.expected_columns();
  for (std::size_t p = 0; p < n; ++p)
    if (seen[p].size() != per_file)
      out.push_back({0, ViolationKind::coverage,
                     "file " + std::to_string(s.window[p]) + " covers " + std::to_string(seen[p].size()) + " of " +
                         std::to_string(per_file) + " subfiles"});
  return out;
}

StepDemand step_demands(const AssignmentSchedule& schedule, const DemandVector& demands, std::size_t column) {
  if (column >= schedule.columns.size()) throw std::out_of_range("schedule column out of range");
  const auto& col = schedule.columns[column];
  StepDemand out;
  for (int d : demands.demands) {
    auto it = std::find(schedule.window.begin(), schedule.window.end(), d);
    if (it == schedule.window.end())
      throw std::invalid_argument("demand " + std::to_string(d) + " lies outside the schedule window");
    out.per_user.push_back(col[static_cast<std::size_t>(it - schedule.window.begin())]);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> parse_index_list(std::string text) {
  std::vector<int> out;
  for (char& c : text)
    if (c == '{' || c == '}' || c == ',') c = ' ';
  std::istringstream in(text);
  int v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw std::invalid_argument("malformed index set '" + text + "'");
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

AssignmentSchedule parse_schedule_fixture(const std::string& text, int n_files) {
  AssignmentSchedule s;
  for (int i = 1; i <= n_files; ++i) s.window.push_back(i);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (auto eq = line.find('='); eq != std::string::npos) {
      std::string key = line.substr(0, eq);
      key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
      const std::string value = line.substr(eq + 1);
      if (key == "window")
        s.window = parse_index_list(value);
      else if (key == "fixed")
        s.fixed_part = parse_index_list(value);
      else if (key == "level")
        s.level = std::stoi(value);
      else
        throw std::invalid_argument("unknown fixture header '" + key + "'");
      continue;
    }
    std::istringstream entries(line);
    std::string token;
    std::vector<SubfileId> col;
    while (entries >> token) col.push_back(SubfileId::from_members(parse_index_list(token)));
    if (col.size() != s.window.size())
      throw std::invalid_argument("fixture column has " + std::to_string(col.size()) + " entries, window has " +
                                  std::to_string(s.window.size()));
    s.columns.push_back(std::move(col));
  }
  if (s.columns.empty()) throw std::invalid_argument("fixture has no columns");
  if (s.level == 0) s.level = s.columns.front().front().level();
  return s;
}

std::string format_schedule_fixture(const AssignmentSchedule& s) {
  std::string out = "window=" + join(s.window) + "\nfixed=" + join(s.fixed_part) +
                    "\nlevel=" + std::to_string(s.level) + "\n";
  for (const auto& col : s.columns) {
    for (std::size_t p = 0; p < col.size(); ++p) out += (p ? " " : "") + col[p].to_string();
    out += '\n';
  }
  return out;
}

AssignmentSchedule example1_schedule() {
  return parse_schedule_fixture(
      "window=1,2,3,4,5\n"
      "level=2\n"
      "{1,2} {1,2} {3,4} {3,4} {1,5}\n"
      "{1,5} {2,3} {2,3} {4,5} {4,5}\n"
      "{1,3} {2,5} {1,3} {2,4} {2,5}\n"
      "{1,4} {2,4} {3,5} {1,4} {3,5}\n",
      5);
}

}  // namespace corrcache

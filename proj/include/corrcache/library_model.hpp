#pragma once

// Data model for libraries of correlated files. A library of N files is
// described by the sizes F_1..F_N of its subfiles: the subfile shared
// exclusively by a set S of files has F_{|S|} bits, and file i is the
// concatenation of the 2^(N-1) subfiles whose set contains i.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corrcache/bits.hpp"

namespace corrcache {

inline constexpr int kMaxFiles = 20;
inline constexpr int kMaxUsers = 30;

/// Binomial coefficient with the convention binom(n, k) = 0 unless 0 <= k <= n.
std::uint64_t binom(long long n, long long k);

/// lcm{binom(K, t) : t in [0, K]}: the granularity at which subfile sizes
/// split evenly into placement parts for every integer t.
std::uint64_t divisibility_unit(int n_users);

/// A nonempty set of file indices (1-based), stored as a bitmask.
class SubfileId {
 public:
  constexpr SubfileId() = default;
  constexpr explicit SubfileId(std::uint32_t mask) : mask_(mask) {}
  static SubfileId from_members(const std::vector<int>& members);

  std::uint32_t mask() const { return mask_; }
  bool empty() const { return mask_ == 0; }
  int level() const;
  bool contains(int file) const { return (mask_ >> (file - 1)) & 1u; }
  std::vector<int> members() const;
  /// "{1,2,5}"
  std::string to_string() const;

  bool operator==(const SubfileId&) const = default;
  /// Canonical order: by level, then lexicographically by sorted members.
  bool operator<(const SubfileId& other) const;

 private:
  std::uint32_t mask_ = 0;
};

struct LibraryConfig {
  int n_files = 0;
  int n_users = 0;
  double cache_capacity = 0.0;  // M, in units of one file
  /// Entry l-1 holds F_l. Real-valued so closed-form calculators can use
  /// unrounded sizes; the simulation path requires integers.
  std::vector<double> subfile_sizes;

  double size_of_level(int level) const { return subfile_sizes.at(level - 1); }
  /// Throws std::invalid_argument when a structural invariant fails.
  void validate() const;
  /// Copy with M clamped to [0, library_size / file_size].
  LibraryConfig clamped() const;
  /// F_l as integers; throws if any size is not integral.
  std::vector<std::uint64_t> integral_sizes() const;
};

/// F = sum_l binom(N-1, l-1) F_l.
double file_size(const LibraryConfig& config);
/// sum_l binom(N, l) F_l: total bits in the library.
double library_size(const LibraryConfig& config);

/// All binom(n_files, level) subfiles of one level in canonical order.
std::vector<SubfileId> subfiles_of_level(int n_files, int level);
/// All 2^N - 1 subfiles in canonical order.
std::vector<SubfileId> all_subfiles(int n_files);
/// Subfiles containing `file`, in canonical order (the layout of W_file).
std::vector<SubfileId> subfiles_of_file(int n_files, int file);

struct DemandVector {
  std::vector<int> demands;  // entry k-1 is d_k, 1-based file index

  int user_count() const { return static_cast<int>(demands.size()); }
  int operator[](int user) const { return demands.at(user - 1); }
  void validate(int n_files, int n_users) const;
  std::string to_string() const;
};

struct CacheAllocation {
  std::vector<double> fractions;  // p_l, entry l-1

  static CacheAllocation from_t(const std::vector<double>& t, int n_users);
  double t(int level, int n_users) const { return fractions.at(level - 1) * n_users; }
  /// Bits each user caches: sum_l binom(N, l) p_l F_l.
  double cached_bits(const LibraryConfig& config) const;
  /// Capacity check with slack 1e-9 * file_size.
  bool feasible(const LibraryConfig& config) const;
  void validate(const LibraryConfig& config) const;
};

/// Subfile contents, generated from a seed.
class ContentStore {
 public:
  ContentStore(const LibraryConfig& config, std::uint64_t seed);
  /// Explicit contents, one bit array per subfile of `config`.
  ContentStore(const LibraryConfig& config, std::map<std::uint32_t, BitVector> subfiles,
               std::uint64_t seed = 0);

  const BitVector& subfile(SubfileId id) const;
  /// W_file: its subfiles concatenated in canonical order.
  BitVector file(int file) const;
  std::uint64_t seed() const { return seed_; }
  int n_files() const { return n_files_; }
  std::size_t entry_count() const { return subfiles_.size(); }

 private:
  int n_files_ = 0;
  std::uint64_t seed_ = 0;
  std::map<std::uint32_t, BitVector> subfiles_;
};

struct ExperimentSpec {
  int n_files = 0;
  int n_users = 0;
  double cache_capacity = 0.0;
  std::vector<double> ratios;  // r_l, entry l-1
  double file_bits = 0.0;      // target F
  /// Sizes are rounded down to multiples of this; 0 selects divisibility_unit(K).
  std::uint64_t rounding_unit = 0;
};

/// F_l = r_l F / binom(N-1, l-1), rounded down to the rounding unit.
LibraryConfig ratios_to_sizes(const ExperimentSpec& spec);
/// F_l = r_l / binom(N-1, l-1) with F = 1; no rounding.
LibraryConfig ratios_to_exact_sizes(int n_files, int n_users, double cache_capacity,
                                    const std::vector<double>& ratios);
/// r_l = binom(N-1, l-1) F_l / F.
std::vector<double> sizes_to_ratios(const LibraryConfig& config);

}  // namespace corrcache

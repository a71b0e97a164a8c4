#pragma once

// Bit-exact placement, delivery and decoding.
//
// CACC: every l-subfile is split into binom(K, t_l) equal parts labelled by
// the t_l-subsets A of users, and user k caches the parts with k in A.
// Delivery runs per level over assignment schedules: in each step the
// server multicasts XORs of parts that help at least one leader user, or,
// when cheaper for the level, random GF(2) combinations of the demanded
// subfiles. A fractional t_l is realized by splitting each subfile into
// two sublayers run at the bracketing integer parameters.
//
// CAUC: every user caches the same prefix of each subfile; the rest of
// each requested subfile is sent uncoded.
//
// CICC: whole files are treated as independent level-1 subfiles of F bits
// and delivered with the coded procedure only.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "corrcache/assignment_scheduler.hpp"
#include "corrcache/bits.hpp"
#include "corrcache/closed_form.hpp"
#include "corrcache/library_model.hpp"

namespace corrcache {

enum class Scheme { cacc, cauc, cicc };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bitmasks of the t-subsets of users {1..K}, lexicographic order.
std::vector<std::uint32_t> user_subsets(int n_users, int t);

struct Sublayer {
  int t = 0;
  std::size_t offset = 0;  // bit offset inside the subfile
  std::size_t bits = 0;
  std::vector<std::uint32_t> labels;  // part labels A, part p covers [offset + p*part_bits, ...)
  std::unordered_map<std::uint32_t, std::size_t> label_index;

  std::size_t part_bits() const { return labels.empty() ? 0 : bits / labels.size(); }
  /// Bits of the sublayer a user caches.
  std::size_t cached_bits(int user) const;
};

struct LevelPlan {
  int level = 0;
  std::size_t subfile_bits = 0;
  std::vector<Sublayer> sublayers;  // coded schemes
  std::size_t cauc_prefix = 0;      // CAUC: cached prefix of every subfile
  double padding_slack_bits = 0.0;
};

struct PlacementPlan {
  Scheme scheme = Scheme::cacc;
  LibraryConfig config;  // for CICC, the derived library of N independent files
  std::vector<LevelPlan> levels;
  /// Worst-case excess of measured over formula bits caused by rounding
  /// the memory-sharing split or the CAUC prefix to whole parts.
  double padding_slack_bits = 0.0;
  /// Excess of cached bits over M F caused by the same rounding.
  double cache_slack_bits = 0.0;

  const LevelPlan& level(int l) const { return levels.at(l - 1); }
};

/// CACC plan; t_l = K p_l is realized on the level's rate envelope. With
/// `memory_sharing` off every t_l must be an integer and runs as one sublayer.
PlacementPlan make_cacc_plan(const LibraryConfig& config, const CacheAllocation& alloc, bool memory_sharing = true);
PlacementPlan make_cauc_plan(const LibraryConfig& config, const CacheAllocation& alloc);
/// CICC plan over the derived library; t = K M / N on the baseline envelope.
PlacementPlan make_cicc_plan(const LibraryConfig& config, double cache_capacity);

struct PartKey {
  std::uint32_t subfile = 0;
  int sublayer = 0;
  std::uint32_t label = 0;
  auto operator<=>(const PartKey&) const = default;
};

struct UserCache {
  int user = 0;
  std::map<PartKey, BitVector> parts;              // coded schemes
  std::map<std::uint32_t, BitVector> prefixes;     // CAUC
  std::size_t cached_bits() const;
};

/// Caches of all K users. For CICC, `store` must be the derived store.
std::vector<UserCache> place(const PlacementPlan& plan, const ContentStore& store);
std::vector<UserCache> place(const LibraryConfig& config, const CacheAllocation& alloc, const ContentStore& store);

/// Content of the derived CICC library: subfile {i} holds W_i.
ContentStore cicc_store(const LibraryConfig& config, const ContentStore& store);

enum class TransmissionKind { xor_combo, random_combo, uncoded };

std::string to_string(TransmissionKind kind);

struct XorTerm {
  int user = 0;
  SubfileId subfile;
  std::uint32_t label = 0;  // V \ {user}
};

struct Transmission {
  TransmissionKind kind = TransmissionKind::xor_combo;
  BitVector payload;
  int level = 0;
  int sublayer = 0;
  std::uint32_t users = 0;       // xor: V
  std::vector<XorTerm> terms;    // xor
  SubfileId subfile;             // random_combo, uncoded
  std::uint64_t combo_seed = 0;  // random_combo
  std::size_t offset = 0;        // uncoded: first bit sent
};

enum class LevelProcedure { none, coded, random, uncoded };

std::string to_string(LevelProcedure procedure);

struct StepRecord {
  int level = 0;
  int sublayer = 0;
  std::uint32_t fixed_part = 0;
  std::size_t step = 0;  // 1-based column
  std::size_t distinct_demands = 0;
  std::size_t transmissions = 0;
  std::size_t bits = 0;
  int t = 0;
  std::vector<std::uint32_t> step_demands;  // entry k-1: mask of d^j_k
  std::uint32_t leaders = 0;
  std::size_t first_transmission = 0;  // index into Transcript::transmissions
};

struct SublayerRecord {
  int level = 0;
  int sublayer = 0;
  int t = 0;
  LevelProcedure procedure = LevelProcedure::none;
  std::size_t coded_bits = 0;     // accounting of the coded procedure
  std::size_t random_bits = 0;    // 0 unless the random procedure was run
  std::size_t bits = 0;           // bits actually sent
};

struct Transcript {
  Scheme scheme = Scheme::cacc;
  std::vector<Transmission> transmissions;
  std::size_t total_bits = 0;
  std::vector<std::size_t> level_bits;  // entry l-1
  std::vector<StepRecord> steps;        // coded steps actually sent
  std::vector<SublayerRecord> sublayers;
  std::uint64_t content_seed = 0;
  /// Overshoot of every random attempt, kept or not; bounds the excess of
  /// the kept procedure over the nominal random count.
  std::size_t random_overshoot_bits = 0;
  double padding_slack_bits = 0.0;

  double rate(double file_bits) const { return static_cast<double>(total_bits) / file_bits; }
  /// Appends another transcript's transmissions and accounting.
  void merge(Transcript&& other);
};

/// Line-oriented dump: one line per transmission (kind, bits, provenance).
std::string format_transcript(const Transcript& transcript);

/// Assignment schedules keyed by (window, fixed part, level). Generated on
/// first use from a seed; fixtures override generation.
class ScheduleSource {
 public:
  explicit ScheduleSource(std::uint64_t seed = 0) : seed_(seed) {}

  void add_fixture(AssignmentSchedule schedule);
  const AssignmentSchedule& get(const std::vector<int>& window, const std::vector<int>& fixed_part, int level);
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::map<std::tuple<std::uint32_t, std::uint32_t, int>, AssignmentSchedule> schedules_;
};

/// How one user solves a random-combination sublayer: the payload rows it
/// reads and, for each unknown bit, the XOR of those rows (after removing
/// the cached bits) that yields it.
struct RandomSolvePlan {
  std::vector<std::size_t> rows;                      // payload indices, ascending
  std::vector<std::pair<std::size_t, BitVector>> bits;  // sublayer bit, mask over `rows`
  std::size_t count = 0;  // combinations drawn until full rank
};

/// Solve plans keyed by (combination seed, sublayer bits, t, K, user). They
/// depend only on the seed and the user's cached parts, so encoders and
/// decoders reuse them across demand vectors.
class RandomCodeCache {
 public:
  using Key = std::tuple<std::uint64_t, std::size_t, int, int, int>;
  std::shared_ptr<const RandomSolvePlan> find(const Key& key) const;
  void store(const Key& key, std::shared_ptr<const RandomSolvePlan> plan);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const RandomSolvePlan>> plans_;
};

struct DeliveryOptions {
  bool allow_random = true;
  /// Optional; shared between deliveries of the same store.
  std::shared_ptr<RandomCodeCache> code_cache;
  /// Leader users per step; empty uses the lowest-indexed user per distinct
  /// step demand. Keyed by (level, fixed-part mask, 1-based step).
  std::map<std::tuple<int, std::uint32_t, std::size_t>, std::vector<int>> leaders;
};

/// Leader set: lowest-indexed user of each distinct step demand, in order
/// of first occurrence.
std::vector<int> default_leaders(const StepDemand& step);

/// XORs for one step of one sublayer.
std::vector<Transmission> coded_delivery_step(const PlacementPlan& plan, int level, int sublayer,
                                              const AssignmentSchedule& schedule, std::size_t column,
                                              const DemandVector& demands, const ContentStore& store,
                                              const std::vector<int>& leaders = {});

struct RandomDeliveryResult {
  std::vector<Transmission> transmissions;
  std::size_t bits = 0;
  std::size_t overshoot_bits = 0;  // bits beyond the uncached count per subfile
};

/// Random GF(2) combinations of each subfile until every requester can solve it.
RandomDeliveryResult random_delivery(const PlacementPlan& plan, int level, int sublayer,
                                     const std::vector<SubfileId>& subfiles, const DemandVector& demands,
                                     const ContentStore& store, RandomCodeCache* cache = nullptr);

/// Files forming the window R for N > K: the demanded files padded with the
/// smallest unrequested indices to K files. [N] when N <= K.
std::vector<int> delivery_window(int n_files, int n_users, const DemandVector& demands);

/// Coded schemes. `level` = 0 delivers every level, otherwise only that one.
Transcript deliver(const PlacementPlan& plan, const DemandVector& demands, const ContentStore& store,
                   ScheduleSource& schedules, const DeliveryOptions& options = {}, int level = 0);
Transcript deliver(const LibraryConfig& config, const CacheAllocation& alloc, const DemandVector& demands,
                   const ContentStore& store, ScheduleSource& schedules, const DeliveryOptions& options = {});

Transcript cauc_deliver(const PlacementPlan& plan, const DemandVector& demands, const ContentStore& store);
Transcript cauc_deliver(const LibraryConfig& config, const CacheAllocation& alloc, const DemandVector& demands,
                        const ContentStore& store);

/// `store` is the original library; the derived store is built internally.
Transcript cicc_deliver(const LibraryConfig& config, double cache_capacity, const DemandVector& demands,
                        const ContentStore& store, ScheduleSource& schedules);

/// Subfiles of user k's demanded file recovered from cache and transcript.
/// A user outside every transmitted group of a step rebuilds the missing XOR
/// from the transmitted ones of that step.
/// `level` = 0 recovers every level. Throws DecodeError when a part is missing.
std::map<SubfileId, BitVector> decode_subfiles(int user, const UserCache& cache, const Transcript& transcript,
                                               const DemandVector& demands, const PlacementPlan& plan, int level = 0,
                                               RandomCodeCache* code_cache = nullptr);
/// Reconstruction of W_{d_k}.
BitVector decode(int user, const UserCache& cache, const Transcript& transcript, const DemandVector& demands,
                 const PlacementPlan& plan, RandomCodeCache* code_cache = nullptr);

}  // namespace corrcache

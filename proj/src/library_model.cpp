#include "corrcache/library_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace corrcache {

std::uint64_t binom(long long n, long long k) {
  if (n < 0 || k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (long long i = 0; i < k; ++i) c = c * static_cast<unsigned>(n - i) / static_cast<unsigned>(i + 1);
  return static_cast<std::uint64_t>(c);
}

std::uint64_t divisibility_unit(int n_users) {
  std::uint64_t unit = 1;
  for (int t = 0; t <= n_users; ++t) unit = std::lcm(unit, binom(n_users, t));
  return unit;
}

// ---------------------------------------------------------------------------

SubfileId SubfileId::from_members(const std::vector<int>& members) {
  std::uint32_t mask = 0;
  for (int i : members) {
    if (i < 1 || i > kMaxFiles) throw std::invalid_argument("file index out of range in subfile set");
    mask |= std::uint32_t{1} << (i - 1);
  }
  return SubfileId(mask);
}

int SubfileId::level() const { return std::popcount(mask_); }

std::vector<int> SubfileId::members() const {
  std::vector<int> out;
  for (std::uint32_t m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m) + 1);
  return out;
}

std::string SubfileId::to_string() const {
  std::string s = "{";
  bool first = true;
  for (int i : members()) {
    if (!first) s += ',';
    s += std::to_string(i);
    first = false;
  }
  return s + "}";
}

bool SubfileId::operator<(const SubfileId& other) const {
  const int a = level(), b = other.level();
  if (a != b) return a < b;
  const std::uint32_t diff = mask_ ^ other.mask_;
  if (diff == 0) return false;
  // The set holding the lowest differing element comes first.
  return (mask_ & (diff & (~diff + 1))) != 0;
}

// ---------------------------------------------------------------------------

void LibraryConfig::validate() const {
  if (n_files < 1 || n_files > kMaxFiles)
    throw std::invalid_argument("n_files must be in [1, " + std::to_string(kMaxFiles) + "]");
  if (n_users < 1 || n_users > kMaxUsers)
    throw std::invalid_argument("n_users must be in [1, " + std::to_string(kMaxUsers) + "]");
  if (static_cast<int>(subfile_sizes.size()) != n_files)
    throw std::invalid_argument("subfile_sizes must have exactly n_files entries");
  for (double f : subfile_sizes)
    if (!(f >= 0.0) || !std::isfinite(f)) throw std::invalid_argument("subfile sizes must be finite and nonnegative");
  if (!(cache_capacity >= 0.0)) throw std::invalid_argument("cache capacity must be nonnegative");
  if (!(file_size(*this) > 0.0)) throw std::invalid_argument("file size must be positive");
}

LibraryConfig LibraryConfig::clamped() const {
  LibraryConfig out = *this;
  const double whole = library_size(*this) / file_size(*this);
  out.cache_capacity = std::clamp(cache_capacity, 0.0, whole);
  return out;
}

std::vector<std::uint64_t> LibraryConfig::integral_sizes() const {
  std::vector<std::uint64_t> out;
  out.reserve(subfile_sizes.size());
  for (double f : subfile_sizes) {
    if (f != std::floor(f)) throw std::invalid_argument("subfile sizes must be integral for bit-level simulation");
    out.push_back(static_cast<std::uint64_t>(f));
  }
  return out;
}

double file_size(const LibraryConfig& config) {
  double f = 0.0;
  for (int l = 1; l <= config.n_files; ++l)
    f += static_cast<double>(binom(config.n_files - 1, l - 1)) * config.subfile_sizes[l - 1];
  return f;
}

double library_size(const LibraryConfig& config) {
  double f = 0.0;
  for (int l = 1; l <= config.n_files; ++l)
    f += static_cast<double>(binom(config.n_files, l)) * config.subfile_sizes[l - 1];
  return f;
}

std::vector<SubfileId> subfiles_of_level(int n_files, int level) {
  if (n_files < 1 || n_files > kMaxFiles) throw std::invalid_argument("n_files out of range");
  if (level < 1 || level > n_files) throw std::out_of_range("level must be in [1, n_files]");
  std::vector<SubfileId> out;
  out.reserve(binom(n_files, level));
  std::vector<int> idx(level);
  std::iota(idx.begin(), idx.end(), 1);
  while (true) {
    out.push_back(SubfileId::from_members(idx));
    int pos = level - 1;
    while (pos >= 0 && idx[pos] == n_files - (level - 1 - pos)) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int q = pos + 1; q < level; ++q) idx[q] = idx[q - 1] + 1;
  }
  return out;
}

std::vector<SubfileId> all_subfiles(int n_files) {
  std::vector<SubfileId> out;
  for (int l = 1; l <= n_files; ++l) {
    auto level = subfiles_of_level(n_files, l);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

std::vector<SubfileId> subfiles_of_file(int n_files, int file) {
  std::vector<SubfileId> out;
  for (auto id : all_subfiles(n_files))
    if (id.contains(file)) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------

void DemandVector::validate(int n_files, int n_users) const {
  if (user_count() != n_users)
    throw std::invalid_argument("demand vector has " + std::to_string(user_count()) + " entries, expected " +
                                std::to_string(n_users));
  for (int d : demands)
    if (d < 1 || d > n_files) throw std::invalid_argument("demand " + std::to_string(d) + " outside [1, N]");
}

std::string DemandVector::to_string() const {
  std::string s;
  for (std::size_t k = 0; k < demands.size(); ++k) {
    if (k) s += ' ';
    s += std::to_string(demands[k]);
  }
  return s;
}

CacheAllocation CacheAllocation::from_t(const std::vector<double>& t, int n_users) {
  CacheAllocation a;
  for (double v : t) a.fractions.push_back(v / n_users);
  return a;
}

double CacheAllocation::cached_bits(const LibraryConfig& config) const {
  double bits = 0.0;
  for (int l = 1; l <= config.n_files; ++l)
    bits += static_cast<double>(binom(config.n_files, l)) * fractions.at(l - 1) * config.subfile_sizes[l - 1];
  return bits;
}

bool CacheAllocation::feasible(const LibraryConfig& config) const {
  const double f = file_size(config);
  return cached_bits(config) <= config.cache_capacity * f + 1e-9 * f;
}

void CacheAllocation::validate(const LibraryConfig& config) const {
  if (static_cast<int>(fractions.size()) != config.n_files)
    throw std::invalid_argument("allocation must have one fraction per level");
  for (double p : fractions)
    if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) throw std::invalid_argument("allocation fractions must lie in [0, 1]");
  if (!feasible(config)) throw std::invalid_argument("allocation exceeds the cache capacity");
}

// ---------------------------------------------------------------------------

ContentStore::ContentStore(const LibraryConfig& config, std::uint64_t seed)
    : n_files_(config.n_files), seed_(seed) {
  config.validate();
  const auto sizes = config.integral_sizes();
  std::mt19937_64 rng(seed);
  for (auto id : all_subfiles(config.n_files))
    subfiles_.emplace(id.mask(), BitVector::random(sizes[id.level() - 1], rng));
}

ContentStore::ContentStore(const LibraryConfig& config, std::map<std::uint32_t, BitVector> subfiles,
                           std::uint64_t seed)
    : n_files_(config.n_files), seed_(seed), subfiles_(std::move(subfiles)) {
  const auto sizes = config.integral_sizes();
  for (auto id : all_subfiles(config.n_files)) {
    auto it = subfiles_.find(id.mask());
    if (it == subfiles_.end() || it->second.size() != sizes[id.level() - 1])
      throw std::invalid_argument("content for subfile " + id.to_string() + " missing or of wrong length");
  }
  if (subfiles_.size() != (std::size_t{1} << n_files_) - 1)
    throw std::invalid_argument("content store holds entries outside the library");
}

const BitVector& ContentStore::subfile(SubfileId id) const {
  auto it = subfiles_.find(id.mask());
  if (it == subfiles_.end()) throw std::out_of_range("no subfile " + id.to_string());
  return it->second;
}

BitVector ContentStore::file(int file) const {
  BitVector out;
  for (auto id : subfiles_of_file(n_files_, file)) out.append(subfile(id));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_ratios(int n_files, const std::vector<double>& ratios) {
  if (static_cast<int>(ratios.size()) != n_files) throw std::invalid_argument("need one ratio per level");
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("ratios must be nonnegative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("ratios must sum to 1");
}

}  // namespace

LibraryConfig ratios_to_sizes(const ExperimentSpec& spec) {
  check_ratios(spec.n_files, spec.ratios);
  if (!(spec.file_bits > 0.0)) throw std::invalid_argument("file size must be positive");
  const std::uint64_t unit = spec.rounding_unit != 0 ? spec.rounding_unit : divisibility_unit(spec.n_users);
  LibraryConfig config{spec.n_files, spec.n_users, spec.cache_capacity, {}};
  for (int l = 1; l <= spec.n_files; ++l) {
    const double exact = spec.ratios[l - 1] * spec.file_bits / static_cast<double>(binom(spec.n_files - 1, l - 1));
    const double units = std::floor(exact / static_cast<double>(unit) + 1e-9);
    config.subfile_sizes.push_back(units * static_cast<double>(unit));
  }
  config.validate();
  return config;
}

LibraryConfig ratios_to_exact_sizes(int n_files, int n_users, double cache_capacity,
                                    const std::vector<double>& ratios) {
  check_ratios(n_files, ratios);
  LibraryConfig config{n_files, n_users, cache_capacity, {}};
  for (int l = 1; l <= n_files; ++l)
    config.subfile_sizes.push_back(ratios[l - 1] / static_cast<double>(binom(n_files - 1, l - 1)));
  config.validate();
  return config;
}

std::vector<double> sizes_to_ratios(const LibraryConfig& config) {
  const double f = file_size(config);
  std::vector<double> r;
  for (int l = 1; l <= config.n_files; ++l)
    r.push_back(static_cast<double>(binom(config.n_files - 1, l - 1)) * config.subfile_sizes[l - 1] / f);
  return r;
}

}  // namespace corrcache

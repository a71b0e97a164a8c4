#include "corrcache/delivery_engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace corrcache {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::cacc: return "cacc";
    case Scheme::cauc: return "cauc";
    case Scheme::cicc: return "cicc";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "cacc") return Scheme::cacc;
  if (name == "cauc") return Scheme::cauc;
  if (name == "cicc") return Scheme::cicc;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected cacc, cauc or cicc)");
}

std::string to_string(TransmissionKind kind) {
  switch (kind) {
    case TransmissionKind::xor_combo: return "xor";
    case TransmissionKind::random_combo: return "random";
    case TransmissionKind::uncoded: return "uncoded";
  }
  return "?";
}

std::string to_string(LevelProcedure procedure) {
  switch (procedure) {
    case LevelProcedure::none: return "none";
    case LevelProcedure::coded: return "coded";
    case LevelProcedure::random: return "random";
    case LevelProcedure::uncoded: return "uncoded";
  }
  return "?";
}

std::vector<std::uint32_t> user_subsets(int n_users, int t) {
  if (t < 0 || t > n_users) return {};
  std::vector<std::uint32_t> out;
  out.reserve(binom(n_users, t));
  if (t == 0) return {0u};
  std::vector<int> idx(t);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::uint32_t m = 0;
    for (int i : idx) m |= 1u << i;
    out.push_back(m);
    int pos = t - 1;
    while (pos >= 0 && idx[pos] == n_users - t + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int q = pos + 1; q < t; ++q) idx[q] = idx[q - 1] + 1;
  }
  return out;
}

namespace {

std::uint32_t user_bit(int user) { return 1u << (user - 1); }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Sublayer make_sublayer(int n_users, int t, std::size_t offset, std::size_t bits) {
  Sublayer s;
  s.t = t;
  s.offset = offset;
  s.bits = bits;
  s.labels = user_subsets(n_users, t);
  for (std::size_t i = 0; i < s.labels.size(); ++i) s.label_index.emplace(s.labels[i], i);
  if (bits % s.labels.size() != 0)
    throw std::domain_error("subfile layer of " + std::to_string(bits) + " bits does not split into binom(" +
                            std::to_string(n_users) + ", " + std::to_string(t) +
                            ") equal parts; prepare sizes with ratios_to_sizes");
  return s;
}

// Builds the sublayers of one level from the envelope split of t.
LevelPlan plan_level(const LibraryConfig& config, int level, std::size_t bits, double t,
                     const ConvexEnvelope& envelope, bool memory_sharing, double& cache_slack) {
  const int k = config.n_users;
  LevelPlan lp;
  lp.level = level;
  lp.subfile_bits = bits;
  if (bits == 0) return lp;
  const double rounded = std::round(t);
  if (std::abs(t - rounded) < 1e-9) {
    const int ti = static_cast<int>(rounded);
    if (!memory_sharing || envelope.values()[ti] <= envelope.at(ti) + 1e-12) {
      lp.sublayers.push_back(make_sublayer(k, ti, 0, bits));
      return lp;
    }
  }
  if (!memory_sharing)
    throw std::invalid_argument("level " + std::to_string(level) + " needs an integer t without memory sharing");
  const MemorySharing split = envelope.split(t);
  if (split.single()) {
    lp.sublayers.push_back(make_sublayer(k, split.t_low, 0, bits));
    return lp;
  }
  const std::uint64_t unit = std::lcm(binom(k, split.t_low), binom(k, split.t_high));
  if (bits % unit != 0)
    throw std::domain_error("level " + std::to_string(level) + " size " + std::to_string(bits) +
                            " is not a multiple of the memory-sharing unit " + std::to_string(unit));
  const std::size_t units = bits / unit;
  const std::size_t low_units = static_cast<std::size_t>(std::llround(split.weight_low * static_cast<double>(units)));
  const std::size_t low_bits = low_units * unit;
  const std::size_t high_bits = bits - low_bits;
  if (low_bits > 0) lp.sublayers.push_back(make_sublayer(k, split.t_low, 0, low_bits));
  if (high_bits > 0) lp.sublayers.push_back(make_sublayer(k, split.t_high, low_bits, high_bits));

  const double deviation = std::abs(static_cast<double>(low_bits) - split.weight_low * static_cast<double>(bits));
  const double f = file_size(config);
  const double rate_per_bit =
      std::abs(envelope.values()[split.t_low] - envelope.values()[split.t_high]) * f / static_cast<double>(bits);
  lp.padding_slack_bits = deviation * rate_per_bit;
  cache_slack += deviation * static_cast<double>(binom(config.n_files, level)) *
                 static_cast<double>(split.t_high - split.t_low) / k;
  return lp;
}

PlacementPlan make_coded_plan(Scheme scheme, const LibraryConfig& config, const std::vector<double>& t,
                              const std::vector<ConvexEnvelope>& envelopes, bool memory_sharing = true) {
  PlacementPlan plan;
  plan.scheme = scheme;
  plan.config = config;
  const auto sizes = config.integral_sizes();
  for (int l = 1; l <= config.n_files; ++l) {
    plan.levels.push_back(plan_level(config, l, sizes[l - 1], t[l - 1], envelopes[l - 1], memory_sharing,
                                             plan.cache_slack_bits));
    plan.padding_slack_bits += plan.levels.back().padding_slack_bits;
  }
  return plan;
}

}  // namespace

std::size_t Sublayer::cached_bits(int user) const {
  std::size_t n = 0;
  for (auto a : labels)
    if (a & user_bit(user)) ++n;
  return n * part_bits();
}

PlacementPlan make_cacc_plan(const LibraryConfig& config, const CacheAllocation& alloc, bool memory_sharing) {
  config.validate();
  alloc.validate(config);
  std::vector<double> t;
  std::vector<ConvexEnvelope> envelopes;
  for (int l = 1; l <= config.n_files; ++l) {
    t.push_back(alloc.t(l, config.n_users));
    envelopes.push_back(level_rate_curve(config, l).envelope);
  }
  return make_coded_plan(Scheme::cacc, config, t, envelopes, memory_sharing);
}

PlacementPlan make_cauc_plan(const LibraryConfig& config, const CacheAllocation& alloc) {
  config.validate();
  alloc.validate(config);
  PlacementPlan plan;
  plan.scheme = Scheme::cauc;
  plan.config = config;
  const auto sizes = config.integral_sizes();
  const int n = config.n_files;
  for (int l = 1; l <= n; ++l) {
    LevelPlan lp;
    lp.level = l;
    lp.subfile_bits = sizes[l - 1];
    const double exact = std::clamp(alloc.fractions[l - 1], 0.0, 1.0) * static_cast<double>(sizes[l - 1]);
    lp.cauc_prefix = std::min<std::size_t>(sizes[l - 1], static_cast<std::size_t>(std::floor(exact + 1e-9)));
    lp.padding_slack_bits = std::max(0.0, exact - static_cast<double>(lp.cauc_prefix)) * static_cast<double>(binom(n, l));
    plan.padding_slack_bits += lp.padding_slack_bits;
    plan.levels.push_back(std::move(lp));
  }
  return plan;
}

PlacementPlan make_cicc_plan(const LibraryConfig& config, double cache_capacity) {
  config.validate();
  LibraryConfig derived{config.n_files, config.n_users, cache_capacity, std::vector<double>(config.n_files, 0.0)};
  derived.subfile_sizes[0] = file_size(config);
  const double m = std::clamp(cache_capacity, 0.0, static_cast<double>(config.n_files));
  std::vector<double> t(config.n_files, 0.0);
  t[0] = config.n_users * m / config.n_files;
  std::vector<ConvexEnvelope> envelopes(config.n_files, ConvexEnvelope(std::vector<double>(config.n_users + 1, 0.0)));
  envelopes[0] = cicc_envelope(config);
  return make_coded_plan(Scheme::cicc, derived, t, envelopes);
}

// ---------------------------------------------------------------------------

std::size_t UserCache::cached_bits() const {
  std::size_t n = 0;
  for (const auto& [key, bits] : parts) n += bits.size();
  for (const auto& [key, bits] : prefixes) n += bits.size();
  return n;
}

std::vector<UserCache> place(const PlacementPlan& plan, const ContentStore& store) {
  const int n = plan.config.n_files, k = plan.config.n_users;
  const auto subfiles = all_subfiles(n);
  std::vector<UserCache> caches(k);
  for (int user = 1; user <= k; ++user) {
    UserCache& cache = caches[user - 1];
    cache.user = user;
    for (auto id : subfiles) {
      const LevelPlan& lp = plan.level(id.level());
      if (lp.subfile_bits == 0) continue;
      const BitVector& content = store.subfile(id);
      if (plan.scheme == Scheme::cauc) {
        if (lp.cauc_prefix > 0) cache.prefixes.emplace(id.mask(), content.slice(0, lp.cauc_prefix));
        continue;
      }
      for (std::size_t s = 0; s < lp.sublayers.size(); ++s) {
        const Sublayer& sl = lp.sublayers[s];
        const std::size_t part = sl.part_bits();
        for (std::size_t p = 0; p < sl.labels.size(); ++p)
          if (sl.labels[p] & user_bit(user))
            cache.parts.emplace(PartKey{id.mask(), static_cast<int>(s), sl.labels[p]},
                                content.slice(sl.offset + p * part, part));
      }
    }
  }
  return caches;
}

std::vector<UserCache> place(const LibraryConfig& config, const CacheAllocation& alloc, const ContentStore& store) {
  return place(make_cacc_plan(config, alloc), store);
}

ContentStore cicc_store(const LibraryConfig& config, const ContentStore& store) {
  LibraryConfig derived{config.n_files, config.n_users, config.cache_capacity,
                        std::vector<double>(config.n_files, 0.0)};
  derived.subfile_sizes[0] = file_size(config);
  std::map<std::uint32_t, BitVector> content;
  for (auto id : all_subfiles(config.n_files))
    content.emplace(id.mask(), id.level() == 1 ? store.file(id.members().front()) : BitVector{});
  return ContentStore(derived, std::move(content), store.seed());
}

// ---------------------------------------------------------------------------

void Transcript::merge(Transcript&& other) {
  const std::size_t shift = transmissions.size();
  for (auto& s : other.steps) s.first_transmission += shift;
  for (auto& t : other.transmissions) transmissions.push_back(std::move(t));
  total_bits += other.total_bits;
  if (level_bits.size() < other.level_bits.size()) level_bits.resize(other.level_bits.size(), 0);
  for (std::size_t i = 0; i < other.level_bits.size(); ++i) level_bits[i] += other.level_bits[i];
  steps.insert(steps.end(), other.steps.begin(), other.steps.end());
  sublayers.insert(sublayers.end(), other.sublayers.begin(), other.sublayers.end());
  random_overshoot_bits += other.random_overshoot_bits;
  padding_slack_bits += other.padding_slack_bits;
}

std::string format_transcript(const Transcript& tr) {
  std::ostringstream out;
  out << "# scheme=" << to_string(tr.scheme) << " total_bits=" << tr.total_bits
      << " transmissions=" << tr.transmissions.size() << " content_seed=" << tr.content_seed
      << " random_overshoot_bits=" << tr.random_overshoot_bits << " padding_slack_bits=" << tr.padding_slack_bits
      << '\n';
  for (const auto& t : tr.transmissions) {
    out << to_string(t.kind) << " bits=" << t.payload.size() << " level=" << t.level << " sublayer=" << t.sublayer;
    switch (t.kind) {
      case TransmissionKind::xor_combo: {
        out << " V=" << SubfileId(t.users).to_string() << " terms=";
        for (std::size_t i = 0; i < t.terms.size(); ++i)
          out << (i ? "+" : "") << "W" << t.terms[i].subfile.to_string() << "^" << SubfileId(t.terms[i].label).to_string();
        break;
      }
      case TransmissionKind::random_combo:
        out << " subfile=" << t.subfile.to_string() << " seed=" << t.combo_seed;
        break;
      case TransmissionKind::uncoded:
        out << " subfile=" << t.subfile.to_string() << " offset=" << t.offset;
        break;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

void ScheduleSource::add_fixture(AssignmentSchedule schedule) {
  const auto key = std::make_tuple(SubfileId::from_members(schedule.window).mask(),
                                   schedule.fixed_part.empty() ? 0u : SubfileId::from_members(schedule.fixed_part).mask(),
                                   schedule.level);
  schedules_.insert_or_assign(key, std::move(schedule));
}

const AssignmentSchedule& ScheduleSource::get(const std::vector<int>& window, const std::vector<int>& fixed_part,
                                              int level) {
  const std::uint32_t w = SubfileId::from_members(window).mask();
  const std::uint32_t f = fixed_part.empty() ? 0u : SubfileId::from_members(fixed_part).mask();
  const auto key = std::make_tuple(w, f, level);
  auto it = schedules_.find(key);
  if (it != schedules_.end()) return it->second;
  const std::uint64_t seed = splitmix(seed_ ^ splitmix((std::uint64_t{w} << 32) ^ (std::uint64_t{f} << 6) ^
                                                       static_cast<std::uint64_t>(level)));
  return schedules_.emplace(key, generate_schedule(window, fixed_part, level, seed)).first->second;
}

// ---------------------------------------------------------------------------

std::vector<int> default_leaders(const StepDemand& step) {
  std::vector<int> leaders;
  std::set<std::uint32_t> seen;
  for (std::size_t k = 0; k < step.per_user.size(); ++k)
    if (seen.insert(step.per_user[k].mask()).second) leaders.push_back(static_cast<int>(k) + 1);
  return leaders;
}

namespace {

std::uint32_t leader_mask(const StepDemand& sd, const std::vector<int>& leaders) {
  std::uint32_t mask = 0;
  std::set<std::uint32_t> covered;
  for (int k : leaders) {
    if (k < 1 || k > static_cast<int>(sd.per_user.size())) throw std::invalid_argument("leader user out of range");
    if (!covered.insert(sd.per_user[k - 1].mask()).second)
      throw std::invalid_argument("leaders must have pairwise distinct step demands");
    mask |= user_bit(k);
  }
  if (covered.size() != sd.distinct()) throw std::invalid_argument("leaders must cover every distinct step demand");
  return mask;
}

BitVector part_of(const ContentStore& store, SubfileId id, const Sublayer& sl, std::uint32_t label) {
  const std::size_t part = sl.part_bits();
  return store.subfile(id).slice(sl.offset + sl.label_index.at(label) * part, part);
}

BitVector unknown_mask(const Sublayer& sl, int user) {
  BitVector mask(sl.bits);
  const std::size_t part = sl.part_bits();
  for (std::size_t p = 0; p < sl.labels.size(); ++p)
    if (!(sl.labels[p] & user_bit(user)))
      for (std::size_t i = 0; i < part; ++i) mask.set(p * part + i, true);
  return mask;
}

std::size_t uncached_bits(const Sublayer& sl, int n_users) {
  return static_cast<std::size_t>(binom(n_users - 1, sl.t)) * sl.part_bits();
}

}  // namespace

std::vector<Transmission> coded_delivery_step(const PlacementPlan& plan, int level, int sublayer,
                                              const AssignmentSchedule& schedule, std::size_t column,
                                              const DemandVector& demands, const ContentStore& store,
                                              const std::vector<int>& leaders) {
  const int k = plan.config.n_users;
  const Sublayer& sl = plan.level(level).sublayers.at(sublayer);
  const StepDemand sd = step_demands(schedule, demands, column);
  const std::uint32_t lead = leader_mask(sd, leaders.empty() ? default_leaders(sd) : leaders);
  std::vector<Transmission> out;
  for (std::uint32_t v : user_subsets(k, sl.t + 1)) {
    if ((v & lead) == 0) continue;
    Transmission tx;
    tx.kind = TransmissionKind::xor_combo;
    tx.level = level;
    tx.sublayer = sublayer;
    tx.users = v;
    tx.payload = BitVector(sl.part_bits());
    for (std::uint32_t m = v; m != 0; m &= m - 1) {
      const int user = std::countr_zero(m) + 1;
      const std::uint32_t label = v & ~user_bit(user);
      const SubfileId want = sd.per_user[user - 1];
      tx.payload ^= part_of(store, want, sl, label);
      tx.terms.push_back({user, want, label});
    }
    out.push_back(std::move(tx));
  }
  return out;
}

std::shared_ptr<const RandomSolvePlan> RandomCodeCache::find(const Key& key) const {
  std::lock_guard lock(mutex_);
  auto it = plans_.find(key);
  return it == plans_.end() ? nullptr : it->second;
}

void RandomCodeCache::store(const Key& key, std::shared_ptr<const RandomSolvePlan> plan) {
  std::lock_guard lock(mutex_);
  plans_.insert_or_assign(key, std::move(plan));
}

std::size_t RandomCodeCache::size() const {
  std::lock_guard lock(mutex_);
  return plans_.size();
}

namespace {

// Gaussian elimination over the combination stream drawn from `seed`, with
// each stored row tracking which drawn rows it sums. Null if `limit`
// combinations do not reach full rank.
std::shared_ptr<const RandomSolvePlan> build_solve_plan(const Sublayer& sl, int user, std::uint64_t seed,
                                                        std::size_t needed, std::size_t limit) {
  auto plan = std::make_shared<RandomSolvePlan>();
  const BitVector unknown = unknown_mask(sl, user);
  std::vector<int> where(sl.bits, -1);
  std::vector<BitVector> rows, combos;
  std::vector<std::size_t> pivots;
  std::mt19937_64 rng(seed);
  while (rows.size() < needed) {
    if (plan->count >= limit) return nullptr;
    BitVector row = BitVector::random(sl.bits, rng);
    row &= unknown;
    BitVector combo(needed);
    combo.set(rows.size(), true);
    std::size_t p = row.first_set();
    while (p < sl.bits && where[p] >= 0) {
      row ^= rows[where[p]];
      combo ^= combos[where[p]];
      p = row.first_set();
    }
    if (p < sl.bits) {
      where[p] = static_cast<int>(rows.size());
      pivots.push_back(p);
      rows.push_back(std::move(row));
      combos.push_back(std::move(combo));
      plan->rows.push_back(plan->count);
    }
    ++plan->count;
  }
  // Back substitution from the highest pivot; every other bit of a stored
  // row is a higher pivot.
  std::vector<std::size_t> order(pivots.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pivots[a] > pivots[b]; });
  std::vector<BitVector> solution(rows.size());
  for (std::size_t r : order) {
    BitVector x = combos[r];
    for (std::size_t q = rows[r].first_set(); q < sl.bits; ++q)
      if (q != pivots[r] && rows[r].get(q)) x ^= solution[where[q]];
    solution[r] = std::move(x);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) plan->bits.emplace_back(pivots[r], std::move(solution[r]));
  return plan;
}

std::shared_ptr<const RandomSolvePlan> solve_plan(const Sublayer& sl, int user, int n_users, std::uint64_t seed,
                                                  std::size_t needed, std::size_t limit, RandomCodeCache* cache) {
  const RandomCodeCache::Key key{seed, sl.bits, sl.t, n_users, user};
  if (cache)
    if (auto found = cache->find(key); found && found->count <= limit) return found;
  auto plan = build_solve_plan(sl, user, seed, needed, limit);
  if (plan && cache) cache->store(key, plan);
  return plan;
}

}  // namespace

RandomDeliveryResult random_delivery(const PlacementPlan& plan, int level, int sublayer,
                                     const std::vector<SubfileId>& subfiles, const DemandVector& demands,
                                     const ContentStore& store, RandomCodeCache* cache) {
  const int k = plan.config.n_users;
  const Sublayer& sl = plan.level(level).sublayers.at(sublayer);
  const std::size_t needed = uncached_bits(sl, k);
  RandomDeliveryResult result;
  if (needed == 0) return result;
  for (auto id : subfiles) {
    std::vector<int> requesters;
    for (int user = 1; user <= k; ++user)
      if (id.contains(demands[user])) requesters.push_back(user);
    if (requesters.empty()) continue;

    const std::uint64_t seed = splitmix(store.seed() ^ splitmix((std::uint64_t{id.mask()} << 20) ^
                                                                (static_cast<std::uint64_t>(level) << 8) ^
                                                                static_cast<std::uint64_t>(sublayer)));
    const std::size_t guard = needed + 64 * requesters.size() + 64;
    // Every requester reads the same combination stream, so the stream stops
    // once the slowest requester reaches full rank.
    std::size_t count = 0;
    for (int user : requesters) {
      const auto plan_for_user = solve_plan(sl, user, k, seed, needed, guard, cache);
      if (!plan_for_user) throw std::runtime_error("random delivery exceeded its combination guard");
      count = std::max(count, plan_for_user->count);
    }

    const BitVector data = store.subfile(id).slice(sl.offset, sl.bits);
    std::mt19937_64 rng(seed);
    Transmission tx;
    tx.kind = TransmissionKind::random_combo;
    tx.level = level;
    tx.sublayer = sublayer;
    tx.subfile = id;
    tx.combo_seed = seed;
    tx.payload = BitVector(count);
    for (std::size_t i = 0; i < count; ++i) tx.payload.set(i, BitVector::random(sl.bits, rng).dot(data));
    result.bits += count;
    result.overshoot_bits += count - needed;
    result.transmissions.push_back(std::move(tx));
  }
  return result;
}

std::vector<int> delivery_window(int n_files, int n_users, const DemandVector& demands) {
  std::vector<int> window;
  if (n_files <= n_users) {
    for (int i = 1; i <= n_files; ++i) window.push_back(i);
    return window;
  }
  std::set<int> chosen(demands.demands.begin(), demands.demands.end());
  for (int i = 1; i <= n_files && static_cast<int>(chosen.size()) < n_users; ++i) chosen.insert(i);
  return {chosen.begin(), chosen.end()};
}

// ---------------------------------------------------------------------------

Transcript deliver(const PlacementPlan& plan, const DemandVector& demands, const ContentStore& store,
                   ScheduleSource& schedules, const DeliveryOptions& options, int only_level) {
  if (plan.scheme == Scheme::cauc) throw std::invalid_argument("use cauc_deliver for the uncoded scheme");
  const int n = plan.config.n_files, k = plan.config.n_users;
  demands.validate(n, k);
  const std::vector<int> window = delivery_window(n, k, demands);
  std::vector<int> complement;
  for (int i = 1; i <= n; ++i)
    if (std::find(window.begin(), window.end(), i) == window.end()) complement.push_back(i);
  const int r = static_cast<int>(window.size());

  Transcript tr;
  tr.scheme = plan.scheme;
  tr.content_seed = store.seed();
  tr.level_bits.assign(n, 0);

  for (int l = 1; l <= n; ++l) {
    if (only_level != 0 && l != only_level) continue;
    const LevelPlan& lp = plan.level(l);
    if (lp.subfile_bits == 0) continue;
    tr.padding_slack_bits += lp.padding_slack_bits;

    // One schedule per fixed part Rbar of size s.
    std::vector<const AssignmentSchedule*> groups;
    const int s_lo = std::max(l - r, 0);
    const int s_hi = std::min(l - 1, static_cast<int>(complement.size()));
    for (int s = s_lo; s <= s_hi; ++s) {
      for (std::uint32_t pick : user_subsets(static_cast<int>(complement.size()), s)) {
        std::vector<int> fixed;
        for (std::uint32_t m = pick; m != 0; m &= m - 1) fixed.push_back(complement[std::countr_zero(m)]);
        groups.push_back(&schedules.get(window, fixed, l));
      }
    }
    std::vector<SubfileId> demanded;
    for (auto id : subfiles_of_level(n, l))
      for (int d : demands.demands)
        if (id.contains(d)) {
          demanded.push_back(id);
          break;
        }

    for (std::size_t si = 0; si < lp.sublayers.size(); ++si) {
      const Sublayer& sl = lp.sublayers[si];
      SublayerRecord rec{l, static_cast<int>(si), sl.t, LevelProcedure::none, 0, 0, 0};
      if (sl.t == k) {
        tr.sublayers.push_back(rec);
        continue;
      }
      // Coded accounting first; payloads are built only for the procedure kept.
      struct Step {
        const AssignmentSchedule* schedule;
        std::size_t column;
        std::vector<int> leaders;
        std::size_t count;
      };
      std::vector<Step> steps;
      for (const AssignmentSchedule* sched : groups) {
        const std::uint32_t fixed_mask =
            sched->fixed_part.empty() ? 0u : SubfileId::from_members(sched->fixed_part).mask();
        for (std::size_t j = 0; j < sched->columns.size(); ++j) {
          const StepDemand sd = step_demands(*sched, demands, j);
          std::vector<int> leaders = default_leaders(sd);
          if (auto it = options.leaders.find({l, fixed_mask, j + 1}); it != options.leaders.end()) {
            leader_mask(sd, it->second);
            leaders = it->second;
          }
          const std::size_t count = binom(k, sl.t + 1) - binom(k - static_cast<int>(leaders.size()), sl.t + 1);
          rec.coded_bits += count * sl.part_bits();
          steps.push_back({sched, j, std::move(leaders), count});
        }
      }
      const std::size_t nominal_random = demanded.size() * uncached_bits(sl, k);
      bool use_random = false;
      RandomDeliveryResult random;
      if (options.allow_random && rec.coded_bits > nominal_random) {
        random = random_delivery(plan, l, static_cast<int>(si), demanded, demands, store, options.code_cache.get());
        rec.random_bits = random.bits;
        tr.random_overshoot_bits += random.overshoot_bits;
        use_random = random.bits < rec.coded_bits;
      }
      if (use_random) {
        rec.procedure = LevelProcedure::random;
        rec.bits = random.bits;
        for (auto& t : random.transmissions) tr.transmissions.push_back(std::move(t));
      } else {
        rec.procedure = LevelProcedure::coded;
        rec.bits = rec.coded_bits;
        for (const Step& st : steps) {
          auto txs = coded_delivery_step(plan, l, static_cast<int>(si), *st.schedule, st.column, demands, store,
                                         st.leaders);
          StepRecord sr;
          sr.level = l;
          sr.sublayer = static_cast<int>(si);
          sr.fixed_part = st.schedule->fixed_part.empty() ? 0u : SubfileId::from_members(st.schedule->fixed_part).mask();
          sr.step = st.column + 1;
          sr.distinct_demands = st.leaders.size();
          sr.transmissions = txs.size();
          sr.bits = txs.size() * sl.part_bits();
          sr.t = sl.t;
          for (auto id : step_demands(*st.schedule, demands, st.column).per_user) sr.step_demands.push_back(id.mask());
          for (int u : st.leaders) sr.leaders |= user_bit(u);
          sr.first_transmission = tr.transmissions.size();
          tr.steps.push_back(std::move(sr));
          for (auto& t : txs) tr.transmissions.push_back(std::move(t));
        }
      }
      tr.level_bits[l - 1] += rec.bits;
      tr.total_bits += rec.bits;
      tr.sublayers.push_back(rec);
    }
  }
  return tr;
}

Transcript deliver(const LibraryConfig& config, const CacheAllocation& alloc, const DemandVector& demands,
                   const ContentStore& store, ScheduleSource& schedules, const DeliveryOptions& options) {
  return deliver(make_cacc_plan(config, alloc), demands, store, schedules, options);
}

Transcript cauc_deliver(const PlacementPlan& plan, const DemandVector& demands, const ContentStore& store) {
  if (plan.scheme != Scheme::cauc) throw std::invalid_argument("cauc_deliver needs an uncoded placement plan");
  const int n = plan.config.n_files;
  demands.validate(n, plan.config.n_users);
  Transcript tr;
  tr.scheme = Scheme::cauc;
  tr.content_seed = store.seed();
  tr.level_bits.assign(n, 0);
  tr.padding_slack_bits = plan.padding_slack_bits;
  for (auto id : all_subfiles(n)) {
    const LevelPlan& lp = plan.level(id.level());
    if (lp.cauc_prefix >= lp.subfile_bits) continue;
    const bool requested = std::any_of(demands.demands.begin(), demands.demands.end(),
                                       [&](int d) { return id.contains(d); });
    if (!requested) continue;
    Transmission tx;
    tx.kind = TransmissionKind::uncoded;
    tx.level = id.level();
    tx.subfile = id;
    tx.offset = lp.cauc_prefix;
    tx.payload = store.subfile(id).slice(lp.cauc_prefix, lp.subfile_bits - lp.cauc_prefix);
    tr.level_bits[id.level() - 1] += tx.payload.size();
    tr.total_bits += tx.payload.size();
    tr.transmissions.push_back(std::move(tx));
  }
  for (int l = 1; l <= n; ++l)
    tr.sublayers.push_back({l, 0, 0, LevelProcedure::uncoded, 0, 0, tr.level_bits[l - 1]});
  return tr;
}

Transcript cauc_deliver(const LibraryConfig& config, const CacheAllocation& alloc, const DemandVector& demands,
                        const ContentStore& store) {
  return cauc_deliver(make_cauc_plan(config, alloc), demands, store);
}

Transcript cicc_deliver(const LibraryConfig& config, double cache_capacity, const DemandVector& demands,
                        const ContentStore& store, ScheduleSource& schedules) {
  const PlacementPlan plan = make_cicc_plan(config, cache_capacity);
  DeliveryOptions options;
  options.allow_random = false;
  return deliver(plan, demands, cicc_store(config, store), schedules, options);
}

// ---------------------------------------------------------------------------

namespace {

// Recovers the parts of d^j_user this user misses in one coded step. For a
// group B without leaders, Y_B is the XOR of Y_{(B u U) \ V} over every V
// in B u U holding one user per distinct step demand, V != U.
void decode_step(int user, const UserCache& cache, const Transcript& transcript, const StepRecord& step, int n_users,
                 std::map<PartKey, BitVector>& recovered) {
  std::unordered_map<std::uint32_t, const Transmission*> sent;
  for (std::size_t i = 0; i < step.transmissions; ++i) {
    const Transmission& tx = transcript.transmissions[step.first_transmission + i];
    sent.emplace(tx.users, &tx);
  }
  auto payload = [&](std::uint32_t v) -> const BitVector& {
    auto it = sent.find(v);
    if (it == sent.end())
      throw DecodeError("step " + std::to_string(step.step) + " of level " + std::to_string(step.level) +
                        " lacks the transmission for users " + SubfileId(v).to_string());
    return it->second->payload;
  };
  const std::uint32_t mine = step.step_demands.at(user - 1);
  for (std::uint32_t a : user_subsets(n_users, step.t)) {
    if (a & user_bit(user)) continue;
    const std::uint32_t b = a | user_bit(user);
    BitVector y;
    if (b & step.leaders) {
      y = payload(b);
    } else {
      const std::uint32_t pool = b | step.leaders;
      // Users of the pool grouped by step demand, one group per leader.
      std::vector<std::vector<int>> groups;
      for (std::uint32_t m = step.leaders; m != 0; m &= m - 1) {
        const int leader = std::countr_zero(m) + 1;
        std::vector<int> group;
        for (std::uint32_t p = pool; p != 0; p &= p - 1) {
          const int u = std::countr_zero(p) + 1;
          if (step.step_demands[u - 1] == step.step_demands[leader - 1]) group.push_back(u);
        }
        groups.push_back(std::move(group));
      }
      y = BitVector(sent.empty() ? 0 : sent.begin()->second->payload.size());
      std::vector<std::size_t> pick(groups.size(), 0);
      while (true) {
        std::uint32_t v = 0;
        for (std::size_t g = 0; g < groups.size(); ++g) v |= user_bit(groups[g][pick[g]]);
        if (v != step.leaders) y ^= payload(pool & ~v);
        std::size_t g = 0;
        while (g < groups.size() && ++pick[g] == groups[g].size()) pick[g++] = 0;
        if (g == groups.size()) break;
      }
    }
    for (std::uint32_t m = b; m != 0; m &= m - 1) {
      const int u = std::countr_zero(m) + 1;
      if (u == user) continue;
      auto it = cache.parts.find({step.step_demands[u - 1], step.sublayer, b & ~user_bit(u)});
      if (it == cache.parts.end())
        throw DecodeError("user " + std::to_string(user) + " lacks side information W" +
                          SubfileId(step.step_demands[u - 1]).to_string() + "^" +
                          SubfileId(b & ~user_bit(u)).to_string());
      y ^= it->second;
    }
    recovered.insert_or_assign({mine, step.sublayer, a}, std::move(y));
  }
}

}  // namespace

std::map<SubfileId, BitVector> decode_subfiles(int user, const UserCache& cache, const Transcript& transcript,
                                               const DemandVector& demands, const PlacementPlan& plan, int level,
                                               RandomCodeCache* code_cache) {
  const int n = plan.config.n_files;
  const int want = demands[user];
  std::map<PartKey, BitVector> recovered;
  std::map<std::pair<std::uint32_t, int>, BitVector> solved;
  std::map<std::uint32_t, const Transmission*> uncoded;

  for (const Transmission& tx : transcript.transmissions) {
    if (level != 0 && tx.level != level) continue;
    switch (tx.kind) {
      case TransmissionKind::xor_combo:
        break;
      case TransmissionKind::random_combo: {
        if (!tx.subfile.contains(want)) break;
        const Sublayer& sl = plan.level(tx.subfile.level()).sublayers.at(tx.sublayer);
        const std::size_t part = sl.part_bits();
        BitVector known(sl.bits);
        for (std::size_t p = 0; p < sl.labels.size(); ++p)
          if (sl.labels[p] & user_bit(user))
            known.write(p * part, cache.parts.at({tx.subfile.mask(), tx.sublayer, sl.labels[p]}));
        const std::size_t needed = uncached_bits(sl, plan.config.n_users);
        const auto solver =
            solve_plan(sl, user, plan.config.n_users, tx.combo_seed, needed, tx.payload.size(), code_cache);
        if (!solver)
          throw DecodeError("random combinations for W" + tx.subfile.to_string() + " do not reach full rank at user " +
                            std::to_string(user));
        // Right-hand sides of the rows the solver reads, cached bits removed.
        BitVector rhs(solver->rows.size());
        std::mt19937_64 rng(tx.combo_seed);
        std::size_t drawn = 0;
        for (std::size_t j = 0; j < solver->rows.size(); ++j) {
          BitVector coeff;
          while (drawn <= solver->rows[j]) {
            coeff = BitVector::random(sl.bits, rng);
            ++drawn;
          }
          rhs.set(j, tx.payload.get(solver->rows[j]) ^ coeff.dot(known));
        }
        BitVector x = known;
        for (const auto& [bit, mask] : solver->bits) x.set(bit, mask.dot(rhs));
        solved.insert_or_assign({tx.subfile.mask(), tx.sublayer}, std::move(x));
        break;
      }
      case TransmissionKind::uncoded:
        if (tx.subfile.contains(want)) uncoded[tx.subfile.mask()] = &tx;
        break;
    }
  }

  for (const StepRecord& step : transcript.steps) {
    if (level != 0 && step.level != level) continue;
    decode_step(user, cache, transcript, step, plan.config.n_users, recovered);
  }

  std::map<SubfileId, BitVector> out;
  for (auto id : subfiles_of_file(n, want)) {
    if (level != 0 && id.level() != level) continue;
    const LevelPlan& lp = plan.level(id.level());
    BitVector bits(lp.subfile_bits);
    if (plan.scheme == Scheme::cauc) {
      if (lp.cauc_prefix > 0) bits.write(0, cache.prefixes.at(id.mask()));
      if (lp.cauc_prefix < lp.subfile_bits) {
        auto it = uncoded.find(id.mask());
        if (it == uncoded.end()) throw DecodeError("no uncoded transmission of W" + id.to_string());
        bits.write(it->second->offset, it->second->payload);
      }
      out.emplace(id, std::move(bits));
      continue;
    }
    for (std::size_t s = 0; s < lp.sublayers.size(); ++s) {
      const Sublayer& sl = lp.sublayers[s];
      if (auto it = solved.find({id.mask(), static_cast<int>(s)}); it != solved.end()) {
        bits.write(sl.offset, it->second);
        continue;
      }
      const std::size_t part = sl.part_bits();
      for (std::size_t p = 0; p < sl.labels.size(); ++p) {
        const PartKey key{id.mask(), static_cast<int>(s), sl.labels[p]};
        const BitVector* src = nullptr;
        if (sl.labels[p] & user_bit(user)) {
          auto it = cache.parts.find(key);
          if (it != cache.parts.end()) src = &it->second;
        } else if (auto it = recovered.find(key); it != recovered.end()) {
          src = &it->second;
        }
        if (src == nullptr)
          throw DecodeError("user " + std::to_string(user) + " cannot recover W" + id.to_string() + "^" +
                            SubfileId(sl.labels[p]).to_string());
        bits.write(sl.offset + p * part, *src);
      }
    }
    out.emplace(id, std::move(bits));
  }
  return out;
}

BitVector decode(int user, const UserCache& cache, const Transcript& transcript, const DemandVector& demands,
                 const PlacementPlan& plan, RandomCodeCache* code_cache) {
  BitVector file;
  for (auto& [id, bits] : decode_subfiles(user, cache, transcript, demands, plan, 0, code_cache)) file.append(bits);
  return file;
}

}  // namespace corrcache

#include "doctest.h"

#include <random>

#include "corrcache/allocator.hpp"
#include "corrcache/delivery_engine.hpp"
#include "oracles.hpp"

using namespace corrcache;

namespace {

const std::size_t kF2 = 1000 * divisibility_unit(5);

LibraryConfig example_config() { return {5, 5, 0.5, {0, static_cast<double>(kF2), 0, 0, 0}}; }

PlacementPlan example_plan() {
  return make_cacc_plan(example_config(), CacheAllocation::from_t({0, 1, 0, 0, 0}, 5), false);
}

BitVector part(const ContentStore& store, const PlacementPlan& plan, const XorTerm& term, int sublayer) {
  const Sublayer& sl = plan.level(term.subfile.level()).sublayers.at(sublayer);
  return store.subfile(term.subfile).slice(sl.offset + sl.label_index.at(term.label) * sl.part_bits(), sl.part_bits());
}

// Every XOR is the sum of the parts it names, and each user of V is missing
// exactly the one part labelled V \ {user}.
void check_xor(const Transmission& tx, const PlacementPlan& plan, const ContentStore& store, int t) {
  CHECK(std::popcount(tx.users) == t + 1);
  CHECK(tx.terms.size() == static_cast<std::size_t>(t + 1));
  BitVector sum(tx.payload.size());
  for (const auto& term : tx.terms) {
    CHECK(((tx.users >> (term.user - 1)) & 1u) == 1u);
    CHECK(term.label == (tx.users & ~(1u << (term.user - 1))));
    sum ^= part(store, plan, term, tx.sublayer);
  }
  CHECK(sum == tx.payload);
}

bool all_decode(const PlacementPlan& plan, const ContentStore& store, const Transcript& tr, const DemandVector& d,
                RandomCodeCache* cache = nullptr) {
  const auto caches = place(plan, store);
  for (int k = 1; k <= d.user_count(); ++k) {
    try {
      if (!(decode(k, caches[k - 1], tr, d, plan, cache) == store.file(d[k]))) return false;
    } catch (const DecodeError&) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("placement") {
  const auto plan = example_plan();
  const ContentStore store(example_config(), 3);
  const auto caches = place(plan, store);
  REQUIRE(caches.size() == 5);
  for (int k = 1; k <= 5; ++k) {
    CHECK(caches[k - 1].cached_bits() == 10 * kF2 / 5);
    for (const auto& [key, bits] : caches[k - 1].parts) {
      CHECK(key.label == (1u << (k - 1)));
      CHECK(bits.size() == kF2 / 5);
    }
  }

  LibraryConfig c{3, 2, 0, {6, 6, 6}};
  const ContentStore s3(c, 1);
  const auto none = place(c, CacheAllocation::from_t({0, 0, 0}, 2), s3);
  for (const auto& u : none) CHECK(u.cached_bits() == 0);
  c.cache_capacity = library_size(c) / file_size(c);
  const auto all = place(c, CacheAllocation::from_t({2, 2, 2}, 2), s3);
  for (const auto& u : all) CHECK(u.cached_bits() == library_size(c));

  LibraryConfig odd{2, 3, 1, {7, 7}};
  CHECK_THROWS_AS(make_cacc_plan(odd, CacheAllocation::from_t({1, 1}, 3)), std::domain_error);
  CHECK_THROWS(make_cacc_plan(example_config(), CacheAllocation::from_t({0, 0.5, 0, 0, 0}, 5), false));
}

TEST_CASE("worked example steps") {
  const auto plan = example_plan();
  const ContentStore store(example_config(), 4);
  const auto sched = example1_schedule();

  const auto distinct = coded_delivery_step(plan, 2, 0, sched, 0, {{1, 2, 3, 4, 5}}, store, {1, 3, 5});
  CHECK(distinct.size() == 9);
  for (const auto& tx : distinct) {
    CHECK(tx.payload.size() == kF2 / 5);
    check_xor(tx, plan, store, 1);
  }
  CHECK(coded_delivery_step(plan, 2, 0, sched, 0, {{1, 2, 3, 4, 5}}, store).size() == 9);
  CHECK(coded_delivery_step(plan, 2, 0, sched, 0, {{1, 1, 1, 3, 4}}, store).size() == 7);
  CHECK(default_leaders(step_demands(sched, {{1, 2, 3, 4, 5}}, 0)) == std::vector<int>{1, 3, 5});
  CHECK(default_leaders(step_demands(sched, {{1, 1, 1, 3, 4}}, 0)) == std::vector<int>{1, 4});
}

TEST_CASE("worked example end to end") {
  const auto plan = example_plan();
  const ContentStore store(example_config(), 5);
  for (auto [demand, fifths, steps] :
       {std::tuple{std::vector<int>{1, 2, 3, 4, 5}, 36u, std::vector<std::size_t>{9, 9, 9, 9}},
        std::tuple{std::vector<int>{1, 1, 1, 3, 4}, 30u, std::vector<std::size_t>{7, 9, 7, 7}}}) {
    ScheduleSource schedules(1);
    schedules.add_fixture(example1_schedule());
    const DemandVector d{demand};
    const auto tr = deliver(plan, d, store, schedules);
    CHECK(tr.total_bits * 5 == fifths * kF2);
    std::vector<std::size_t> counts;
    for (const auto& s : tr.steps) counts.push_back(s.transmissions);
    CHECK(counts == steps);
    std::size_t sum = 0;
    for (const auto& tx : tr.transmissions) sum += tx.payload.size();
    CHECK(sum == tr.total_bits);
    CHECK(all_decode(plan, store, tr, d));
    CHECK(tr.content_seed == 5);
  }
}

TEST_CASE("uncached level with one demanded file") {
  LibraryConfig c{3, 4, 0, {12, 0, 0}};
  const ContentStore store(c, 2);
  const auto plan = make_cacc_plan(c, CacheAllocation::from_t({0, 0, 0}, 4));
  ScheduleSource schedules;
  const DemandVector d{{1, 1, 1, 1}};
  const auto tr = deliver(plan, d, store, schedules);
  CHECK(tr.total_bits == 12);
  CHECK(all_decode(plan, store, tr, d));
}

TEST_CASE("coded steps at t = 0 send whole subfiles") {
  LibraryConfig c{4, 4, 0, {0, 6, 0, 0}};
  const ContentStore store(c, 2);
  const auto plan = make_cacc_plan(c, CacheAllocation::from_t({0, 0, 0, 0}, 4));
  const auto sched = generate_schedule({1, 2, 3, 4}, {}, 2, 0);
  const DemandVector d{{1, 2, 3, 3}};
  const auto sd = step_demands(sched, d, 0);
  const auto txs = coded_delivery_step(plan, 2, 0, sched, 0, d, store);
  CHECK(txs.size() == sd.distinct());
  for (const auto& tx : txs) CHECK(tx.payload.size() == 6);
}

TEST_CASE("random combinations") {
  const LibraryConfig c{5, 5, 0.5, {0, 1000, 0, 0, 0}};
  const ContentStore store(c, 8);
  const auto plan = make_cacc_plan(c, CacheAllocation::from_t({0, 1, 0, 0, 0}, 5), false);
  const auto r = random_delivery(plan, 2, 0, {SubfileId(0b11)}, {{1, 2, 1, 2, 1}}, store);
  CHECK(r.bits >= 800);
  CHECK(r.bits <= 840);
  CHECK(r.overshoot_bits == r.bits - 800);

  const auto plan0 = make_cacc_plan(c, CacheAllocation::from_t({0, 0, 0, 0, 0}, 5), false);
  const auto one = random_delivery(plan0, 2, 0, {SubfileId(0b11)}, {{1, 3, 3, 3, 3}}, store);
  CHECK(one.bits >= 1000);
  CHECK(one.bits <= 1000 + 64);

  LibraryConfig full_c = c;
  full_c.cache_capacity = 2.5;
  const auto plan5 = make_cacc_plan(full_c, CacheAllocation::from_t({0, 5, 0, 0, 0}, 5), false);
  CHECK(random_delivery(plan5, 2, 0, {SubfileId(0b11)}, {{1, 2, 1, 2, 1}}, store).bits == 0);

  RandomCodeCache cache;
  const auto a = random_delivery(plan, 2, 0, {SubfileId(0b11)}, {{1, 2, 1, 2, 1}}, store, &cache);
  CHECK(cache.size() > 0);
  CHECK(a.bits == r.bits);
}

TEST_CASE("delivery windows") {
  CHECK(delivery_window(5, 2, {{3, 1}}) == std::vector<int>{1, 3});
  CHECK(delivery_window(5, 3, {{4, 4, 4}}) == std::vector<int>{1, 2, 4});
  CHECK(delivery_window(3, 5, {{1, 1, 1, 1, 1}}) == std::vector<int>{1, 2, 3});
}

TEST_CASE("everything cached needs no transmission") {
  LibraryConfig c{3, 2, 0, {2, 2, 2}};
  c.cache_capacity = library_size(c) / file_size(c);
  const ContentStore store(c, 6);
  const auto plan = make_cacc_plan(c, CacheAllocation::from_t({2, 2, 2}, 2));
  ScheduleSource schedules;
  const DemandVector d{{3, 1}};
  const auto tr = deliver(plan, d, store, schedules);
  CHECK(tr.total_bits == 0);
  CHECK(tr.transmissions.empty());
  CHECK(all_decode(plan, store, tr, d));
}

TEST_CASE("random configurations decode and respect the rate") {
  std::mt19937_64 rng(77);
  auto code_cache = std::make_shared<RandomCodeCache>();
  int random_levels = 0, shared_levels = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int k = 1 + static_cast<int>(rng() % 4);
    const double unit = static_cast<double>(divisibility_unit(k));
    std::vector<double> f;
    for (int l = 1; l <= n; ++l) f.push_back(unit * static_cast<double>(rng() % 3) * (l == 1 ? 40 : 4));
    if (oracle::file_bits(n, f) == 0) f[0] = unit * 40;
    LibraryConfig c{n, k, 0, f};
    c.cache_capacity = (rng() % 9) / 8.0 * library_size(c) / file_size(c);
    const auto alloc = optimize_allocation(c).alloc;
    const auto plan = make_cacc_plan(c, alloc);
    const ContentStore store(c, trial);
    const auto caches = place(plan, store);
    for (const auto& u : caches) CHECK(u.cached_bits() <= c.cache_capacity * file_size(c) + plan.cache_slack_bits + 1e-6);

    DemandVector d;
    for (int u = 0; u < k; ++u) d.demands.push_back(1 + static_cast<int>(rng() % n));
    ScheduleSource schedules(trial);
    DeliveryOptions options;
    options.code_cache = code_cache;
    const auto tr = deliver(plan, d, store, schedules, options);
    INFO("trial ", trial, " N=", n, " K=", k, " M=", c.cache_capacity);
    CHECK(all_decode(plan, store, tr, d, code_cache.get()));
    CHECK(static_cast<double>(tr.total_bits) <=
          cacc_rate(c, alloc) * file_size(c) + tr.padding_slack_bits + tr.random_overshoot_bits + 1e-6);

    std::size_t level_sum = 0;
    for (auto b : tr.level_bits) level_sum += b;
    CHECK(level_sum == tr.total_bits);
    for (const auto& s : tr.steps) {
      const double expected = oracle::choose(k, s.t + 1) - oracle::choose(k - static_cast<int>(s.distinct_demands), s.t + 1);
      CHECK(s.transmissions == expected);
      for (std::size_t i = s.first_transmission; i < s.first_transmission + s.transmissions; ++i)
        check_xor(tr.transmissions[i], plan, store, s.t);
    }
    for (const auto& r : tr.sublayers) random_levels += r.procedure == LevelProcedure::random;
    for (const auto& lp : plan.levels) shared_levels += lp.sublayers.size() == 2;
  }
  CHECK(random_levels > 0);
  CHECK(shared_levels > 0);
}

TEST_CASE("windowed delivery when files outnumber users") {
  LibraryConfig c{5, 2, 0, {60, 6, 6, 6, 6}};
  c.cache_capacity = 1;
  const auto alloc = optimize_allocation(c).alloc;
  const auto plan = make_cacc_plan(c, alloc);
  const ContentStore store(c, 12);
  for (const auto& demand : {std::vector<int>{5, 2}, std::vector<int>{3, 3}}) {
    ScheduleSource schedules(2);
    const auto tr = deliver(plan, {demand}, store, schedules);
    CHECK(all_decode(plan, store, tr, {demand}));
  }
}

TEST_CASE("corrupted payload is not silently accepted") {
  const auto plan = example_plan();
  const ContentStore store(example_config(), 5);
  ScheduleSource schedules;
  schedules.add_fixture(example1_schedule());
  const DemandVector d{{1, 2, 3, 4, 5}};
  auto tr = deliver(plan, d, store, schedules);
  tr.transmissions[0].payload.flip(0);
  CHECK_FALSE(all_decode(plan, store, tr, d));
}

TEST_CASE("uncoded scheme") {
  LibraryConfig c{2, 2, 0, {1, 1}};
  const ContentStore store(c, 1);
  const auto none = CacheAllocation{{0, 0}};
  const auto tr = cauc_deliver(c, none, {{1, 2}}, store);
  CHECK(tr.total_bits == 3);
  CHECK(tr.rate(file_size(c)) == doctest::Approx(1.5));
  CHECK(cauc_deliver(c, none, {{1, 1}}, store).total_bits == 2);
  c.cache_capacity = 1.5;
  CHECK(cauc_deliver(c, CacheAllocation{{1, 1}}, {{1, 2}}, store).total_bits == 0);

  LibraryConfig big{3, 3, 1, {40, 20, 10}};
  const ContentStore s2(big, 3);
  const auto alloc = cauc_optimal_allocation(big);
  const auto plan = make_cauc_plan(big, alloc);
  const DemandVector d{{3, 1, 3}};
  const auto t2 = cauc_deliver(plan, d, s2);
  CHECK(all_decode(plan, s2, t2, d));
  for (const auto& tx : t2.transmissions) CHECK(tx.kind == TransmissionKind::uncoded);
  CHECK_THROWS_AS(cauc_deliver(example_plan(), {{1, 2, 3, 4, 5}}, s2), std::invalid_argument);
}

TEST_CASE("independent-files baseline delivery") {
  LibraryConfig c{10, 10, 1, std::vector<double>(10, 0.0)};
  c.subfile_sizes[0] = 2520;
  const ContentStore store(c, 4);
  ScheduleSource s1;
  DemandVector distinct;
  for (int k = 1; k <= 10; ++k) distinct.demands.push_back(k);
  const auto tr = cicc_deliver(c, 1, distinct, store, s1);
  CHECK(tr.total_bits == 4.5 * 2520);
  const auto plan = make_cicc_plan(c, 1);
  const auto derived = cicc_store(c, store);
  CHECK(all_decode(plan, derived, tr, distinct));

  ScheduleSource s2;
  const DemandVector repeated{{1, 1, 2, 2, 3, 3, 4, 4, 5, 5}};
  CHECK(cicc_deliver(c, 1, repeated, store, s2).total_bits <= 4.5 * 2520);

  ScheduleSource s3;
  CHECK(cicc_deliver(c, 10, distinct, store, s3).total_bits == 0);
}

TEST_CASE("transcript dump and scheme names") {
  CHECK(parse_scheme("cacc") == Scheme::cacc);
  CHECK(parse_scheme("cauc") == Scheme::cauc);
  CHECK(to_string(Scheme::cicc) == "cicc");
  CHECK_THROWS(parse_scheme("xyz"));
  CHECK(user_subsets(4, 2).size() == 6);
  CHECK(user_subsets(3, 0) == std::vector<std::uint32_t>{0});

  const auto plan = example_plan();
  const ContentStore store(example_config(), 5);
  ScheduleSource schedules;
  schedules.add_fixture(example1_schedule());
  const auto tr = deliver(plan, {{1, 2, 3, 4, 5}}, store, schedules);
  const auto dump = format_transcript(tr);
  CHECK(std::count(dump.begin(), dump.end(), '\n') >= static_cast<long>(tr.transmissions.size()));
  CHECK(dump.find("xor") != std::string::npos);
}

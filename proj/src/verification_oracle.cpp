#include "corrcache/verification_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "corrcache/allocator.hpp"

namespace corrcache {

std::string config_digest(const LibraryConfig& config) {
  std::ostringstream out;
  out << "N=" << config.n_files << " K=" << config.n_users << " M=" << config.cache_capacity << " F_l=";
  for (std::size_t i = 0; i < config.subfile_sizes.size(); ++i) out << (i ? "," : "") << config.subfile_sizes[i];
  return out.str();
}

std::vector<DemandVector> all_demands(int n_files, int n_users) {
  double count = std::pow(static_cast<double>(n_files), n_users);
  if (count > 1e6) throw std::length_error("N^K = " + std::to_string(count) + " demand vectors exceed the 10^6 guard");
  std::vector<DemandVector> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<int> d(n_users, 1);
  while (true) {
    out.push_back({d});
    int pos = n_users - 1;
    while (pos >= 0 && d[pos] == n_files) d[pos--] = 1;
    if (pos < 0) break;
    ++d[pos];
  }
  return out;
}

double cacc_point_rate(const LibraryConfig& config, const CacheAllocation& alloc) {
  double rate = 0.0;
  for (int l = 1; l <= config.n_files; ++l) {
    if (config.subfile_sizes[l - 1] <= 0.0) continue;
    const double t = alloc.t(l, config.n_users);
    const long ti = std::lround(t);
    if (std::abs(t - ti) > 1e-9) throw std::invalid_argument("level " + std::to_string(l) + " has a fractional t");
    rate += level_rate_curve(config, l).points.at(ti);
  }
  return rate;
}

GridReport verify_all_demands(const LibraryConfig& config, const CacheAllocation& alloc, Scheme scheme,
                              std::uint64_t seed, bool memory_sharing) {
  config.validate();
  const auto demands = all_demands(config.n_files, config.n_users);
  const double f = file_size(config);

  GridReport report;
  report.config_digest = config_digest(config);
  report.scheme = scheme;

  const ContentStore store(config, seed);
  PlacementPlan plan;
  double formula = 0.0;
  switch (scheme) {
    case Scheme::cacc:
      plan = make_cacc_plan(config, alloc, memory_sharing);
      formula = memory_sharing ? cacc_rate(config, alloc) : cacc_point_rate(config, alloc);
      break;
    case Scheme::cauc:
      plan = make_cauc_plan(config, alloc);
      formula = cauc_rate(config, alloc);
      break;
    case Scheme::cicc:
      plan = make_cicc_plan(config, config.cache_capacity);
      formula = cicc_rate(config);
      break;
  }
  report.formula_rate = formula;
  const ContentStore derived = scheme == Scheme::cicc ? cicc_store(config, store) : store;
  const auto caches = place(plan, derived);
  ScheduleSource schedules(seed);
  DeliveryOptions options;
  options.code_cache = std::make_shared<RandomCodeCache>();

  for (const auto& d : demands) {
    Transcript tr;
    switch (scheme) {
      case Scheme::cacc: tr = deliver(plan, d, store, schedules, options); break;
      case Scheme::cauc: tr = cauc_deliver(plan, d, store); break;
      case Scheme::cicc: {
        DeliveryOptions options;
        options.allow_random = false;
        tr = deliver(plan, d, derived, schedules, options);
        break;
      }
    }
    DemandResult row;
    row.demand = d;
    row.bits = tr.total_bits;
    row.measured_rate = tr.rate(f);
    row.formula_rate = formula;
    row.slack_bits = tr.padding_slack_bits + static_cast<double>(tr.random_overshoot_bits);
    row.decode_ok = true;
    for (int k = 1; k <= config.n_users; ++k) {
      try {
        if (decode(k, caches[k - 1], tr, d, plan, options.code_cache.get()) != store.file(d[k])) {
          row.decode_ok = false;
          report.violations.push_back("demand " + d.to_string() + ": user " + std::to_string(k) + " decoded wrong bits");
        }
      } catch (const DecodeError& e) {
        row.decode_ok = false;
        report.violations.push_back("demand " + d.to_string() + ": user " + std::to_string(k) + ": " + e.what());
      }
    }
    if (static_cast<double>(row.bits) > formula * f + row.slack_bits + 1e-6 * f)
      report.violations.push_back("demand " + d.to_string() + ": " + std::to_string(row.bits) + " bits exceed " +
                                  std::to_string(formula * f) + " + slack " + std::to_string(row.slack_bits));
    report.max_rate = std::max(report.max_rate, row.measured_rate);
    report.max_slack_bits = std::max(report.max_slack_bits, row.slack_bits);
    report.results.push_back(std::move(row));
  }
  return report;
}

std::string format_report_csv(const GridReport& report) {
  std::ostringstream out;
  out.precision(12);
  out << "# " << report.config_digest << " scheme=" << to_string(report.scheme) << '\n';
  out << "demand,measured_rate,formula_rate,decode_ok\n";
  for (const auto& row : report.results) {
    for (std::size_t i = 0; i < row.demand.demands.size(); ++i) out << (i ? "-" : "") << row.demand.demands[i];
    out << ',' << row.measured_rate << ',' << row.formula_rate << ',' << (row.decode_ok ? 1 : 0) << '\n';
  }
  return out.str();
}

DemandVector worst_case_demand(const LibraryConfig& config) {
  DemandVector d;
  for (int k = 0; k < config.n_users; ++k) d.demands.push_back(k % config.n_files + 1);
  return d;
}

std::vector<SchemeRate> compare_schemes(const LibraryConfig& config) {
  const double m = config.cache_capacity;
  return {
      {"cauc", m, cauc_rate(config, cauc_optimal_allocation(config))},
      {"cacc", m, optimize_allocation(config).rate},
      {"cicc", m, cicc_rate(config)},
      {"cutset", m, cutset_bound(config)},
  };
}

}  // namespace corrcache

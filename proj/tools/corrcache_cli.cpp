// corrcache: rate calculators, allocator, simulator, exhaustive verifier and
// sweeps from the command line.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corrcache/allocator.hpp"
#include "corrcache/closed_form.hpp"
#include "corrcache/delivery_engine.hpp"
#include "corrcache/experiment.hpp"
#include "corrcache/library_model.hpp"
#include "corrcache/verification_oracle.hpp"

using namespace corrcache;

namespace {

struct LibraryFlags {
  int n = 0;
  int k = 0;
  double m = 0.0;
  std::vector<double> ratios;
  std::vector<double> level_sizes;
  double file_bits = 0.0;
  std::vector<double> t;
  bool no_sharing = false;
};

void add_library_flags(CLI::App* app, LibraryFlags& f, bool with_t) {
  app->add_option("--n", f.n, "number of files N")->required()->check(CLI::Range(1, kMaxFiles));
  app->add_option("--k", f.k, "number of users K")->required()->check(CLI::Range(1, kMaxUsers));
  app->add_option("--m", f.m, "cache capacity M in files")->check(CLI::NonNegativeNumber);
  auto* ratios = app->add_option("--ratios", f.ratios, "r_1..r_N, comma separated")->delimiter(',');
  auto* sizes = app->add_option("--level-sizes", f.level_sizes, "F_1..F_N in bits, comma separated")->delimiter(',');
  ratios->excludes(sizes);
  app->add_option("--file-bits", f.file_bits, "target F in bits when sizes come from --ratios")
      ->check(CLI::NonNegativeNumber);
  if (with_t) {
    app->add_option("--t", f.t, "cache parameters t_1..t_N, overriding --m")->delimiter(',');
    app->add_flag("--no-sharing", f.no_sharing, "run each integer t_l as is instead of on the rate envelope");
  }
}

// Bits per divisibility unit of F when a simulation gets --ratios without --file-bits.
constexpr double kDefaultFileUnits = 2000.0;

// Exact real sizes (F = 1) for the closed forms unless --level-sizes or --file-bits is given.
// Simulations round ratios to whole units instead.
LibraryConfig build_config(const LibraryFlags& f, bool simulation = false) {
  LibraryConfig config;
  if (!f.level_sizes.empty()) {
    config = LibraryConfig{f.n, f.k, f.m, f.level_sizes};
  } else if (!f.ratios.empty()) {
    if (static_cast<int>(f.ratios.size()) != f.n) throw std::invalid_argument("--ratios needs exactly N entries");
    const double bits =
        f.file_bits > 0.0 ? f.file_bits
                          : (simulation ? kDefaultFileUnits * static_cast<double>(divisibility_unit(f.k)) : 0.0);
    if (bits > 0.0)
      config = ratios_to_sizes(ExperimentSpec{f.n, f.k, f.m, f.ratios, bits, 0});
    else
      config = ratios_to_exact_sizes(f.n, f.k, f.m, f.ratios);
  } else {
    throw std::invalid_argument("give --ratios or --level-sizes");
  }
  if (static_cast<int>(config.subfile_sizes.size()) != f.n)
    throw std::invalid_argument("--level-sizes needs exactly N entries");
  config.validate();
  return config;
}

CacheAllocation build_allocation(const LibraryFlags& f, LibraryConfig& config) {
  if (f.t.empty()) return optimize_allocation(config).alloc;
  if (static_cast<int>(f.t.size()) != f.n) throw std::invalid_argument("--t needs exactly N entries");
  CacheAllocation alloc = CacheAllocation::from_t(f.t, f.k);
  config.cache_capacity = alloc.cached_bits(config) / file_size(config);
  return alloc;
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

AssignmentSchedule load_fixture(const std::string& name, int n_files) {
  if (name == "example1") return example1_schedule();
  std::ifstream in(name);
  if (!in) throw std::runtime_error("cannot read fixture " + name);
  std::stringstream text;
  text << in.rdbuf();
  return parse_schedule_fixture(text.str(), n_files);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation-aware caching: rates, allocation, bit-exact delivery and sweeps"};
  app.require_subcommand(1);
  std::string out_path;
  std::string format = "csv";

  LibraryFlags rates_flags;
  auto* rates = app.add_subcommand("rates", "closed-form rates of every scheme at M");
  add_library_flags(rates, rates_flags, false);
  rates->add_option("--out", out_path, "output file (default stdout)");
  rates->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

  LibraryFlags opt_flags;
  auto* optimize = app.add_subcommand("optimize", "optimal per-level cache parameters for coded caching");
  add_library_flags(optimize, opt_flags, false);
  optimize->add_option("--out", out_path, "output file (default stdout)");
  optimize->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

  LibraryFlags sim_flags;
  std::vector<int> demands;
  std::string scheme_name = "cacc";
  std::uint64_t seed = 1;
  std::string fixture;
  bool dump = false;
  auto* simulate = app.add_subcommand("simulate", "deliver and decode one demand vector");
  add_library_flags(simulate, sim_flags, true);
  simulate->add_option("--demands", demands, "d_1..d_K, comma separated")->delimiter(',')->required();
  simulate->add_option("--scheme", scheme_name, "cacc, cauc or cicc")->check(CLI::IsMember({"cacc", "cauc", "cicc"}));
  simulate->add_option("--seed", seed, "content and schedule seed");
  simulate->add_option("--fixture", fixture, "schedule fixture file, or example1");
  simulate->add_flag("--transcript", dump, "print every transmission");

  LibraryFlags verify_flags;
  auto* verify = app.add_subcommand("verify", "deliver and decode every demand vector");
  add_library_flags(verify, verify_flags, true);
  verify->add_option("--scheme", scheme_name, "cacc, cauc or cicc")->check(CLI::IsMember({"cacc", "cauc", "cicc"}));
  verify->add_option("--seed", seed, "content and schedule seed");
  verify->add_option("--out", out_path, "CSV report file (default stdout)");
  verify->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

  SweepSpec sweep_spec;
  auto* sweep = app.add_subcommand("sweep", "rates while the share of one level goes from 0 to 1");
  sweep->add_option("--n", sweep_spec.n_files, "number of files N")->check(CLI::Range(1, kMaxFiles));
  sweep->add_option("--k", sweep_spec.n_users, "number of users K")->check(CLI::Range(1, kMaxUsers));
  sweep->add_option("--m", sweep_spec.cache_capacity, "cache capacity M in files")->check(CLI::NonNegativeNumber);
  sweep->add_option("--sweep-level", sweep_spec.level, "level whose ratio is swept; r_1 takes the rest");
  sweep->add_option("--grid", sweep_spec.points, "number of grid points")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_path, "output file (default stdout)");
  sweep->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (rates->parsed()) {
      const LibraryConfig config = build_config(rates_flags);
      std::string text = "# " + config_digest(config) + "\nm,r_cauc,r_cacc,r_cicc,r_cutset\n" + fmt(config.cache_capacity);
      for (const auto& row : compare_schemes(config)) text += "," + fmt(row.rate);
      write_output(text + "\n", out_path);
      return 0;
    }

    if (optimize->parsed()) {
      const LibraryConfig config = build_config(opt_flags);
      const AllocationSolution sol = optimize_allocation(config);
      std::string text = "# " + config_digest(config) + "\nlevel,t,p,level_rate\n";
      for (int l = 1; l <= config.n_files; ++l) {
        const double t = sol.alloc.t(l, config.n_users);
        text += std::to_string(l) + "," + fmt(t) + "," + fmt(sol.alloc.fractions[l - 1]) + "," +
                fmt(cacc_level_rate(config, l, t)) + "\n";
      }
      text += "# total_rate=" + fmt(sol.rate) + " cached_fraction=" +
              fmt(sol.alloc.cached_bits(config.clamped()) / file_size(config)) + "\n";
      write_output(text, out_path);
      return 0;
    }

    if (simulate->parsed()) {
      LibraryConfig config = build_config(sim_flags, true);
      const CacheAllocation alloc = build_allocation(sim_flags, config);
      const Scheme scheme = parse_scheme(scheme_name);
      const DemandVector d{demands};
      d.validate(config.n_files, config.n_users);
      const ContentStore store(config, seed);
      ScheduleSource schedules(seed);
      if (!fixture.empty()) schedules.add_fixture(load_fixture(fixture, config.n_files));

      PlacementPlan plan;
      Transcript tr;
      double formula = 0.0;
      ContentStore placed = store;
      switch (scheme) {
        case Scheme::cacc:
          plan = make_cacc_plan(config, alloc, !sim_flags.no_sharing);
          tr = deliver(plan, d, store, schedules);
          formula = sim_flags.no_sharing ? cacc_point_rate(config, alloc) : cacc_rate(config, alloc);
          break;
        case Scheme::cauc:
          plan = make_cauc_plan(config, alloc);
          tr = cauc_deliver(plan, d, store);
          formula = cauc_rate(config, alloc);
          break;
        case Scheme::cicc:
          plan = make_cicc_plan(config, config.cache_capacity);
          placed = cicc_store(config, store);
          tr = cicc_deliver(config, config.cache_capacity, d, store, schedules);
          formula = cicc_rate(config);
          break;
      }
      const auto caches = place(plan, placed);
      bool ok = true;
      for (int k = 1; k <= config.n_users; ++k) {
        bool user_ok = false;
        try {
          user_ok = decode(k, caches[k - 1], tr, d, plan) == store.file(d[k]);
        } catch (const DecodeError& e) {
          std::cerr << "user " << k << ": " << e.what() << '\n';
        }
        ok = ok && user_ok;
      }
      const double f = file_size(config);
      std::cout << "# " << config_digest(config) << " scheme=" << scheme_name << " seed=" << seed << '\n';
      std::cout << "demands=" << d.to_string() << '\n';
      for (const auto& s : tr.sublayers)
        std::cout << "level=" << s.level << " sublayer=" << s.sublayer << " t=" << s.t
                  << " procedure=" << to_string(s.procedure) << " bits=" << s.bits << " coded_bits=" << s.coded_bits
                  << " random_bits=" << s.random_bits << '\n';
      for (const auto& s : tr.steps)
        std::cout << "step level=" << s.level << " fixed=" << (s.fixed_part ? SubfileId(s.fixed_part).to_string() : "{}")
                  << " j=" << s.step << " distinct=" << s.distinct_demands << " transmissions=" << s.transmissions
                  << " bits=" << s.bits << '\n';
      std::cout << "total_bits=" << tr.total_bits << " file_bits=" << fmt(f) << " rate=" << fmt(tr.rate(f))
                << " formula_rate=" << fmt(formula) << " padding_slack_bits=" << fmt(tr.padding_slack_bits)
                << " random_overshoot_bits=" << tr.random_overshoot_bits << '\n';
      std::cout << "decode=" << (ok ? "ok" : "FAILED") << '\n';
      if (dump) std::cout << format_transcript(tr);
      return ok ? 0 : 1;
    }

    if (verify->parsed()) {
      LibraryConfig config = build_config(verify_flags, true);
      const CacheAllocation alloc = build_allocation(verify_flags, config);
      const GridReport report = verify_all_demands(config, alloc, parse_scheme(scheme_name), seed, !verify_flags.no_sharing);
      write_output(format_report_csv(report), out_path);
      std::cerr << report.results.size() << " demand vectors, max_rate=" << fmt(report.max_rate)
                << " formula_rate=" << fmt(report.formula_rate) << " violations=" << report.violations.size() << '\n';
      for (const auto& v : report.violations) std::cerr << "violation: " << v << '\n';
      return report.ok() ? 0 : 1;
    }

    if (sweep->parsed()) {
      write_output(format_sweep_csv(run_sweep(sweep_spec)), out_path);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

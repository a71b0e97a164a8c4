#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "corrcache/allocator.hpp"
#include "corrcache/delivery_engine.hpp"
#include "corrcache/experiment.hpp"
#include "corrcache/verification_oracle.hpp"

namespace py = pybind11;
using namespace corrcache;

namespace {

CacheAllocation to_alloc(const LibraryConfig& c, const std::optional<std::vector<double>>& t) {
  if (!t) return optimize_allocation(c).alloc;
  return CacheAllocation::from_t(*t, c.n_users);
}

py::dict simulate(const LibraryConfig& config, const std::vector<int>& demands,
                  const std::optional<std::vector<double>>& t, const std::string& scheme_name, std::uint64_t seed,
                  bool memory_sharing, const std::optional<std::string>& fixture) {
  config.validate();
  const Scheme scheme = parse_scheme(scheme_name);
  const DemandVector d{demands};
  d.validate(config.n_files, config.n_users);
  const ContentStore store(config, seed);
  ScheduleSource schedules(seed);
  if (fixture) schedules.add_fixture(*fixture == "example1" ? example1_schedule() : parse_schedule_fixture(*fixture, config.n_files));

  PlacementPlan plan;
  Transcript tr;
  const ContentStore* decode_store = &store;
  ContentStore derived = store;
  if (scheme == Scheme::cicc) {
    plan = make_cicc_plan(config, config.cache_capacity);
    tr = cicc_deliver(config, config.cache_capacity, d, store, schedules);
    derived = cicc_store(config, store);
    decode_store = &derived;
  } else if (scheme == Scheme::cauc) {
    plan = make_cauc_plan(config, t ? CacheAllocation::from_t(*t, config.n_users) : cauc_optimal_allocation(config));
    tr = cauc_deliver(plan, d, store);
  } else {
    plan = make_cacc_plan(config, to_alloc(config, t), memory_sharing);
    tr = deliver(plan, d, *decode_store, schedules);
  }
  const auto caches = place(plan, *decode_store);
  bool ok = true;
  for (int k = 1; k <= config.n_users; ++k) {
    try {
      ok = ok && decode(k, caches[k - 1], tr, d, plan) == store.file(d[k]);
    } catch (const DecodeError&) {
      ok = false;
    }
  }
  std::vector<std::size_t> steps;
  for (const auto& s : tr.steps) steps.push_back(s.transmissions);
  py::dict out;
  out["total_bits"] = tr.total_bits;
  out["file_bits"] = file_size(config);
  out["rate"] = tr.rate(file_size(config));
  out["step_transmissions"] = steps;
  out["level_bits"] = tr.level_bits;
  out["decoded"] = ok;
  return out;
}

py::dict verify(const LibraryConfig& config, const std::optional<std::vector<double>>& t,
                const std::string& scheme_name, std::uint64_t seed, bool memory_sharing) {
  const Scheme scheme = parse_scheme(scheme_name);
  CacheAllocation alloc;
  if (scheme == Scheme::cauc)
    alloc = t ? CacheAllocation::from_t(*t, config.n_users) : cauc_optimal_allocation(config);
  else if (scheme == Scheme::cacc)
    alloc = to_alloc(config, t);
  const GridReport r = verify_all_demands(config, alloc, scheme, seed, memory_sharing);
  py::dict out;
  out["demands"] = r.results.size();
  out["max_rate"] = r.max_rate;
  out["formula_rate"] = r.formula_rate;
  out["max_slack_bits"] = r.max_slack_bits;
  out["violations"] = r.violations;
  out["csv"] = format_report_csv(r);
  return out;
}

}  // namespace

PYBIND11_MODULE(corrcache, m) {
  m.doc() = "Correlation-aware coded caching: rates, allocation and bit-exact simulation";

  py::class_<LibraryConfig>(m, "LibraryConfig")
      .def(py::init([](int n, int k, double mem, std::vector<double> sizes) {
             LibraryConfig c{n, k, mem, std::move(sizes)};
             c.validate();
             return c;
           }),
           py::arg("n_files"), py::arg("n_users"), py::arg("cache_capacity"), py::arg("subfile_sizes"))
      .def_readwrite("n_files", &LibraryConfig::n_files)
      .def_readwrite("n_users", &LibraryConfig::n_users)
      .def_readwrite("cache_capacity", &LibraryConfig::cache_capacity)
      .def_readwrite("subfile_sizes", &LibraryConfig::subfile_sizes)
      .def("__repr__", [](const LibraryConfig& c) { return "LibraryConfig(" + config_digest(c) + ")"; });

  m.def("from_ratios", &ratios_to_exact_sizes, py::arg("n_files"), py::arg("n_users"), py::arg("cache_capacity"),
        py::arg("ratios"));
  m.def("file_size", &file_size);
  m.def("library_size", &library_size);
  m.def("divisibility_unit", &divisibility_unit);
  m.def("cumulative_tail", &cumulative_tail);

  m.def("cauc_rate", [](const LibraryConfig& c, std::vector<double> p) { return cauc_rate(c, {std::move(p)}); });
  m.def("cauc_optimal_allocation", [](const LibraryConfig& c) { return cauc_optimal_allocation(c).fractions; });
  m.def("cacc_rate", [](const LibraryConfig& c, std::vector<double> p) { return cacc_rate(c, {std::move(p)}); });
  m.def("cacc_level_rate", &cacc_level_rate);
  m.def("level_points", [](const LibraryConfig& c, int l) { return level_rate_curve(c, l).points; });
  m.def("cicc_rate", &cicc_rate);
  m.def("cutset_bound", &cutset_bound);
  m.def("optimize_allocation", [](const LibraryConfig& c) {
    const auto s = optimize_allocation(c);
    return py::make_tuple(s.alloc.fractions, s.rate);
  });
  m.def("compare_schemes", [](const LibraryConfig& c) {
    py::dict out;
    for (const auto& row : compare_schemes(c)) out[py::str(row.scheme)] = row.rate;
    return out;
  });

  m.def("generate_schedule",
        [](std::vector<int> window, std::vector<int> fixed, int level, std::uint64_t seed) {
          const auto s = generate_schedule(window, fixed, level, seed);
          std::vector<std::vector<std::vector<int>>> cols;
          for (const auto& col : s.columns) {
            cols.emplace_back();
            for (const auto& id : col) cols.back().push_back(id.members());
          }
          return cols;
        },
        py::arg("window"), py::arg("fixed_part"), py::arg("level"), py::arg("seed") = 0);

  m.def("simulate", &simulate, py::arg("config"), py::arg("demands"), py::arg("t") = py::none(),
        py::arg("scheme") = "cacc", py::arg("seed") = 1, py::arg("memory_sharing") = true,
        py::arg("fixture") = py::none());
  m.def("verify", &verify, py::arg("config"), py::arg("t") = py::none(), py::arg("scheme") = "cacc",
        py::arg("seed") = 1, py::arg("memory_sharing") = true);
  m.def("sweep",
        [](int n, int k, double mem, int level, int points) {
          const auto r = run_sweep({n, k, mem, level, points});
          py::dict out;
          out["x"] = r.x;
          out["cauc"] = r.cauc;
          out["cacc"] = r.cacc;
          out["cicc"] = r.cicc;
          out["cutset"] = r.cutset;
          out["csv"] = format_sweep_csv(r);
          return out;
        },
        py::arg("n_files") = 10, py::arg("n_users") = 10, py::arg("cache_capacity") = 1.0, py::arg("level") = 2,
        py::arg("points") = 11);
}

#include "corrcache/experiment.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "corrcache/verification_oracle.hpp"

namespace corrcache {

std::vector<double> sweep_ratios(const SweepSpec& spec, double x) {
  std::vector<double> r(spec.n_files, 0.0);
  if (spec.level == 1) {
    r[0] = 1.0;
  } else {
    r[spec.level - 1] = x;
    r[0] = 1.0 - x;
  }
  return r;
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.n_files < 1 || spec.n_files > kMaxFiles || spec.n_users < 1 || spec.n_users > kMaxUsers)
    throw std::invalid_argument("sweep needs 1 <= N <= 20 and 1 <= K <= 30");
  if (spec.level < 1 || spec.level > spec.n_files) throw std::invalid_argument("sweep level must lie in [1, N]");
  if (spec.points < 1) throw std::invalid_argument("sweep needs at least one point");
  SweepResult result;
  result.spec = spec;
  for (int i = 0; i < spec.points; ++i) {
    const double x = spec.points == 1 ? 0.0 : static_cast<double>(i) / (spec.points - 1);
    const LibraryConfig config =
        ratios_to_exact_sizes(spec.n_files, spec.n_users, spec.cache_capacity, sweep_ratios(spec, x));
    const auto rows = compare_schemes(config);
    result.x.push_back(x);
    result.cauc.push_back(rows[0].rate);
    result.cacc.push_back(rows[1].rate);
    result.cicc.push_back(rows[2].rate);
    result.cutset.push_back(rows[3].rate);
  }
  return result;
}

std::string format_sweep_csv(const SweepResult& result) {
  const SweepSpec& s = result.spec;
  std::ostringstream out;
  out << "# sweep n=" << s.n_files << " k=" << s.n_users << " m=" << s.cache_capacity << " level=" << s.level
      << " points=" << s.points << '\n';
  out << "# ratios: r_" << s.level << " = x, r_1 = 1 - x, others 0\n";
  out << "x,r_cauc,r_cacc,r_cicc,r_cutset\n";
  char line[256];
  for (std::size_t i = 0; i < result.x.size(); ++i) {
    std::snprintf(line, sizeof line, "%.6g,%.12g,%.12g,%.12g,%.12g\n", result.x[i], result.cauc[i], result.cacc[i],
                  result.cicc[i], result.cutset[i]);
    out << line;
  }
  return out.str();
}

}  // namespace corrcache

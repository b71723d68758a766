// Timing comparison of the OpenMP kernels against their serial execution:
// the two truth oracles and the batch influence-function evaluation.
#include <chrono>
#include <cstdio>

#include "rtwin/identification.hpp"
#include "rtwin/parallel.hpp"
#include "rtwin/scm.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class Fn>
double time_it(Fn fn) {
  const auto t0 = Clock::now();
  fn();
  return seconds_since(t0);
}

}  // namespace

int main() {
  const rtwin::ScmConfig cfg;
  const std::size_t n_mc = 1'000'000;
  const std::size_t n_rows = 200'000;

  std::printf("threads available: %d\n", rtwin::max_threads());

  double v_serial = 0, v_parallel = 0;
  const double t_enum_s = time_it([&] {
    v_serial = rtwin::truth_by_enumeration(cfg, n_mc, 7, false).psi.ate;
  });
  const double t_enum_p = time_it([&] {
    v_parallel = rtwin::truth_by_enumeration(cfg, n_mc, 7, true).psi.ate;
  });
  std::printf("truth_by_enumeration     n=%zu  serial %.3fs  parallel %.3fs  "
              "speedup %.2fx  (ate %.6f == %.6f)\n",
              n_mc, t_enum_s, t_enum_p, t_enum_s / t_enum_p, v_serial, v_parallel);

  const double t_cf_s = time_it([&] {
    v_serial = rtwin::truth_by_counterfactuals(cfg, n_mc, 7, false).psi.ate;
  });
  const double t_cf_p = time_it([&] {
    v_parallel = rtwin::truth_by_counterfactuals(cfg, n_mc, 7, true).psi.ate;
  });
  std::printf("truth_by_counterfactuals n=%zu  serial %.3fs  parallel %.3fs  "
              "speedup %.2fx  (ate %.6f == %.6f)\n",
              n_mc, t_cf_s, t_cf_p, t_cf_s / t_cf_p, v_serial, v_parallel);

  const rtwin::Dataset data = rtwin::simulate_observed(cfg, n_rows, 7);
  const rtwin::OracleNuisance oracle(cfg);
  const rtwin::NuisanceSource* src = &oracle;
  const rtwin::ReferenceLevels ref;
  rtwin::BatchEif batch;
  const double t_eif_s = time_it([&] {
    batch = rtwin::evaluate_batch(data, [&](std::size_t) { return src; }, ref, false);
  });
  const double serial_theta = batch.theta[0];
  const double t_eif_p = time_it([&] {
    batch = rtwin::evaluate_batch(data, [&](std::size_t) { return src; }, ref, true);
  });
  std::printf("evaluate_batch (EIF)     n=%zu  serial %.3fs  parallel %.3fs  "
              "speedup %.2fx  (theta %.6f == %.6f)\n",
              n_rows, t_eif_s, t_eif_p, t_eif_s / t_eif_p, serial_theta,
              batch.theta[0]);
  return 0;
}

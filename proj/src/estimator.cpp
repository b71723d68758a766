#include "rtwin/estimator.hpp"

#include <cmath>
#include <memory>

#include "rtwin/parallel.hpp"
#include "rtwin/prng.hpp"
#include "rtwin/stats.hpp"

namespace rtwin {

namespace {

EstimateRow make_row(double plugin, double onestep, double sd_phi, std::size_t n,
                     double z_alpha) {
  EstimateRow row;
  row.plugin = plugin;
  row.onestep = onestep;
  row.se = sd_phi / std::sqrt(static_cast<double>(n));
  row.ci_lo = onestep - z_alpha * row.se;
  row.ci_hi = onestep + z_alpha * row.se;
  row.zstat = row.se > 0 ? onestep / row.se : 0.0;
  row.pvalue = row.se > 0 ? two_sided_p(row.zstat) : 1.0;
  return row;
}

}  // namespace

EffectEstimates estimate(const Dataset& data, const EstimateOptions& options) {
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("need at least two rows");
  if (options.q < 1 || static_cast<std::size_t>(options.q) > n)
    throw std::invalid_argument("fold count must satisfy 1 <= q <= n");

  // Fold assignment with reseed-retry when a training split misses a level.
  std::vector<int> fold_of(n, 0);
  std::vector<FittedNuisance> fits;
  if (options.q == 1) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    fits.push_back(fit_nuisances(data, all, options.learners, options.clip,
                                 derive_seed(options.seed, hash_str("fit"))));
  } else {
    constexpr int kMaxAttempts = 5;
    bool done = false;
    for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
      const std::uint64_t fold_seed = derive_seed(options.seed, hash_str("folds"),
                                                  static_cast<std::uint64_t>(attempt));
      const FoldAssignment fa = assign_folds(n, options.q, fold_seed);
      std::vector<std::vector<std::size_t>> train(static_cast<std::size_t>(options.q));
      for (std::size_t i = 0; i < n; ++i)
        for (int f = 0; f < options.q; ++f)
          if (fa.fold_of[i] != f) train[static_cast<std::size_t>(f)].push_back(i);
      try {
        std::vector<FittedNuisance> attempt_fits(static_cast<std::size_t>(options.q));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(options.q));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (options.parallel)
#endif
        for (int f = 0; f < options.q; ++f) {
          try {
            attempt_fits[static_cast<std::size_t>(f)] = fit_nuisances(
                data, train[static_cast<std::size_t>(f)], options.learners,
                options.clip,
                derive_seed(options.seed, hash_str("fit"), static_cast<std::uint64_t>(f)));
          } catch (...) {
            errors[static_cast<std::size_t>(f)] = std::current_exception();
          }
        }
        for (const std::exception_ptr& e : errors)
          if (e) std::rethrow_exception(e);
        fits = std::move(attempt_fits);
        fold_of = fa.fold_of;
        done = true;
      } catch (const FoldLevelError&) {
        if (attempt + 1 == kMaxAttempts)
          throw FoldLevelError(
              "a training split missed a category level in " +
              std::to_string(kMaxAttempts) +
              " fold assignments; reduce the fold count q");
      }
    }
  }

  const BatchEif batch = evaluate_batch(
      data,
      [&](std::size_t i) -> const NuisanceSource* {
        return &fits[static_cast<std::size_t>(fold_of[i])];
      },
      options.ref, options.parallel);

  EffectEstimates out;
  out.n = n;
  out.q = options.q;
  out.alpha = options.alpha;
  out.seed = options.seed;
  out.ref = options.ref;
  const double z_alpha = normal_quantile(1.0 - options.alpha / 2.0);

  // Targets: one-step = plug-in + mean(phi), exactly by construction.
  std::array<std::vector<double>, kNumTargets> target_phi;
  for (int t = 0; t < kNumTargets; ++t) {
    target_phi[static_cast<std::size_t>(t)].resize(n);
    for (std::size_t i = 0; i < n; ++i)
      target_phi[static_cast<std::size_t>(t)][i] =
          batch.resid[i][t] + batch.cond[i][t] - batch.theta[t];
    const MeanVar mv = mean_var(target_phi[static_cast<std::size_t>(t)], options.parallel);
    out.targets[static_cast<std::size_t>(t)] =
        make_row(batch.theta[t], batch.theta[t] + mv.mean, std::sqrt(mv.var), n, z_alpha);
  }

  // Path effects P1..P4 and INT from signed target combinations; the ATE row
  // telescopes the five components so the decomposition is exact.
  const auto weights = path_weights();
  ThetaSet plugin_theta = batch.theta;
  const PathEffects plugin_paths = decompose(plugin_theta);
  ThetaSet onestep_theta;
  for (int t = 0; t < kNumTargets; ++t)
    onestep_theta[t] = out.targets[static_cast<std::size_t>(t)].onestep;
  const PathEffects onestep_paths = decompose(onestep_theta);
  const std::array<double, kNumPaths> plugin_vals = {
      plugin_paths.p1,  plugin_paths.p2,           plugin_paths.p3,
      plugin_paths.p4,  plugin_paths.intermediate, plugin_paths.ate};
  const std::array<double, kNumPaths> onestep_vals = {
      onestep_paths.p1, onestep_paths.p2,           onestep_paths.p3,
      onestep_paths.p4, onestep_paths.intermediate, onestep_paths.ate};

  std::vector<double> path_phi(n);
  for (int pidx = 0; pidx < kNumPaths; ++pidx) {
    for (std::size_t i = 0; i < n; ++i) {
      if (pidx < 5) {
        double s = 0;
        for (int t = 0; t < kNumTargets; ++t) {
          const double wgt = weights[static_cast<std::size_t>(pidx)][t];
          if (wgt != 0.0) s += wgt * target_phi[static_cast<std::size_t>(t)][i];
        }
        path_phi[i] = s;
      } else {
        // ATE influence value telescoped from the five components
        double p1 = 0, p2 = 0, p3 = 0, p4 = 0, pint = 0;
        for (int t = 0; t < kNumTargets; ++t) {
          const double v = target_phi[static_cast<std::size_t>(t)][i];
          p1 += weights[0][t] * v;
          p2 += weights[1][t] * v;
          p3 += weights[2][t] * v;
          p4 += weights[3][t] * v;
          pint += weights[4][t] * v;
        }
        path_phi[i] = ((p1 + p2) + (p3 + p4)) + pint;
      }
    }
    const MeanVar mv = mean_var(path_phi, options.parallel);
    out.paths[static_cast<std::size_t>(pidx)] =
        make_row(plugin_vals[static_cast<std::size_t>(pidx)],
                 onestep_vals[static_cast<std::size_t>(pidx)], std::sqrt(mv.var), n,
                 z_alpha);
  }
  return out;
}

WaldTest test_intermediate_confounding(const EffectEstimates& est) {
  const EstimateRow& row = est.paths[4];
  if (!(row.se > 0.0))
    throw DegenerateVarianceError("influence-function variance for the "
                                  "intermediate-confounding effect is zero");
  WaldTest t;
  t.z = row.onestep / row.se;
  t.p = two_sided_p(t.z);
  return t;
}

}  // namespace rtwin

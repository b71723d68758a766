#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "rtwin/dataset.hpp"
#include "rtwin/nuisance.hpp"

namespace rtwin {

// The seven identified counterfactual means, for treated level a' and
// control level a*:
//   S0    E(Y | a', W)
//   S1    sum_{z,m} d(a*,z,m) g(z|a') h*(m|a',z)
//   S1P   sum_{z,m} d(a*,z,m) g(z|a') h(m|a')
//   S2P   sum_{z,m} d(a*,z,m) g(z|a*) h(m|a')
//   S3PP  sum_{z,m,z'} d(a*,z,m) g(z|a*) h*(m|a',z') g(z'|a*)
//   S3    sum_{z,m} d(a*,z,m) g(z|a*) h*(m|a',z)
//   S4    E(Y | a*, W)
enum class TargetId { kS0 = 0, kS1, kS1P, kS2P, kS3PP, kS3, kS4 };
constexpr int kNumTargets = 7;
const char* target_name(TargetId t);

struct ReferenceLevels {
  int treated = 1;  // a'
  int control = 0;  // a*
};

using ThetaSet = std::array<double, kNumTargets>;

struct PathEffects {
  double p1 = 0, p2 = 0, p3 = 0, p4 = 0, intermediate = 0, ate = 0;
};
constexpr int kNumPaths = 6;  // P1..P4, INT, ATE
const char* path_name(int index);

// Per-row values of the conditional identification functionals given W.
ThetaSet plugin_conditionals(const NuisanceValues& v, const ReferenceLevels& ref);

// Per-row influence function pieces. The full influence value for target t is
//   phi = resid[t] + cond[t] - theta[t]
// where cond is the plugin conditional above and theta the plug-in estimate.
struct EifParts {
  ThetaSet cond;
  ThetaSet resid;
};
EifParts eif_parts(const NuisanceValues& v, int a_obs, int z_obs, int m_obs,
                   double y_obs, const ReferenceLevels& ref);

// Batch evaluation over a dataset with deterministic blocked reduction.
struct BatchEif {
  ThetaSet theta;                   // plug-in values (means of cond)
  std::vector<std::array<double, kNumTargets>> cond;   // n rows
  std::vector<std::array<double, kNumTargets>> resid;  // n rows
  double phi(std::size_t i, TargetId t) const {
    const int j = static_cast<int>(t);
    return resid[i][j] + cond[i][j] - theta[j];
  }
};

// source_of(i) must return the nuisance source for row i (cross-fitting picks
// the fold-local fit; a constant lambda gives the full-sample variant).
BatchEif evaluate_batch(const Dataset& data,
                        const std::function<const NuisanceSource*(std::size_t)>& source_of,
                        const ReferenceLevels& ref, bool parallel = true);

// Spec-level single-target entry points.
double plugin_value(TargetId target, const NuisanceSource& fit, const Dataset& rows,
                    const ReferenceLevels& ref = {}, bool parallel = true);
std::vector<double> eif_values(TargetId target, const NuisanceSource& fit,
                               const Dataset& rows, double theta,
                               const ReferenceLevels& ref = {}, bool parallel = true);

// psi_P1 = S0-S1, psi_P2 = S1P-S2P, psi_P3 = S2P-S3PP, psi_P4 = S3-S4,
// psi_int = S1-S1P+S3PP-S3; ate is the telescoped sum of the five.
PathEffects decompose(const ThetaSet& thetas);

// Signed target weights of each path effect, in TargetId order.
std::array<std::array<double, kNumTargets>, kNumPaths> path_weights();

}  // namespace rtwin

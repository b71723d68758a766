#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "rtwin/dataset.hpp"
#include "rtwin/identification.hpp"
#include "rtwin/nuisance.hpp"

namespace rtwin {

class DegenerateVarianceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EstimateRow {
  double plugin = 0;    // cross-fit plug-in
  double onestep = 0;   // plug-in + mean(phi)
  double se = 0;        // sd(phi)/sqrt(n)
  double ci_lo = 0;
  double ci_hi = 0;
  double zstat = 0;
  double pvalue = 1;
};

struct EffectEstimates {
  std::array<EstimateRow, kNumTargets> targets;
  std::array<EstimateRow, kNumPaths> paths;  // P1..P4, INT, ATE
  std::size_t n = 0;
  int q = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  ReferenceLevels ref;
};

struct EstimateOptions {
  int q = 5;             // q = 1 disables cross-fitting
  double alpha = 0.05;
  std::uint64_t seed = 1;
  LearnerSpecSet learners = LearnerSpecSet::all({});
  double clip = kDefaultClip;
  ReferenceLevels ref;
  bool parallel = true;
};

// Cross-fitted one-step estimation of all targets and path effects. For each
// fold the nuisances are fitted on the complement and evaluated on the held
// rows; the plug-in is the full-sample mean of the fold-local conditional
// functionals. Deterministic given (data, options).
EffectEstimates estimate(const Dataset& data, const EstimateOptions& options);

struct WaldTest {
  double z = 0;
  double p = 1;
};

// Wald test of psi_{P2 v P3} = 0 (no intermediate confounding).
WaldTest test_intermediate_confounding(const EffectEstimates& est);

}  // namespace rtwin

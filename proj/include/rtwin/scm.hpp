#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rtwin/dataset.hpp"
#include "rtwin/identification.hpp"
#include "rtwin/nuisance.hpp"

namespace rtwin {

enum class CovariateMode { kX, kW };
const char* covariate_mode_name(CovariateMode m);
CovariateMode covariate_mode_from_name(const std::string& s);

// Structural-equation coefficients of the simulation design:
//   X  ~ Be(2,3)^3
//   A  | X      ~ Bern(expit(0.5 X1 + 0.5 X2 - 1))
//   Z  | A,X    ~ Bin(3, expit(-1.7 + 1.5 A + 0.5 X3^2))
//   M  | Z,A,X  ~ Bin(3, expit(-1.5 + lambda1 Z + lambda2 A + 0.4 X2 + 0.2 X3))
//   Y  | M,Z,A,X ~ Bern(expit(0.4 M + gamma1 Z + gamma2 A - 0.5 cos X1 - 1.5))
// In kW mode the analyst-visible covariates are W1 = exp(X1-1),
// W2 = (X1+X2^2)/4, W3 = sin X3 while generation still uses X.
struct ScmConfig {
  double lambda1 = 1.2;
  double lambda2 = 1.5;
  double gamma1 = 1.2;
  double gamma2 = 1.2;
  CovariateMode covariate_mode = CovariateMode::kX;
  std::uint64_t seed = 1;
};

// The named coefficient settings: "default" keeps all four coefficients,
// each other setting zeroes exactly one of them.
ScmConfig scm_setting(const std::string& name);
std::vector<std::string> scm_setting_names();

struct ScmProbs {
  double p_a(const double* x) const;
  double p_z(int a, const double* x) const;
  double p_m(int a, int z, const double* x) const;
  double p_y(int a, int z, int m, const double* x) const;
  ScmConfig cfg;
};

Dataset simulate_observed(const ScmConfig& cfg, std::size_t n, std::uint64_t seed);

// Closed-form conditionals of the simulation design, exposed through the
// estimation-facing interface. Rows must carry X (kX mode) as covariates.
class OracleNuisance : public NuisanceSource {
 public:
  explicit OracleNuisance(const ScmConfig& cfg, double clip = 0.0,
                          double link_shift = 0.0);
  int k_z() const override { return 4; }
  int k_m() const override { return 4; }
  void values_at(const double* w, int n_w, NuisanceValues& out) const override;

 private:
  ScmProbs probs_;
  double clip_;
  double link_shift_;  // additive log-odds perturbation of every nuisance
};

struct TruthSummary {
  PathEffects psi;
  PathEffects psi_se;            // Monte Carlo standard errors, same layout
  ThetaSet theta{};              // counterfactual means (enumeration only)
  ThetaSet theta_se{};
  std::size_t n_mc = 0;
  // Counterfactual-simulation means of Y_{S0..S4}, Y'_{S1}, Y'_{S2},
  // Y''_{S2}, Y''_{S3}; filled by truth_by_counterfactuals only.
  std::array<double, 9> outcome_mean{};
  std::array<double, 9> outcome_se{};
};

// Ground truth route 1: average the identification functionals, evaluated
// with the exact binomial/Bernoulli conditionals, over Monte Carlo covariate
// draws.
TruthSummary truth_by_enumeration(const ScmConfig& cfg, std::size_t n_mc,
                                  std::uint64_t seed, bool parallel = true);

// Ground truth route 2: simulate the structural equations directly. Each
// draw shares the trial-level Z noise across arms, draws the twins T(1), T(0)
// as fresh Z draws given the covariates, and reuses the M and Y noise across
// all arms. Never touches the identification formulas.
TruthSummary truth_by_counterfactuals(const ScmConfig& cfg, std::size_t n_mc,
                                      std::uint64_t seed, bool parallel = true);

struct RemainderProbe {
  ThetaSet debiased_error;  // theta(eta_eps) + E phi(eta_eps) - theta(eta)
  ThetaSet plugin_error;    // theta(eta_eps) - theta(eta)
  double epsilon = 0.0;
};

// Perturbs every nuisance by +epsilon on the log-odds scale (the categorical
// tables through their binomial success probability) and measures the
// first-order-corrected and uncorrected plug-in errors. The expectation of
// the influence function is taken exactly over (A,Z,M,Y) given each
// covariate draw, so only the covariate average is Monte Carlo.
RemainderProbe remainder_probe(const ScmConfig& cfg, double epsilon,
                               std::size_t n_w, std::uint64_t seed,
                               bool parallel = true);

}  // namespace rtwin

#include "rtwin/scm.hpp"

#include <cmath>
#include <stdexcept>

#include "rtwin/parallel.hpp"
#include "rtwin/prng.hpp"
#include "rtwin/stats.hpp"

namespace rtwin {

const char* covariate_mode_name(CovariateMode m) {
  return m == CovariateMode::kX ? "x" : "w";
}

CovariateMode covariate_mode_from_name(const std::string& s) {
  if (s == "x" || s == "X") return CovariateMode::kX;
  if (s == "w" || s == "W") return CovariateMode::kW;
  throw std::invalid_argument("unknown covariate mode '" + s + "'");
}

ScmConfig scm_setting(const std::string& name) {
  ScmConfig cfg;
  if (name == "default") return cfg;
  if (name == "lambda1_zero") cfg.lambda1 = 0;
  else if (name == "lambda2_zero") cfg.lambda2 = 0;
  else if (name == "gamma1_zero") cfg.gamma1 = 0;
  else if (name == "gamma2_zero") cfg.gamma2 = 0;
  else throw std::invalid_argument("unknown setting '" + name + "'");
  return cfg;
}

std::vector<std::string> scm_setting_names() {
  return {"default", "lambda1_zero", "lambda2_zero", "gamma1_zero", "gamma2_zero"};
}

double ScmProbs::p_a(const double* x) const {
  return expit(0.5 * x[0] + 0.5 * x[1] - 1.0);
}
double ScmProbs::p_z(int a, const double* x) const {
  return expit(-1.7 + 1.5 * a + 0.5 * x[2] * x[2]);
}
double ScmProbs::p_m(int a, int z, const double* x) const {
  return expit(-1.5 + cfg.lambda1 * z + cfg.lambda2 * a + 0.4 * x[1] + 0.2 * x[2]);
}
double ScmProbs::p_y(int a, int z, int m, const double* x) const {
  return expit(0.4 * m + cfg.gamma1 * z + cfg.gamma2 * a - 0.5 * std::cos(x[0]) - 1.5);
}

namespace {

constexpr int kLevels = 4;  // Bin(3, .) support

void binom3_pmf(double p, double* out) {
  const double q = 1.0 - p;
  out[0] = q * q * q;
  out[1] = 3.0 * p * q * q;
  out[2] = 3.0 * p * p * q;
  out[3] = p * p * p;
}

void transform_w(const double* x, double* w) {
  w[0] = std::exp(x[0] - 1.0);
  w[1] = (x[0] + x[1] * x[1]) / 4.0;
  w[2] = std::sin(x[2]);
}

}  // namespace

Dataset simulate_observed(const ScmConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate_observed needs n >= 1");
  const ScmProbs probs{cfg};
  Dataset d;
  d.w.resize(n, 3);
  d.a.resize(n);
  d.z.resize(n);
  d.m.resize(n);
  d.y.resize(static_cast<Eigen::Index>(n));
  d.k_z = d.k_m = kLevels;
  d.z_labels = {0, 1, 2, 3};
  d.m_labels = {0, 1, 2, 3};
  d.covariate_names = {"w1", "w2", "w3"};

  Rng rng(derive_seed(seed, hash_str("observed")));
  double x[3], w[3];
  for (std::size_t i = 0; i < n; ++i) {
    x[0] = rng.beta23();
    x[1] = rng.beta23();
    x[2] = rng.beta23();
    const int a = rng.bernoulli(probs.p_a(x)) ? 1 : 0;
    const int z = rng.binomial3(probs.p_z(a, x));
    const int m = rng.binomial3(probs.p_m(a, z, x));
    const double y = rng.bernoulli(probs.p_y(a, z, m, x)) ? 1.0 : 0.0;
    if (cfg.covariate_mode == CovariateMode::kW) {
      transform_w(x, w);
    } else {
      w[0] = x[0]; w[1] = x[1]; w[2] = x[2];
    }
    for (int j = 0; j < 3; ++j) d.w(static_cast<Eigen::Index>(i), j) = w[j];
    d.a[i] = static_cast<std::int8_t>(a);
    d.z[i] = static_cast<std::int16_t>(z);
    d.m[i] = static_cast<std::int16_t>(m);
    d.y[static_cast<Eigen::Index>(i)] = y;
  }
  return d;
}

OracleNuisance::OracleNuisance(const ScmConfig& cfg, double clip, double link_shift)
    : probs_{cfg}, clip_(clip), link_shift_(link_shift) {
  if (cfg.covariate_mode != CovariateMode::kX)
    throw std::invalid_argument("oracle nuisances read the structural covariates X");
}

void OracleNuisance::values_at(const double* w, int n_w, NuisanceValues& out) const {
  if (n_w != 3) throw std::invalid_argument("oracle covariate row must be X (3 wide)");
  out.resize(kLevels, kLevels);
  const double* x = w;
  const double eps = link_shift_;
  auto shift = [eps](double p) { return eps == 0.0 ? p : expit(logit(p) + eps); };

  out.b1 = shift(probs_.p_a(x));
  double pmf[kLevels];
  for (int a = 0; a < 2; ++a) {
    binom3_pmf(shift(probs_.p_z(a, x)), pmf);
    for (int z = 0; z < kLevels; ++z) out.g[a][z] = pmf[z];
    for (int z = 0; z < kLevels; ++z) {
      binom3_pmf(shift(probs_.p_m(a, z, x)), pmf);
      for (int m = 0; m < kLevels; ++m) out.hstar[a](z, m) = pmf[m];
      for (int m = 0; m < kLevels; ++m)
        out.d[a](z, m) = shift(probs_.p_y(a, z, m, x));
    }
  }
  // c(1|z,m,x) by Bayes from the unperturbed law, then the same link shift.
  ScmProbs base = probs_;
  double pz1[kLevels], pz0[kLevels];
  binom3_pmf(base.p_z(1, x), pz1);
  binom3_pmf(base.p_z(0, x), pz0);
  const double b1_true = base.p_a(x);
  for (int z = 0; z < kLevels; ++z) {
    double pm1[kLevels], pm0[kLevels];
    binom3_pmf(base.p_m(1, z, x), pm1);
    binom3_pmf(base.p_m(0, z, x), pm0);
    for (int m = 0; m < kLevels; ++m) {
      const double j1 = b1_true * pz1[z] * pm1[m];
      const double j0 = (1.0 - b1_true) * pz0[z] * pm0[m];
      out.c1(z, m) = shift(j1 / (j1 + j0));
    }
  }
  finalize_values(out, clip_);
}

namespace {

struct TruthAcc {
  // sums and sums of squares for 6 path contrasts, 7 thetas, 9 outcomes
  std::array<double, 6> psi_s{}, psi_s2{};
  std::array<double, 7> th_s{}, th_s2{};
  std::array<double, 9> cf_s{}, cf_s2{};

  void add_psi(const std::array<double, 6>& v) {
    for (int i = 0; i < 6; ++i) {
      psi_s[i] += v[i];
      psi_s2[i] += v[i] * v[i];
    }
  }
  void merge(const TruthAcc& o) {
    for (int i = 0; i < 6; ++i) {
      psi_s[i] += o.psi_s[i];
      psi_s2[i] += o.psi_s2[i];
    }
    for (int i = 0; i < 7; ++i) {
      th_s[i] += o.th_s[i];
      th_s2[i] += o.th_s2[i];
    }
    for (int i = 0; i < 9; ++i) {
      cf_s[i] += o.cf_s[i];
      cf_s2[i] += o.cf_s2[i];
    }
  }
};

double se_from(double s, double s2, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double mean = s / nn;
  const double var = (s2 - nn * mean * mean) / (nn - 1.0);
  return var > 0 ? std::sqrt(var / nn) : 0.0;
}

TruthSummary summarize(const TruthAcc& acc, std::size_t n_mc, bool with_theta,
                       bool with_cf) {
  TruthSummary out;
  out.n_mc = n_mc;
  const double nn = static_cast<double>(n_mc);
  auto fill = [&](double s) { return s / nn; };
  out.psi.p1 = fill(acc.psi_s[0]);
  out.psi.p2 = fill(acc.psi_s[1]);
  out.psi.p3 = fill(acc.psi_s[2]);
  out.psi.p4 = fill(acc.psi_s[3]);
  out.psi.intermediate = fill(acc.psi_s[4]);
  out.psi.ate = fill(acc.psi_s[5]);
  out.psi_se.p1 = se_from(acc.psi_s[0], acc.psi_s2[0], n_mc);
  out.psi_se.p2 = se_from(acc.psi_s[1], acc.psi_s2[1], n_mc);
  out.psi_se.p3 = se_from(acc.psi_s[2], acc.psi_s2[2], n_mc);
  out.psi_se.p4 = se_from(acc.psi_s[3], acc.psi_s2[3], n_mc);
  out.psi_se.intermediate = se_from(acc.psi_s[4], acc.psi_s2[4], n_mc);
  out.psi_se.ate = se_from(acc.psi_s[5], acc.psi_s2[5], n_mc);
  if (with_theta)
    for (int t = 0; t < 7; ++t) {
      out.theta[t] = fill(acc.th_s[t]);
      out.theta_se[t] = se_from(acc.th_s[t], acc.th_s2[t], n_mc);
    }
  if (with_cf)
    for (int i = 0; i < 9; ++i) {
      out.outcome_mean[i] = fill(acc.cf_s[i]);
      out.outcome_se[i] = se_from(acc.cf_s[i], acc.cf_s2[i], n_mc);
    }
  return out;
}

std::array<double, 6> contrasts_from_thetas(const ThetaSet& th) {
  const PathEffects p = decompose(th);
  return {p.p1, p.p2, p.p3, p.p4, p.intermediate, p.ate};
}

}  // namespace

TruthSummary truth_by_enumeration(const ScmConfig& cfg, std::size_t n_mc,
                                  std::uint64_t seed, bool parallel) {
  if (n_mc < 2) throw std::invalid_argument("n_mc too small");
  OracleNuisance oracle([&] {
    ScmConfig c = cfg;
    c.covariate_mode = CovariateMode::kX;
    return c;
  }());
  const ReferenceLevels ref;
  TruthAcc acc = blocked_reduce<TruthAcc>(
      n_mc, TruthAcc{},
      [&](std::size_t lo, std::size_t hi) {
        TruthAcc a;
        Rng rng(derive_seed(seed, hash_str("enum"), lo));
        NuisanceValues v;
        double x[3];
        for (std::size_t i = lo; i < hi; ++i) {
          x[0] = rng.beta23();
          x[1] = rng.beta23();
          x[2] = rng.beta23();
          oracle.values_at(x, 3, v);
          const ThetaSet th = plugin_conditionals(v, ref);
          for (int t = 0; t < 7; ++t) {
            a.th_s[t] += th[t];
            a.th_s2[t] += th[t] * th[t];
          }
          a.add_psi(contrasts_from_thetas(th));
        }
        return a;
      },
      [](TruthAcc& into, const TruthAcc& p) { into.merge(p); }, parallel);
  return summarize(acc, n_mc, true, false);
}

TruthSummary truth_by_counterfactuals(const ScmConfig& cfg, std::size_t n_mc,
                                      std::uint64_t seed, bool parallel) {
  if (n_mc < 2) throw std::invalid_argument("n_mc too small");
  const ScmProbs probs{cfg};
  TruthAcc acc = blocked_reduce<TruthAcc>(
      n_mc, TruthAcc{},
      [&](std::size_t lo, std::size_t hi) {
        TruthAcc a;
        Rng rng(derive_seed(seed, hash_str("cf"), lo));
        double x[3];
        for (std::size_t i = lo; i < hi; ++i) {
          x[0] = rng.beta23();
          x[1] = rng.beta23();
          x[2] = rng.beta23();
          // shared trial-level Z noise across arms; twins are fresh draws
          const auto [z0, z1] = rng.binomial3_coupled(probs.p_z(0, x), probs.p_z(1, x));
          const int t1 = rng.binomial3(probs.p_z(1, x));
          const int t0 = rng.binomial3(probs.p_z(0, x));
          // shared trial-level M noise across all (a, z) pairs
          double um[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
          auto m_of = [&](int arm, int z) {
            const double pm = probs.p_m(arm, z, x);
            int k = 0;
            for (int t = 0; t < 3; ++t) k += um[t] < pm ? 1 : 0;
            return k;
          };
          const int m1z1 = m_of(1, z1), m1z0 = m_of(1, z0), m1t1 = m_of(1, t1),
                    m0z0 = m_of(0, z0);
          // shared Y noise
          const double uy = rng.uniform();
          auto y_of = [&](int arm, int z, int m) {
            return uy < probs.p_y(arm, z, m, x) ? 1.0 : 0.0;
          };
          const double ys0 = y_of(1, z1, m1z1);
          const double ys1 = y_of(0, z1, m1z1);
          const double ys2 = y_of(0, z0, m1z1);
          const double ys3 = y_of(0, z0, m1z0);
          const double ys4 = y_of(0, z0, m0z0);
          const double yp1 = y_of(0, z1, m1t1);   // Y'_{S1}
          const double yp2 = y_of(0, z0, m1t1);   // Y'_{S2}
          const double ypp2 = y_of(0, t0, m1z1);  // Y''_{S2}
          const double ypp3 = y_of(0, t0, m1z0);  // Y''_{S3}
          const std::array<double, 9> cf = {ys0, ys1, ys2, ys3, ys4,
                                            yp1, yp2, ypp2, ypp3};
          for (int j = 0; j < 9; ++j) {
            a.cf_s[j] += cf[j];
            a.cf_s2[j] += cf[j] * cf[j];
          }
          a.add_psi({ys0 - ys1, yp1 - yp2, ypp2 - ypp3, ys3 - ys4,
                     ys1 - yp1 + yp2 - ypp2 + ypp3 - ys3, ys0 - ys4});
        }
        return a;
      },
      [](TruthAcc& into, const TruthAcc& p) { into.merge(p); }, parallel);
  return summarize(acc, n_mc, false, true);
}

RemainderProbe remainder_probe(const ScmConfig& cfg, double epsilon, std::size_t n_w,
                               std::uint64_t seed, bool parallel) {
  if (epsilon < 0.0 || epsilon > 0.3)
    throw std::invalid_argument("epsilon must lie in [0, 0.3]");
  ScmConfig xcfg = cfg;
  xcfg.covariate_mode = CovariateMode::kX;
  const OracleNuisance truth(xcfg);
  const OracleNuisance perturbed(xcfg, 0.0, epsilon);
  const ScmProbs probs{xcfg};
  const ReferenceLevels ref;

  struct Acc {
    ThetaSet theta_true{}, theta_eps{}, resid_eps{};
    void merge(const Acc& o) {
      for (int t = 0; t < kNumTargets; ++t) {
        theta_true[t] += o.theta_true[t];
        theta_eps[t] += o.theta_eps[t];
        resid_eps[t] += o.resid_eps[t];
      }
    }
  };
  Acc acc = blocked_reduce<Acc>(
      n_w, Acc{},
      [&](std::size_t lo, std::size_t hi) {
        Acc a;
        Rng rng(derive_seed(seed, hash_str("probe"), lo));
        NuisanceValues vt, ve;
        double x[3], pmf_z[2][kLevels], pmf_m[kLevels];
        for (std::size_t i = lo; i < hi; ++i) {
          x[0] = rng.beta23();
          x[1] = rng.beta23();
          x[2] = rng.beta23();
          truth.values_at(x, 3, vt);
          perturbed.values_at(x, 3, ve);
          const ThetaSet ct = plugin_conditionals(vt, ref);
          const ThetaSet ce = plugin_conditionals(ve, ref);
          for (int t = 0; t < kNumTargets; ++t) {
            a.theta_true[t] += ct[t];
            a.theta_eps[t] += ce[t];
          }
          // E[phi residual | W] exactly: the influence function is linear in
          // Y, so replace Y by d_true and weight the (A,Z,M) cells by their
          // true conditional probabilities.
          const double b1 = probs.p_a(x);
          for (int arm = 0; arm < 2; ++arm) binom3_pmf(probs.p_z(arm, x), pmf_z[arm]);
          for (int arm = 0; arm < 2; ++arm) {
            const double pa = arm == 1 ? b1 : 1.0 - b1;
            for (int z = 0; z < kLevels; ++z) {
              binom3_pmf(probs.p_m(arm, z, x), pmf_m);
              for (int m = 0; m < kLevels; ++m) {
                const double wt = pa * pmf_z[arm][z] * pmf_m[m];
                const double ybar = probs.p_y(arm, z, m, x);
                const EifParts parts = eif_parts(ve, arm, z, m, ybar, ref);
                for (int t = 0; t < kNumTargets; ++t)
                  a.resid_eps[t] += wt * parts.resid[t];
              }
            }
          }
        }
        return a;
      },
      [](Acc& into, const Acc& p) { into.merge(p); }, parallel);

  RemainderProbe out;
  out.epsilon = epsilon;
  const double nn = static_cast<double>(n_w);
  for (int t = 0; t < kNumTargets; ++t) {
    const double theta_true = acc.theta_true[t] / nn;
    const double theta_eps = acc.theta_eps[t] / nn;
    const double mean_resid = acc.resid_eps[t] / nn;
    // E[phi] = E[resid] + E[cond_eps] - theta_eps = E[resid]
    out.plugin_error[t] = theta_eps - theta_true;
    out.debiased_error[t] = theta_eps + mean_resid - theta_true;
  }
  return out;
}

}  // namespace rtwin

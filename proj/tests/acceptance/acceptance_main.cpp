// Acceptance suite: runs every acceptance criterion at its pinned tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 only if all pass.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rtwin/estimator.hpp"
#include "rtwin/parallel.hpp"
#include "rtwin/scm.hpp"
#include "rtwin/stats.hpp"
#include "rtwin/study.hpp"

using namespace rtwin;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", idx, name,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::array<double, 6> psi_array(const PathEffects& p) {
  return {p.p1, p.p2, p.p3, p.p4, p.intermediate, p.ate};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. The two ground-truth oracles agree on every component in every setting.
void criterion_oracle_equivalence() {
  const std::size_t n_mc = 2'000'000;
  bool pass = true;
  std::string detail;
  char buf[160];
  for (const std::string& setting : scm_setting_names()) {
    const ScmConfig cfg = scm_setting(setting);
    const TruthSummary e = truth_by_enumeration(cfg, n_mc, 901);
    const TruthSummary c = truth_by_counterfactuals(cfg, n_mc, 902);
    const auto ev = psi_array(e.psi), cv = psi_array(c.psi);
    const auto es = psi_array(e.psi_se), cs = psi_array(c.psi_se);
    for (int i = 0; i < 6; ++i) {
      const double tol = 3.0 * std::sqrt(es[i] * es[i] + cs[i] * cs[i]) + 1e-12;
      if (std::abs(ev[i] - cv[i]) > tol) {
        pass = false;
        std::snprintf(buf, sizeof buf, "%s/%s diff %.2e > %.2e; ", setting.c_str(),
                      path_name(i), std::abs(ev[i] - cv[i]), tol);
        detail += buf;
      }
    }
  }
  report(1, "oracle equivalence (enumeration vs counterfactual simulation)", pass,
         detail);
}

// 2. Plug-in and one-step decompositions telescope to the S0-S4 contrast.
void criterion_telescoping() {
  const Dataset d = simulate_observed(ScmConfig{}, 2000, 911);
  EstimateOptions opt;
  opt.q = 3;
  opt.seed = 912;
  opt.learners = LearnerSpecSet::all({Family::kInteractions});
  const EffectEstimates est = estimate(d, opt);
  double sp = 0, so = 0;
  for (int p = 0; p < 5; ++p) {
    sp += est.paths[p].plugin;
    so += est.paths[p].onestep;
  }
  const double gap_p =
      std::abs(sp - (est.targets[0].plugin - est.targets[6].plugin));
  const double gap_o =
      std::abs(so - (est.targets[0].onestep - est.targets[6].onestep));
  char buf[120];
  std::snprintf(buf, sizeof buf, "plug-in gap %.2e, one-step gap %.2e", gap_p, gap_o);
  report(2, "telescoping identity within 1e-10", gap_p <= 1e-10 && gap_o <= 1e-10, buf);
}

// 3. Each coefficient knockout nulls its designated path in the enumerated truth.
void criterion_null_paths() {
  struct Case {
    const char* setting;
    std::vector<int> paths;  // indices into path_name order
  };
  const Case cases[] = {{"lambda1_zero", {2}},
                        {"lambda2_zero", {3}},
                        {"gamma1_zero", {1, 4}},
                        {"gamma2_zero", {0}}};
  bool pass = true;
  std::string detail;
  char buf[120];
  for (const Case& c : cases) {
    const TruthSummary t = truth_by_enumeration(scm_setting(c.setting), 2'000'000, 921);
    const auto v = psi_array(t.psi), s = psi_array(t.psi_se);
    for (int p : c.paths) {
      const double tol = 3.0 * s[p] + 1e-12;
      if (std::abs(v[p]) > tol) {
        pass = false;
        std::snprintf(buf, sizeof buf, "%s/%s |%.2e| > %.2e; ", c.setting,
                      path_name(p), v[p], tol);
        detail += buf;
      }
    }
  }
  report(3, "null paths under the four coefficient knockouts", pass, detail);
}

struct StudyOutput {
  std::vector<StudyRecord> records;
};

// Shared desk-scale study for criteria 4 and 5.
StudyOutput run_acceptance_study(const fs::path& dir) {
  StudyConfig cfg;
  cfg.settings = {"lambda1_zero", "lambda2_zero", "gamma1_zero", "gamma2_zero"};
  cfg.modes = {CovariateMode::kX, CovariateMode::kW};
  cfg.ns = {500, 1000, 5000};
  cfg.reps = 200;
  cfg.base_seed = 424242;
  cfg.truth_nmc = 2'000'000;
  cfg.estimator.q = 5;
  cfg.estimator.learners = LearnerSpecSet::all({Family::kInteractions});
  cfg.records_path = (dir / "records.csv").string();
  cfg.metrics_path = (dir / "metrics.csv").string();
  cfg.plotdata_path = (dir / "plotdata.csv").string();
  fs::remove(cfg.records_path);
  run_study(cfg);
  StudyOutput out;
  out.records = read_records(cfg.records_path);
  return out;
}

// 4. Root-n bias is statistically indistinguishable from zero per cell.
void criterion_sqrtn_bias(const StudyOutput& study) {
  std::map<std::string, std::vector<double>> cells;
  for (const StudyRecord& r : study.records) {
    if (r.n != 1000 && r.n != 5000) continue;
    const std::string key = r.setting + "/" + covariate_mode_name(r.mode) + "/n=" +
                            std::to_string(r.n) + "/" + path_name(r.path);
    cells[key].push_back(std::sqrt(double(r.n)) * (r.estimate - r.truth));
  }
  bool pass = true;
  std::string detail;
  int checked = 0;
  double worst = 0;
  std::string worst_key;
  for (const auto& [key, vals] : cells) {
    const MeanVar mv = mean_var(vals, false);
    const double bound = 3.0 * std::sqrt(mv.var / double(vals.size()));
    const double score = std::abs(mv.mean) / bound;
    ++checked;
    if (score > worst) {
      worst = score;
      worst_key = key;
    }
    if (std::abs(mv.mean) > bound) {
      pass = false;
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s |%.3f| > %.3f; ", key.c_str(), mv.mean,
                    bound);
      detail += buf;
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d cells, worst |mean|/bound = %.2f (%s)", checked,
                worst, worst_key.c_str());
  report(4, "root-n bias within 3 Monte Carlo SEs of zero", pass,
         detail.empty() ? buf : detail);
}

// 5. Coverage bands: [0.90, 0.99] at n=5000 and >= 0.80 at n=500.
void criterion_coverage(const StudyOutput& study) {
  std::map<std::string, std::pair<int, int>> cells;  // covered, total
  for (const StudyRecord& r : study.records) {
    if (r.n != 500 && r.n != 5000) continue;
    const std::string key = r.setting + "/" + covariate_mode_name(r.mode) + "/n=" +
                            std::to_string(r.n) + "/" + path_name(r.path);
    cells[key].first += r.covered;
    cells[key].second += 1;
  }
  bool pass = true;
  std::string detail;
  double worst_hi = 1.0, worst_lo = 1.0;
  for (const auto& [key, cc] : cells) {
    const double cov = double(cc.first) / double(cc.second);
    const bool big = key.find("n=5000") != std::string::npos;
    if (big) {
      worst_hi = std::min(worst_hi, cov);
      if (cov < 0.90 || cov > 0.99) {
        pass = false;
        detail += key + " coverage " + std::to_string(cov) + "; ";
      }
    } else {
      worst_lo = std::min(worst_lo, cov);
      if (cov < 0.80) {
        pass = false;
        detail += key + " coverage " + std::to_string(cov) + "; ";
      }
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "min coverage: n=5000 %.3f, n=500 %.3f", worst_hi,
                worst_lo);
  report(5, "confidence-interval coverage bands", pass, detail.empty() ? buf : detail);
}

// 6. Influence functions are mean zero at the true nuisances.
void criterion_eif_mean_zero() {
  const ScmConfig cfg;
  const std::size_t n = 100000;
  const Dataset d = simulate_observed(cfg, n, 931);
  const OracleNuisance oracle(cfg);
  const TruthSummary truth = truth_by_enumeration(cfg, 2'000'000, 932);
  bool pass = true;
  std::string detail;
  for (int t = 0; t < kNumTargets; ++t) {
    const std::vector<double> phi =
        eif_values(static_cast<TargetId>(t), oracle, d, truth.theta[t]);
    const MeanVar mv = mean_var(phi);
    const double bound = 3.0 * std::sqrt(mv.var / double(n));
    if (std::abs(mv.mean) > bound) {
      pass = false;
      char buf[120];
      std::snprintf(buf, sizeof buf, "%s |%.2e| > %.2e; ",
                    target_name(static_cast<TargetId>(t)), mv.mean, bound);
      detail += buf;
    }
  }
  report(6, "influence functions mean zero at the truth", pass, detail);
}

// 7. Debiased error is second order in the nuisance perturbation.
void criterion_remainder() {
  const ScmConfig cfg;
  const std::size_t n_w = 200000;
  const RemainderProbe full = remainder_probe(cfg, 0.1, n_w, 941);
  const RemainderProbe half = remainder_probe(cfg, 0.05, n_w, 941);
  bool pass = true;
  std::string detail;
  for (int t = 0; t < kNumTargets; ++t) {
    const double rd = full.debiased_error[t] / half.debiased_error[t];
    const double rp = full.plugin_error[t] / half.plugin_error[t];
    if (!(rd >= 2.5 && rd <= 6.0 && rp >= 1.5 && rp <= 2.5)) {
      pass = false;
      char buf[140];
      std::snprintf(buf, sizeof buf, "%s debiased ratio %.2f, plug-in ratio %.2f; ",
                    target_name(static_cast<TargetId>(t)), rd, rp);
      detail += buf;
    }
  }
  report(7, "second-order remainder ratios", pass, detail);
}

// 8. Byte-identical replicate runs under identical configs.
void criterion_determinism(const fs::path& dir) {
  StudyConfig cfg;
  cfg.settings = {"default"};
  cfg.modes = {CovariateMode::kX};
  cfg.ns = {400};
  cfg.reps = 3;
  cfg.base_seed = 5;
  cfg.truth_nmc = 100000;
  cfg.estimator.q = 2;
  cfg.estimator.learners = LearnerSpecSet::all({Family::kInteractions});
  StudyConfig a = cfg, b = cfg;
  a.records_path = (dir / "det_a.csv").string();
  b.records_path = (dir / "det_b.csv").string();
  fs::remove(a.records_path);
  fs::remove(b.records_path);
  run_study(a);
  run_study(b);
  const bool pass = slurp(a.records_path) == slurp(b.records_path);
  report(8, "byte-identical record files across reruns", pass, "");
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "rtwin_acceptance";
  fs::create_directories(dir);
  std::printf("acceptance suite (threads: %d, workdir: %s)\n", max_threads(),
              dir.string().c_str());

  criterion_oracle_equivalence();
  criterion_telescoping();
  criterion_null_paths();
  const StudyOutput study = run_acceptance_study(dir);
  criterion_sqrtn_bias(study);
  criterion_coverage(study);
  criterion_eif_mean_zero();
  criterion_remainder();
  criterion_determinism(dir);

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}

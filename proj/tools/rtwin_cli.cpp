#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "rtwin/cli.hpp"
#include "rtwin/parallel.hpp"

namespace {

rtwin::LearnerSpec learner_from_flag(const std::string& name, int cv_folds) {
  rtwin::LearnerSpec spec;
  spec.cv_folds = cv_folds;
  if (name == "cv") {
    spec.cv_select = true;
  } else {
    spec.cv_select = false;
    spec.family = rtwin::family_from_name(name);
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recanting-twins causal mediation analysis"};
  app.set_config("--config", "", "Key/value config file; command-line flags win");
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate path-specific effects from a CSV");
  est->configurable()->fallthrough();
  std::string est_input, est_prefix = "estimate";
  rtwin::CsvSchema schema;
  schema.exposure = "a";
  schema.intermediate = "z";
  schema.mediator = "m";
  schema.outcome = "y";
  std::string covariates = "w1,w2,w3";
  int est_q = 5;
  double est_alpha = 0.05, est_clip = rtwin::kDefaultClip;
  std::uint64_t est_seed = 1;
  std::string est_learner = "cv";
  int est_cv_folds = 5;
  int a_treated = 1, a_control = 0;
  est->add_option("--input", est_input, "Input CSV")->required();
  est->add_option("--output-prefix", est_prefix, "Report prefix (.json/.txt)");
  est->add_option("--exposure", schema.exposure, "Exposure column");
  est->add_option("--intermediate", schema.intermediate, "Intermediate column");
  est->add_option("--mediator", schema.mediator, "Mediator column");
  est->add_option("--outcome", schema.outcome, "Outcome column");
  est->add_option("--covariates", covariates, "Comma-separated covariate columns");
  est->add_option("--q", est_q, "Cross-fitting folds (1 = no cross-fitting)");
  est->add_option("--alpha", est_alpha, "CI level is 1 - alpha");
  est->add_option("--seed", est_seed, "Seed");
  est->add_option("--learner", est_learner, "cv | intercept | main | interact");
  est->add_option("--cv-folds", est_cv_folds, "Folds for learner selection");
  est->add_option("--clip", est_clip, "Probability floor for b and c");
  est->add_option("--a-treated", a_treated, "Treated exposure level a'");
  est->add_option("--a-control", a_control, "Control exposure level a*");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset CSV");
  sim->configurable()->fallthrough();
  rtwin::SimulateCommand sim_cmd;
  std::string sim_setting = "default", sim_mode = "x";
  sim->add_option("--n", sim_cmd.n, "Rows")->required();
  sim->add_option("--seed", sim_cmd.seed, "Seed");
  sim->add_option("--setting", sim_setting,
                  "default | lambda1_zero | lambda2_zero | gamma1_zero | gamma2_zero");
  sim->add_option("--lambda1", sim_cmd.scm.lambda1, "Override lambda1");
  sim->add_option("--lambda2", sim_cmd.scm.lambda2, "Override lambda2");
  sim->add_option("--gamma1", sim_cmd.scm.gamma1, "Override gamma1");
  sim->add_option("--gamma2", sim_cmd.scm.gamma2, "Override gamma2");
  sim->add_option("--covariate-mode", sim_mode, "x | w");
  sim->add_option("--output", sim_cmd.output, "Output CSV ('-' for stdout)");

  // replicate
  auto* rep = app.add_subcommand("replicate", "Run the replication study");
  rep->configurable()->fallthrough();
  rtwin::StudyConfig study;
  std::string rep_settings = "default,lambda1_zero,lambda2_zero,gamma1_zero,gamma2_zero";
  std::string rep_modes = "x,w", rep_ns = "500,1000,2000,5000";
  std::string rep_learner = "interact";
  int rep_threads = 0;
  std::string outdir = ".";
  rep->add_option("--settings", rep_settings, "Comma-separated setting names");
  rep->add_option("--modes", rep_modes, "Comma-separated covariate modes (x,w)");
  rep->add_option("--ns", rep_ns, "Comma-separated sample sizes");
  rep->add_option("--reps", study.reps, "Replications per cell");
  rep->add_option("--base-seed", study.base_seed, "Base seed");
  rep->add_option("--truth-nmc", study.truth_nmc, "Monte Carlo draws for the truths");
  rep->add_option("--q", study.estimator.q, "Cross-fitting folds");
  rep->add_option("--learner", rep_learner, "cv | intercept | main | interact");
  rep->add_option("--outdir", outdir, "Directory for records/metrics/plotdata CSVs");
  rep->add_option("--threads", rep_threads, "Worker threads (0 = library default)");
  rep->add_flag("--resume", study.resume, "Resume from an existing record file");

  // report
  auto* repo = app.add_subcommand("report", "Recompute metrics from a record file");
  repo->configurable()->fallthrough();
  rtwin::ReportCommand report_cmd;
  repo->add_option("--records", report_cmd.records, "Records CSV")->required();
  repo->add_option("--metrics", report_cmd.metrics_path, "Metrics CSV output");
  repo->add_option("--plotdata", report_cmd.plotdata_path, "Plot-data CSV output");

  CLI11_PARSE(app, argc, argv);

  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };

  try {
    if (est->parsed()) {
      rtwin::EstimateCommand cmd;
      cmd.input = est_input;
      cmd.output_prefix = est_prefix;
      cmd.schema = schema;
      cmd.schema.covariates = split(covariates);
      cmd.options.q = est_q;
      cmd.options.alpha = est_alpha;
      cmd.options.seed = est_seed;
      cmd.options.clip = est_clip;
      cmd.options.ref = {a_treated, a_control};
      if (a_treated == a_control || a_treated < 0 || a_treated > 1 || a_control < 0 ||
          a_control > 1)
        throw CLI::ValidationError("--a-treated/--a-control must be distinct 0/1");
      cmd.options.learners =
          rtwin::LearnerSpecSet::all(learner_from_flag(est_learner, est_cv_folds));
      rtwin::cmd_estimate(cmd);
    } else if (sim->parsed()) {
      sim_cmd.scm = [&] {
        // explicit coefficient flags override the named setting
        rtwin::ScmConfig base = rtwin::scm_setting(sim_setting);
        if (sim->count("--lambda1")) base.lambda1 = sim_cmd.scm.lambda1;
        if (sim->count("--lambda2")) base.lambda2 = sim_cmd.scm.lambda2;
        if (sim->count("--gamma1")) base.gamma1 = sim_cmd.scm.gamma1;
        if (sim->count("--gamma2")) base.gamma2 = sim_cmd.scm.gamma2;
        return base;
      }();
      sim_cmd.scm.covariate_mode = rtwin::covariate_mode_from_name(sim_mode);
      rtwin::cmd_simulate(sim_cmd);
    } else if (rep->parsed()) {
      if (rep_threads > 0) rtwin::set_threads(rep_threads);
      study.settings = split(rep_settings);
      study.modes.clear();
      for (const std::string& m : split(rep_modes))
        study.modes.push_back(rtwin::covariate_mode_from_name(m));
      study.ns.clear();
      for (const std::string& v : split(rep_ns))
        study.ns.push_back(static_cast<std::size_t>(std::stoull(v)));
      study.estimator.learners =
          rtwin::LearnerSpecSet::all(learner_from_flag(rep_learner, 5));
      study.records_path = outdir + "/records.csv";
      study.metrics_path = outdir + "/metrics.csv";
      study.plotdata_path = outdir + "/plotdata.csv";
      rtwin::cmd_replicate({study});
    } else if (repo->parsed()) {
      rtwin::cmd_report(report_cmd);
    }
  } catch (const rtwin::SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rtwin::kExitUsage;
  } catch (const rtwin::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rtwin::kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rtwin::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rtwin::kExitRuntime;
  }
  return rtwin::kExitOk;
}

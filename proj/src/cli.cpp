#include "rtwin/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "rtwin/stats.hpp"

namespace rtwin {

namespace {

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string ci_cell(const EstimateRow& r) {
  return fmt4(r.onestep) + " (" + fmt4(r.ci_lo) + ", " + fmt4(r.ci_hi) + ")";
}

const char* path_label(int idx) {
  static const char* labels[kNumPaths] = {
      "A -> Y", "A -> Z -> Y", "A -> Z -> M -> Y", "A -> M -> Y",
      "Int Confounder", "ATE"};
  return labels[idx];
}

nlohmann::json row_json(const EstimateRow& r) {
  return {{"plugin", r.plugin}, {"estimate", r.onestep}, {"se", r.se},
          {"ci_lo", r.ci_lo},   {"ci_hi", r.ci_hi},      {"z", r.zstat},
          {"p_value", r.pvalue}};
}

}  // namespace

std::string render_text_report(const EffectEstimates& est) {
  std::ostringstream out;
  out << "Path-specific effect estimates (n=" << est.n << ", Q=" << est.q
      << ", alpha=" << est.alpha << ", seed=" << est.seed << ")\n";
  out << "a' = " << est.ref.treated << ", a* = " << est.ref.control << "\n\n";
  const int order[kNumPaths] = {5, 0, 1, 2, 3, 4};  // ATE first, then paths
  out << "  Path                 Effect (" << 100 * (1 - est.alpha) << "% CI)"
      << "                p-value\n";
  for (int idx : order) {
    const EstimateRow& r = est.paths[static_cast<std::size_t>(idx)];
    char line[160];
    std::snprintf(line, sizeof line, "  %-20s %-36s %.4g\n", path_label(idx),
                  ci_cell(r).c_str(), r.pvalue);
    out << line;
  }
  const WaldTest t = test_intermediate_confounding(est);
  out << "\nIntermediate-confounding test (psi_int = 0): z = " << fmt4(t.z)
      << ", p = " << fmt4(t.p) << "\n\nTargets:\n";
  for (int t2 = 0; t2 < kNumTargets; ++t2) {
    const EstimateRow& r = est.targets[static_cast<std::size_t>(t2)];
    char line[160];
    std::snprintf(line, sizeof line, "  %-5s %-36s plug-in %.4f\n",
                  target_name(static_cast<TargetId>(t2)), ci_cell(r).c_str(),
                  r.plugin);
    out << line;
  }
  return out.str();
}

std::string render_json_report(const EffectEstimates& est) {
  nlohmann::json j;
  j["n"] = est.n;
  j["q"] = est.q;
  j["alpha"] = est.alpha;
  j["seed"] = est.seed;
  j["a_treated"] = est.ref.treated;
  j["a_control"] = est.ref.control;
  for (int t = 0; t < kNumTargets; ++t)
    j["targets"][target_name(static_cast<TargetId>(t))] =
        row_json(est.targets[static_cast<std::size_t>(t)]);
  for (int p = 0; p < kNumPaths; ++p)
    j["paths"][path_name(p)] = row_json(est.paths[static_cast<std::size_t>(p)]);
  const WaldTest t = test_intermediate_confounding(est);
  j["intermediate_confounding_test"] = {{"z", t.z}, {"p_value", t.p}};
  return j.dump(2);
}

void cmd_estimate(const EstimateCommand& cmd) {
  const Dataset data = load_dataset_file(cmd.input, cmd.schema);
  const DiagnosticsReport diag = validate(data);
  for (const std::string& w : diag.warnings)
    std::cerr << "warning: " << w << '\n';
  const EffectEstimates est = estimate(data, cmd.options);
  {
    std::ofstream out(cmd.output_prefix + ".json");
    if (!out) throw std::runtime_error("cannot write report files");
    out << render_json_report(est) << '\n';
  }
  {
    std::ofstream out(cmd.output_prefix + ".txt");
    if (!out) throw std::runtime_error("cannot write report files");
    out << render_text_report(est);
  }
  std::cout << render_text_report(est);
}

void cmd_simulate(const SimulateCommand& cmd) {
  if (cmd.n < 1) throw std::invalid_argument("simulate needs n >= 1");
  const Dataset d = simulate_observed(cmd.scm, cmd.n, cmd.seed);
  if (cmd.output.empty() || cmd.output == "-")
    save_dataset(d, std::cout);
  else
    save_dataset_file(d, cmd.output);
}

void cmd_replicate(const ReplicateCommand& cmd) {
  run_study(cmd.study);
}

void cmd_report(const ReportCommand& cmd) {
  const std::vector<StudyRecord> records = read_records(cmd.records);
  const std::vector<MetricsRow> metrics = aggregate_records(records);
  write_metrics(metrics, cmd.metrics_path);
  if (!cmd.plotdata_path.empty()) write_plotdata(metrics, cmd.plotdata_path);
}

}  // namespace rtwin

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtwin/dataset.hpp"
#include "rtwin/estimator.hpp"
#include "rtwin/study.hpp"

namespace rtwin {

// Exit codes shared by all subcommands.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct EstimateCommand {
  std::string input;
  std::string output_prefix = "estimate";  // writes <prefix>.json and <prefix>.txt
  CsvSchema schema;
  EstimateOptions options;
};

struct SimulateCommand {
  ScmConfig scm;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string output;
};

struct ReplicateCommand {
  StudyConfig study;
};

struct ReportCommand {
  std::string records;
  std::string metrics_path = "metrics.csv";
  std::string plotdata_path;
};

void cmd_estimate(const EstimateCommand& cmd);
void cmd_simulate(const SimulateCommand& cmd);
void cmd_replicate(const ReplicateCommand& cmd);
void cmd_report(const ReportCommand& cmd);

// Text + JSON report writers for a fitted EffectEstimates.
std::string render_text_report(const EffectEstimates& est);
std::string render_json_report(const EffectEstimates& est);

}  // namespace rtwin

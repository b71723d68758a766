#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtwin/estimator.hpp"
#include "rtwin/scm.hpp"

namespace rtwin {

struct StudyRecord {
  std::string setting;
  CovariateMode mode = CovariateMode::kX;
  std::size_t n = 0;
  int rep = 0;
  int path = 0;  // index into path_name()
  double truth = 0;
  double estimate = 0;
  double se = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  int covered = 0;
  double plugin_estimate = 0;
};

struct MetricsRow {
  std::string setting;
  CovariateMode mode = CovariateMode::kX;
  std::size_t n = 0;
  int path = 0;
  int reps = 0;
  double truth = 0;
  double bias = 0;
  double sqrtn_bias = 0;
  double sd = 0;
  double coverage = 0;
};

struct StudyConfig {
  std::vector<std::string> settings = scm_setting_names();
  std::vector<CovariateMode> modes = {CovariateMode::kX, CovariateMode::kW};
  std::vector<std::size_t> ns = {500, 1000, 2000, 5000};
  int reps = 500;
  std::uint64_t base_seed = 1;
  std::size_t truth_nmc = 2'000'000;
  EstimateOptions estimator;  // seed field is ignored; per-rep seeds derived
  std::string records_path;
  std::string metrics_path;
  std::string plotdata_path;
  bool resume = false;
  double max_fail_fraction = 0.05;
};

std::uint64_t replication_seed(std::uint64_t base, const std::string& setting,
                               CovariateMode mode, std::size_t n, int rep);

// Runs the replication study. Records are appended per completed
// (setting, mode, n) cell in replication order, so the record file is
// byte-identical across runs with the same config and is resumable at
// replication granularity.
std::vector<MetricsRow> run_study(const StudyConfig& cfg);

std::vector<StudyRecord> read_records(const std::string& path);
std::vector<MetricsRow> aggregate_records(const std::vector<StudyRecord>& records);
void write_metrics(const std::vector<MetricsRow>& rows, const std::string& path);
void write_plotdata(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace rtwin

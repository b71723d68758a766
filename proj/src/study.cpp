#include "rtwin/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "rtwin/parallel.hpp"
#include "rtwin/prng.hpp"
#include "rtwin/stats.hpp"

namespace rtwin {

std::uint64_t replication_seed(std::uint64_t base, const std::string& setting,
                               CovariateMode mode, std::size_t n, int rep) {
  return derive_seed(base, hash_str(setting.c_str()),
                     static_cast<std::uint64_t>(mode), n,
                     static_cast<std::uint64_t>(rep));
}

namespace {

constexpr const char* kRecordHeader =
    "setting,covariate_mode,n,rep,path,truth,estimate,se,ci_lo,ci_hi,covered,"
    "plugin_estimate";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_record(std::ostream& out, const StudyRecord& r) {
  out << r.setting << ',' << covariate_mode_name(r.mode) << ',' << r.n << ','
      << r.rep << ',' << path_name(r.path) << ',' << fmt(r.truth) << ','
      << fmt(r.estimate) << ',' << fmt(r.se) << ',' << fmt(r.ci_lo) << ','
      << fmt(r.ci_hi) << ',' << r.covered << ',' << fmt(r.plugin_estimate) << '\n';
}

int path_index(const std::string& name) {
  for (int i = 0; i < kNumPaths; ++i)
    if (name == path_name(i)) return i;
  throw std::runtime_error("unknown path label '" + name + "' in records");
}

std::array<double, kNumPaths> truth_array(const PathEffects& p) {
  return {p.p1, p.p2, p.p3, p.p4, p.intermediate, p.ate};
}

}  // namespace

std::vector<MetricsRow> run_study(const StudyConfig& cfg) {
  if (cfg.reps < 2) throw std::invalid_argument("need reps >= 2");
  if (cfg.records_path.empty()) throw std::invalid_argument("records path required");

  // Resume: collect (setting, mode, n, rep) tuples already on disk.
  std::set<std::string> have;
  std::vector<StudyRecord> existing;
  bool fresh = true;
  {
    std::ifstream probe(cfg.records_path);
    if (probe.good()) {
      if (!cfg.resume)
        throw std::runtime_error("record file '" + cfg.records_path +
                                 "' exists; pass resume or remove it");
      existing = read_records(cfg.records_path);
      for (const StudyRecord& r : existing)
        have.insert(r.setting + "|" + covariate_mode_name(r.mode) + "|" +
                    std::to_string(r.n) + "|" + std::to_string(r.rep));
      fresh = false;
    }
  }

  std::ofstream out(cfg.records_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write '" + cfg.records_path + "'");
  if (fresh) out << kRecordHeader << '\n';

  std::vector<StudyRecord> all = std::move(existing);
  for (const std::string& setting : cfg.settings) {
    ScmConfig scm = scm_setting(setting);
    const TruthSummary truth = truth_by_enumeration(
        scm, cfg.truth_nmc, derive_seed(cfg.base_seed, hash_str("truth"),
                                        hash_str(setting.c_str())),
        cfg.estimator.parallel);
    const std::array<double, kNumPaths> truths = truth_array(truth.psi);

    for (const CovariateMode mode : cfg.modes) {
      scm.covariate_mode = mode;
      for (const std::size_t n : cfg.ns) {
        std::vector<int> todo;
        for (int rep = 0; rep < cfg.reps; ++rep) {
          const std::string key = setting + "|" + covariate_mode_name(mode) + "|" +
                                  std::to_string(n) + "|" + std::to_string(rep);
          if (!have.count(key)) todo.push_back(rep);
        }
        if (todo.empty()) continue;

        std::vector<std::vector<StudyRecord>> cell(todo.size());
        std::vector<int> failed(todo.size(), 0);
        // Replications are independent given their derived seeds. Nested
        // estimator parallelism is disabled here; the reps are the kernel.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (cfg.estimator.parallel)
#endif
        for (std::ptrdiff_t ti = 0; ti < static_cast<std::ptrdiff_t>(todo.size());
             ++ti) {
          const int rep = todo[static_cast<std::size_t>(ti)];
          try {
            EstimateOptions opts = cfg.estimator;
            opts.parallel = false;
            opts.seed = replication_seed(cfg.base_seed, setting, mode, n, rep);
            const Dataset data = simulate_observed(scm, n, opts.seed);
            const EffectEstimates est = estimate(data, opts);
            std::vector<StudyRecord>& recs = cell[static_cast<std::size_t>(ti)];
            for (int p = 0; p < kNumPaths; ++p) {
              StudyRecord r;
              r.setting = setting;
              r.mode = mode;
              r.n = n;
              r.rep = rep;
              r.path = p;
              r.truth = truths[static_cast<std::size_t>(p)];
              const EstimateRow& row = est.paths[static_cast<std::size_t>(p)];
              r.estimate = row.onestep;
              r.se = row.se;
              r.ci_lo = row.ci_lo;
              r.ci_hi = row.ci_hi;
              r.covered = (r.truth >= row.ci_lo && r.truth <= row.ci_hi) ? 1 : 0;
              r.plugin_estimate = row.plugin;
              recs.push_back(r);
            }
          } catch (const std::exception& ex) {
            failed[static_cast<std::size_t>(ti)] = 1;
#ifdef _OPENMP
#pragma omp critical
#endif
            std::cerr << "replication failed (setting=" << setting
                      << ", mode=" << covariate_mode_name(mode) << ", n=" << n
                      << ", rep=" << rep << "): " << ex.what() << '\n';
          }
        }
        std::size_t n_failed = 0;
        for (int f : failed) n_failed += static_cast<std::size_t>(f);
        if (static_cast<double>(n_failed) >
            cfg.max_fail_fraction * static_cast<double>(cfg.reps))
          throw std::runtime_error("more than " +
                                   std::to_string(100 * cfg.max_fail_fraction) +
                                   "% of replications failed in a cell");
        // Commit in replication order so the file bytes are deterministic.
        for (const std::vector<StudyRecord>& recs : cell)
          for (const StudyRecord& r : recs) {
            append_record(out, r);
            all.push_back(r);
          }
        out.flush();
      }
    }
  }
  out.close();

  std::vector<MetricsRow> metrics = aggregate_records(all);
  if (!cfg.metrics_path.empty()) write_metrics(metrics, cfg.metrics_path);
  if (!cfg.plotdata_path.empty()) write_plotdata(metrics, cfg.plotdata_path);
  return metrics;
}

std::vector<StudyRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty record file");
  std::string header = line;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != kRecordHeader)
    throw std::runtime_error("record file header mismatch in '" + path + "'");
  std::vector<StudyRecord> out;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12)
      throw std::runtime_error("bad record row: '" + line + "'");
    StudyRecord r;
    r.setting = cells[0];
    r.mode = covariate_mode_from_name(cells[1]);
    r.n = static_cast<std::size_t>(std::stoull(cells[2]));
    r.rep = std::stoi(cells[3]);
    r.path = path_index(cells[4]);
    r.truth = std::stod(cells[5]);
    r.estimate = std::stod(cells[6]);
    r.se = std::stod(cells[7]);
    r.ci_lo = std::stod(cells[8]);
    r.ci_hi = std::stod(cells[9]);
    r.covered = std::stoi(cells[10]);
    r.plugin_estimate = std::stod(cells[11]);
    const std::string key = r.setting + "|" + cells[1] + "|" + cells[2] + "|" +
                            cells[3] + "|" + cells[4];
    if (!seen.insert(key).second)
      throw std::runtime_error("duplicate record for key (" + r.setting + ", " +
                               cells[1] + ", n=" + cells[2] + ", rep=" + cells[3] +
                               ", path=" + cells[4] + ")");
    out.push_back(r);
  }
  if (out.empty()) throw std::runtime_error("record file has no data rows");
  return out;
}

std::vector<MetricsRow> aggregate_records(const std::vector<StudyRecord>& records) {
  struct Key {
    std::string setting;
    int mode;
    std::size_t n;
    int path;
    bool operator<(const Key& o) const {
      return std::tie(setting, mode, n, path) <
             std::tie(o.setting, o.mode, o.n, o.path);
    }
  };
  std::map<Key, std::vector<const StudyRecord*>> groups;
  for (const StudyRecord& r : records)
    groups[{r.setting, static_cast<int>(r.mode), r.n, r.path}].push_back(&r);

  std::vector<MetricsRow> out;
  for (const auto& [key, recs] : groups) {
    MetricsRow row;
    row.setting = key.setting;
    row.mode = static_cast<CovariateMode>(key.mode);
    row.n = key.n;
    row.path = key.path;
    row.reps = static_cast<int>(recs.size());
    row.truth = recs.front()->truth;
    std::vector<double> err(recs.size()), est(recs.size());
    double covered = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      err[i] = recs[i]->estimate - recs[i]->truth;
      est[i] = recs[i]->estimate;
      covered += recs[i]->covered;
    }
    const MeanVar err_mv = mean_var(err, false);
    const MeanVar est_mv = mean_var(est, false);
    row.bias = err_mv.mean;
    row.sqrtn_bias = std::sqrt(static_cast<double>(key.n)) * err_mv.mean;
    row.sd = std::sqrt(est_mv.var);
    row.coverage = covered / static_cast<double>(recs.size());
    out.push_back(row);
  }
  return out;
}

void write_metrics(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "setting,covariate_mode,n,path,reps,truth,bias,sqrtn_bias,sd,coverage\n";
  for (const MetricsRow& r : rows)
    out << r.setting << ',' << covariate_mode_name(r.mode) << ',' << r.n << ','
        << path_name(r.path) << ',' << r.reps << ',' << fmt(r.truth) << ','
        << fmt(r.bias) << ',' << fmt(r.sqrtn_bias) << ',' << fmt(r.sd) << ','
        << fmt(r.coverage) << '\n';
}

void write_plotdata(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "setting,covariate_mode,n,path,metric,value\n";
  for (const MetricsRow& r : rows) {
    const std::pair<const char*, double> metrics[] = {{"bias", r.bias},
                                                      {"sqrtn_bias", r.sqrtn_bias},
                                                      {"sd", r.sd},
                                                      {"coverage", r.coverage}};
    for (const auto& [name, value] : metrics)
      out << r.setting << ',' << covariate_mode_name(r.mode) << ',' << r.n << ','
          << path_name(r.path) << ',' << name << ',' << fmt(value) << '\n';
  }
}

}  // namespace rtwin

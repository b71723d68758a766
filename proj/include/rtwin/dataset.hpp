#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtwin {

// Usage or input errors that should surface as exit code 2.
class SchemaError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t row)
      : std::runtime_error(msg + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Observed data O = (W, A, Z, M, Y) with dense 0-based category codes.
struct Dataset {
  Eigen::MatrixXd w;             // n x p covariates
  std::vector<std::int8_t> a;    // exposure in {0,1}
  std::vector<std::int16_t> z;   // intermediate, 0..k_z-1
  std::vector<std::int16_t> m;   // mediator, 0..k_m-1
  Eigen::VectorXd y;             // outcome
  int k_z = 0;
  int k_m = 0;
  std::vector<long long> z_labels;  // original label per dense code
  std::vector<long long> m_labels;
  std::vector<std::string> covariate_names;

  std::size_t size() const { return a.size(); }
  int n_covariates() const { return static_cast<int>(w.cols()); }
  bool y_binary() const;
};

// Column-role map for CSV ingestion.
struct CsvSchema {
  std::string exposure;
  std::string intermediate;
  std::string mediator;
  std::string outcome;
  std::vector<std::string> covariates;
};

Dataset load_dataset(std::istream& in, const CsvSchema& schema);
Dataset load_dataset_file(const std::string& path, const CsvSchema& schema);

// Writes header exactly as covariate names followed by a,z,m,y; doubles in
// round-trip precision, categories as original labels.
void save_dataset(const Dataset& d, std::ostream& out);
void save_dataset_file(const Dataset& d, const std::string& path);

struct DiagnosticsReport {
  std::vector<std::string> warnings;                  // positivity findings
  std::vector<std::vector<long long>> az_counts;      // [a][z]
  std::vector<std::vector<long long>> am_counts;      // [a][m]
  double propensity_min = 0.0;                        // quick main-effects fit
  double propensity_max = 0.0;
  bool ok() const { return warnings.empty(); }
};

DiagnosticsReport validate(const Dataset& d);

struct FoldAssignment {
  std::vector<int> fold_of;  // per-row fold index in 0..q-1
  int q = 0;
  std::uint64_t seed = 0;
};

// Deterministic balanced partition into q folds (sizes differ by at most 1).
FoldAssignment assign_folds(std::size_t n, int q, std::uint64_t seed);

}  // namespace rtwin

#include "rtwin/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "rtwin/learners.hpp"
#include "rtwin/prng.hpp"
#include "rtwin/stats.hpp"

namespace rtwin {

bool Dataset::y_binary() const {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0) return false;
  return true;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& cell, const std::string& col, std::size_t row) {
  if (cell.empty()) throw ParseError("missing value in column '" + col + "'", row);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
    throw ParseError("non-numeric value '" + cell + "' in column '" + col + "'", row);
  return v;
}

long long parse_category(const std::string& cell, const std::string& col,
                         std::size_t row) {
  const double v = parse_double(cell, col, row);
  if (v < 0 || v != std::floor(v))
    throw ParseError("column '" + col + "' expects a non-negative integer, got '" +
                         cell + "'",
                     row);
  return static_cast<long long>(v);
}

}  // namespace

Dataset load_dataset(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty input: missing header row");
  const std::vector<std::string> header = split_csv_line(line);

  auto col_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw SchemaError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  if (schema.exposure.empty() || schema.intermediate.empty() ||
      schema.mediator.empty() || schema.outcome.empty())
    throw SchemaError("schema must name exposure, intermediate, mediator and outcome");

  const std::size_t ia = col_index(schema.exposure);
  const std::size_t iz = col_index(schema.intermediate);
  const std::size_t im = col_index(schema.mediator);
  const std::size_t iy = col_index(schema.outcome);
  std::vector<std::size_t> iw;
  for (const std::string& c : schema.covariates) iw.push_back(col_index(c));

  std::vector<std::int8_t> a;
  std::vector<long long> z_raw, m_raw;
  std::vector<double> y;
  std::vector<double> w_flat;
  std::size_t row = 0;  // 1-based over data rows; header excluded
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       row);
    const long long av = parse_category(cells[ia], schema.exposure, row);
    if (av != 0 && av != 1)
      throw ParseError("exposure '" + schema.exposure + "' must be 0 or 1, got " +
                           std::to_string(av),
                       row);
    a.push_back(static_cast<std::int8_t>(av));
    z_raw.push_back(parse_category(cells[iz], schema.intermediate, row));
    m_raw.push_back(parse_category(cells[im], schema.mediator, row));
    y.push_back(parse_double(cells[iy], schema.outcome, row));
    for (std::size_t j : iw) w_flat.push_back(parse_double(cells[j], header[j], row));
  }
  const std::size_t n = a.size();
  if (n == 0) throw SchemaError("no data rows");

  Dataset d;
  d.a = std::move(a);
  d.covariate_names = schema.covariates;
  const std::size_t p = schema.covariates.size();
  d.w.resize(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) d.w(i, j) = w_flat[i * p + j];
  d.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));

  // Dense 0-based remap; original labels kept for reporting.
  auto remap = [](const std::vector<long long>& raw, std::vector<std::int16_t>& codes,
                  std::vector<long long>& labels) {
    std::map<long long, std::int16_t> code_of;
    for (long long v : raw) code_of.emplace(v, 0);
    std::int16_t next = 0;
    for (auto& kv : code_of) {
      kv.second = next++;
      labels.push_back(kv.first);
    }
    codes.reserve(raw.size());
    for (long long v : raw) codes.push_back(code_of[v]);
    return static_cast<int>(labels.size());
  };
  d.k_z = remap(z_raw, d.z, d.z_labels);
  d.k_m = remap(m_raw, d.m, d.m_labels);
  return d;
}

Dataset load_dataset_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return load_dataset(in, schema);
}

void save_dataset(const Dataset& d, std::ostream& out) {
  for (const std::string& c : d.covariate_names) out << c << ',';
  out << "a,z,m,y\n";
  char buf[40];
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d.n_covariates(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d.w(i, j));
      out << buf << ',';
    }
    out << int(d.a[i]) << ',' << d.z_labels[d.z[i]] << ',' << d.m_labels[d.m[i]] << ',';
    std::snprintf(buf, sizeof buf, "%.17g", d.y[i]);
    out << buf << '\n';
  }
}

void save_dataset_file(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  save_dataset(d, out);
}

DiagnosticsReport validate(const Dataset& d) {
  DiagnosticsReport rep;
  rep.az_counts.assign(2, std::vector<long long>(d.k_z, 0));
  rep.am_counts.assign(2, std::vector<long long>(d.k_m, 0));
  std::vector<long long> azm(static_cast<std::size_t>(2 * d.k_z * d.k_m), 0);
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    rep.az_counts[d.a[i]][d.z[i]]++;
    rep.am_counts[d.a[i]][d.m[i]]++;
    azm[static_cast<std::size_t>((d.a[i] * d.k_z + d.z[i]) * d.k_m + d.m[i])]++;
  }
  for (int a = 0; a < 2; ++a) {
    for (int z = 0; z < d.k_z; ++z)
      if (rep.az_counts[a][z] == 0)
        rep.warnings.push_back("empty cell (a=" + std::to_string(a) +
                               ", z=" + std::to_string(d.z_labels[z]) + ")");
    for (int m = 0; m < d.k_m; ++m)
      if (rep.am_counts[a][m] == 0)
        rep.warnings.push_back("empty cell (a=" + std::to_string(a) +
                               ", m=" + std::to_string(d.m_labels[m]) + ")");
  }
  for (int a = 0; a < 2; ++a)
    for (int z = 0; z < d.k_z; ++z)
      for (int m = 0; m < d.k_m; ++m)
        if (azm[static_cast<std::size_t>((a * d.k_z + z) * d.k_m + m)] == 0)
          rep.warnings.push_back("empty cell (a=" + std::to_string(a) +
                                 ", z=" + std::to_string(d.z_labels[z]) +
                                 ", m=" + std::to_string(d.m_labels[m]) + ")");

  // Quick main-effects propensity fit for the range summary.
  RawSchema schema;
  schema.group.assign(static_cast<std::size_t>(d.n_covariates()), -1);
  Eigen::MatrixXd raw = d.w;
  Eigen::VectorXd ay(n);
  for (std::size_t i = 0; i < n; ++i) ay[static_cast<Eigen::Index>(i)] = d.a[i];
  rep.propensity_min = 1.0;
  rep.propensity_max = 0.0;
  try {
    Learner fit = fit_learner(Learner::Kind::kBinary, Family::kMainEffects, schema,
                              raw, ay);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd r = d.w.row(static_cast<Eigen::Index>(i));
      const double p = fit.predict_prob(r.data(), scratch);
      rep.propensity_min = std::min(rep.propensity_min, p);
      rep.propensity_max = std::max(rep.propensity_max, p);
    }
    if (rep.propensity_min < 0.01 || rep.propensity_max > 0.99)
      rep.warnings.push_back("propensity range [" +
                             std::to_string(rep.propensity_min) + ", " +
                             std::to_string(rep.propensity_max) +
                             "] is close to 0 or 1");
  } catch (const FitError&) {
    rep.warnings.push_back("propensity model did not fit; range unavailable");
  }
  return rep;
}

FoldAssignment assign_folds(std::size_t n, int q, std::uint64_t seed) {
  if (q < 2 || static_cast<std::size_t>(q) > n)
    throw std::invalid_argument("fold count must satisfy 2 <= q <= n");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, hash_str("folds")));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_raw() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  FoldAssignment f;
  f.q = q;
  f.seed = seed;
  f.fold_of.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) f.fold_of[perm[i]] = static_cast<int>(i % q);
  return f;
}

}  // namespace rtwin

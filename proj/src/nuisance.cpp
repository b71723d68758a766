#include "rtwin/nuisance.hpp"

#include <cmath>

#include "rtwin/prng.hpp"
#include "rtwin/stats.hpp"

namespace rtwin {

void NuisanceValues::resize(int k_z, int k_m) {
  c1.resize(k_z, k_m);
  for (int a = 0; a < 2; ++a) {
    g[a].resize(k_z);
    hstar[a].resize(k_z, k_m);
    d[a].resize(k_z, k_m);
    h[a].resize(k_m);
  }
}

void finalize_values(NuisanceValues& v, double clip) {
  if (clip > 0.0) {
    v.b1 = clamp_prob(v.b1, clip);
    for (Eigen::Index i = 0; i < v.c1.size(); ++i)
      v.c1(i) = clamp_prob(v.c1(i), clip);
    // The categorical tables divide the influence terms at observed rows, so
    // they get the same floor, renormalized to keep each distribution exact.
    for (int a = 0; a < 2; ++a) {
      for (Eigen::Index z = 0; z < v.g[a].size(); ++z)
        v.g[a][z] = std::max(v.g[a][z], clip);
      v.g[a] /= v.g[a].sum();
      for (Eigen::Index z = 0; z < v.hstar[a].rows(); ++z) {
        for (Eigen::Index m = 0; m < v.hstar[a].cols(); ++m)
          v.hstar[a](z, m) = std::max(v.hstar[a](z, m), clip);
        v.hstar[a].row(z) /= v.hstar[a].row(z).sum();
      }
    }
  }
  for (int a = 0; a < 2; ++a) {
    v.h[a].noalias() = v.hstar[a].transpose() * v.g[a];
    for (int ai = 0; ai < 2; ++ai)
      v.e(a, ai) = v.g[a].dot((v.d[ai].array() * v.hstar[a].array()).matrix().rowwise().sum());
  }
}

namespace {

// Raw feature layouts. Z and M enter as level indicators for levels
// 1..k-1 (level 0 is the reference).
struct RawLayout {
  int n_w = 0, k_z = 0, k_m = 0;
  bool with_a = false, with_z = false, with_m = false;

  RawSchema schema() const {
    RawSchema s;
    if (with_a) s.group.push_back(0);  // binary exposure: no squared term
    if (with_z)
      for (int i = 1; i < k_z; ++i) s.group.push_back(1);
    if (with_m)
      for (int i = 1; i < k_m; ++i) s.group.push_back(2);
    for (int i = 0; i < n_w; ++i) s.group.push_back(-1);
    return s;
  }
  int dim() const {
    return (with_a ? 1 : 0) + (with_z ? k_z - 1 : 0) + (with_m ? k_m - 1 : 0) + n_w;
  }
  void fill(double* raw, const double* w, double a, int z, int m) const {
    int p = 0;
    if (with_a) raw[p++] = a;
    if (with_z)
      for (int i = 1; i < k_z; ++i) raw[p++] = z == i ? 1.0 : 0.0;
    if (with_m)
      for (int i = 1; i < k_m; ++i) raw[p++] = m == i ? 1.0 : 0.0;
    for (int i = 0; i < n_w; ++i) raw[p++] = w[i];
  }
};

Eigen::MatrixXd gather_raw(const Dataset& data, const std::vector<std::size_t>& rows,
                           const RawLayout& layout) {
  Eigen::MatrixXd raw(rows.size(), layout.dim());
  std::vector<double> buf(static_cast<std::size_t>(layout.dim()));
  std::vector<double> wrow(static_cast<std::size_t>(data.n_covariates()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    for (int j = 0; j < data.n_covariates(); ++j)
      wrow[static_cast<std::size_t>(j)] = data.w(static_cast<Eigen::Index>(i), j);
    layout.fill(buf.data(), wrow.data(), data.a[i], data.z[i], data.m[i]);
    for (int j = 0; j < layout.dim(); ++j)
      raw(static_cast<Eigen::Index>(r), j) = buf[static_cast<std::size_t>(j)];
  }
  return raw;
}

Learner fit_one(Learner::Kind kind, const LearnerSpec& spec, const RawLayout& layout,
                const Eigen::MatrixXd& raw, const Eigen::VectorXd& y, int k,
                std::uint64_t seed) {
  const RawSchema schema = layout.schema();
  Family family = spec.family;
  if (spec.cv_select)
    family = cv_select(family_library(), kind, schema, raw, y, k, spec.cv_folds,
                       spec.loss, seed);
  return fit_learner(kind, family, schema, raw, y, k);
}

}  // namespace

FittedNuisance fit_nuisances(const Dataset& data, const std::vector<std::size_t>& rows,
                             const LearnerSpecSet& specs, double clip,
                             std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("empty training split");
  std::vector<int> seen_a(2, 0), seen_z(data.k_z, 0), seen_m(data.k_m, 0);
  for (std::size_t i : rows) {
    seen_a[data.a[i]]++;
    seen_z[data.z[i]]++;
    seen_m[data.m[i]]++;
  }
  for (int a = 0; a < 2; ++a)
    if (!seen_a[a])
      throw FoldLevelError("training split lacks exposure arm a=" + std::to_string(a));
  for (int z = 0; z < data.k_z; ++z)
    if (!seen_z[z])
      throw FoldLevelError("training split lacks intermediate level z=" +
                           std::to_string(data.z_labels[z]));
  for (int m = 0; m < data.k_m; ++m)
    if (!seen_m[m])
      throw FoldLevelError("training split lacks mediator level m=" +
                           std::to_string(data.m_labels[m]));

  FittedNuisance fit;
  fit.k_z_ = data.k_z;
  fit.k_m_ = data.k_m;
  fit.n_w_ = data.n_covariates();
  fit.y_binary_ = data.y_binary();
  fit.clip_ = clip;

  const std::size_t nr = rows.size();
  Eigen::VectorXd av(nr), zv(nr), mv(nr), yv(nr);
  for (std::size_t r = 0; r < nr; ++r) {
    av[static_cast<Eigen::Index>(r)] = data.a[rows[r]];
    zv[static_cast<Eigen::Index>(r)] = data.z[rows[r]];
    mv[static_cast<Eigen::Index>(r)] = data.m[rows[r]];
    yv[static_cast<Eigen::Index>(r)] = data.y[static_cast<Eigen::Index>(rows[r])];
  }

  const RawLayout lb{fit.n_w_, data.k_z, data.k_m, false, false, false};
  const RawLayout lc{fit.n_w_, data.k_z, data.k_m, false, true, true};
  const RawLayout lg{fit.n_w_, data.k_z, data.k_m, true, false, false};
  const RawLayout lh{fit.n_w_, data.k_z, data.k_m, true, true, false};
  const RawLayout ld{fit.n_w_, data.k_z, data.k_m, true, true, true};

  fit.b_ = fit_one(Learner::Kind::kBinary, specs.b, lb, gather_raw(data, rows, lb), av,
                   2, derive_seed(seed, hash_str("b")));
  fit.c_ = fit_one(Learner::Kind::kBinary, specs.c, lc, gather_raw(data, rows, lc), av,
                   2, derive_seed(seed, hash_str("c")));
  fit.g_ = fit_one(Learner::Kind::kMultinomial, specs.g, lg, gather_raw(data, rows, lg),
                   zv, data.k_z, derive_seed(seed, hash_str("g")));
  fit.hstar_ = fit_one(Learner::Kind::kMultinomial, specs.hstar, lh,
                       gather_raw(data, rows, lh), mv, data.k_m,
                       derive_seed(seed, hash_str("hstar")));
  LearnerSpec d_spec = specs.d;
  if (!fit.y_binary_ && d_spec.loss == LossKind::kNegLogLik)
    d_spec.loss = LossKind::kSquaredError;
  fit.d_ = fit_one(fit.y_binary_ ? Learner::Kind::kBinary : Learner::Kind::kLinear,
                   d_spec, ld, gather_raw(data, rows, ld), yv, 2,
                   derive_seed(seed, hash_str("d")));
  return fit;
}

void FittedNuisance::values_at(const double* w, int n_w, NuisanceValues& out) const {
  if (n_w != n_w_) throw std::invalid_argument("covariate width mismatch");
  out.resize(k_z_, k_m_);
  thread_local std::vector<double> raw, scratch;
  raw.resize(static_cast<std::size_t>(1 + (k_z_ - 1) + (k_m_ - 1) + n_w_));
  Eigen::VectorXd probs;

  const RawLayout lb{n_w_, k_z_, k_m_, false, false, false};
  const RawLayout lc{n_w_, k_z_, k_m_, false, true, true};
  const RawLayout lg{n_w_, k_z_, k_m_, true, false, false};
  const RawLayout lh{n_w_, k_z_, k_m_, true, true, false};
  const RawLayout ld{n_w_, k_z_, k_m_, true, true, true};

  lb.fill(raw.data(), w, 0, 0, 0);
  out.b1 = b_.predict_prob(raw.data(), scratch);
  for (int z = 0; z < k_z_; ++z)
    for (int m = 0; m < k_m_; ++m) {
      lc.fill(raw.data(), w, 0, z, m);
      out.c1(z, m) = c_.predict_prob(raw.data(), scratch);
    }
  for (int a = 0; a < 2; ++a) {
    lg.fill(raw.data(), w, a, 0, 0);
    g_.predict_multinomial(raw.data(), scratch, probs);
    out.g[a] = probs;
    for (int z = 0; z < k_z_; ++z) {
      lh.fill(raw.data(), w, a, z, 0);
      hstar_.predict_multinomial(raw.data(), scratch, probs);
      for (int m = 0; m < k_m_; ++m) out.hstar[a](z, m) = probs[m];
      for (int m = 0; m < k_m_; ++m) {
        ld.fill(raw.data(), w, a, z, m);
        out.d[a](z, m) = d_.predict_mean(raw.data(), scratch);
      }
    }
  }
  finalize_values(out, clip_);
}

}  // namespace rtwin

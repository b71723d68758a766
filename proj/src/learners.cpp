#include "rtwin/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rtwin/dataset.hpp"
#include "rtwin/prng.hpp"
#include "rtwin/stats.hpp"

namespace rtwin {

const char* family_name(Family f) {
  switch (f) {
    case Family::kInterceptOnly: return "intercept";
    case Family::kMainEffects: return "main";
    case Family::kInteractions: return "interact";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "intercept") return Family::kInterceptOnly;
  if (name == "main") return Family::kMainEffects;
  if (name == "interact") return Family::kInteractions;
  throw std::invalid_argument("unknown learner family '" + name + "'");
}

FeatureExpansion::FeatureExpansion(const RawSchema& schema, Family family) {
  terms_.emplace_back(-1, -1);  // intercept
  if (family == Family::kInterceptOnly) return;
  const int p = schema.dim();
  for (int i = 0; i < p; ++i) terms_.emplace_back(i, -1);
  if (family != Family::kInteractions) return;
  for (int i = 0; i < p; ++i)
    if (schema.group[static_cast<std::size_t>(i)] < 0) terms_.emplace_back(i, i);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const int gi = schema.group[static_cast<std::size_t>(i)];
      const int gj = schema.group[static_cast<std::size_t>(j)];
      // Indicator-indicator products are excluded: same-group ones are
      // identically zero, and cross-group ones saturate sparse cells.
      if (gi >= 0 && gj >= 0) continue;
      terms_.emplace_back(i, j);
    }
}

void FeatureExpansion::expand(const double* raw, double* out) const {
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const auto [i, j] = terms_[t];
    if (i < 0)
      out[t] = 1.0;
    else if (j < 0)
      out[t] = raw[i];
    else
      out[t] = raw[i] * raw[j];
  }
}

Eigen::MatrixXd FeatureExpansion::design(const Eigen::MatrixXd& raw_rows) const {
  Eigen::MatrixXd x(raw_rows.rows(), dim());
  std::vector<double> raw(static_cast<std::size_t>(raw_rows.cols()));
  std::vector<double> row(static_cast<std::size_t>(dim()));
  for (Eigen::Index i = 0; i < raw_rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw_rows.cols(); ++j)
      raw[static_cast<std::size_t>(j)] = raw_rows(i, j);
    expand(raw.data(), row.data());
    for (int j = 0; j < dim(); ++j) x(i, j) = row[static_cast<std::size_t>(j)];
  }
  return x;
}

namespace {

constexpr int kMaxIter = 100;
constexpr double kScoreTol = 1e-6;
constexpr double kWeightFloor = 1e-10;

double binary_penalized_deviance(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& beta, double ridge) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // log(1+exp(eta)) computed stably
    const double e = eta[i];
    const double log1pe = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y[i] * e - log1pe;
  }
  return -2.0 * ll + ridge * beta.squaredNorm();
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

BinaryGlmFit try_fit_binary(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double ridge, bool& numeric_failure) {
  const Eigen::Index n = x.rows(), p = x.cols();
  BinaryGlmFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  fit.ridge_used = ridge;
  numeric_failure = false;

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double dev = binary_penalized_deviance(eta, y, fit.beta, ridge);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::VectorXd prob(n), wgt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = expit(eta[i]);
      wgt[i] = std::max(prob[i] * (1.0 - prob[i]), kWeightFloor);
    }
    Eigen::VectorXd score = x.transpose() * (y - prob) - ridge * fit.beta;
    if (score.norm() < kScoreTol) {
      fit.converged = true;
      return fit;
    }
    Eigen::MatrixXd hess = x.transpose() * wgt.asDiagonal() * x;
    hess.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) {
      numeric_failure = true;
      return fit;
    }
    Eigen::VectorXd step = ldlt.solve(score);
    if (!finite(step)) {
      numeric_failure = true;
      return fit;
    }
    // Step-halving on penalized deviance increase. Near the optimum the
    // deviance change drops below its floating-point resolution, so accept
    // anything within relative noise and let the score criterion terminate.
    const double noise = 1e-9 * (1.0 + std::abs(dev));
    double scale = 1.0;
    Eigen::VectorXd beta_new, eta_new;
    double dev_new = dev;
    for (int half = 0; half < 30; ++half) {
      beta_new = fit.beta + scale * step;
      eta_new = x * beta_new;
      dev_new = binary_penalized_deviance(eta_new, y, beta_new, ridge);
      if (std::isfinite(dev_new) && dev_new <= dev + noise) break;
      scale *= 0.5;
    }
    if (!std::isfinite(dev_new)) {
      numeric_failure = true;
      return fit;
    }
    fit.beta = beta_new;
    eta = eta_new;
    dev = dev_new;
  }
  fit.converged = false;  // best iterate returned with the flag unset
  return fit;
}

}  // namespace

BinaryGlmFit fit_binary_glm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double ridge) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("binary GLM targets must be in {0,1}");
  if (!x.allFinite()) throw std::invalid_argument("non-finite feature matrix");
  for (double r = ridge; r <= kMaxRidge * (1.0 + 1e-12); r *= 10.0) {
    bool numeric_failure = false;
    BinaryGlmFit fit = try_fit_binary(x, y, r, numeric_failure);
    if (!numeric_failure) return fit;
  }
  throw FitError("singular weighted normal equations after ridge escalation");
}

namespace {

void softmax_from_logits(const Eigen::VectorXd& logits, Eigen::VectorXd& probs) {
  // logits are the k-1 non-reference linear predictors; level 0 has logit 0
  const int k = static_cast<int>(logits.size()) + 1;
  probs.resize(k);
  double mx = 0.0;
  for (int c = 1; c < k; ++c) mx = std::max(mx, logits[c - 1]);
  double denom = std::exp(-mx);
  probs[0] = denom;
  for (int c = 1; c < k; ++c) {
    probs[c] = std::exp(logits[c - 1] - mx);
    denom += probs[c];
  }
  probs /= denom;
}

double multinomial_penalized_deviance(const Eigen::MatrixXd& eta,
                                      const std::vector<std::int16_t>& y,
                                      const Eigen::MatrixXd& beta, double ridge) {
  double ll = 0.0;
  const Eigen::Index n = eta.rows();
  const int km1 = static_cast<int>(eta.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = 0.0;
    for (int c = 0; c < km1; ++c) mx = std::max(mx, eta(i, c));
    double denom = std::exp(-mx);
    for (int c = 0; c < km1; ++c) denom += std::exp(eta(i, c) - mx);
    const double log_denom = mx + std::log(denom);
    const int yi = y[static_cast<std::size_t>(i)];
    ll += (yi == 0 ? 0.0 : eta(i, yi - 1)) - log_denom;
  }
  return -2.0 * ll + ridge * beta.squaredNorm();
}

MultinomialFit try_fit_multinomial(const Eigen::MatrixXd& x,
                                   const std::vector<std::int16_t>& y, int k,
                                   double ridge, bool& numeric_failure) {
  const Eigen::Index n = x.rows(), p = x.cols();
  const int km1 = k - 1;
  MultinomialFit fit;
  fit.k = k;
  fit.beta = Eigen::MatrixXd::Zero(p, km1);
  fit.ridge_used = ridge;
  numeric_failure = false;

  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(n, km1);
  double dev = multinomial_penalized_deviance(eta, y, fit.beta, ridge);
  Eigen::MatrixXd probs(n, k);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = 0.0;
      for (int c = 0; c < km1; ++c) mx = std::max(mx, eta(i, c));
      double denom = std::exp(-mx);
      probs(i, 0) = denom;
      for (int c = 0; c < km1; ++c) {
        probs(i, c + 1) = std::exp(eta(i, c) - mx);
        denom += probs(i, c + 1);
      }
      probs.row(i) /= denom;
    }
    Eigen::VectorXd score(p * km1);
    for (int c = 0; c < km1; ++c) {
      Eigen::VectorXd ind = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] == c + 1) ind[i] = 1.0;
      score.segment(c * p, p) =
          x.transpose() * (ind - probs.col(c + 1)) - ridge * fit.beta.col(c);
    }
    if (score.norm() < kScoreTol) {
      fit.converged = true;
      return fit;
    }
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p * km1, p * km1);
    Eigen::VectorXd wcc(n);
    for (int c = 0; c < km1; ++c)
      for (int c2 = c; c2 < km1; ++c2) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double pc = probs(i, c + 1), pc2 = probs(i, c2 + 1);
          wcc[i] = c == c2 ? std::max(pc * (1.0 - pc), kWeightFloor) : -pc * pc2;
        }
        const Eigen::MatrixXd blockm = x.transpose() * wcc.asDiagonal() * x;
        hess.block(c * p, c2 * p, p, p) = blockm;
        if (c2 != c) hess.block(c2 * p, c * p, p, p) = blockm.transpose();
      }
    hess.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) {
      numeric_failure = true;
      return fit;
    }
    Eigen::VectorXd step = ldlt.solve(score);
    if (!finite(step)) {
      numeric_failure = true;
      return fit;
    }
    const double noise = 1e-9 * (1.0 + std::abs(dev));
    double scale = 1.0;
    Eigen::MatrixXd beta_new, eta_new;
    double dev_new = dev;
    for (int half = 0; half < 30; ++half) {
      beta_new = fit.beta;
      for (int c = 0; c < km1; ++c) beta_new.col(c) += scale * step.segment(c * p, p);
      eta_new = x * beta_new;
      dev_new = multinomial_penalized_deviance(eta_new, y, beta_new, ridge);
      if (std::isfinite(dev_new) && dev_new <= dev + noise) break;
      scale *= 0.5;
    }
    if (!std::isfinite(dev_new)) {
      numeric_failure = true;
      return fit;
    }
    fit.beta = beta_new;
    eta = eta_new;
    dev = dev_new;
  }
  fit.converged = false;
  return fit;
}

}  // namespace

MultinomialFit fit_multinomial(const Eigen::MatrixXd& x,
                               const std::vector<std::int16_t>& y, int k,
                               double ridge) {
  if (k < 2) throw std::invalid_argument("multinomial needs k >= 2");
  for (std::int16_t v : y)
    if (v < 0 || v >= k) throw std::invalid_argument("multinomial target out of range");
  if (!x.allFinite()) throw std::invalid_argument("non-finite feature matrix");
  for (double r = ridge; r <= kMaxRidge * (1.0 + 1e-12); r *= 10.0) {
    bool numeric_failure = false;
    MultinomialFit fit = try_fit_multinomial(x, y, k, r, numeric_failure);
    if (!numeric_failure) return fit;
  }
  throw FitError("singular multinomial system after ridge escalation");
}

Eigen::VectorXd multinomial_probs(const MultinomialFit& fit,
                                  const Eigen::VectorXd& x_row) {
  Eigen::VectorXd logits = fit.beta.transpose() * x_row;
  Eigen::VectorXd probs;
  softmax_from_logits(logits, probs);
  return probs;
}

LinearFit fit_linear_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           double ridge) {
  if (!x.allFinite()) throw std::invalid_argument("non-finite feature matrix");
  for (double r = ridge; r <= kMaxRidge * (1.0 + 1e-12); r *= 10.0) {
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += r;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) continue;
    LinearFit fit;
    fit.beta = ldlt.solve(x.transpose() * y);
    fit.ridge_used = r;
    if (finite(fit.beta)) return fit;
  }
  throw FitError("singular normal equations after ridge escalation");
}

double Learner::predict_prob(const double* raw, std::vector<double>& scratch) const {
  scratch.resize(static_cast<std::size_t>(expansion.dim()));
  expansion.expand(raw, scratch.data());
  const Eigen::Map<const Eigen::VectorXd> xr(scratch.data(), expansion.dim());
  return expit(binary.beta.dot(xr));
}

void Learner::predict_multinomial(const double* raw, std::vector<double>& scratch,
                                  Eigen::VectorXd& out) const {
  scratch.resize(static_cast<std::size_t>(expansion.dim()));
  expansion.expand(raw, scratch.data());
  const Eigen::Map<const Eigen::VectorXd> xr(scratch.data(), expansion.dim());
  Eigen::VectorXd logits = multinomial.beta.transpose() * xr;
  softmax_from_logits(logits, out);
}

double Learner::predict_mean(const double* raw, std::vector<double>& scratch) const {
  if (kind == Kind::kBinary) return predict_prob(raw, scratch);
  scratch.resize(static_cast<std::size_t>(expansion.dim()));
  expansion.expand(raw, scratch.data());
  const Eigen::Map<const Eigen::VectorXd> xr(scratch.data(), expansion.dim());
  return linear.beta.dot(xr);
}

Learner fit_learner(Learner::Kind kind, Family family, const RawSchema& schema,
                    const Eigen::MatrixXd& raw_rows, const Eigen::VectorXd& y, int k,
                    double ridge) {
  Learner out;
  out.kind = kind;
  out.family = family;
  out.expansion = FeatureExpansion(schema, family);
  const Eigen::MatrixXd x = out.expansion.design(raw_rows);
  switch (kind) {
    case Learner::Kind::kBinary:
      out.binary = fit_binary_glm(x, y, ridge);
      break;
    case Learner::Kind::kMultinomial: {
      std::vector<std::int16_t> yc(static_cast<std::size_t>(y.size()));
      for (Eigen::Index i = 0; i < y.size(); ++i)
        yc[static_cast<std::size_t>(i)] = static_cast<std::int16_t>(y[i]);
      out.multinomial = fit_multinomial(x, yc, k, ridge);
      break;
    }
    case Learner::Kind::kLinear:
      out.linear = fit_linear_ridge(x, y, ridge);
      break;
  }
  return out;
}

namespace {

double heldout_loss(const Learner& fit, const Eigen::MatrixXd& raw_rows,
                    const Eigen::VectorXd& y, const std::vector<std::size_t>& rows,
                    LossKind loss) {
  std::vector<double> scratch;
  std::vector<double> raw(static_cast<std::size_t>(raw_rows.cols()));
  Eigen::VectorXd probs;
  double total = 0.0;
  for (std::size_t i : rows) {
    for (Eigen::Index j = 0; j < raw_rows.cols(); ++j)
      raw[static_cast<std::size_t>(j)] = raw_rows(static_cast<Eigen::Index>(i), j);
    const double yi = y[static_cast<Eigen::Index>(i)];
    if (loss == LossKind::kSquaredError) {
      const double r = yi - fit.predict_mean(raw.data(), scratch);
      total += r * r;
    } else if (fit.kind == Learner::Kind::kMultinomial) {
      fit.predict_multinomial(raw.data(), scratch, probs);
      total -= std::log(std::max(probs[static_cast<int>(yi)], 1e-300));
    } else {
      const double p = fit.predict_prob(raw.data(), scratch);
      total -= yi > 0.5 ? std::log(std::max(p, 1e-300))
                        : std::log(std::max(1.0 - p, 1e-300));
    }
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

Family cv_select(const std::vector<Family>& candidates, Learner::Kind kind,
                 const RawSchema& schema, const Eigen::MatrixXd& raw_rows,
                 const Eigen::VectorXd& y, int k, int folds, LossKind loss,
                 std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("cv_select needs candidates");
  if (candidates.size() == 1) return candidates[0];
  const std::size_t n = static_cast<std::size_t>(raw_rows.rows());
  const FoldAssignment fa = assign_folds(n, folds, derive_seed(seed, hash_str("cv")));

  double best_loss = std::numeric_limits<double>::infinity();
  Family best = candidates[0];
  for (const Family cand : candidates) {
    double loss_sum = 0.0;
    bool failed = false;
    for (int f = 0; f < folds && !failed; ++f) {
      std::vector<std::size_t> train, val;
      for (std::size_t i = 0; i < n; ++i)
        (fa.fold_of[i] == f ? val : train).push_back(i);
      Eigen::MatrixXd raw_train(train.size(), raw_rows.cols());
      Eigen::VectorXd y_train(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) {
        raw_train.row(static_cast<Eigen::Index>(r)) =
            raw_rows.row(static_cast<Eigen::Index>(train[r]));
        y_train[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(train[r])];
      }
      try {
        Learner fit = fit_learner(kind, cand, schema, raw_train, y_train, k);
        loss_sum += heldout_loss(fit, raw_rows, y, val, loss);
      } catch (const FitError&) {
        failed = true;
      } catch (const std::invalid_argument&) {
        failed = true;
      }
    }
    const double mean_loss =
        failed ? std::numeric_limits<double>::infinity() : loss_sum / folds;
    if (mean_loss < best_loss - 1e-12) {
      best_loss = mean_loss;
      best = cand;
    }
  }
  return best;
}

}  // namespace rtwin

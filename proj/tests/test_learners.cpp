#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rtwin/learners.hpp"
#include "rtwin/prng.hpp"
#include "rtwin/stats.hpp"

using namespace rtwin;

TEST_CASE("all-zero targets push the intercept strongly negative") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(50, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(50);
  const BinaryGlmFit fit = fit_binary_glm(x, y, 1e-8);
  CHECK(fit.beta[0] < -4.0);
  CHECK(expit(fit.beta[0]) < 0.01);
}

TEST_CASE("perfect separation stays finite under ridge") {
  Eigen::MatrixXd x(8, 2);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    const double v = i < 4 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
    x(i, 0) = 1.0;
    x(i, 1) = v;
    y[i] = v > 0 ? 1.0 : 0.0;
  }
  const BinaryGlmFit fit = fit_binary_glm(x, y, 1e-8);
  CHECK(std::isfinite(fit.beta[0]));
  CHECK(std::isfinite(fit.beta[1]));
  CHECK(fit.beta[1] > 0);
}

TEST_CASE("logistic recovery against the generating coefficients") {
  const std::size_t n = 100000;
  Rng rng(17);
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.beta23(), x2 = rng.beta23();
    x(i, 0) = 1.0;
    x(i, 1) = x1;
    x(i, 2) = x2;
    y[i] = rng.bernoulli(expit(0.5 * x1 + 0.5 * x2 - 1.0)) ? 1.0 : 0.0;
  }
  const BinaryGlmFit fit = fit_binary_glm(x, y, 1e-8);
  CHECK(fit.converged);

  // penalized score vanishes at the optimum
  Eigen::VectorXd p(n), wgt(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = expit(x.row(i).dot(fit.beta));
    wgt[i] = p[i] * (1.0 - p[i]);
  }
  const Eigen::VectorXd score = x.transpose() * (y - p) - 1e-8 * fit.beta;
  CHECK(score.norm() < 1e-6);

  // standard errors from the inverse Fisher information
  const Eigen::MatrixXd info = x.transpose() * wgt.asDiagonal() * x;
  const Eigen::MatrixXd cov = info.inverse();
  const double truth[3] = {-1.0, 0.5, 0.5};
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(fit.beta[j] - truth[j]) < 3.0 * std::sqrt(cov(j, j)));
}

TEST_CASE("multinomial with two levels matches the binary fit") {
  const std::size_t n = 4000;
  Rng rng(3);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  std::vector<std::int16_t> yc(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = rng.uniform() * 2 - 1;
    y[i] = rng.bernoulli(expit(0.8 * x(i, 1) - 0.2)) ? 1.0 : 0.0;
    yc[i] = static_cast<std::int16_t>(y[i]);
  }
  const BinaryGlmFit bin = fit_binary_glm(x, y, 1e-8);
  const MultinomialFit multi = fit_multinomial(x, yc, 2, 1e-8);
  for (double v = -1.0; v <= 1.0; v += 0.1) {
    Eigen::VectorXd row(2);
    row << 1.0, v;
    const double pb = expit(bin.beta.dot(row));
    const double pm = multinomial_probs(multi, row)[1];
    CHECK(std::abs(pb - pm) < 1e-6);
  }
}

TEST_CASE("single observed level dominates the predicted distribution") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(60, 1);
  std::vector<std::int16_t> y(60, 1);
  const MultinomialFit fit = fit_multinomial(x, y, 3, 1e-8);
  Eigen::VectorXd row(1);
  row << 1.0;
  CHECK(multinomial_probs(fit, row)[1] > 0.99);
}

TEST_CASE("multinomial recovers binomial cell probabilities") {
  // Z | A, X3 with per-trial success expit(-1.7 + 1.5 A + 0.5 X3^2),
  // fitted on raw features (A, X3, X3^2).
  const std::size_t n = 100000;
  Rng rng(29);
  Eigen::MatrixXd raw(n, 3);
  Eigen::VectorXd zv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = rng.bernoulli(0.5) ? 1 : 0;
    const double x3 = rng.beta23();
    const double pz = expit(-1.7 + 1.5 * a + 0.5 * x3 * x3);
    raw(i, 0) = a;
    raw(i, 1) = x3;
    raw(i, 2) = x3 * x3;
    zv[i] = rng.binomial3(pz);
  }
  RawSchema schema;
  schema.group = {0, -1, -1};
  const Learner fit =
      fit_learner(Learner::Kind::kMultinomial, Family::kMainEffects, schema, raw, zv, 4);
  std::vector<double> scratch;
  Eigen::VectorXd probs;
  double sup = 0;
  // probe inside the covariate's support; Be(2,3) puts ~1e-3 mass above 0.86
  for (int a = 0; a < 2; ++a)
    for (double x3 = 0.05; x3 < 0.87; x3 += 0.09) {
      const double p = expit(-1.7 + 1.5 * a + 0.5 * x3 * x3);
      const double q = 1 - p;
      const double truth[4] = {q * q * q, 3 * p * q * q, 3 * p * p * q, p * p * p};
      const double rawrow[3] = {double(a), x3, x3 * x3};
      fit.predict_multinomial(rawrow, scratch, probs);
      for (int k = 0; k < 4; ++k) sup = std::max(sup, std::abs(probs[k] - truth[k]));
    }
  CHECK(sup < 0.01);
}

TEST_CASE("multinomial probabilities sum to one") {
  Rng rng(5);
  Eigen::MatrixXd raw(500, 2);
  Eigen::VectorXd zv(500);
  for (int i = 0; i < 500; ++i) {
    raw(i, 0) = rng.uniform();
    raw(i, 1) = rng.uniform();
    zv[i] = static_cast<double>(rng.next_raw() % 4);
  }
  RawSchema schema;
  schema.group = {-1, -1};
  const Learner fit =
      fit_learner(Learner::Kind::kMultinomial, Family::kInteractions, schema, raw, zv, 4);
  std::vector<double> scratch;
  Eigen::VectorXd probs;
  for (int t = 0; t < 50; ++t) {
    const double rawrow[2] = {rng.uniform() * 3 - 1, rng.uniform() * 3 - 1};
    fit.predict_multinomial(rawrow, scratch, probs);
    CHECK(std::abs(probs.sum() - 1.0) < 1e-10);
    CHECK(probs.minCoeff() > 0.0);
  }
}

TEST_CASE("cv selection prefers the informative family on linear truth") {
  const std::size_t n = 3000;
  Rng rng(11);
  Eigen::MatrixXd raw(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw(i, 0) = rng.uniform();
    raw(i, 1) = rng.uniform();
    y[i] = rng.bernoulli(expit(2.0 * raw(i, 0) - 1.5 * raw(i, 1))) ? 1.0 : 0.0;
  }
  RawSchema schema;
  schema.group = {-1, -1};
  const Family chosen =
      cv_select({Family::kInterceptOnly, Family::kMainEffects}, Learner::Kind::kBinary,
                schema, raw, y, 2, 5, LossKind::kNegLogLik, 1);
  CHECK(chosen == Family::kMainEffects);
}

TEST_CASE("cv selection prefers intercept-only on pure noise") {
  RawSchema schema;
  schema.group = {-1, -1, -1};
  int intercept_wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(1000, seed));
    const std::size_t n = 400;
    Eigen::MatrixXd raw(n, 3);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) raw(i, j) = rng.uniform();
      y[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    const Family chosen = cv_select(family_library(), Learner::Kind::kBinary, schema,
                                    raw, y, 2, 5, LossKind::kNegLogLik, seed);
    if (chosen == Family::kInterceptOnly) intercept_wins++;
  }
  CHECK(intercept_wins > 10);
}

TEST_CASE("a single candidate is returned without cross-validation") {
  RawSchema schema;
  schema.group = {-1};
  Eigen::MatrixXd raw(3, 1);
  raw << 0.0, 0.5, 1.0;
  Eigen::VectorXd y(3);
  y << 0, 1, 1;
  // n=3 cannot even be split into 5 folds; the single candidate short-circuits
  const Family chosen = cv_select({Family::kInteractions}, Learner::Kind::kBinary,
                                  schema, raw, y, 2, 5, LossKind::kNegLogLik, 1);
  CHECK(chosen == Family::kInteractions);
}

TEST_CASE("interaction expansion keeps continuous products only") {
  RawSchema schema;
  schema.group = {-1, 1, 1, 2};
  const FeatureExpansion ex(schema, Family::kInteractions);
  // 1 + 4 linear + 1 square (continuous col 0) + products of col 0 with each
  // indicator; indicator-indicator pairs are excluded
  CHECK(ex.dim() == 1 + 4 + 1 + 3);
}

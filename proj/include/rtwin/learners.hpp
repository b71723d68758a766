#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtwin {

class FitError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family { kInterceptOnly, kMainEffects, kInteractions };

enum class LossKind { kNegLogLik, kSquaredError };

struct LearnerSpec {
  Family family = Family::kInteractions;
  bool cv_select = false;  // discrete selection over the full family library
  int cv_folds = 5;
  LossKind loss = LossKind::kNegLogLik;
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// Raw feature description: column -> categorical group id, or -1 for a
// continuous column. Squares are added for continuous columns only, and
// products of two indicator columns of the same group are dropped.
struct RawSchema {
  std::vector<int> group;
  int dim() const { return static_cast<int>(group.size()); }
};

// Polynomial expansion of a raw feature vector for one family.
class FeatureExpansion {
 public:
  FeatureExpansion() = default;
  FeatureExpansion(const RawSchema& schema, Family family);

  int dim() const { return static_cast<int>(terms_.size()); }
  void expand(const double* raw, double* out) const;
  Eigen::MatrixXd design(const Eigen::MatrixXd& raw_rows) const;

 private:
  std::vector<std::pair<int, int>> terms_;  // (-1,-1)=1, (i,-1)=x_i, (i,j)=x_i*x_j
};

constexpr double kDefaultRidge = 1e-8;
constexpr double kMaxRidge = 1e-2;

struct BinaryGlmFit {
  Eigen::VectorXd beta;
  bool converged = false;
  double ridge_used = 0.0;
};

// Ridge-penalized logistic regression by iteratively reweighted least
// squares. Stops when |deviance change| < 1e-8 and the penalized score norm
// is below 1e-6, or after 100 iterations (non-convergence flag). The ridge
// escalates x10 up to 1e-2 on numerical failure; a singular system after
// that throws FitError.
BinaryGlmFit fit_binary_glm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double ridge = kDefaultRidge);

struct MultinomialFit {
  Eigen::MatrixXd beta;  // p x (k-1), reference level 0
  int k = 0;
  bool converged = false;
  double ridge_used = 0.0;
};

// Softmax-link multinomial regression by Newton iteration, same stopping and
// ridge-escalation rules as fit_binary_glm.
MultinomialFit fit_multinomial(const Eigen::MatrixXd& x,
                               const std::vector<std::int16_t>& y, int k,
                               double ridge = kDefaultRidge);

Eigen::VectorXd multinomial_probs(const MultinomialFit& fit,
                                  const Eigen::VectorXd& x_row);

struct LinearFit {
  Eigen::VectorXd beta;
  bool converged = true;
  double ridge_used = 0.0;
};

LinearFit fit_linear_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           double ridge = kDefaultRidge);

// One fitted conditional model: expansion plus coefficients. kind follows
// the response: binary -> logistic, categorical -> multinomial,
// continuous -> least squares.
struct Learner {
  enum class Kind { kBinary, kMultinomial, kLinear };
  Kind kind = Kind::kBinary;
  Family family = Family::kMainEffects;
  FeatureExpansion expansion;
  BinaryGlmFit binary;
  MultinomialFit multinomial;
  LinearFit linear;

  double predict_prob(const double* raw, std::vector<double>& scratch) const;
  void predict_multinomial(const double* raw, std::vector<double>& scratch,
                           Eigen::VectorXd& out) const;
  double predict_mean(const double* raw, std::vector<double>& scratch) const;
};

Learner fit_learner(Learner::Kind kind, Family family, const RawSchema& schema,
                    const Eigen::MatrixXd& raw_rows, const Eigen::VectorXd& y,
                    int k = 2, double ridge = kDefaultRidge);

// Discrete cross-validated selection: returns the candidate with the lowest
// mean held-out loss, ties broken by list order; candidates that fail to fit
// get infinite loss.
Family cv_select(const std::vector<Family>& candidates, Learner::Kind kind,
                 const RawSchema& schema, const Eigen::MatrixXd& raw_rows,
                 const Eigen::VectorXd& y, int k, int folds, LossKind loss,
                 std::uint64_t seed);

inline std::vector<Family> family_library() {
  return {Family::kInterceptOnly, Family::kMainEffects, Family::kInteractions};
}

}  // namespace rtwin

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "rtwin/dataset.hpp"
#include "rtwin/learners.hpp"

namespace rtwin {

// Per-row nuisance evaluations feeding the identification functionals and
// their influence functions:
//   b1          P(A=1 | w), clipped
//   c1(z,m)     P(A=1 | z, m, w), clipped
//   g[a](z)     P(Z=z | a, w)
//   hstar[a](z,m)  P(M=m | a, z, w)
//   d[a](z,m)   E(Y | a, z, m, w)
// plus the derived marginals
//   h[a](m)   = sum_z hstar[a](z,m) g[a](z)
//   e(ao,ai)  = sum_{z,m} d[ai](z,m) hstar[ao](z,m) g[ao](z)
struct NuisanceValues {
  double b1 = 0.5;
  Eigen::MatrixXd c1;
  std::array<Eigen::VectorXd, 2> g;
  std::array<Eigen::MatrixXd, 2> hstar;
  std::array<Eigen::MatrixXd, 2> d;
  std::array<Eigen::VectorXd, 2> h;
  Eigen::Matrix2d e;

  void resize(int k_z, int k_m);
  double b(int arm) const { return arm == 1 ? b1 : 1.0 - b1; }
  double c(int arm, int zi, int mi) const {
    return arm == 1 ? c1(zi, mi) : 1.0 - c1(zi, mi);
  }
};

// Applies the probability floor to b1/c1 and fills the derived h and e
// tables. Every nuisance source goes through this after filling the raw
// b1, c1, g, hstar, d entries.
void finalize_values(NuisanceValues& v, double clip);

// Evaluates the five conditional models at a covariate row. Implementations
// are immutable after construction and safe to share across threads.
class NuisanceSource {
 public:
  virtual ~NuisanceSource() = default;
  virtual int k_z() const = 0;
  virtual int k_m() const = 0;
  // w is the analyst-visible covariate row.
  virtual void values_at(const double* w, int n_w, NuisanceValues& out) const = 0;
};

struct LearnerSpecSet {
  LearnerSpec b, c, g, hstar, d;
  static LearnerSpecSet all(const LearnerSpec& s) { return {s, s, s, s, s}; }
};

// Raised when a training split does not contain every exposure arm or
// category level of the full dataset.
class FoldLevelError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kDefaultClip = 1e-3;

class FittedNuisance : public NuisanceSource {
 public:
  int k_z() const override { return k_z_; }
  int k_m() const override { return k_m_; }
  void values_at(const double* w, int n_w, NuisanceValues& out) const override;

  bool y_binary() const { return y_binary_; }
  double clip() const { return clip_; }
  const Learner& model_b() const { return b_; }
  const Learner& model_c() const { return c_; }
  const Learner& model_g() const { return g_; }
  const Learner& model_hstar() const { return hstar_; }
  const Learner& model_d() const { return d_; }

  friend FittedNuisance fit_nuisances(const Dataset& data,
                                      const std::vector<std::size_t>& rows,
                                      const LearnerSpecSet& specs, double clip,
                                      std::uint64_t seed);

 private:
  Learner b_, c_, g_, hstar_, d_;
  int k_z_ = 0, k_m_ = 0, n_w_ = 0;
  bool y_binary_ = true;
  double clip_ = kDefaultClip;
};

// Fits b, c, g, h*, d on the given training rows. The outcome model uses the
// logistic family when Y is binary and least squares otherwise; Z and M enter
// c and d as level indicators.
FittedNuisance fit_nuisances(const Dataset& data,
                             const std::vector<std::size_t>& rows,
                             const LearnerSpecSet& specs,
                             double clip = kDefaultClip, std::uint64_t seed = 0);

}  // namespace rtwin

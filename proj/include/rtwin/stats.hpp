#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace rtwin {

inline double expit(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double clamp_prob(double p, double floor) {
  if (p < floor) return floor;
  if (p > 1.0 - floor) return 1.0 - floor;
  return p;
}

double normal_quantile(double p);             // Phi^-1(p)
double normal_cdf(double x);                  // Phi(x)
double two_sided_p(double z);                 // 2 * (1 - Phi(|z|))

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;   // sample variance (n-1 denominator)
  std::size_t n = 0;
};

// Deterministic blocked mean/variance of a contiguous vector.
MeanVar mean_var(const double* x, std::size_t n, bool parallel = true);
inline MeanVar mean_var(const std::vector<double>& x, bool parallel = true) {
  return mean_var(x.data(), x.size(), parallel);
}

}  // namespace rtwin

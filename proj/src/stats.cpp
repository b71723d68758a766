#include "rtwin/stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include "rtwin/parallel.hpp"

namespace rtwin {

double normal_quantile(double p) {
  static const boost::math::normal_distribution<> dist;
  return boost::math::quantile(dist, p);
}

double normal_cdf(double x) {
  static const boost::math::normal_distribution<> dist;
  return boost::math::cdf(dist, x);
}

double two_sided_p(double z) {
  static const boost::math::normal_distribution<> dist;
  const double tail = boost::math::cdf(boost::math::complement(dist, std::abs(z)));
  double p = 2.0 * tail;
  return p > 1.0 ? 1.0 : p;
}

namespace {
struct SumAcc {
  double s = 0.0, s2 = 0.0;
};
}  // namespace

MeanVar mean_var(const double* x, std::size_t n, bool parallel) {
  MeanVar out;
  out.n = n;
  if (n == 0) return out;
  SumAcc acc = blocked_reduce<SumAcc>(
      n, SumAcc{},
      [&](std::size_t lo, std::size_t hi) {
        SumAcc a;
        for (std::size_t i = lo; i < hi; ++i) a.s += x[i];
        return a;
      },
      [](SumAcc& into, const SumAcc& p) { into.s += p.s; },
      parallel);
  out.mean = acc.s / static_cast<double>(n);
  if (n < 2) return out;
  SumAcc acc2 = blocked_reduce<SumAcc>(
      n, SumAcc{},
      [&](std::size_t lo, std::size_t hi) {
        SumAcc a;
        for (std::size_t i = lo; i < hi; ++i) {
          const double r = x[i] - out.mean;
          a.s2 += r * r;
        }
        return a;
      },
      [](SumAcc& into, const SumAcc& p) { into.s2 += p.s2; },
      parallel);
  out.var = acc2.s2 / static_cast<double>(n - 1);
  return out;
}

}  // namespace rtwin

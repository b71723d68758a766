#include "rtwin/identification.hpp"

#include "rtwin/parallel.hpp"

namespace rtwin {

const char* target_name(TargetId t) {
  switch (t) {
    case TargetId::kS0: return "S0";
    case TargetId::kS1: return "S1";
    case TargetId::kS1P: return "S1P";
    case TargetId::kS2P: return "S2P";
    case TargetId::kS3PP: return "S3PP";
    case TargetId::kS3: return "S3";
    case TargetId::kS4: return "S4";
  }
  return "?";
}

const char* path_name(int index) {
  static const char* names[kNumPaths] = {"P1", "P2", "P3", "P4", "INT", "ATE"};
  return names[index];
}

ThetaSet plugin_conditionals(const NuisanceValues& v, const ReferenceLevels& ref) {
  const int ap = ref.treated, as = ref.control;
  const int kz = static_cast<int>(v.g[0].size());
  const int km = static_cast<int>(v.h[0].size());
  ThetaSet out{};
  out[int(TargetId::kS0)] = v.e(ap, ap);
  out[int(TargetId::kS1)] = v.e(ap, as);
  out[int(TargetId::kS4)] = v.e(as, as);
  double s1p = 0, s2p = 0, s3pp = 0, s3 = 0;
  for (int z = 0; z < kz; ++z) {
    double row_h = 0, row_hs_ap = 0;
    for (int m = 0; m < km; ++m) {
      row_h += v.d[as](z, m) * v.h[ap][m];
      row_hs_ap += v.d[as](z, m) * v.hstar[ap](z, m);
    }
    s1p += v.g[ap][z] * row_h;
    s2p += v.g[as][z] * row_h;
    s3 += v.g[as][z] * row_hs_ap;
  }
  // S3PP factorizes over the two z sums: sum_m u(m) v(m) with
  // u(m) = sum_z d(a*,z,m) g(z|a*) and v(m) = sum_z' h*(m|a',z') g(z'|a*).
  for (int m = 0; m < km; ++m) {
    double u = 0, tw = 0;
    for (int z = 0; z < kz; ++z) {
      u += v.d[as](z, m) * v.g[as][z];
      tw += v.hstar[ap](z, m) * v.g[as][z];
    }
    s3pp += u * tw;
  }
  out[int(TargetId::kS1P)] = s1p;
  out[int(TargetId::kS2P)] = s2p;
  out[int(TargetId::kS3PP)] = s3pp;
  out[int(TargetId::kS3)] = s3;
  return out;
}

EifParts eif_parts(const NuisanceValues& v, int a_obs, int z_obs, int m_obs,
                   double y_obs, const ReferenceLevels& ref) {
  const int ap = ref.treated, as = ref.control;
  const int kz = static_cast<int>(v.g[0].size());
  const int km = static_cast<int>(v.h[0].size());
  EifParts out;
  out.cond = plugin_conditionals(v, ref);
  out.resid.fill(0.0);
  const double i_ap = a_obs == ap ? 1.0 : 0.0;
  const double i_as = a_obs == as ? 1.0 : 0.0;
  const double b_ap = v.b(ap), b_as = v.b(as);
  const double d_obs = v.d[as](z_obs, m_obs);
  const double y_res = y_obs - d_obs;

  // S0 / S4: augmented inverse-probability form around the marginalized
  // outcome regression.
  out.resid[int(TargetId::kS0)] =
      i_ap / b_ap * (y_obs - v.e(ap, ap));
  out.resid[int(TargetId::kS4)] =
      i_as / b_as * (y_obs - v.e(as, as));

  // S1: density-ratio form with c and the derived e(a', a*).
  out.resid[int(TargetId::kS1)] =
      i_as / b_ap * (v.c(ap, z_obs, m_obs) / v.c(as, z_obs, m_obs)) * y_res +
      i_ap / b_ap * (d_obs - v.e(ap, as));

  // S1P (a_j = a') and S2P (a_j = a*): four-term form with level sums.
  for (const TargetId target : {TargetId::kS1P, TargetId::kS2P}) {
    const int aj = target == TargetId::kS1P ? ap : as;
    const double i_aj = a_obs == aj ? 1.0 : 0.0;
    const double b_aj = v.b(aj);
    const double cond = out.cond[int(target)];
    const double t1 = i_as * v.g[aj][z_obs] * v.h[ap][m_obs] /
                      (v.g[as][z_obs] * v.hstar[as](z_obs, m_obs) * b_as) * y_res;
    double d_zrow_h = 0;  // sum_m d(a*,Z,m) h(m|a')
    for (int m = 0; m < km; ++m) d_zrow_h += v.d[as](z_obs, m) * v.h[ap][m];
    const double t2 = i_aj / b_aj * (d_zrow_h - cond);
    double d_mcol_g = 0;  // sum_z d(a*,z,M) g(z|a_j)
    for (int z = 0; z < kz; ++z) d_mcol_g += v.d[as](z, m_obs) * v.g[aj][z];
    const double t3 = i_ap / b_ap * (d_mcol_g - cond);
    out.resid[int(target)] = t1 + t2 + t3;
  }

  // S3PP: five-term form; z' runs over the twin draw.
  {
    const double cond = out.cond[int(TargetId::kS3PP)];
    thread_local std::vector<double> u, twin;
    u.assign(static_cast<std::size_t>(km), 0.0);
    twin.assign(static_cast<std::size_t>(km), 0.0);
    for (int m = 0; m < km; ++m) {
      double uu = 0, tw = 0;
      for (int z = 0; z < kz; ++z) {
        uu += v.d[as](z, m) * v.g[as][z];
        tw += v.hstar[ap](z, m) * v.g[as][z];
      }
      u[static_cast<std::size_t>(m)] = uu;
      twin[static_cast<std::size_t>(m)] = tw;
    }
    const double u_m = u[static_cast<std::size_t>(m_obs)];
    const double twin_m = twin[static_cast<std::size_t>(m_obs)];
    const double t1 =
        i_as * twin_m / (v.hstar[as](z_obs, m_obs) * b_as) * y_res;
    double d_zrow_twin = 0, u_dot_hsz = 0;
    for (int m = 0; m < km; ++m) {
      d_zrow_twin += v.d[as](z_obs, m) * twin[static_cast<std::size_t>(m)];
      u_dot_hsz += u[static_cast<std::size_t>(m)] * v.hstar[ap](z_obs, m);
    }
    const double t2 = i_as / b_as * (d_zrow_twin - cond);
    const double t3 =
        i_ap * v.g[as][z_obs] / (v.g[ap][z_obs] * b_ap) * (u_m - u_dot_hsz);
    const double t4 = i_as / b_as * (u_dot_hsz - cond);
    out.resid[int(TargetId::kS3PP)] = t1 + t2 + t3 + t4;
  }

  // S3: four-term form.
  {
    const double cond = out.cond[int(TargetId::kS3)];
    const double t1 = i_as * v.hstar[ap](z_obs, m_obs) /
                      (v.hstar[as](z_obs, m_obs) * b_as) * y_res;
    double d_zrow_hs = 0;  // sum_m d(a*,Z,m) h*(m|a',Z)
    for (int m = 0; m < km; ++m) d_zrow_hs += v.d[as](z_obs, m) * v.hstar[ap](z_obs, m);
    const double t2 = i_as / b_as * (d_zrow_hs - cond);
    const double t3 =
        i_ap * v.g[as][z_obs] / (v.g[ap][z_obs] * b_ap) * (d_obs - d_zrow_hs);
    out.resid[int(TargetId::kS3)] = t1 + t2 + t3;
  }
  return out;
}

BatchEif evaluate_batch(const Dataset& data,
                        const std::function<const NuisanceSource*(std::size_t)>& source_of,
                        const ReferenceLevels& ref, bool parallel) {
  const std::size_t n = data.size();
  BatchEif out;
  out.cond.resize(n);
  out.resid.resize(n);
  blocked_for(
      n,
      [&](std::size_t lo, std::size_t hi) {
        NuisanceValues v;
        std::vector<double> wrow(static_cast<std::size_t>(data.n_covariates()));
        for (std::size_t i = lo; i < hi; ++i) {
          for (int j = 0; j < data.n_covariates(); ++j)
            wrow[static_cast<std::size_t>(j)] = data.w(static_cast<Eigen::Index>(i), j);
          source_of(i)->values_at(wrow.data(), data.n_covariates(), v);
          const EifParts parts = eif_parts(v, data.a[i], data.z[i], data.m[i],
                                           data.y[static_cast<Eigen::Index>(i)], ref);
          out.cond[i] = parts.cond;
          out.resid[i] = parts.resid;
        }
      },
      parallel);
  // Deterministic blocked means for the plug-in values.
  using Acc = std::array<double, kNumTargets>;
  Acc zero{};
  Acc sums = blocked_reduce<Acc>(
      n, zero,
      [&](std::size_t lo, std::size_t hi) {
        Acc a{};
        for (std::size_t i = lo; i < hi; ++i)
          for (int t = 0; t < kNumTargets; ++t) a[t] += out.cond[i][t];
        return a;
      },
      [](Acc& into, const Acc& p) {
        for (int t = 0; t < kNumTargets; ++t) into[t] += p[t];
      },
      parallel);
  for (int t = 0; t < kNumTargets; ++t)
    out.theta[t] = sums[t] / static_cast<double>(n);
  return out;
}

double plugin_value(TargetId target, const NuisanceSource& fit, const Dataset& rows,
                    const ReferenceLevels& ref, bool parallel) {
  const NuisanceSource* src = &fit;
  BatchEif batch = evaluate_batch(rows, [src](std::size_t) { return src; }, ref, parallel);
  return batch.theta[int(target)];
}

std::vector<double> eif_values(TargetId target, const NuisanceSource& fit,
                               const Dataset& rows, double theta,
                               const ReferenceLevels& ref, bool parallel) {
  const NuisanceSource* src = &fit;
  BatchEif batch = evaluate_batch(rows, [src](std::size_t) { return src; }, ref, parallel);
  std::vector<double> phi(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    phi[i] = batch.resid[i][int(target)] + batch.cond[i][int(target)] - theta;
  return phi;
}

PathEffects decompose(const ThetaSet& t) {
  PathEffects p;
  p.p1 = t[int(TargetId::kS0)] - t[int(TargetId::kS1)];
  p.p2 = t[int(TargetId::kS1P)] - t[int(TargetId::kS2P)];
  p.p3 = t[int(TargetId::kS2P)] - t[int(TargetId::kS3PP)];
  p.p4 = t[int(TargetId::kS3)] - t[int(TargetId::kS4)];
  p.intermediate = t[int(TargetId::kS1)] - t[int(TargetId::kS1P)] +
                   t[int(TargetId::kS3PP)] - t[int(TargetId::kS3)];
  p.ate = ((p.p1 + p.p2) + (p.p3 + p.p4)) + p.intermediate;
  return p;
}

std::array<std::array<double, kNumTargets>, kNumPaths> path_weights() {
  std::array<std::array<double, kNumTargets>, kNumPaths> w{};
  auto set = [&](int path, TargetId t, double v) { w[path][int(t)] = v; };
  set(0, TargetId::kS0, 1);   set(0, TargetId::kS1, -1);
  set(1, TargetId::kS1P, 1);  set(1, TargetId::kS2P, -1);
  set(2, TargetId::kS2P, 1);  set(2, TargetId::kS3PP, -1);
  set(3, TargetId::kS3, 1);   set(3, TargetId::kS4, -1);
  set(4, TargetId::kS1, 1);   set(4, TargetId::kS1P, -1);
  set(4, TargetId::kS3PP, 1); set(4, TargetId::kS3, -1);
  set(5, TargetId::kS0, 1);   set(5, TargetId::kS4, -1);
  return w;
}

}  // namespace rtwin

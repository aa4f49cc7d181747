#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

// Shared pieces of the kernel implementations. Everything here is scalar and
// is used verbatim by the scalar kernels; the AVX2 kernels re-express the
// same operation sequence lane-wise, so both produce identical bits.

namespace scl::kernels::detail {

// exp(r) - 1 = r + r^2/2! + ... + r^13/13!, |r| <= ln2/2. Horner in fma form.
inline double expm1_poly(double r) {
  double q = 1.6059043836821613e-10;              // 1/13!
  q = std::fma(q, r, 2.0876756987868099e-09);     // 1/12!
  q = std::fma(q, r, 2.5052108385441720e-08);     // 1/11!
  q = std::fma(q, r, 2.7557319223985888e-07);     // 1/10!
  q = std::fma(q, r, 2.7557319223985893e-06);     // 1/9!
  q = std::fma(q, r, 2.4801587301587302e-05);     // 1/8!
  q = std::fma(q, r, 1.9841269841269841e-04);     // 1/7!
  q = std::fma(q, r, 1.3888888888888889e-03);     // 1/6!
  q = std::fma(q, r, 8.3333333333333332e-03);     // 1/5!
  q = std::fma(q, r, 4.1666666666666664e-02);     // 1/4!
  q = std::fma(q, r, 1.6666666666666666e-01);     // 1/3!
  q = std::fma(q, r, 5.0e-01);                    // 1/2!
  const double t = q * r;
  return std::fma(t, r, r);
}

inline constexpr double kInvLn2 = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSmallCut = 0.17328679513998632;  // ln2/4
inline constexpr double kSatCut = 20.0;

// Branch structure mirrors the AVX2 select sequence exactly.
inline double tanh_core(double x) {
  const double ax = std::fabs(x);
  double t;
  if (ax >= kSatCut) {
    t = 1.0;
  } else if (ax < kSmallCut) {
    const double u = expm1_poly(-2.0 * ax);
    t = -u / (2.0 + u);
  } else {
    const double y = -2.0 * ax;
    const double k = std::nearbyint(y * kInvLn2);
    double r = std::fma(-k, kLn2Hi, y);
    r = std::fma(-k, kLn2Lo, r);
    const double e = expm1_poly(r) + 1.0;
    const double scale =
        std::bit_cast<double>(static_cast<std::uint64_t>(1023 + static_cast<std::int64_t>(k)) << 52);
    const double ex = e * scale;  // exp(-2|x|)
    t = (1.0 - ex) / (1.0 + ex);
  }
  return std::copysign(t, x);
}

// Per-neuron jet transform through tanh, given v = tanh(z0). Channel loops
// are scalar in both implementations (the affine kernels dominate).
inline void tanh_channels(const double* z, double* a, double v, int pc, int m, bool second) {
  a[0] = v;
  const double p = std::fma(-v, v, 1.0);
  for (int j = 1; j <= m; ++j) a[j] = p * z[j];
  if (second) {
    const double q = -2.0 * v * p;
    for (int j = 1; j <= m; ++j) {
      const double g = z[j];
      const double t1 = q * g;
      const double t2 = p * z[m + j];
      a[m + j] = std::fma(t1, g, t2);
    }
  }
  for (int c = second ? 2 * m + 1 : m + 1; c < pc; ++c) a[c] = 0.0;
}

inline void tanh_channels_bwd(const double* abar, const double* z, const double* a,
                              double* zbar, int pc, int m, bool second) {
  const double v = a[0];
  const double p = std::fma(-v, v, 1.0);
  const double q = -2.0 * v * p;
  double acc_g = 0.0;   // sum_j abar_gj * g_j  (+ abar_sj * s_j)
  double acc_s2 = 0.0;  // sum_j abar_sj * g_j^2
  for (int j = 1; j <= m; ++j) {
    const double g = z[j];
    acc_g = std::fma(abar[j], g, acc_g);
    zbar[j] = p * abar[j];
  }
  if (second) {
    for (int j = 1; j <= m; ++j) {
      const double g = z[j];
      const double sb = abar[m + j];
      acc_g = std::fma(sb, z[m + j], acc_g);
      const double g2 = g * g;
      acc_s2 = std::fma(sb, g2, acc_s2);
      zbar[j] = std::fma(2.0 * q * g, sb, zbar[j]);
      zbar[m + j] = p * sb;
    }
  }
  // dq/dz0 = 2p(3v^2 - 1)
  const double r2 = 2.0 * p * std::fma(3.0 * v, v, -1.0);
  double z0 = p * abar[0];
  z0 = std::fma(q, acc_g, z0);
  z0 = std::fma(r2, acc_s2, z0);
  zbar[0] = z0;
  for (int c = second ? 2 * m + 1 : m + 1; c < pc; ++c) zbar[c] = 0.0;
}

// Channel dot product in the fixed blocked order used by the AVX2 transposed
// reduction: four lane accumulators, combined as (q0+q1)+(q2+q3).
inline double dot_channels(const double* x, const double* y, int pc) {
  double q0 = x[0] * y[0];
  double q1 = x[1] * y[1];
  double q2 = x[2] * y[2];
  double q3 = x[3] * y[3];
  for (int b = 4; b < pc; b += 4) {
    q0 = std::fma(x[b + 0], y[b + 0], q0);
    q1 = std::fma(x[b + 1], y[b + 1], q1);
    q2 = std::fma(x[b + 2], y[b + 2], q2);
    q3 = std::fma(x[b + 3], y[b + 3], q3);
  }
  return (q0 + q1) + (q2 + q3);
}

inline void adam_elem(double& w, double& m1, double& m2, double g, double lr,
                      double beta1, double beta2, double eps, double c1, double c2) {
  m1 = std::fma(beta1, m1, (1.0 - beta1) * g);
  m2 = std::fma(beta2, m2, (1.0 - beta2) * (g * g));
  const double mh = m1 * c1;
  const double vh = m2 * c2;
  const double den = std::sqrt(vh) + eps;
  w = std::fma(-lr, mh / den, w);
}

}  // namespace scl::kernels::detail

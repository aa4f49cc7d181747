#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "kernels_detail.hpp"
#include "scl/kernels.hpp"

// AVX2/FMA kernels. Lane arithmetic mirrors the scalar reference operation
// for operation; see kernels_detail.hpp for the order contract.

namespace scl::kernels {
namespace {

using namespace detail;

constexpr int kMaxBlocks = 16;  // pc <= 64

inline __m256d expm1_poly4(__m256d r) {
  __m256d q = _mm256_set1_pd(1.6059043836821613e-10);
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(2.0876756987868099e-09));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(2.5052108385441720e-08));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(2.7557319223985888e-07));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(2.7557319223985893e-06));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(2.4801587301587302e-05));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(1.9841269841269841e-04));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(1.3888888888888889e-03));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(8.3333333333333332e-03));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(4.1666666666666664e-02));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(1.6666666666666666e-01));
  q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(5.0e-01));
  const __m256d t = _mm256_mul_pd(q, r);
  return _mm256_fmadd_pd(t, r, r);
}

inline __m256d tanh4(__m256d x) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d ax = _mm256_and_pd(x, abs_mask);

  // saturated-range path
  const __m256d y = _mm256_mul_pd(_mm256_set1_pd(-2.0), ax);
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(y, _mm256_set1_pd(kInvLn2)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d nk = _mm256_sub_pd(_mm256_setzero_pd(), k);
  __m256d r = _mm256_fmadd_pd(nk, _mm256_set1_pd(kLn2Hi), y);
  r = _mm256_fmadd_pd(nk, _mm256_set1_pd(kLn2Lo), r);
  const __m256d e = _mm256_add_pd(expm1_poly4(r), one);
  const __m128i ki = _mm256_cvtpd_epi32(k);
  const __m256i bits = _mm256_slli_epi64(
      _mm256_add_epi64(_mm256_cvtepi32_epi64(ki), _mm256_set1_epi64x(1023)), 52);
  const __m256d ex = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
  const __m256d t_big = _mm256_div_pd(_mm256_sub_pd(one, ex), _mm256_add_pd(one, ex));

  // small-|x| path (no range reduction, full expm1 accuracy)
  const __m256d u = expm1_poly4(y);
  const __m256d t_small =
      _mm256_div_pd(_mm256_sub_pd(_mm256_setzero_pd(), u), _mm256_add_pd(_mm256_set1_pd(2.0), u));

  __m256d t = _mm256_blendv_pd(t_big, t_small,
                               _mm256_cmp_pd(ax, _mm256_set1_pd(kSmallCut), _CMP_LT_OQ));
  t = _mm256_blendv_pd(t, one, _mm256_cmp_pd(ax, _mm256_set1_pd(kSatCut), _CMP_GE_OQ));

  const __m256d sign_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x8000000000000000LL));
  return _mm256_or_pd(_mm256_andnot_pd(sign_mask, t), _mm256_and_pd(sign_mask, x));
}

// (q0+q1) + (q2+q3), matching detail::dot_channels
inline double hsum_pairs(__m256d q) {
  const __m256d h = _mm256_hadd_pd(q, q);  // [q0+q1, q0+q1, q2+q3, q2+q3]
  return _mm256_cvtsd_f64(h) + _mm_cvtsd_f64(_mm256_extractf128_pd(h, 1));
}

// per-channel partial products of one (zbar, a_k) pair as a lane vector
inline __m256d dot_lanes(const __m256d* zb, const double* ak, int nb) {
  __m256d q = _mm256_mul_pd(zb[0], _mm256_loadu_pd(ak));
  for (int blk = 1; blk < nb; ++blk)
    q = _mm256_fmadd_pd(zb[blk], _mm256_loadu_pd(ak + 4 * blk), q);
  return q;
}

void affine_avx2(const double* W, const double* b, const double* a, double* z,
                 int n_out, int n_in, int pc) {
  const int nb = pc / 4;
  int i = 0;
  if (nb == 1) {
    for (; i + 4 <= n_out; i += 4) {
      __m256d acc0 = _mm256_set_pd(0.0, 0.0, 0.0, b ? b[i + 0] : 0.0);
      __m256d acc1 = _mm256_set_pd(0.0, 0.0, 0.0, b ? b[i + 1] : 0.0);
      __m256d acc2 = _mm256_set_pd(0.0, 0.0, 0.0, b ? b[i + 2] : 0.0);
      __m256d acc3 = _mm256_set_pd(0.0, 0.0, 0.0, b ? b[i + 3] : 0.0);
      const double* w0 = W + static_cast<long>(i + 0) * n_in;
      const double* w1 = W + static_cast<long>(i + 1) * n_in;
      const double* w2 = W + static_cast<long>(i + 2) * n_in;
      const double* w3 = W + static_cast<long>(i + 3) * n_in;
      for (int k = 0; k < n_in; ++k) {
        const __m256d av = _mm256_loadu_pd(a + static_cast<long>(k) * 4);
        acc0 = _mm256_fmadd_pd(_mm256_broadcast_sd(w0 + k), av, acc0);
        acc1 = _mm256_fmadd_pd(_mm256_broadcast_sd(w1 + k), av, acc1);
        acc2 = _mm256_fmadd_pd(_mm256_broadcast_sd(w2 + k), av, acc2);
        acc3 = _mm256_fmadd_pd(_mm256_broadcast_sd(w3 + k), av, acc3);
      }
      _mm256_storeu_pd(z + static_cast<long>(i + 0) * 4, acc0);
      _mm256_storeu_pd(z + static_cast<long>(i + 1) * 4, acc1);
      _mm256_storeu_pd(z + static_cast<long>(i + 2) * 4, acc2);
      _mm256_storeu_pd(z + static_cast<long>(i + 3) * 4, acc3);
    }
  } else if (nb == 2) {
    for (; i + 2 <= n_out; i += 2) {
      __m256d a00 = _mm256_set_pd(0.0, 0.0, 0.0, b ? b[i + 0] : 0.0);
      __m256d a01 = _mm256_setzero_pd();
      __m256d a10 = _mm256_set_pd(0.0, 0.0, 0.0, b ? b[i + 1] : 0.0);
      __m256d a11 = _mm256_setzero_pd();
      const double* w0 = W + static_cast<long>(i + 0) * n_in;
      const double* w1 = W + static_cast<long>(i + 1) * n_in;
      for (int k = 0; k < n_in; ++k) {
        const double* ak = a + static_cast<long>(k) * 8;
        const __m256d av0 = _mm256_loadu_pd(ak);
        const __m256d av1 = _mm256_loadu_pd(ak + 4);
        const __m256d wb0 = _mm256_broadcast_sd(w0 + k);
        const __m256d wb1 = _mm256_broadcast_sd(w1 + k);
        a00 = _mm256_fmadd_pd(wb0, av0, a00);
        a01 = _mm256_fmadd_pd(wb0, av1, a01);
        a10 = _mm256_fmadd_pd(wb1, av0, a10);
        a11 = _mm256_fmadd_pd(wb1, av1, a11);
      }
      _mm256_storeu_pd(z + static_cast<long>(i + 0) * 8, a00);
      _mm256_storeu_pd(z + static_cast<long>(i + 0) * 8 + 4, a01);
      _mm256_storeu_pd(z + static_cast<long>(i + 1) * 8, a10);
      _mm256_storeu_pd(z + static_cast<long>(i + 1) * 8 + 4, a11);
    }
  }
  for (; i < n_out; ++i) {
    __m256d acc[kMaxBlocks];
    acc[0] = _mm256_set_pd(0.0, 0.0, 0.0, b ? b[i] : 0.0);
    for (int blk = 1; blk < nb; ++blk) acc[blk] = _mm256_setzero_pd();
    const double* wrow = W + static_cast<long>(i) * n_in;
    for (int k = 0; k < n_in; ++k) {
      const __m256d w = _mm256_broadcast_sd(wrow + k);
      const double* ak = a + static_cast<long>(k) * pc;
      for (int blk = 0; blk < nb; ++blk)
        acc[blk] = _mm256_fmadd_pd(w, _mm256_loadu_pd(ak + 4 * blk), acc[blk]);
    }
    for (int blk = 0; blk < nb; ++blk)
      _mm256_storeu_pd(z + static_cast<long>(i) * pc + 4 * blk, acc[blk]);
  }
}

void affine_bwd_avx2(const double* W, const double* zbar, const double* a,
                     double* abar, double* Wbar, double* bbar,
                     int n_out, int n_in, int pc) {
  const int nb = pc / 4;
  __m256d zb[kMaxBlocks];
  for (int i = 0; i < n_out; ++i) {
    const double* zbi = zbar + static_cast<long>(i) * pc;
    for (int blk = 0; blk < nb; ++blk) zb[blk] = _mm256_loadu_pd(zbi + 4 * blk);
    if (bbar) bbar[i] += zbi[0];
    const double* wrow = W + static_cast<long>(i) * n_in;
    double* wbrow = Wbar + static_cast<long>(i) * n_in;
    int k = 0;
    for (; k + 4 <= n_in; k += 4) {
      // weight-gradient dots for four consecutive k via a transposed reduction
      const double* ak0 = a + static_cast<long>(k) * pc;
      const __m256d q0 = dot_lanes(zb, ak0, nb);
      const __m256d q1 = dot_lanes(zb, ak0 + pc, nb);
      const __m256d q2 = dot_lanes(zb, ak0 + 2 * pc, nb);
      const __m256d q3 = dot_lanes(zb, ak0 + 3 * pc, nb);
      const __m256d u01 = _mm256_add_pd(_mm256_unpacklo_pd(q0, q1), _mm256_unpackhi_pd(q0, q1));
      const __m256d u23 = _mm256_add_pd(_mm256_unpacklo_pd(q2, q3), _mm256_unpackhi_pd(q2, q3));
      const __m256d lo = _mm256_permute2f128_pd(u01, u23, 0x20);
      const __m256d hi = _mm256_permute2f128_pd(u01, u23, 0x31);
      const __m256d dots = _mm256_add_pd(lo, hi);  // lane k: (q0+q1)+(q2+q3)
      _mm256_storeu_pd(wbrow + k, _mm256_add_pd(_mm256_loadu_pd(wbrow + k), dots));
      if (abar) {
        for (int kk = 0; kk < 4; ++kk) {
          double* abk = abar + static_cast<long>(k + kk) * pc;
          const __m256d w = _mm256_broadcast_sd(wrow + k + kk);
          for (int blk = 0; blk < nb; ++blk) {
            const __m256d v = _mm256_fmadd_pd(w, zb[blk], _mm256_loadu_pd(abk + 4 * blk));
            _mm256_storeu_pd(abk + 4 * blk, v);
          }
        }
      }
    }
    for (; k < n_in; ++k) {
      const double* ak = a + static_cast<long>(k) * pc;
      wbrow[k] += hsum_pairs(dot_lanes(zb, ak, nb));
      if (abar) {
        double* abk = abar + static_cast<long>(k) * pc;
        const __m256d w = _mm256_broadcast_sd(wrow + k);
        for (int blk = 0; blk < nb; ++blk) {
          const __m256d v = _mm256_fmadd_pd(w, zb[blk], _mm256_loadu_pd(abk + 4 * blk));
          _mm256_storeu_pd(abk + 4 * blk, v);
        }
      }
    }
  }
}

void tanh_jet_avx2(const double* z, double* a, int n, int pc, int m, bool second) {
  int i = 0;
  alignas(32) double v8[8];
  for (; i + 8 <= n; i += 8) {
    // two independent evaluations overlap the Horner latency chains
    const long off = static_cast<long>(i) * pc;
    const __m256d z0 = _mm256_set_pd(z[off + 3L * pc], z[off + 2L * pc], z[off + pc], z[off]);
    const long off2 = off + 4L * pc;
    const __m256d z1 =
        _mm256_set_pd(z[off2 + 3L * pc], z[off2 + 2L * pc], z[off2 + pc], z[off2]);
    _mm256_store_pd(v8, tanh4(z0));
    _mm256_store_pd(v8 + 4, tanh4(z1));
    for (int r = 0; r < 8; ++r) {
      const long o = off + static_cast<long>(r) * pc;
      tanh_channels(z + o, a + o, v8[r], pc, m, second);
    }
  }
  for (; i + 4 <= n; i += 4) {
    const long off = static_cast<long>(i) * pc;
    const __m256d z0 = _mm256_set_pd(z[off + 3L * pc], z[off + 2L * pc], z[off + pc], z[off]);
    _mm256_store_pd(v8, tanh4(z0));
    for (int r = 0; r < 4; ++r) {
      const long o = off + static_cast<long>(r) * pc;
      tanh_channels(z + o, a + o, v8[r], pc, m, second);
    }
  }
  for (; i < n; ++i) {
    const long o = static_cast<long>(i) * pc;
    tanh_channels(z + o, a + o, tanh_core(z[o]), pc, m, second);
  }
}

void tanh_jet_bwd_avx2(const double* abar, const double* z, const double* a,
                       double* zbar, int n, int pc, int m, bool second) {
  for (int i = 0; i < n; ++i) {
    const long o = static_cast<long>(i) * pc;
    tanh_channels_bwd(abar + o, z + o, a + o, zbar + o, pc, m, second);
  }
}

void adam_avx2(double* w, double* m1, double* m2, const double* g, int n,
               double lr, double beta1, double beta2, double eps,
               double c1, double c2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vc1m = _mm256_set1_pd(1.0 - beta1);
  const __m256d vc2m = _mm256_set1_pd(1.0 - beta2);
  const __m256d vbc1 = _mm256_set1_pd(c1);
  const __m256d vbc2 = _mm256_set1_pd(c2);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vnlr = _mm256_set1_pd(-lr);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d m1v = _mm256_loadu_pd(m1 + i);
    __m256d m2v = _mm256_loadu_pd(m2 + i);
    m1v = _mm256_fmadd_pd(vb1, m1v, _mm256_mul_pd(vc1m, gv));
    m2v = _mm256_fmadd_pd(vb2, m2v, _mm256_mul_pd(vc2m, _mm256_mul_pd(gv, gv)));
    const __m256d mh = _mm256_mul_pd(m1v, vbc1);
    const __m256d vh = _mm256_mul_pd(m2v, vbc2);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vh), veps);
    const __m256d wv =
        _mm256_fmadd_pd(vnlr, _mm256_div_pd(mh, den), _mm256_loadu_pd(w + i));
    _mm256_storeu_pd(m1 + i, m1v);
    _mm256_storeu_pd(m2 + i, m2v);
    _mm256_storeu_pd(w + i, wv);
  }
  for (; i < n; ++i) adam_elem(w[i], m1[i], m2[i], g[i], lr, beta1, beta2, eps, c1, c2);
}

void acc_avx2(double* dst, const double* src, int n) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), _mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] += src[i];
}

double tanh1_avx2(double x) {
  alignas(32) double out[4];
  _mm256_store_pd(out, tanh4(_mm256_set1_pd(x)));
  return out[0];
}

}  // namespace

extern const Ops kAvx2Ops;
const Ops kAvx2Ops = {
    "avx2",        affine_avx2, affine_bwd_avx2, tanh_jet_avx2,
    tanh_jet_bwd_avx2, adam_avx2,   acc_avx2,        tanh1_avx2,
};

}  // namespace scl::kernels

#endif  // x86_64

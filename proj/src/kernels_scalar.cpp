#include <cmath>

#include "kernels_detail.hpp"
#include "scl/kernels.hpp"

// Reference kernels. These define the accumulation order contract: affine
// sums run over k ascending with one fma per channel, channel dots use the
// blocked order of detail::dot_channels.

namespace scl::kernels {
namespace {

using namespace detail;

void affine_scalar(const double* W, const double* b, const double* a, double* z,
                   int n_out, int n_in, int pc) {
  for (int i = 0; i < n_out; ++i) {
    double* zi = z + static_cast<long>(i) * pc;
    zi[0] = b ? b[i] : 0.0;
    for (int c = 1; c < pc; ++c) zi[c] = 0.0;
    const double* wrow = W + static_cast<long>(i) * n_in;
    for (int k = 0; k < n_in; ++k) {
      const double w = wrow[k];
      const double* ak = a + static_cast<long>(k) * pc;
      for (int c = 0; c < pc; ++c) zi[c] = std::fma(w, ak[c], zi[c]);
    }
  }
}

void affine_bwd_scalar(const double* W, const double* zbar, const double* a,
                       double* abar, double* Wbar, double* bbar,
                       int n_out, int n_in, int pc) {
  for (int i = 0; i < n_out; ++i) {
    const double* zbi = zbar + static_cast<long>(i) * pc;
    const double* wrow = W + static_cast<long>(i) * n_in;
    double* wbrow = Wbar + static_cast<long>(i) * n_in;
    if (bbar) bbar[i] += zbi[0];
    for (int k = 0; k < n_in; ++k) {
      const double* ak = a + static_cast<long>(k) * pc;
      if (abar) {
        double* abk = abar + static_cast<long>(k) * pc;
        const double w = wrow[k];
        for (int c = 0; c < pc; ++c) abk[c] = std::fma(w, zbi[c], abk[c]);
      }
      wbrow[k] += dot_channels(zbi, ak, pc);
    }
  }
}

void tanh_jet_scalar(const double* z, double* a, int n, int pc, int m, bool second) {
  for (int i = 0; i < n; ++i) {
    const double* zi = z + static_cast<long>(i) * pc;
    tanh_channels(zi, a + static_cast<long>(i) * pc, tanh_core(zi[0]), pc, m, second);
  }
}

void tanh_jet_bwd_scalar(const double* abar, const double* z, const double* a,
                         double* zbar, int n, int pc, int m, bool second) {
  for (int i = 0; i < n; ++i) {
    const long off = static_cast<long>(i) * pc;
    tanh_channels_bwd(abar + off, z + off, a + off, zbar + off, pc, m, second);
  }
}

void adam_scalar(double* w, double* m1, double* m2, const double* g, int n,
                 double lr, double beta1, double beta2, double eps,
                 double c1, double c2) {
  for (int i = 0; i < n; ++i) adam_elem(w[i], m1[i], m2[i], g[i], lr, beta1, beta2, eps, c1, c2);
}

void acc_scalar(double* dst, const double* src, int n) {
  for (int i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace

extern const Ops kScalarOps;
const Ops kScalarOps = {
    "scalar",        affine_scalar, affine_bwd_scalar, tanh_jet_scalar,
    tanh_jet_bwd_scalar, adam_scalar,   acc_scalar,        detail::tanh_core,
};

}  // namespace scl::kernels

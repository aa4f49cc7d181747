#pragma once

namespace scl::kernels {

// Jet batches are stored row-major as [neuron][channel] with the channel
// count padded to a multiple of 4 (pc). Channel 0 holds the value, channels
// 1..m the first derivatives w.r.t. the m seeded input axes, and (when
// second-order propagation is on) channels m+1..2m the diagonal second
// derivatives. Padding channels are kept at zero.
//
// Both implementations ("scalar" and "avx2") perform the same floating-point
// operations in the same order, so their results are bit-identical; the
// equivalence tests assert exact equality. Scalar code uses explicit fma to
// match the vector FMA rounding.

struct Ops {
  const char* name;

  // z[i][c] = sum_k W[i*n_in+k] * a[k][c], bias added to channel 0 (b may be null).
  void (*affine)(const double* W, const double* b, const double* a, double* z,
                 int n_out, int n_in, int pc);

  // Adjoint of affine: abar[k][c] += sum_i W[i*n_in+k] * zbar[i][c] (abar may be
  // null for the input layer), Wbar[i*n_in+k] += <zbar[i], a[k]>,
  // bbar[i] += zbar[i][0]. abar must be zero-initialized by the caller.
  void (*affine_bwd)(const double* W, const double* zbar, const double* a,
                     double* abar, double* Wbar, double* bbar,
                     int n_out, int n_in, int pc);

  // Elementwise tanh jet: a0 = tanh(z0), a_g = p*z_g, a_s = q*z_g^2 + p*z_s
  // with p = 1 - a0^2, q = -2*a0*p. Second-derivative channels only when
  // `second` is set.
  void (*tanh_jet)(const double* z, double* a, int n, int pc, int m, bool second);

  // Adjoint of tanh_jet; reads the stored pre-activations z and activations a.
  void (*tanh_jet_bwd)(const double* abar, const double* z, const double* a,
                       double* zbar, int n, int pc, int m, bool second);

  // One Adam update over n parameters. c1/c2 are the precomputed bias
  // corrections 1/(1-beta1^t) and 1/(1-beta2^t).
  void (*adam)(double* w, double* m1, double* m2, const double* g, int n,
               double lr, double beta1, double beta2, double eps,
               double c1, double c2);

  // dst += src, elementwise.
  void (*acc)(double* dst, const double* src, int n);

  // The kernel tanh itself (scalar form), exposed for accuracy tests.
  double (*tanh1)(double x);
};

// Active implementation: best available for the CPU, overridable with
// SCL_KERNELS=scalar|avx2 (invalid or unsupported values are an error).
const Ops& active();

// Lookup by name; returns nullptr if unknown or unsupported on this CPU.
const Ops* by_name(const char* name);

bool avx2_available();

inline int padded_channels(int channels) { return (channels + 3) & ~3; }

}  // namespace scl::kernels

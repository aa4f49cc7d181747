#pragma once

#include <complex>
#include <vector>

namespace scl {

// In-place iterative radix-2 FFT; size must be a power of two. The inverse
// transform includes the 1/n normalization.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace scl

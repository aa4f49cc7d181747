#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scl {

// Fully-connected tanh network with identity output activation and scalar
// output. Parameters live in one flat vector ([W0|b0|W1|b1|...], W row-major)
// so optimizer updates and gradient buffers can be applied in a single pass.
struct Mlp {
  struct LayerRef {
    int n_in = 0;
    int n_out = 0;
    std::size_t w_off = 0;
    std::size_t b_off = 0;
  };

  std::vector<int> widths;  // [input, hidden..., output]
  std::vector<double> params;
  std::vector<LayerRef> layers;

  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  int n_layers() const { return static_cast<int>(layers.size()); }

  const double* w(int l) const { return params.data() + layers[l].w_off; }
  const double* b(int l) const { return params.data() + layers[l].b_off; }
  double* w(int l) { return params.data() + layers[l].w_off; }
  double* b(int l) { return params.data() + layers[l].b_off; }

  // Shape compatibility, scalar output, finite parameters.
  void validate() const;
};

// Allocates the layout for the given widths with zero parameters.
Mlp make_mlp_zeros(const std::vector<int>& widths);

// Glorot-uniform weights, zero biases, seeded.
Mlp make_mlp(const std::vector<int>& widths, std::uint64_t seed);

// Self-describing binary checkpoint (see README for the exact layout).
void save_checkpoint(const Mlp& model, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace scl

#include "scl/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "scl/error.hpp"
#include "scl/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint and field formats assume a little-endian host");

namespace scl {

void Mlp::validate() const {
  require(widths.size() >= 2, errc::invalid_argument, "mlp: need at least input and output widths");
  for (int w : widths)
    require(w >= 1, errc::invalid_argument, "mlp: layer widths must be positive");
  require(widths.back() == 1, errc::invalid_argument, "mlp: output width must be 1");
  require(layers.size() == widths.size() - 1, errc::invalid_argument, "mlp: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(layers[l].n_in == widths[l] && layers[l].n_out == widths[l + 1],
            errc::dimension_mismatch, "mlp: incompatible consecutive layer shapes");
  }
  for (double p : params)
    require(std::isfinite(p), errc::non_finite, "mlp: non-finite parameter");
}

Mlp make_mlp_zeros(const std::vector<int>& widths) {
  Mlp m;
  m.widths = widths;
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Mlp::LayerRef ref;
    ref.n_in = widths[l];
    ref.n_out = widths[l + 1];
    ref.w_off = total;
    total += static_cast<std::size_t>(ref.n_in) * ref.n_out;
    ref.b_off = total;
    total += static_cast<std::size_t>(ref.n_out);
    m.layers.push_back(ref);
  }
  m.params.assign(total, 0.0);
  m.validate();
  return m;
}

Mlp make_mlp(const std::vector<int>& widths, std::uint64_t seed) {
  Mlp m = make_mlp_zeros(widths);
  Rng rng(derive_seed(seed, {0x1217a11ull}));
  for (int l = 0; l < m.n_layers(); ++l) {
    const auto& ref = m.layers[l];
    const double limit = std::sqrt(6.0 / (ref.n_in + ref.n_out));
    double* w = m.w(l);
    const std::size_t n = static_cast<std::size_t>(ref.n_in) * ref.n_out;
    for (std::size_t i = 0; i < n; ++i) w[i] = rng.uniform(-limit, limit);
  }
  return m;
}

namespace {

constexpr char kMagic[8] = {'S', 'C', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void write_all(std::FILE* f, const void* p, std::size_t n, const std::string& path) {
  require(std::fwrite(p, 1, n, f) == n, errc::io, "checkpoint: short write to " + path);
}

void read_all(std::FILE* f, void* p, std::size_t n, const std::string& path) {
  require(std::fread(p, 1, n, f) == n, errc::io, "checkpoint: short read from " + path);
}

}  // namespace

void save_checkpoint(const Mlp& model, const std::string& path) {
  model.validate();
  File f(std::fopen(path.c_str(), "wb"));
  require(f != nullptr, errc::io, "checkpoint: cannot open " + path + " for writing");
  write_all(f.get(), kMagic, sizeof(kMagic), path);
  write_all(f.get(), &kVersion, sizeof(kVersion), path);
  const std::uint32_t nw = static_cast<std::uint32_t>(model.widths.size());
  write_all(f.get(), &nw, sizeof(nw), path);
  for (int w : model.widths) {
    const std::int32_t v = w;
    write_all(f.get(), &v, sizeof(v), path);
  }
  write_all(f.get(), model.params.data(), model.params.size() * sizeof(double), path);
}

Mlp load_checkpoint(const std::string& path) {
  File f(std::fopen(path.c_str(), "rb"));
  require(f != nullptr, errc::io, "checkpoint: cannot open " + path);
  char magic[8];
  read_all(f.get(), magic, sizeof(magic), path);
  require(std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, errc::io,
          "checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  read_all(f.get(), &version, sizeof(version), path);
  require(version == kVersion, errc::io, "checkpoint: unsupported version in " + path);
  std::uint32_t nw = 0;
  read_all(f.get(), &nw, sizeof(nw), path);
  require(nw >= 2 && nw < 64, errc::io, "checkpoint: implausible width count in " + path);
  std::vector<int> widths(nw);
  for (auto& w : widths) {
    std::int32_t v = 0;
    read_all(f.get(), &v, sizeof(v), path);
    w = v;
  }
  Mlp m = make_mlp_zeros(widths);
  read_all(f.get(), m.params.data(), m.params.size() * sizeof(double), path);
  m.validate();
  return m;
}

}  // namespace scl

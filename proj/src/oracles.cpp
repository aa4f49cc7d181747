#include "scl/oracles.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <memory>

#include "scl/error.hpp"
#include "scl/fft.hpp"
#include "scl/rng.hpp"

namespace scl::oracles {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

std::size_t EvalGrid::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
  return n;
}

double EvalGrid::coord(int axis, int index) const {
  const Axis& a = axes[axis];
  if (a.periodic) return a.lo + (a.hi - a.lo) * index / a.count;
  return a.lo + (a.hi - a.lo) * index / (a.count - 1);
}

void EvalGrid::point(std::size_t flat, std::vector<double>& out) const {
  out.resize(axes.size());
  for (int ax = dim() - 1; ax >= 0; --ax) {
    const auto count = static_cast<std::size_t>(axes[ax].count);
    out[ax] = coord(ax, static_cast<int>(flat % count));
    flat /= count;
  }
}

void EvalGrid::validate() const {
  require(!axes.empty(), errc::invalid_argument, "grid: needs at least one axis");
  for (const auto& a : axes) {
    require(a.count >= 2, errc::invalid_argument, "grid: node counts must be >= 2");
    require(a.lo < a.hi, errc::invalid_argument, "grid: axis bounds must satisfy lo < hi");
  }
}

double convection_exact(double x, double t, double beta) { return std::sin(x - beta * t); }

double helmholtz_exact(double x, double y, double a1, double a2) {
  return std::sin(kPi * a1 * x) * std::sin(kPi * a2 * y);
}

double eikonal_signed_distance(std::span<const double> point, const bvp::Shape& shape) {
  require(bvp::shape_is_analytic(shape), errc::missing_oracle,
          "eikonal: no exact oracle for point-cloud shapes");
  return bvp::shape_signed_distance(shape, point[0], point[1]);
}

namespace {

// Exact logistic flow u' = rho*u*(1-u) over time h.
inline void reaction_half(std::vector<double>& u, double rho, double h) {
  if (rho == 0.0 || h == 0.0) return;
  const double e = std::exp(rho * h);
  for (double& v : u) v = v * e / (1.0 - v + v * e);
}

void check_range(const std::vector<double>& u, double t) {
  for (double v : u)
    require(v >= -1e-9 && v <= 1.0 + 1e-9 && std::isfinite(v), errc::runtime_abort,
            "rd_reference: field left [0,1] near t=" + std::to_string(t) +
                " (integration unstable)");
}

}  // namespace

std::vector<double> rd_reference(const EvalGrid& grid, double nu, double rho, double dt) {
  grid.validate();
  require(grid.dim() == 2, errc::invalid_argument, "rd_reference: grid must be (x, t)");
  const auto& xa = grid.axes[0];
  const auto& ta = grid.axes[1];
  require(xa.periodic, errc::invalid_argument, "rd_reference: x axis must be periodic");
  require((xa.count & (xa.count - 1)) == 0, errc::invalid_argument,
          "rd_reference: x node count must be a power of two");
  require(dt > 0.0, errc::invalid_argument, "rd_reference: dt must be positive");

  const int nx = xa.count, nt = ta.count;
  const double L = xa.hi - xa.lo;
  std::vector<double> u(nx);
  for (int i = 0; i < nx; ++i) {
    const double z = (grid.coord(0, i) - kPi) / (kPi / 4.0);
    u[i] = std::exp(-0.5 * z * z);
  }

  // Fourier multiplier for one diffusion step of length h: exp(-nu*k^2*h)
  std::vector<std::complex<double>> hat(nx);
  std::vector<double> k2(nx);
  for (int m = 0; m < nx; ++m) {
    const int mm = m <= nx / 2 ? m : m - nx;
    const double k = 2.0 * kPi * mm / L;
    k2[m] = k * k;
  }
  const auto diffuse = [&](double h) {
    if (nu == 0.0) return;
    for (int i = 0; i < nx; ++i) hat[i] = u[i];
    fft_inplace(hat, false);
    for (int m = 0; m < nx; ++m) hat[m] *= std::exp(-nu * k2[m] * h);
    fft_inplace(hat, true);
    for (int i = 0; i < nx; ++i) u[i] = hat[i].real();
  };

  std::vector<double> field(grid.size());
  double t_cur = 0.0;
  for (int j = 0; j < nt; ++j) {
    const double t_want = grid.coord(1, j);
    const double span = t_want - t_cur;
    require(span >= -1e-12, errc::invalid_argument, "rd_reference: t axis must be ascending");
    if (span > 1e-14) {
      const int steps = std::max(1, static_cast<int>(std::ceil(span / dt - 1e-12)));
      const double h = span / steps;
      for (int s = 0; s < steps; ++s) {
        reaction_half(u, rho, 0.5 * h);
        diffuse(h);
        reaction_half(u, rho, 0.5 * h);
      }
      check_range(u, t_want);
      t_cur = t_want;
    }
    for (int i = 0; i < nx; ++i) field[static_cast<std::size_t>(i) * nt + j] = u[i];
  }
  return field;
}

double relative_l2(std::span<const double> pred, std::span<const double> ref) {
  require(pred.size() == ref.size(), errc::dimension_mismatch,
          "relative_l2: field length mismatch");
  require(!ref.empty(), errc::invalid_argument, "relative_l2: empty fields");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = pred[i] - ref[i];
    num += d * d;
    den += ref[i] * ref[i];
  }
  require(den > 0.0, errc::invalid_argument, "relative_l2: reference field is identically zero");
  return std::sqrt(num / den);
}

double max_abs_error(std::span<const double> pred, std::span<const double> ref) {
  require(pred.size() == ref.size(), errc::dimension_mismatch,
          "max_abs_error: field length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) m = std::max(m, std::fabs(pred[i] - ref[i]));
  return m;
}

std::vector<double> reference_field(const bvp::BVPSpec& spec, std::span<const double> pi,
                                    const EvalGrid& grid, double rd_dt) {
  grid.validate();
  std::vector<double> field(grid.size());
  std::vector<double> p;
  switch (spec.id) {
    case bvp::PdeId::convection:
      for (std::size_t i = 0; i < field.size(); ++i) {
        grid.point(i, p);
        field[i] = convection_exact(p[0], p[1], pi[0]);
      }
      return field;
    case bvp::PdeId::reaction_diffusion: return rd_reference(grid, pi[0], pi[1], rd_dt);
    case bvp::PdeId::helmholtz:
      for (std::size_t i = 0; i < field.size(); ++i) {
        grid.point(i, p);
        field[i] = helmholtz_exact(p[0], p[1], pi[0], pi[1]);
      }
      return field;
    case bvp::PdeId::eikonal:
      for (std::size_t i = 0; i < field.size(); ++i) {
        grid.point(i, p);
        field[i] = eikonal_signed_distance(p, spec.shape);
      }
      return field;
    case bvp::PdeId::burgers:
      fail(errc::missing_oracle, "burgers: no built-in oracle (experimental catalog entry)");
  }
  return field;
}

std::vector<Observation> synthesize_observations(const bvp::BVPSpec& spec,
                                                 const std::vector<std::vector<double>>& pis,
                                                 const EvalGrid& grid, double noise_sigma,
                                                 std::uint64_t seed, double rd_dt) {
  require(noise_sigma >= 0.0, errc::invalid_argument, "observations: noise sigma must be >= 0");
  std::vector<Observation> out;
  out.reserve(pis.size());
  for (std::size_t j = 0; j < pis.size(); ++j) {
    require(spec.coeffs.contains(pis[j]), errc::invalid_argument,
            "observations: coefficient " + std::to_string(j) + " outside the coefficient box");
    Observation ob;
    ob.pi = pis[j];
    ob.field = reference_field(spec, pis[j], grid, rd_dt);
    if (noise_sigma > 0.0) {
      Rng rng(derive_seed(seed, {0x0b5e11ull, j}));
      for (double& v : ob.field) v += noise_sigma * rng.normal();
    }
    out.push_back(std::move(ob));
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

constexpr char kFieldMagic[8] = {'S', 'C', 'L', 'F', 'L', 'D', '1', '\0'};
constexpr std::uint32_t kFieldVersion = 1;

}  // namespace

void write_field_csv(const std::string& path, const EvalGrid& grid,
                     std::span<const double> field) {
  require(field.size() == grid.size(), errc::dimension_mismatch, "field csv: size mismatch");
  File f(std::fopen(path.c_str(), "wb"));
  require(f != nullptr, errc::io, "field csv: cannot open " + path);
  for (const auto& a : grid.axes) std::fprintf(f.get(), "%s,", a.name.c_str());
  std::fprintf(f.get(), "value\n");
  std::vector<double> p;
  for (std::size_t i = 0; i < field.size(); ++i) {
    grid.point(i, p);
    for (double c : p) std::fprintf(f.get(), "%.17g,", c);
    std::fprintf(f.get(), "%.17g\n", field[i]);
  }
}

void write_field_bin(const std::string& path, const EvalGrid& grid,
                     std::span<const double> field) {
  require(field.size() == grid.size(), errc::dimension_mismatch, "field bin: size mismatch");
  File f(std::fopen(path.c_str(), "wb"));
  require(f != nullptr, errc::io, "field bin: cannot open " + path);
  auto put = [&](const void* p, std::size_t n) {
    require(std::fwrite(p, 1, n, f.get()) == n, errc::io, "field bin: short write to " + path);
  };
  put(kFieldMagic, sizeof(kFieldMagic));
  put(&kFieldVersion, sizeof(kFieldVersion));
  const std::uint32_t na = static_cast<std::uint32_t>(grid.axes.size());
  put(&na, sizeof(na));
  for (const auto& a : grid.axes) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(a.name.size());
    put(&name_len, sizeof(name_len));
    put(a.name.data(), a.name.size());
    const std::int32_t count = a.count;
    const std::uint8_t periodic = a.periodic ? 1 : 0;
    put(&count, sizeof(count));
    put(&periodic, sizeof(periodic));
    put(&a.lo, sizeof(a.lo));
    put(&a.hi, sizeof(a.hi));
  }
  const std::uint64_t n = field.size();
  put(&n, sizeof(n));
  put(field.data(), field.size() * sizeof(double));
}

std::pair<EvalGrid, std::vector<double>> read_field_bin(const std::string& path) {
  File f(std::fopen(path.c_str(), "rb"));
  require(f != nullptr, errc::io, "field bin: cannot open " + path);
  auto get = [&](void* p, std::size_t n) {
    require(std::fread(p, 1, n, f.get()) == n, errc::io, "field bin: short read from " + path);
  };
  char magic[8];
  get(magic, sizeof(magic));
  require(std::memcmp(magic, kFieldMagic, sizeof(kFieldMagic)) == 0, errc::io,
          "field bin: bad magic in " + path);
  std::uint32_t version = 0;
  get(&version, sizeof(version));
  require(version == kFieldVersion, errc::io, "field bin: unsupported version in " + path);
  std::uint32_t na = 0;
  get(&na, sizeof(na));
  require(na >= 1 && na <= 8, errc::io, "field bin: implausible axis count in " + path);
  EvalGrid grid;
  for (std::uint32_t i = 0; i < na; ++i) {
    EvalGrid::Axis a;
    std::uint32_t name_len = 0;
    get(&name_len, sizeof(name_len));
    require(name_len <= 64, errc::io, "field bin: implausible axis name in " + path);
    a.name.resize(name_len);
    get(a.name.data(), name_len);
    std::int32_t count = 0;
    std::uint8_t periodic = 0;
    get(&count, sizeof(count));
    get(&periodic, sizeof(periodic));
    get(&a.lo, sizeof(a.lo));
    get(&a.hi, sizeof(a.hi));
    a.count = count;
    a.periodic = periodic != 0;
    grid.axes.push_back(std::move(a));
  }
  grid.validate();
  std::uint64_t n = 0;
  get(&n, sizeof(n));
  require(n == grid.size(), errc::io, "field bin: value count mismatch in " + path);
  std::vector<double> field(n);
  get(field.data(), n * sizeof(double));
  return {std::move(grid), std::move(field)};
}

}  // namespace scl::oracles

#include "scl/bvp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scl/error.hpp"

namespace scl::bvp {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

const char* to_string(PdeId id) {
  switch (id) {
    case PdeId::convection: return "convection";
    case PdeId::reaction_diffusion: return "reaction_diffusion";
    case PdeId::eikonal: return "eikonal";
    case PdeId::helmholtz: return "helmholtz";
    case PdeId::burgers: return "burgers";
  }
  return "?";
}

PdeId pde_id_from_string(const std::string& s) {
  if (s == "convection") return PdeId::convection;
  if (s == "reaction_diffusion") return PdeId::reaction_diffusion;
  if (s == "eikonal") return PdeId::eikonal;
  if (s == "helmholtz") return PdeId::helmholtz;
  if (s == "burgers") return PdeId::burgers;
  fail(errc::invalid_argument, "unknown bvp id: " + s);
}

void DomainBox::validate() const {
  require(!space_lo.empty() && space_lo.size() == space_hi.size(), errc::invalid_argument,
          "domain: space bounds must be non-empty and congruent");
  for (std::size_t i = 0; i < space_lo.size(); ++i)
    require(space_lo[i] < space_hi[i], errc::invalid_argument, "domain: requires lo < hi");
  require(time_hi >= 0.0, errc::invalid_argument, "domain: T must be >= 0");
}

bool CoefficientBox::contains(std::span<const double> pi) const {
  if (static_cast<int>(pi.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (pi[i] < lo[i] || pi[i] > hi[i]) return false;
  return true;
}

void CoefficientBox::validate() const {
  require(lo.size() == hi.size(), errc::invalid_argument, "coefficients: lo/hi size mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    require(lo[i] <= hi[i], errc::invalid_argument, "coefficients: requires lo <= hi");
  if (fixed)
    for (std::size_t i = 0; i < lo.size(); ++i)
      require(lo[i] == hi[i], errc::invalid_argument, "coefficients: fixed box must have lo == hi");
}

bool shape_is_analytic(const Shape& shape) { return shape.kind != Shape::Kind::point_cloud; }

double shape_signed_distance(const Shape& shape, double x, double y) {
  switch (shape.kind) {
    case Shape::Kind::circle:
      return std::hypot(x - shape.center[0], y - shape.center[1]) - shape.radius;
    case Shape::Kind::two_circles: {
      const double d1 = std::hypot(x - shape.center[0], y - shape.center[1]) - shape.radius;
      const double d2 = std::hypot(x - shape.center2[0], y - shape.center2[1]) - shape.radius2;
      return std::min(d1, d2);
    }
    case Shape::Kind::square: {
      const double qx = std::fabs(x - shape.center[0]) - shape.half_extent;
      const double qy = std::fabs(y - shape.center[1]) - shape.half_extent;
      const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0);
      return std::hypot(ox, oy) + std::min(std::max(qx, qy), 0.0);
    }
    case Shape::Kind::point_cloud:
      fail(errc::missing_oracle, "point-cloud shapes have no exact signed distance");
  }
  return 0.0;
}

std::vector<std::array<double, 2>> shape_boundary_points(const Shape& shape, int n) {
  require(n >= 1, errc::invalid_argument, "shape boundary: need n >= 1 points");
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(n));
  switch (shape.kind) {
    case Shape::Kind::circle:
      for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        pts.push_back({shape.center[0] + shape.radius * std::cos(a),
                       shape.center[1] + shape.radius * std::sin(a)});
      }
      break;
    case Shape::Kind::two_circles: {
      const int n1 = n / 2, n2 = n - n1;
      for (int i = 0; i < n1; ++i) {
        const double a = 2.0 * kPi * i / n1;
        pts.push_back({shape.center[0] + shape.radius * std::cos(a),
                       shape.center[1] + shape.radius * std::sin(a)});
      }
      for (int i = 0; i < n2; ++i) {
        const double a = 2.0 * kPi * i / n2;
        pts.push_back({shape.center2[0] + shape.radius2 * std::cos(a),
                       shape.center2[1] + shape.radius2 * std::sin(a)});
      }
      break;
    }
    case Shape::Kind::square: {
      const double h = shape.half_extent;
      for (int i = 0; i < n; ++i) {
        const double s = 8.0 * h * i / n;  // perimeter parameter
        double x, y;
        if (s < 2 * h) {
          x = -h + s;
          y = -h;
        } else if (s < 4 * h) {
          x = h;
          y = -h + (s - 2 * h);
        } else if (s < 6 * h) {
          x = h - (s - 4 * h);
          y = h;
        } else {
          x = -h;
          y = h - (s - 6 * h);
        }
        pts.push_back({shape.center[0] + x, shape.center[1] + y});
      }
      break;
    }
    case Shape::Kind::point_cloud: {
      require(!shape.cloud.empty(), errc::invalid_argument, "point-cloud shape is empty");
      for (int i = 0; i < n; ++i)
        pts.push_back(shape.cloud[static_cast<std::size_t>(i) % shape.cloud.size()]);
      break;
    }
  }
  return pts;
}

Shape load_point_cloud(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io, "point cloud: cannot open " + path);
  Shape s;
  s.kind = Shape::Kind::point_cloud;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double x = 0, y = 0;
    require(static_cast<bool>(ls >> x >> y), errc::io,
            "point cloud: malformed line in " + path + ": " + line);
    s.cloud.push_back({x, y});
  }
  require(!s.cloud.empty(), errc::io, "point cloud: no points in " + path);
  return s;
}

int BVPSpec::jet_order() const {
  switch (id) {
    case PdeId::convection:
    case PdeId::eikonal: return 1;
    default: return 2;
  }
}

int BVPSpec::n_transforms() const { return id == PdeId::convection ? 1 : 0; }

void BVPSpec::validate() const {
  domain.validate();
  coeffs.validate();
  int expected = 0;
  switch (id) {
    case PdeId::convection: expected = 1; break;
    case PdeId::reaction_diffusion: expected = 2; break;
    case PdeId::eikonal: expected = 0; break;
    case PdeId::helmholtz: expected = 2; break;
    case PdeId::burgers: expected = 1; break;
  }
  require(coeffs.dim() == expected, errc::dimension_mismatch,
          std::string(to_string(id)) + ": expected " + std::to_string(expected) +
              " coefficients, got " + std::to_string(coeffs.dim()));
  if (id == PdeId::helmholtz)
    require(wave_number > 0.0, errc::invalid_argument, "helmholtz: wave number must be positive");
}

BVPSpec make_convection(double beta_lo, double beta_hi, bool fixed) {
  BVPSpec s;
  s.id = PdeId::convection;
  s.domain.space_lo = {0.0};
  s.domain.space_hi = {2.0 * kPi};
  s.domain.time_hi = 1.0;
  s.domain.periodic_x = true;
  s.coeffs = {{beta_lo}, {beta_hi}, fixed};
  s.validate();
  return s;
}

BVPSpec make_reaction_diffusion(std::array<double, 2> nu_range, std::array<double, 2> rho_range,
                                bool fixed) {
  BVPSpec s;
  s.id = PdeId::reaction_diffusion;
  s.domain.space_lo = {0.0};
  s.domain.space_hi = {2.0 * kPi};
  s.domain.time_hi = 1.0;
  s.domain.periodic_x = true;
  s.coeffs = {{nu_range[0], rho_range[0]}, {nu_range[1], rho_range[1]}, fixed};
  s.validate();
  return s;
}

BVPSpec make_eikonal(Shape shape) {
  BVPSpec s;
  s.id = PdeId::eikonal;
  s.domain.space_lo = {-1.0, -1.0};
  s.domain.space_hi = {1.0, 1.0};
  s.domain.time_hi = 0.0;
  s.shape = std::move(shape);
  s.validate();
  return s;
}

BVPSpec make_helmholtz(double k, std::array<double, 2> a1_range, std::array<double, 2> a2_range,
                       bool fixed) {
  BVPSpec s;
  s.id = PdeId::helmholtz;
  s.domain.space_lo = {0.0, 0.0};
  s.domain.space_hi = {1.0, 1.0};
  s.domain.time_hi = 0.0;
  s.wave_number = k;
  s.coeffs = {{a1_range[0], a2_range[0]}, {a1_range[1], a2_range[1]}, fixed};
  s.validate();
  return s;
}

BVPSpec make_burgers(double nu_lo, double nu_hi, bool fixed) {
  BVPSpec s;
  s.id = PdeId::burgers;
  s.domain.space_lo = {0.0};
  s.domain.space_hi = {1.0};
  s.domain.time_hi = 1.0;
  s.domain.periodic_x = true;
  s.coeffs = {{nu_lo}, {nu_hi}, fixed};
  s.validate();
  return s;
}

namespace {

void check_pi(const BVPSpec& spec, std::span<const double> pi) {
  if (static_cast<int>(pi.size()) != spec.coeffs.dim())
    fail(errc::dimension_mismatch, std::string(to_string(spec.id)) +
                                       ": coefficient count mismatch (got " +
                                       std::to_string(pi.size()) + ")");
}

}  // namespace

double pde_residual(const BVPSpec& spec, const JetView& jet, std::span<const double> pi,
                    std::span<const double> point) {
  check_pi(spec, pi);
  require(jet.grad != nullptr && jet.m >= spec.domain.point_dim(), errc::invalid_argument,
          "pde_residual: jet lacks required derivative axes");
  if (spec.jet_order() == 2)
    require(jet.diag2 != nullptr, errc::invalid_argument,
            "pde_residual: jet lacks second derivatives");
  switch (spec.id) {
    case PdeId::convection: return jet.grad[1] + pi[0] * jet.grad[0];
    case PdeId::reaction_diffusion:
      return jet.grad[1] - pi[0] * jet.diag2[0] - pi[1] * jet.value * (1.0 - jet.value);
    case PdeId::eikonal: return std::hypot(jet.grad[0], jet.grad[1]) - 1.0;
    case PdeId::helmholtz: {
      const double k2 = spec.wave_number * spec.wave_number;
      return jet.diag2[0] + jet.diag2[1] + k2 * jet.value - forcing(spec, point, pi);
    }
    case PdeId::burgers:
      return jet.grad[1] + jet.value * jet.grad[0] - pi[0] * jet.diag2[0];
  }
  return 0.0;
}

void pde_residual_adjoint(const BVPSpec& spec, const JetView& jet, std::span<const double> pi,
                          std::span<const double> point, double w, double* adj) {
  (void)point;
  check_pi(spec, pi);
  const int m = jet.m;
  switch (spec.id) {
    case PdeId::convection:
      adj[1 + 1] += w;          // d/d g_t
      adj[1 + 0] += pi[0] * w;  // d/d g_x
      break;
    case PdeId::reaction_diffusion:
      adj[1 + 1] += w;
      adj[1 + m + 0] -= pi[0] * w;
      adj[0] -= pi[1] * (1.0 - 2.0 * jet.value) * w;
      break;
    case PdeId::eikonal: {
      const double n = std::hypot(jet.grad[0], jet.grad[1]);
      if (n > 0.0) {
        adj[1 + 0] += jet.grad[0] / n * w;
        adj[1 + 1] += jet.grad[1] / n * w;
      }
      break;
    }
    case PdeId::helmholtz:
      adj[1 + m + 0] += w;
      adj[1 + m + 1] += w;
      adj[0] += spec.wave_number * spec.wave_number * w;
      break;
    case PdeId::burgers:
      adj[1 + 1] += w;
      adj[0] += jet.grad[0] * w;
      adj[1 + 0] += jet.value * w;
      adj[1 + m + 0] -= pi[0] * w;
      break;
  }
}

double forcing(const BVPSpec& spec, std::span<const double> point, std::span<const double> pi) {
  if (spec.id != PdeId::helmholtz) return 0.0;
  check_pi(spec, pi);
  const double k2 = spec.wave_number * spec.wave_number;
  const double a1 = pi[0], a2 = pi[1];
  return (k2 - kPi * kPi * a1 * a1 - kPi * kPi * a2 * a2) * std::sin(kPi * a1 * point[0]) *
         std::sin(kPi * a2 * point[1]);
}

double boundary_value(const BVPSpec& spec, std::span<const double> point,
                      std::span<const double> pi) {
  switch (spec.id) {
    case PdeId::convection: return std::sin(point[0]);
    case PdeId::reaction_diffusion: {
      const double z = (point[0] - kPi) / (kPi / 4.0);
      return std::exp(-0.5 * z * z);
    }
    case PdeId::eikonal: return 0.0;
    case PdeId::helmholtz: {
      check_pi(spec, pi);
      return std::sin(kPi * pi[0] * point[0]) * std::sin(kPi * pi[1] * point[1]);
    }
    case PdeId::burgers: return std::sin(2.0 * kPi * point[0]);
  }
  return 0.0;
}

bool on_boundary(const BVPSpec& spec, std::span<const double> point, double tol) {
  if (spec.id == PdeId::eikonal) {
    if (!shape_is_analytic(spec.shape)) {
      for (const auto& p : spec.shape.cloud)
        if (std::fabs(p[0] - point[0]) <= tol && std::fabs(p[1] - point[1]) <= tol) return true;
      return false;
    }
    return std::fabs(shape_signed_distance(spec.shape, point[0], point[1])) <= tol;
  }
  const auto& d = spec.domain;
  if (d.has_time() && std::fabs(point[d.space_dim()]) <= tol) return true;  // initial slice
  for (int i = 0; i < d.space_dim(); ++i)
    if (std::fabs(point[i] - d.space_lo[i]) <= tol || std::fabs(point[i] - d.space_hi[i]) <= tol)
      return true;
  return false;
}

double boundary_residual(const BVPSpec& spec, double u_value, std::span<const double> point,
                         std::span<const double> pi) {
  require(on_boundary(spec, point), errc::not_on_boundary,
          "boundary_residual: point does not lie on the boundary/initial set");
  return u_value - boundary_value(spec, point, pi);
}

std::vector<double> transform_point(const BVPSpec& spec, int transform_index,
                                    std::span<const double> pi, std::span<const double> point) {
  require(transform_index >= 0 && transform_index < spec.n_transforms(), errc::invalid_argument,
          "transform_point: no such invariance transform");
  check_pi(spec, pi);
  // convection: time shift by the solution period 2*pi/beta, wrapped into (0, T]
  const double beta = pi[0];
  require(beta > 0.0, errc::invalid_argument, "convection transform: beta must be positive");
  const double period = 2.0 * kPi / beta;
  const double T = spec.domain.time_hi;
  require(period <= T, errc::invalid_argument,
          "convection transform: period 2*pi/beta exceeds the time horizon");
  std::vector<double> out(point.begin(), point.end());
  double t = point[1] + period;
  if (t > T) t -= period * std::ceil((t - T) / period);
  out[1] = t;
  return out;
}

double invariance_residual(const Mlp& model, const BVPSpec& spec, std::span<const double> pi,
                           std::span<const double> point, int transform_index) {
  const std::vector<double> mapped = transform_point(spec, transform_index, pi, point);
  thread_local JetWorkspace ws;
  std::vector<double> in;
  build_model_input(spec, model, point, pi, in);
  const double u0 = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
  build_model_input(spec, model, mapped, pi, in);
  const double u1 = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
  return u0 - u1;
}

void build_model_input(const BVPSpec& spec, const Mlp& model, std::span<const double> point,
                       std::span<const double> pi, std::vector<double>& out) {
  const int pd = spec.domain.point_dim();
  require(static_cast<int>(point.size()) == pd, errc::dimension_mismatch,
          "model input: point dimension mismatch");
  const bool parametric = model.input_width() == pd + spec.coeffs.dim();
  require(parametric || model.input_width() == pd, errc::dimension_mismatch,
          "model input width matches neither single-BVP nor parametric layout");
  out.assign(point.begin(), point.end());
  if (parametric) {
    check_pi(spec, pi);
    out.insert(out.end(), pi.begin(), pi.end());
  }
}

}  // namespace scl::bvp

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "scl/jets.hpp"
#include "scl/mlp.hpp"

namespace scl::bvp {

enum class PdeId { convection, reaction_diffusion, eikonal, helmholtz, burgers };

const char* to_string(PdeId id);
PdeId pde_id_from_string(const std::string& s);

struct DomainBox {
  std::vector<double> space_lo, space_hi;
  double time_hi = 0.0;  // 0 => stationary problem, no time input
  bool periodic_x = false;

  int space_dim() const { return static_cast<int>(space_lo.size()); }
  bool has_time() const { return time_hi > 0.0; }
  int point_dim() const { return space_dim() + (has_time() ? 1 : 0); }
  void validate() const;
};

struct CoefficientBox {
  std::vector<double> lo, hi;
  bool fixed = true;  // single-BVP mode: lo == hi

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(std::span<const double> pi) const;
  void validate() const;
};

// Boundary shape for the eikonal entry. Analytic kinds have exact signed
// distances; point clouds only define the zero level set.
struct Shape {
  enum class Kind { circle, two_circles, square, point_cloud };
  Kind kind = Kind::circle;
  std::array<double, 2> center{0.0, 0.0};
  double radius = 0.5;
  std::array<double, 2> center2{0.0, 0.0};
  double radius2 = 0.0;
  double half_extent = 0.5;  // square
  std::vector<std::array<double, 2>> cloud;
};

double shape_signed_distance(const Shape& shape, double x, double y);  // analytic kinds only
bool shape_is_analytic(const Shape& shape);
std::vector<std::array<double, 2>> shape_boundary_points(const Shape& shape, int n);
Shape load_point_cloud(const std::string& path);  // one "x y" pair per line

struct BVPSpec {
  PdeId id = PdeId::convection;
  DomainBox domain;
  CoefficientBox coeffs;
  double wave_number = 1.0;  // helmholtz only
  Shape shape;               // eikonal only

  int jet_order() const;  // 1 where no second derivatives appear in D
  int n_transforms() const;
  void validate() const;
};

// Catalog constructors with the canonical domains.
BVPSpec make_convection(double beta_lo, double beta_hi, bool fixed);
BVPSpec make_reaction_diffusion(std::array<double, 2> nu_range, std::array<double, 2> rho_range,
                                bool fixed);
BVPSpec make_eikonal(Shape shape);
BVPSpec make_helmholtz(double k, std::array<double, 2> a1_range, std::array<double, 2> a2_range,
                       bool fixed);
BVPSpec make_burgers(double nu_lo, double nu_hi, bool fixed);

// D_pi[u](point) - tau(point, pi): the signed residual whose square is the
// PDE loss. The jet must have been propagated at `point` with jet_order().
double pde_residual(const BVPSpec& spec, const JetView& jet, std::span<const double> pi,
                    std::span<const double> point);

// Accumulates w * d(residual)/d(jet) into the semantic adjoint channels
// (adj[0] value, adj[1+j] grad, adj[1+m+j] diag2).
void pde_residual_adjoint(const BVPSpec& spec, const JetView& jet, std::span<const double> pi,
                          std::span<const double> point, double w, double* adj);

double forcing(const BVPSpec& spec, std::span<const double> point, std::span<const double> pi);

// Dirichlet/IC data h at a boundary point.
double boundary_value(const BVPSpec& spec, std::span<const double> point,
                      std::span<const double> pi);

bool on_boundary(const BVPSpec& spec, std::span<const double> point, double tol = 1e-9);

// u - h at a point of the Dirichlet/IC part of the boundary. Periodic faces
// are handled by the caller as paired-point differences.
double boundary_residual(const BVPSpec& spec, double u_value, std::span<const double> point,
                         std::span<const double> pi);

// Image of `point` under the registered invariance transform. For the
// convection entry this shifts t by the solution period 2*pi/beta, wrapping
// back into (0, T].
std::vector<double> transform_point(const BVPSpec& spec, int transform_index,
                                    std::span<const double> pi, std::span<const double> point);

// u_theta(pi)(point) - u_theta(pi)(gamma(pi)(point)), two value-only passes.
// The model may be parametric (input = point ++ pi) or single-BVP.
double invariance_residual(const Mlp& model, const BVPSpec& spec, std::span<const double> pi,
                           std::span<const double> point, int transform_index);

// [-u]_+ hinge used for sign/structural constraints.
inline double structural_hinge(double u_value) { return u_value < 0.0 ? -u_value : 0.0; }

// Model input vector for (point, pi); appends pi when the model is parametric.
void build_model_input(const BVPSpec& spec, const Mlp& model, std::span<const double> point,
                       std::span<const double> pi, std::vector<double>& out);

}  // namespace scl::bvp

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scl/bvp.hpp"

namespace scl::oracles {

// Regular evaluation grid. Row-major flattening, last axis fastest. Periodic
// axes exclude the upper endpoint (spacing (hi-lo)/n), others include both.
struct EvalGrid {
  struct Axis {
    std::string name;
    int count = 0;
    double lo = 0.0, hi = 0.0;
    bool periodic = false;
  };
  std::vector<Axis> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  std::size_t size() const;
  double coord(int axis, int index) const;
  void point(std::size_t flat, std::vector<double>& out) const;
  void validate() const;
};

// Per-run error metrics against a reference field.
struct ErrorReport {
  double relative_l2 = 0.0;
  double max_abs_error = 0.0;
  // (coefficient vector, relative l2) rows when evaluated over a coefficient grid
  std::vector<std::pair<std::vector<double>, double>> per_coefficient;
};

// u(x,0) = sin(x) transported at speed beta with periodic wrap.
double convection_exact(double x, double t, double beta);

// sin(pi a1 x) sin(pi a2 y); exact by construction of the Helmholtz forcing.
double helmholtz_exact(double x, double y, double a1, double a2);

// Signed distance to an analytic catalog shape, negative inside.
double eikonal_signed_distance(std::span<const double> point, const bvp::Shape& shape);

// Strang-splitting reference for the reaction-diffusion entry: exact logistic
// half-steps around an exact Fourier diffusion step, marched to each time on
// the grid's t axis. Grid axes must be (x periodic power-of-two, t).
std::vector<double> rd_reference(const EvalGrid& grid, double nu, double rho, double dt);

// sqrt(sum (pred-ref)^2 / sum ref^2); errors on an all-zero reference.
double relative_l2(std::span<const double> pred, std::span<const double> ref);

double max_abs_error(std::span<const double> pred, std::span<const double> ref);

// Reference solution on a grid for one coefficient vector; errors when the
// catalog entry has no oracle (burgers).
std::vector<double> reference_field(const bvp::BVPSpec& spec, std::span<const double> pi,
                                    const EvalGrid& grid, double rd_dt = 1e-3);

struct Observation {
  std::vector<double> pi;
  std::vector<double> field;  // on the synthesis grid
};

// Oracle-generated observational datasets, optionally with seeded Gaussian
// noise of the given standard deviation.
std::vector<Observation> synthesize_observations(const bvp::BVPSpec& spec,
                                                 const std::vector<std::vector<double>>& pis,
                                                 const EvalGrid& grid, double noise_sigma,
                                                 std::uint64_t seed, double rd_dt = 1e-3);

// Field exports; layouts documented in the README.
void write_field_csv(const std::string& path, const EvalGrid& grid, std::span<const double> field);
void write_field_bin(const std::string& path, const EvalGrid& grid, std::span<const double> field);
std::pair<EvalGrid, std::vector<double>> read_field_bin(const std::string& path);

}  // namespace scl::oracles

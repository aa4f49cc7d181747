#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scl/bvp.hpp"
#include "scl/jets.hpp"
#include "scl/mlp.hpp"
#include "scl/oracles.hpp"
#include "scl/sampler.hpp"

namespace scl::trainer {

enum class Kind { pde, bc, invariance, structural, observation };
enum class Policy { fixed, uniform_per_epoch, mh };
enum class Role { objective, constraint };

const char* to_string(Kind k);

// One constrained (or objective) loss: what it measures, its tolerance, and
// how its collocation batch is drawn each epoch.
struct ConstraintSpec {
  Kind kind = Kind::pde;
  Role role = Role::constraint;
  double tolerance = 0.0;
  Policy policy = Policy::mh;
  int batch = 1000;                // points per epoch (MH: kept tail N0)
  sampler::ProposalSpec proposal;  // MH policy only; proposal.keep == batch
  int transform_index = 0;         // invariance
  int dataset_index = -1;          // observation: index into Problem::observations
  // fixed boundary batch sizes (catalog defaults follow the experiment setup)
  int n_ic = 256;
  int n_periodic = 100;
  int n_boundary = 0;  // Dirichlet perimeter / shape points (helmholtz, eikonal)
  // fixed coefficient discretization for the weighted-sum parametric baseline;
  // empty means coefficients are sampled jointly with the points
  std::vector<std::vector<double>> pi_values;
  std::string label;

  void validate(const bvp::BVPSpec& spec) const;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

enum class Mode { scl, pinn };

struct TrainConfig {
  Mode mode = Mode::scl;
  long epochs = 0;
  double primal_lr = 1e-3;
  double dual_lr = 1e-4;
  double decay_factor = 1.0;  // applied to both rates every decay_interval epochs
  long decay_interval = 0;    // 0 = no decay
  AdamParams adam;
  int inner_primal_steps = 1;  // >1 recovers the dual-ascent regime
  std::uint64_t seed = 0;
  std::vector<double> pinn_weights;  // mode==pinn: weight per constraint, list-aligned
  double divergence_threshold = 1e6;
  long log_every = 1;  // trajectory stride (final epoch always logged)

  void validate() const;
};

// Nonnegative multiplier per constraint (objective entries stay at 0).
struct DualState {
  std::vector<double> lambda;
};

// lambda_c <- max(0, lambda_c + eta_d*(loss_c - eps_c)); objective-role
// entries are skipped.
void dual_step(DualState& dual, std::span<const double> losses,
               const std::vector<ConstraintSpec>& constraints, double eta_d);

// One Adam update of the flat parameter vector. step_index is 1-based.
struct AdamState {
  std::vector<double> m1, m2;
  void reset(std::size_t n);
};
void primal_step(Mlp& model, AdamState& adam, std::span<const double> grad,
                 const AdamParams& params, double lr, long step_index);

struct TrajectoryRow {
  long epoch = 0;
  int constraint = 0;
  double lambda = 0.0;
  double loss = 0.0;
};

struct TrainReport {
  Mlp model;
  std::vector<std::string> constraint_labels;
  std::vector<TrajectoryRow> trajectory;
  std::vector<double> final_losses;
  std::vector<double> final_lambda;
  long operator_evals = 0;  // PDE-loss evaluations including MH burn-in
  long epochs = 0;
  double wall_seconds = 0.0;  // reported to the log only, never serialized
};

// Everything the loop needs besides the constraint list.
struct Problem {
  bvp::BVPSpec spec;
  bool parametric = false;  // model input carries the coefficients
  std::vector<oracles::Observation> observations;
  oracles::EvalGrid obs_grid;
};

// One epoch's collocation batches, one entry per constraint. Points are rows
// of point_dim (+ coefficient dim when sampled jointly) coordinates.
struct Batch {
  std::vector<double> pts;
  int n = 0;
  int dim = 0;
};
struct EpochSamples {
  std::vector<Batch> batches;
};

// Mean empirical loss per constraint for the given samples (hinge mean for
// structural constraints, mean squared residual otherwise). Deterministic
// given model and samples; bitwise-reproducible from dumped sample files.
std::vector<double> empirical_losses(const Mlp& model, const Problem& problem,
                                     const std::vector<ConstraintSpec>& constraints,
                                     const EpochSamples& samples);

// One epoch of collocation batches, exactly as train() draws them (MH chains
// target the given model). PDE evaluations are added to *counter.
EpochSamples sample_epoch(const Problem& problem, const std::vector<ConstraintSpec>& constraints,
                          const Mlp& model, long epoch, std::uint64_t seed, long* counter);

// Primal-dual constrained training (mode scl) or the weighted-sum baseline
// (mode pinn). Runs epochs of {sample -> losses -> primal -> dual}.
TrainReport train(const Problem& problem, const std::vector<ConstraintSpec>& constraints,
                  const Mlp& init, const TrainConfig& config);

// Weighted-sum baseline entry point: train() with mode forced to pinn.
TrainReport pinn_baseline(const Problem& problem, const std::vector<ConstraintSpec>& constraints,
                          const Mlp& init, TrainConfig config);

}  // namespace scl::trainer

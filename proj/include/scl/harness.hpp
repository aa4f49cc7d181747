#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "scl/config.hpp"
#include "scl/oracles.hpp"
#include "scl/trainer.hpp"

namespace scl::harness {

// Experiment wiring derived from a validated config.
trainer::Problem build_problem(const ExperimentConfig& cfg);
std::vector<trainer::ConstraintSpec> expand_constraints(const ExperimentConfig& cfg,
                                                        std::vector<double>* pinn_weights);
Mlp build_model(const ExperimentConfig& cfg);
oracles::EvalGrid domain_grid(const bvp::BVPSpec& spec, const std::vector<int>& counts);

// Model field on a grid at fixed coefficients (value-only forwards).
std::vector<double> predict_field(const Mlp& model, const bvp::BVPSpec& spec,
                                  const oracles::EvalGrid& grid, std::span<const double> pi);

// Relative-L2/max-error report against the oracle; parametric configs average
// over the coefficient grid and fill the per-coefficient breakdown.
oracles::ErrorReport evaluate(const Mlp& model, const ExperimentConfig& cfg);

// 100 * (counter_a/epochs_a) / (counter_b/epochs_b)
double complexity_percent(long counter_a, long epochs_a, long counter_b, long epochs_b);
double complexity_report(const trainer::TrainReport& a, const trainer::TrainReport& b);

struct RunResultPaths {
  std::string dir;
  std::string metrics;
  std::string checkpoint;
  std::string lambda_csv;
  std::string config_echo;
};

// Full experiment: train, evaluate, write artifacts. Returns the paths.
// Byte-identical artifacts for identical config + seed.
RunResultPaths run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Runs the first MH-sampled constraint against the freshly initialized model
// and dumps samples/histograms (Fig.-2b-style data).
RunResultPaths sample_diagnostics(const ExperimentConfig& cfg, std::ostream& log);

std::string output_root(const ExperimentConfig& cfg);  // env SCL_OUTPUT_ROOT override

}  // namespace scl::harness

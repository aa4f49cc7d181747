#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "scl/bvp.hpp"
#include "scl/oracles.hpp"
#include "scl/trainer.hpp"

namespace scl::harness {

struct ModelConfig {
  int hidden_layers = 4;
  int hidden_width = 50;
  bool parametric = false;
};

struct EvaluationConfig {
  bool enabled = false;
  std::vector<int> grid;         // nodes per domain axis
  int coefficient_grid = 0;      // nodes per coefficient axis (parametric runs)
  double rd_dt = 1e-3;           // reaction-diffusion reference step
};

struct ObservationsConfig {
  bool enabled = false;
  int count = 0;
  double noise_sigma = 0.0;
  std::vector<int> grid;
  std::uint64_t seed = 0;
};

struct ConstraintConfig {
  trainer::ConstraintSpec spec;
  double weight = 1.0;       // pinn-mode weight (mu)
  bool per_dataset = false;  // observation: expand to one constraint per dataset
  int pi_grid = 0;           // pde: equispaced coefficient discretization per axis
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  bvp::BVPSpec spec;
  ModelConfig model;
  std::vector<ConstraintConfig> constraints;
  trainer::TrainConfig train;
  EvaluationConfig eval;
  ObservationsConfig observations;
  std::string output_dir = "runs";
  nlohmann::ordered_json canonical;  // validated config echo (hashed, re-emitted)
};

// Parses and validates; collects every violation instead of stopping at the
// first. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j, std::vector<std::string>& errors);

// Loads a config file, or a shipped preset when the argument names one.
// Throws Error(errc::config) with the full violation list.
ExperimentConfig load_config(const std::string& path_or_preset);

// Applies "key.path=value" overrides (values parsed as JSON scalars) before
// validation.
ExperimentConfig load_config_with_overrides(const std::string& path_or_preset,
                                            const std::vector<std::string>& overrides);

const std::map<std::string, nlohmann::ordered_json>& presets();

std::string config_hash(const nlohmann::ordered_json& canonical);  // fnv1a-64 hex

}  // namespace scl::harness

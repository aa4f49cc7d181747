#include "scl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "scl/error.hpp"

namespace scl::harness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Collects every schema violation with a dotted path prefix.
struct Check {
  std::vector<std::string>& errors;

  void err(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      err(path, "expected an object");
      return false;
    }
    bool ok = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!allowed.count(it.key())) {
        err(path, "unknown key '" + it.key() + "'");
        ok = false;
      }
    }
    return ok;
  }

  template <class T>
  bool get(const json& j, const std::string& path, const std::string& key, bool required, T& out) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) err(path, "missing required key '" + key + "'");
      return false;
    }
    try {
      out = j.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      err(path + "." + key, "has the wrong type");
      return false;
    }
  }

  bool positive(double v, const std::string& path) {
    if (!(v > 0.0)) {
      err(path, "must be > 0 (got " + std::to_string(v) + ")");
      return false;
    }
    return true;
  }

  bool nonneg(double v, const std::string& path) {
    if (!(v >= 0.0)) {
      err(path, "must be >= 0 (got " + std::to_string(v) + ")");
      return false;
    }
    return true;
  }
};

bvp::Shape parse_shape(const json& j, const std::string& path, Check& ck) {
  bvp::Shape s;
  ck.keys(j, path, {"kind", "center", "radius", "center2", "radius2", "half_extent", "path"});
  std::string kind = "circle";
  ck.get(j, path, "kind", true, kind);
  std::vector<double> c;
  if (ck.get(j, path, "center", false, c) && c.size() == 2) s.center = {c[0], c[1]};
  ck.get(j, path, "radius", false, s.radius);
  if (ck.get(j, path, "center2", false, c) && c.size() == 2) s.center2 = {c[0], c[1]};
  ck.get(j, path, "radius2", false, s.radius2);
  ck.get(j, path, "half_extent", false, s.half_extent);
  if (kind == "circle") {
    s.kind = bvp::Shape::Kind::circle;
  } else if (kind == "two_circles") {
    s.kind = bvp::Shape::Kind::two_circles;
  } else if (kind == "square") {
    s.kind = bvp::Shape::Kind::square;
  } else if (kind == "point_cloud") {
    std::string file;
    if (ck.get(j, path, "path", true, file)) {
      try {
        s = bvp::load_point_cloud(file);
      } catch (const Error& e) {
        ck.err(path + ".path", e.what());
      }
    }
    s.kind = bvp::Shape::Kind::point_cloud;
  } else {
    ck.err(path + ".kind", "unknown shape kind '" + kind + "'");
  }
  return s;
}

bvp::BVPSpec parse_bvp(const json& j, const std::string& path, Check& ck) {
  bvp::BVPSpec spec;
  ck.keys(j, path, {"id", "coefficients", "wave_number", "shape"});
  std::string id;
  if (!ck.get(j, path, "id", true, id)) return spec;
  try {
    spec.id = bvp::pde_id_from_string(id);
  } catch (const Error& e) {
    ck.err(path + ".id", e.what());
    return spec;
  }

  std::vector<double> lo, hi;
  bool fixed = true;
  if (j.contains("coefficients")) {
    const json& cj = j.at("coefficients");
    ck.keys(cj, path + ".coefficients", {"fixed", "lo", "hi"});
    std::vector<double> fx;
    if (ck.get(cj, path + ".coefficients", "fixed", false, fx)) {
      lo = hi = fx;
      fixed = true;
    } else {
      const bool has_lo = ck.get(cj, path + ".coefficients", "lo", true, lo);
      const bool has_hi = ck.get(cj, path + ".coefficients", "hi", true, hi);
      if (!has_lo || !has_hi) return spec;
      fixed = false;
    }
  } else if (spec.id != bvp::PdeId::eikonal) {
    ck.err(path, "missing required key 'coefficients'");
    return spec;
  }

  double k = 1.0;
  ck.get(j, path, "wave_number", false, k);
  bvp::Shape shape;
  shape.kind = bvp::Shape::Kind::two_circles;
  shape.center = {-0.5, -0.3};
  shape.radius = 0.35;
  shape.center2 = {0.45, 0.4};
  shape.radius2 = 0.3;
  if (j.contains("shape")) shape = parse_shape(j.at("shape"), path + ".shape", ck);

  try {
    switch (spec.id) {
      case bvp::PdeId::convection:
        spec = bvp::make_convection(lo.at(0), hi.at(0), fixed);
        break;
      case bvp::PdeId::reaction_diffusion:
        spec = bvp::make_reaction_diffusion({lo.at(0), hi.at(0)}, {lo.at(1), hi.at(1)}, fixed);
        break;
      case bvp::PdeId::eikonal:
        spec = bvp::make_eikonal(shape);
        break;
      case bvp::PdeId::helmholtz:
        spec = bvp::make_helmholtz(k, {lo.at(0), hi.at(0)}, {lo.at(1), hi.at(1)}, fixed);
        break;
      case bvp::PdeId::burgers:
        spec = bvp::make_burgers(lo.at(0), hi.at(0), fixed);
        break;
    }
  } catch (const Error& e) {
    ck.err(path, e.what());
  } catch (const std::out_of_range&) {
    ck.err(path + ".coefficients", "wrong coefficient count for " + id);
  }
  return spec;
}

ConstraintConfig parse_constraint(const json& j, const std::string& path, Check& ck) {
  ConstraintConfig cc;
  ck.keys(j, path,
          {"kind", "role", "tolerance", "policy", "batch", "proposal", "transform", "dataset",
           "n_ic", "n_periodic", "n_boundary", "pi_grid", "pi_values", "weight", "per_dataset",
           "label"});
  std::string kind;
  if (ck.get(j, path, "kind", true, kind)) {
    if (kind == "pde") cc.spec.kind = trainer::Kind::pde;
    else if (kind == "bc") cc.spec.kind = trainer::Kind::bc;
    else if (kind == "invariance") cc.spec.kind = trainer::Kind::invariance;
    else if (kind == "structural") cc.spec.kind = trainer::Kind::structural;
    else if (kind == "observation") cc.spec.kind = trainer::Kind::observation;
    else ck.err(path + ".kind", "unknown constraint kind '" + kind + "'");
  }
  std::string role = "constraint";
  ck.get(j, path, "role", false, role);
  if (role == "objective") cc.spec.role = trainer::Role::objective;
  else if (role == "constraint") cc.spec.role = trainer::Role::constraint;
  else ck.err(path + ".role", "must be 'objective' or 'constraint'");

  ck.get(j, path, "tolerance", cc.spec.role == trainer::Role::constraint, cc.spec.tolerance);
  ck.nonneg(cc.spec.tolerance, path + ".tolerance");

  std::string policy;
  switch (cc.spec.kind) {
    case trainer::Kind::pde: policy = "mh"; break;
    case trainer::Kind::invariance: policy = "mh"; break;
    case trainer::Kind::observation: policy = "uniform_per_epoch"; break;
    default: policy = "fixed"; break;
  }
  ck.get(j, path, "policy", false, policy);
  if (policy == "fixed") cc.spec.policy = trainer::Policy::fixed;
  else if (policy == "uniform_per_epoch") cc.spec.policy = trainer::Policy::uniform_per_epoch;
  else if (policy == "mh") cc.spec.policy = trainer::Policy::mh;
  else ck.err(path + ".policy", "unknown policy '" + policy + "'");

  ck.get(j, path, "batch", false, cc.spec.batch);
  if (cc.spec.batch < 1) ck.err(path + ".batch", "must be >= 1");

  if (j.contains("proposal")) {
    const json& pj = j.at("proposal");
    ck.keys(pj, path + ".proposal", {"cov_diag", "steps", "chains"});
    ck.get(pj, path + ".proposal", "cov_diag", true, cc.spec.proposal.cov_diag);
    long steps = 5000;
    ck.get(pj, path + ".proposal", "steps", false, steps);
    cc.spec.proposal.steps = steps;
    int chains = 1;
    ck.get(pj, path + ".proposal", "chains", false, chains);
    cc.spec.proposal.chains = chains;
    for (double v : cc.spec.proposal.cov_diag)
      if (!(v > 0.0)) ck.err(path + ".proposal.cov_diag", "entries must be > 0");
    if (steps < 1) ck.err(path + ".proposal.steps", "must be >= 1");
    if (chains < 1) ck.err(path + ".proposal.chains", "must be >= 1");
  } else if (cc.spec.policy == trainer::Policy::mh) {
    ck.err(path, "MH policy requires a 'proposal' block");
  }
  cc.spec.proposal.keep = cc.spec.batch;

  ck.get(j, path, "transform", false, cc.spec.transform_index);
  ck.get(j, path, "dataset", false, cc.spec.dataset_index);
  ck.get(j, path, "n_ic", false, cc.spec.n_ic);
  ck.get(j, path, "n_periodic", false, cc.spec.n_periodic);
  ck.get(j, path, "n_boundary", false, cc.spec.n_boundary);
  ck.get(j, path, "pi_grid", false, cc.pi_grid);
  ck.get(j, path, "pi_values", false, cc.spec.pi_values);
  ck.get(j, path, "weight", false, cc.weight);
  ck.get(j, path, "per_dataset", false, cc.per_dataset);
  ck.get(j, path, "label", false, cc.spec.label);
  if (cc.per_dataset && cc.spec.kind != trainer::Kind::observation)
    ck.err(path + ".per_dataset", "only observation constraints expand per dataset");
  return cc;
}

trainer::TrainConfig parse_train(const json& j, const std::string& path, Check& ck) {
  trainer::TrainConfig t;
  ck.keys(j, path,
          {"mode", "epochs", "primal_lr", "dual_lr", "decay_factor", "decay_interval",
           "inner_primal_steps", "adam", "log_every", "divergence_threshold"});
  std::string mode = "scl";
  ck.get(j, path, "mode", false, mode);
  if (mode == "scl") t.mode = trainer::Mode::scl;
  else if (mode == "pinn") t.mode = trainer::Mode::pinn;
  else ck.err(path + ".mode", "must be 'scl' or 'pinn'");
  long epochs = 0;
  if (ck.get(j, path, "epochs", true, epochs)) {
    t.epochs = epochs;
    if (epochs < 1) ck.err(path + ".epochs", "must be >= 1");
  }
  ck.get(j, path, "primal_lr", false, t.primal_lr);
  ck.positive(t.primal_lr, path + ".primal_lr");
  ck.get(j, path, "dual_lr", false, t.dual_lr);
  ck.positive(t.dual_lr, path + ".dual_lr");
  ck.get(j, path, "decay_factor", false, t.decay_factor);
  if (!(t.decay_factor > 0.0 && t.decay_factor <= 1.0))
    ck.err(path + ".decay_factor", "must be in (0, 1]");
  long interval = 0;
  ck.get(j, path, "decay_interval", false, interval);
  t.decay_interval = interval;
  if (interval < 0) ck.err(path + ".decay_interval", "must be >= 0");
  ck.get(j, path, "inner_primal_steps", false, t.inner_primal_steps);
  if (t.inner_primal_steps < 1) ck.err(path + ".inner_primal_steps", "must be >= 1");
  if (j.contains("adam")) {
    const json& aj = j.at("adam");
    ck.keys(aj, path + ".adam", {"beta1", "beta2", "eps"});
    ck.get(aj, path + ".adam", "beta1", false, t.adam.beta1);
    ck.get(aj, path + ".adam", "beta2", false, t.adam.beta2);
    ck.get(aj, path + ".adam", "eps", false, t.adam.eps);
  }
  long log_every = 10;
  ck.get(j, path, "log_every", false, log_every);
  t.log_every = log_every;
  if (log_every < 1) ck.err(path + ".log_every", "must be >= 1");
  ck.get(j, path, "divergence_threshold", false, t.divergence_threshold);
  ck.positive(t.divergence_threshold, path + ".divergence_threshold");
  return t;
}

}  // namespace

ExperimentConfig parse_config(const json& j, std::vector<std::string>& errors) {
  Check ck{errors};
  ExperimentConfig cfg;
  ck.keys(j, "config",
          {"version", "name", "seed", "bvp", "model", "constraints", "train", "evaluation",
           "observations", "output_dir"});
  int version = 0;
  if (ck.get(j, "config", "version", true, version) && version != 1)
    ck.err("config.version", "unsupported version " + std::to_string(version));
  ck.get(j, "config", "name", true, cfg.name);
  if (cfg.name.empty() || cfg.name.find('/') != std::string::npos)
    ck.err("config.name", "must be a non-empty name without '/'");
  std::uint64_t seed = 0;
  ck.get(j, "config", "seed", true, seed);
  cfg.seed = seed;

  if (j.contains("bvp")) cfg.spec = parse_bvp(j.at("bvp"), "config.bvp", ck);
  else ck.err("config", "missing required key 'bvp'");

  if (j.contains("model")) {
    const json& mj = j.at("model");
    ck.keys(mj, "config.model", {"hidden_layers", "hidden_width", "parametric"});
    ck.get(mj, "config.model", "hidden_layers", false, cfg.model.hidden_layers);
    ck.get(mj, "config.model", "hidden_width", false, cfg.model.hidden_width);
    ck.get(mj, "config.model", "parametric", false, cfg.model.parametric);
    if (cfg.model.hidden_layers < 0) ck.err("config.model.hidden_layers", "must be >= 0");
    if (cfg.model.hidden_width < 1) ck.err("config.model.hidden_width", "must be >= 1");
  } else {
    ck.err("config", "missing required key 'model'");
  }

  if (j.contains("constraints") && j.at("constraints").is_array()) {
    const json& cj = j.at("constraints");
    if (cj.empty()) ck.err("config.constraints", "must not be empty");
    int idx = 0;
    for (const auto& e : cj)
      cfg.constraints.push_back(
          parse_constraint(e, "config.constraints[" + std::to_string(idx++) + "]", ck));
  } else {
    ck.err("config", "missing required array 'constraints'");
  }

  if (j.contains("train")) cfg.train = parse_train(j.at("train"), "config.train", ck);
  else ck.err("config", "missing required key 'train'");
  cfg.train.seed = cfg.seed;

  if (j.contains("evaluation")) {
    const json& ej = j.at("evaluation");
    ck.keys(ej, "config.evaluation", {"grid", "coefficient_grid", "rd_dt"});
    cfg.eval.enabled = true;
    ck.get(ej, "config.evaluation", "grid", true, cfg.eval.grid);
    ck.get(ej, "config.evaluation", "coefficient_grid", false, cfg.eval.coefficient_grid);
    ck.get(ej, "config.evaluation", "rd_dt", false, cfg.eval.rd_dt);
    for (int n : cfg.eval.grid)
      if (n < 2) ck.err("config.evaluation.grid", "node counts must be >= 2");
    if (cfg.eval.coefficient_grid < 0) ck.err("config.evaluation.coefficient_grid", "must be >= 0");
    ck.positive(cfg.eval.rd_dt, "config.evaluation.rd_dt");
  }

  if (j.contains("observations")) {
    const json& oj = j.at("observations");
    ck.keys(oj, "config.observations", {"count", "noise_sigma", "grid", "seed"});
    cfg.observations.enabled = true;
    ck.get(oj, "config.observations", "count", true, cfg.observations.count);
    ck.get(oj, "config.observations", "noise_sigma", false, cfg.observations.noise_sigma);
    ck.get(oj, "config.observations", "grid", true, cfg.observations.grid);
    std::uint64_t oseed = 0;
    ck.get(oj, "config.observations", "seed", false, oseed);
    cfg.observations.seed = oseed;
    if (cfg.observations.count < 1) ck.err("config.observations.count", "must be >= 1");
    ck.nonneg(cfg.observations.noise_sigma, "config.observations.noise_sigma");
  }

  ck.get(j, "config", "output_dir", false, cfg.output_dir);

  // cross-field checks
  int n_objectives = 0;
  for (const auto& c : cfg.constraints)
    if (c.spec.role == trainer::Role::objective) ++n_objectives;
  if (n_objectives > 1) ck.err("config.constraints", "at most one constraint may be the objective");
  bool has_obs_constraint = false;
  for (const auto& c : cfg.constraints)
    if (c.spec.kind == trainer::Kind::observation) has_obs_constraint = true;
  if (has_obs_constraint && !cfg.observations.enabled)
    ck.err("config", "observation constraints require an 'observations' block");
  if (cfg.model.parametric && cfg.spec.coeffs.dim() == 0)
    ck.err("config.model.parametric", "parametric model needs a bvp with coefficients");
  if (!cfg.model.parametric && !cfg.spec.coeffs.fixed)
    ck.err("config.bvp.coefficients", "coefficient ranges require a parametric model");

  if (errors.empty()) {
    // canonical echo (defaults materialized)
    ordered_json c;
    c["version"] = 1;
    c["name"] = cfg.name;
    c["seed"] = cfg.seed;
    ordered_json bj;
    bj["id"] = bvp::to_string(cfg.spec.id);
    if (cfg.spec.coeffs.dim() > 0) {
      if (cfg.spec.coeffs.fixed) bj["coefficients"] = {{"fixed", cfg.spec.coeffs.lo}};
      else bj["coefficients"] = {{"lo", cfg.spec.coeffs.lo}, {"hi", cfg.spec.coeffs.hi}};
    }
    if (cfg.spec.id == bvp::PdeId::helmholtz) bj["wave_number"] = cfg.spec.wave_number;
    if (cfg.spec.id == bvp::PdeId::eikonal && j.contains("bvp") && j.at("bvp").contains("shape"))
      bj["shape"] = j.at("bvp").at("shape");
    c["bvp"] = bj;
    c["model"] = {{"hidden_layers", cfg.model.hidden_layers},
                  {"hidden_width", cfg.model.hidden_width},
                  {"parametric", cfg.model.parametric}};
    ordered_json cons = ordered_json::array();
    for (const auto& cc : cfg.constraints) {
      ordered_json e;
      e["kind"] = trainer::to_string(cc.spec.kind);
      e["role"] = cc.spec.role == trainer::Role::objective ? "objective" : "constraint";
      e["tolerance"] = cc.spec.tolerance;
      e["policy"] = cc.spec.policy == trainer::Policy::fixed
                        ? "fixed"
                        : cc.spec.policy == trainer::Policy::mh ? "mh" : "uniform_per_epoch";
      e["batch"] = cc.spec.batch;
      if (cc.spec.policy == trainer::Policy::mh)
        e["proposal"] = {{"cov_diag", cc.spec.proposal.cov_diag},
                         {"steps", cc.spec.proposal.steps},
                         {"chains", cc.spec.proposal.chains}};
      if (cc.spec.kind == trainer::Kind::invariance) e["transform"] = cc.spec.transform_index;
      if (cc.spec.kind == trainer::Kind::observation) {
        e["dataset"] = cc.spec.dataset_index;
        e["per_dataset"] = cc.per_dataset;
      }
      if (cc.spec.kind == trainer::Kind::bc) {
        e["n_ic"] = cc.spec.n_ic;
        e["n_periodic"] = cc.spec.n_periodic;
        e["n_boundary"] = cc.spec.n_boundary;
      }
      if (cc.pi_grid > 0) e["pi_grid"] = cc.pi_grid;
      if (!cc.spec.pi_values.empty()) e["pi_values"] = cc.spec.pi_values;
      e["weight"] = cc.weight;
      if (!cc.spec.label.empty()) e["label"] = cc.spec.label;
      cons.push_back(e);
    }
    c["constraints"] = cons;
    c["train"] = {{"mode", cfg.train.mode == trainer::Mode::scl ? "scl" : "pinn"},
                  {"epochs", cfg.train.epochs},
                  {"primal_lr", cfg.train.primal_lr},
                  {"dual_lr", cfg.train.dual_lr},
                  {"decay_factor", cfg.train.decay_factor},
                  {"decay_interval", cfg.train.decay_interval},
                  {"inner_primal_steps", cfg.train.inner_primal_steps},
                  {"adam",
                   {{"beta1", cfg.train.adam.beta1},
                    {"beta2", cfg.train.adam.beta2},
                    {"eps", cfg.train.adam.eps}}},
                  {"log_every", cfg.train.log_every},
                  {"divergence_threshold", cfg.train.divergence_threshold}};
    if (cfg.eval.enabled)
      c["evaluation"] = {{"grid", cfg.eval.grid},
                         {"coefficient_grid", cfg.eval.coefficient_grid},
                         {"rd_dt", cfg.eval.rd_dt}};
    if (cfg.observations.enabled)
      c["observations"] = {{"count", cfg.observations.count},
                           {"noise_sigma", cfg.observations.noise_sigma},
                           {"grid", cfg.observations.grid},
                           {"seed", cfg.observations.seed}};
    c["output_dir"] = cfg.output_dir;
    cfg.canonical = std::move(c);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path_or_preset) {
  return load_config_with_overrides(path_or_preset, {});
}

ExperimentConfig load_config_with_overrides(const std::string& path_or_preset,
                                            const std::vector<std::string>& overrides) {
  json j;
  const auto& pre = presets();
  if (auto it = pre.find(path_or_preset); it != pre.end()) {
    j = it->second;
  } else {
    std::ifstream in(path_or_preset);
    require(in.good(), errc::config,
            "config: '" + path_or_preset + "' is neither a readable file nor a preset name");
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail(errc::config, "config: " + path_or_preset + " is not valid JSON: " + e.what());
    }
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    require(eq != std::string::npos, errc::config, "override '" + ov + "' is not key.path=value");
    const std::string keypath = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    json* node = &j;
    std::istringstream ks(keypath);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ks, part, '.')) parts.push_back(part);
    require(!parts.empty(), errc::config, "override '" + ov + "' has an empty key path");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
    try {
      (*node)[parts.back()] = json::parse(value);
    } catch (const json::exception&) {
      (*node)[parts.back()] = value;  // plain string
    }
  }
  std::vector<std::string> errors;
  ExperimentConfig cfg = parse_config(j, errors);
  if (!errors.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& e : errors) msg += "\n  - " + e;
    fail(errc::config, msg);
  }
  return cfg;
}

std::string config_hash(const ordered_json& canonical) {
  const std::string s = canonical.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace scl::harness

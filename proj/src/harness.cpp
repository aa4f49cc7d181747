#include "scl/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>

#include "scl/error.hpp"
#include "scl/kernels.hpp"
#include "scl/parallel.hpp"
#include "scl/rng.hpp"

namespace scl::harness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::vector<double>> coefficient_grid(const bvp::CoefficientBox& box, int n) {
  std::vector<std::vector<double>> out;
  if (box.dim() == 1) {
    for (int i = 0; i < n; ++i)
      out.push_back({box.lo[0] + (box.hi[0] - box.lo[0]) * (n == 1 ? 0.5 : double(i) / (n - 1))});
  } else if (box.dim() == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out.push_back({box.lo[0] + (box.hi[0] - box.lo[0]) * (n == 1 ? 0.5 : double(i) / (n - 1)),
                       box.lo[1] + (box.hi[1] - box.lo[1]) * (n == 1 ? 0.5 : double(j) / (n - 1))});
  } else {
    fail(errc::invalid_argument, "coefficient grids support 1 or 2 coefficient dimensions");
  }
  return out;
}

std::vector<std::vector<double>> observation_coefficients(const bvp::CoefficientBox& box, int count,
                                                          std::uint64_t seed) {
  if (box.dim() == 1) return coefficient_grid(box, count);
  std::vector<std::vector<double>> out;
  Rng rng(derive_seed(seed, {0x0b5c0effull}));
  for (int j = 0; j < count; ++j) {
    std::vector<double> pi(box.dim());
    for (int i = 0; i < box.dim(); ++i) pi[i] = rng.uniform(box.lo[i], box.hi[i]);
    out.push_back(std::move(pi));
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io, "cannot open " + path + " for writing");
  out << text;
  require(out.good(), errc::io, "short write to " + path);
}

}  // namespace

oracles::EvalGrid domain_grid(const bvp::BVPSpec& spec, const std::vector<int>& counts) {
  const auto& d = spec.domain;
  require(static_cast<int>(counts.size()) == d.point_dim(), errc::config,
          "evaluation.grid: expected " + std::to_string(d.point_dim()) + " axis counts");
  oracles::EvalGrid g;
  const char* names1 = "x";
  (void)names1;
  for (int i = 0; i < d.space_dim(); ++i) {
    oracles::EvalGrid::Axis a;
    a.name = d.space_dim() == 1 ? "x" : (i == 0 ? "x" : "y");
    a.count = counts[i];
    a.lo = d.space_lo[i];
    a.hi = d.space_hi[i];
    a.periodic = d.periodic_x && d.space_dim() == 1;
    g.axes.push_back(a);
  }
  if (d.has_time()) {
    oracles::EvalGrid::Axis a;
    a.name = "t";
    a.count = counts[d.space_dim()];
    a.lo = 0.0;
    a.hi = d.time_hi;
    g.axes.push_back(a);
  }
  g.validate();
  return g;
}

trainer::Problem build_problem(const ExperimentConfig& cfg) {
  trainer::Problem p;
  p.spec = cfg.spec;
  p.parametric = cfg.model.parametric;
  if (cfg.observations.enabled) {
    p.obs_grid = domain_grid(cfg.spec, cfg.observations.grid);
    const auto pis =
        observation_coefficients(cfg.spec.coeffs, cfg.observations.count, cfg.observations.seed);
    p.observations = oracles::synthesize_observations(
        cfg.spec, pis, p.obs_grid, cfg.observations.noise_sigma, cfg.observations.seed,
        cfg.eval.enabled ? cfg.eval.rd_dt : 1e-3);
  }
  return p;
}

std::vector<trainer::ConstraintSpec> expand_constraints(const ExperimentConfig& cfg,
                                                        std::vector<double>* pinn_weights) {
  std::vector<trainer::ConstraintSpec> out;
  if (pinn_weights) pinn_weights->clear();
  for (const auto& cc : cfg.constraints) {
    if (cc.spec.kind == trainer::Kind::observation && cc.per_dataset) {
      const int J = cfg.observations.count;
      for (int j = 0; j < J; ++j) {
        trainer::ConstraintSpec s = cc.spec;
        s.dataset_index = j;
        s.label = (cc.spec.label.empty() ? "obs" : cc.spec.label) + std::to_string(j);
        out.push_back(s);
        if (pinn_weights) pinn_weights->push_back(cc.weight / J);
      }
      continue;
    }
    trainer::ConstraintSpec s = cc.spec;
    if (cc.pi_grid > 0) s.pi_values = coefficient_grid(cfg.spec.coeffs, cc.pi_grid);
    out.push_back(s);
    if (pinn_weights) pinn_weights->push_back(cc.weight);
  }
  return out;
}

Mlp build_model(const ExperimentConfig& cfg) {
  const int in =
      cfg.spec.domain.point_dim() + (cfg.model.parametric ? cfg.spec.coeffs.dim() : 0);
  std::vector<int> widths{in};
  for (int i = 0; i < cfg.model.hidden_layers; ++i) widths.push_back(cfg.model.hidden_width);
  widths.push_back(1);
  return make_mlp(widths, derive_seed(cfg.seed, {0x0de1ull}));
}

std::vector<double> predict_field(const Mlp& model, const bvp::BVPSpec& spec,
                                  const oracles::EvalGrid& grid, std::span<const double> pi) {
  std::vector<double> field(grid.size());
  const int shards = 4;
  parallel_shards(shards, [&](int s) {
    JetWorkspace ws;
    std::vector<double> p, in;
    const std::size_t n = field.size();
    const std::size_t lo = n * s / shards, hi = n * (s + 1) / shards;
    for (std::size_t i = lo; i < hi; ++i) {
      grid.point(i, p);
      bvp::build_model_input(spec, model, p, pi, in);
      field[i] = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
    }
  });
  return field;
}

oracles::ErrorReport evaluate(const Mlp& model, const ExperimentConfig& cfg) {
  require(cfg.eval.enabled, errc::config, "evaluate: config has no evaluation block");
  const oracles::EvalGrid grid = domain_grid(cfg.spec, cfg.eval.grid);
  oracles::ErrorReport rep;
  if (cfg.spec.coeffs.fixed || cfg.eval.coefficient_grid == 0) {
    const auto ref = oracles::reference_field(cfg.spec, cfg.spec.coeffs.lo, grid, cfg.eval.rd_dt);
    const auto pred = predict_field(model, cfg.spec, grid, cfg.spec.coeffs.lo);
    rep.relative_l2 = oracles::relative_l2(pred, ref);
    rep.max_abs_error = oracles::max_abs_error(pred, ref);
    return rep;
  }
  const auto pis = coefficient_grid(cfg.spec.coeffs, cfg.eval.coefficient_grid);
  double sum = 0.0;
  for (const auto& pi : pis) {
    const auto ref = oracles::reference_field(cfg.spec, pi, grid, cfg.eval.rd_dt);
    const auto pred = predict_field(model, cfg.spec, grid, pi);
    const double e = oracles::relative_l2(pred, ref);
    rep.max_abs_error = std::max(rep.max_abs_error, oracles::max_abs_error(pred, ref));
    rep.per_coefficient.push_back({pi, e});
    sum += e;
  }
  rep.relative_l2 = sum / static_cast<double>(pis.size());
  return rep;
}

double complexity_percent(long counter_a, long epochs_a, long counter_b, long epochs_b) {
  require(epochs_a > 0 && epochs_b > 0, errc::invalid_argument,
          "complexity: reports must carry positive epoch counts");
  const double rate_b = static_cast<double>(counter_b) / static_cast<double>(epochs_b);
  require(rate_b > 0.0, errc::invalid_argument,
          "complexity: baseline evaluations per epoch is zero");
  const double rate_a = static_cast<double>(counter_a) / static_cast<double>(epochs_a);
  return 100.0 * rate_a / rate_b;
}

double complexity_report(const trainer::TrainReport& a, const trainer::TrainReport& b) {
  return complexity_percent(a.operator_evals, a.epochs, b.operator_evals, b.epochs);
}

std::string output_root(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SCL_OUTPUT_ROOT")) return env;
  return cfg.output_dir;
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_lambda_csv(const std::string& path, const trainer::TrainReport& report) {
  std::string text = "epoch,constraint,lambda,loss\n";
  for (const auto& row : report.trajectory) {
    text += std::to_string(row.epoch);
    text += ',';
    text += report.constraint_labels[row.constraint];
    text += ',';
    text += fmt17(row.lambda);
    text += ',';
    text += fmt17(row.loss);
    text += '\n';
  }
  write_text(path, text);
}

ordered_json metrics_json(const ExperimentConfig& cfg, const trainer::TrainReport& report,
                          const oracles::ErrorReport* eval_rep,
                          const std::vector<ordered_json>& per_observation) {
  ordered_json m;
  m["format_version"] = 1;
  m["name"] = cfg.name;
  m["config_hash"] = config_hash(cfg.canonical);
  m["seed"] = cfg.seed;
  m["mode"] = cfg.train.mode == trainer::Mode::scl ? "scl" : "pinn";
  m["epochs"] = report.epochs;
  m["operator_evaluations"] = report.operator_evals;
  ordered_json losses, lambdas;
  for (std::size_t c = 0; c < report.constraint_labels.size(); ++c) {
    losses[report.constraint_labels[c]] = report.final_losses.empty() ? 0.0 : report.final_losses[c];
    lambdas[report.constraint_labels[c]] =
        report.final_lambda.empty() ? 0.0 : report.final_lambda[c];
  }
  m["final_losses"] = losses;
  m["final_lambda"] = lambdas;
  if (eval_rep) {
    m["relative_l2"] = eval_rep->relative_l2;
    m["max_abs_error"] = eval_rep->max_abs_error;
    if (!eval_rep->per_coefficient.empty()) {
      ordered_json rows = ordered_json::array();
      for (const auto& [pi, e] : eval_rep->per_coefficient)
        rows.push_back({{"pi", pi}, {"relative_l2", e}});
      m["per_coefficient"] = rows;
    }
  }
  if (!per_observation.empty()) m["per_observation"] = per_observation;
  return m;
}

}  // namespace

RunResultPaths run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const trainer::Problem problem = build_problem(cfg);
  std::vector<double> weights;
  std::vector<trainer::ConstraintSpec> constraints = expand_constraints(cfg, &weights);
  trainer::TrainConfig tc = cfg.train;
  if (tc.mode == trainer::Mode::pinn) tc.pinn_weights = weights;
  const Mlp init = build_model(cfg);

  log << "run " << cfg.name << " seed=" << cfg.seed << " hash=" << config_hash(cfg.canonical)
      << " kernels=" << kernels::active().name << " threads=" << worker_count() << "\n";
  trainer::TrainReport report = trainer::train(problem, constraints, init, tc);
  log << "trained " << report.epochs << " epochs in " << report.wall_seconds << " s, "
      << report.operator_evals << " operator evaluations\n";

  RunResultPaths paths;
  const fs::path dir = fs::path(output_root(cfg)) / cfg.name;
  fs::create_directories(dir);
  paths.dir = dir.string();
  paths.config_echo = (dir / "config.json").string();
  write_text(paths.config_echo, cfg.canonical.dump(2) + "\n");
  paths.checkpoint = (dir / "checkpoint.bin").string();
  save_checkpoint(report.model, paths.checkpoint);
  paths.lambda_csv = (dir / "lambda.csv").string();
  write_lambda_csv(paths.lambda_csv, report);

  std::unique_ptr<oracles::ErrorReport> eval_rep;
  if (cfg.eval.enabled && cfg.spec.id != bvp::PdeId::burgers) {
    eval_rep = std::make_unique<oracles::ErrorReport>(evaluate(report.model, cfg));
    log << "relative_l2=" << eval_rep->relative_l2 << " max_abs=" << eval_rep->max_abs_error
        << "\n";
  }

  // per-dataset fit errors and multipliers (the harder-to-fit diagnostic)
  std::vector<ordered_json> per_observation;
  if (!problem.observations.empty()) {
    for (std::size_t j = 0; j < problem.observations.size(); ++j) {
      const auto& ob = problem.observations[j];
      const auto pred = predict_field(report.model, cfg.spec, problem.obs_grid, ob.pi);
      ordered_json row;
      row["dataset"] = j;
      row["pi"] = ob.pi;
      row["relative_l2"] = oracles::relative_l2(pred, ob.field);
      double lam = 0.0;
      for (std::size_t c = 0; c < constraints.size(); ++c)
        if (constraints[c].kind == trainer::Kind::observation &&
            constraints[c].dataset_index == static_cast<int>(j) && !report.final_lambda.empty())
          lam = report.final_lambda[c];
      row["lambda"] = lam;
      per_observation.push_back(std::move(row));
    }
  }

  paths.metrics = (dir / "metrics.json").string();
  write_text(paths.metrics, metrics_json(cfg, report, eval_rep.get(), per_observation).dump(2) + "\n");
  log << "artifacts in " << paths.dir << "\n";
  return paths;
}

RunResultPaths sample_diagnostics(const ExperimentConfig& cfg, std::ostream& log) {
  const trainer::Problem problem = build_problem(cfg);
  std::vector<trainer::ConstraintSpec> constraints = expand_constraints(cfg, nullptr);
  int target = -1;
  for (std::size_t c = 0; c < constraints.size(); ++c)
    if (constraints[c].policy == trainer::Policy::mh) {
      target = static_cast<int>(c);
      break;
    }
  require(target >= 0, errc::config, "sample-diagnostics: config has no MH-sampled constraint");

  const Mlp model = build_model(cfg);
  long counter = 0;
  trainer::EpochSamples samples;
  {
    // reuse the trainer's sampling path for exactly one epoch
    trainer::TrainConfig tc = cfg.train;
    (void)tc;
    samples = trainer::sample_epoch(problem, constraints, model, 0, cfg.seed, &counter);
  }
  const trainer::Batch& batch = samples.batches[target];

  RunResultPaths paths;
  const fs::path dir = fs::path(output_root(cfg)) / cfg.name;
  fs::create_directories(dir);
  paths.dir = dir.string();

  // one row per kept sample, coordinates plus epoch tag
  std::string text = "epoch";
  const int dim = batch.dim;
  for (int a = 0; a < dim; ++a) text += ",z" + std::to_string(a);
  text += "\n";
  for (int i = 0; i < batch.n; ++i) {
    text += "0";
    for (int a = 0; a < dim; ++a)
      text += "," + fmt17(batch.pts[static_cast<std::size_t>(i) * dim + a]);
    text += "\n";
  }
  const std::string samples_path = (dir / "samples.csv").string();
  write_text(samples_path, text);

  // fixed-bin histograms per coordinate
  sampler::Box box;
  box.lo.assign(dim, 0.0);
  box.hi.assign(dim, 1.0);
  // recover the true box from the batch extent-independent spec
  box.lo.clear();
  box.hi.clear();
  box.lo.insert(box.lo.end(), problem.spec.domain.space_lo.begin(),
                problem.spec.domain.space_lo.end());
  box.hi.insert(box.hi.end(), problem.spec.domain.space_hi.begin(),
                problem.spec.domain.space_hi.end());
  if (problem.spec.domain.has_time()) {
    box.lo.push_back(0.0);
    box.hi.push_back(problem.spec.domain.time_hi);
  }
  if (dim > static_cast<int>(box.lo.size())) {
    box.lo.insert(box.lo.end(), problem.spec.coeffs.lo.begin(), problem.spec.coeffs.lo.end());
    box.hi.insert(box.hi.end(), problem.spec.coeffs.hi.begin(), problem.spec.coeffs.hi.end());
  }
  sampler::RunResult rr;
  rr.samples = batch.pts;
  rr.losses.assign(batch.n, 0.0);
  rr.dim = dim;
  const auto diag = sampler::chain_diagnostics(rr, box, 50);
  std::string hist = "axis,bin,lo,hi,count\n";
  for (int a = 0; a < dim; ++a) {
    const auto& h = diag.per_axis[a];
    const int bins = static_cast<int>(h.counts.size());
    for (int b = 0; b < bins; ++b) {
      const double blo = h.lo + (h.hi - h.lo) * b / bins;
      const double bhi = h.lo + (h.hi - h.lo) * (b + 1) / bins;
      hist += std::to_string(a) + "," + std::to_string(b) + "," + fmt17(blo) + "," + fmt17(bhi) +
              "," + std::to_string(h.counts[b]) + "\n";
    }
  }
  write_text((dir / "sample_histograms.csv").string(), hist);
  log << "sample-diagnostics: " << batch.n << " kept samples, " << counter
      << " loss evaluations, wrote " << samples_path << "\n";
  return paths;
}

}  // namespace scl::harness

#include "scl/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>

#include "scl/error.hpp"
#include "scl/kernels.hpp"
#include "scl/parallel.hpp"
#include "scl/rng.hpp"

namespace scl::trainer {

namespace {
constexpr int kShards = 4;  // fixed shard count keeps reductions thread-count independent
constexpr double kPi = 3.141592653589793238462643383279502884;
}  // namespace

const char* to_string(Kind k) {
  switch (k) {
    case Kind::pde: return "pde";
    case Kind::bc: return "bc";
    case Kind::invariance: return "invariance";
    case Kind::structural: return "structural";
    case Kind::observation: return "observation";
  }
  return "?";
}

void ConstraintSpec::validate(const bvp::BVPSpec& spec) const {
  require(tolerance >= 0.0, errc::invalid_argument,
          "constraint " + label + ": tolerance must be >= 0");
  require(batch >= 1, errc::invalid_argument, "constraint " + label + ": batch must be >= 1");
  if (policy == Policy::mh) {
    require(kind == Kind::pde || kind == Kind::invariance, errc::invalid_argument,
            "constraint " + label + ": MH policy is for pde/invariance constraints");
    require(proposal.keep == batch, errc::invalid_argument,
            "constraint " + label + ": proposal keep (N0) must equal the batch size");
  }
  if (kind == Kind::invariance)
    require(transform_index >= 0 && transform_index < spec.n_transforms(), errc::invalid_argument,
            "constraint " + label + ": no such invariance transform");
  if (kind == Kind::observation)
    require(dataset_index >= 0, errc::invalid_argument,
            "constraint " + label + ": observation constraints need a dataset index");
  if (kind == Kind::structural)
    require(policy == Policy::fixed, errc::invalid_argument,
            "constraint " + label + ": structural constraints use fixed points");
  if (kind == Kind::bc) {
    require(policy == Policy::fixed, errc::invalid_argument,
            "constraint " + label + ": bc uses fixed equispaced points");
    if (spec.domain.space_dim() == 1)
      require(n_ic >= 1, errc::invalid_argument, "constraint " + label + ": n_ic must be >= 1");
    else
      require(n_boundary >= 1, errc::invalid_argument,
              "constraint " + label + ": n_boundary must be >= 1");
  }
  if (!pi_values.empty()) {
    require(kind == Kind::pde && policy != Policy::mh, errc::invalid_argument,
            "constraint " + label + ": coefficient discretizations apply to non-MH pde losses");
    for (const auto& pi : pi_values)
      require(spec.coeffs.contains(pi), errc::invalid_argument,
              "constraint " + label + ": discretization coefficient outside the box");
  }
}

void TrainConfig::validate() const {
  require(epochs >= 1, errc::invalid_argument, "train: epochs must be >= 1");
  require(primal_lr > 0.0, errc::invalid_argument, "train: primal_lr must be > 0");
  require(dual_lr > 0.0, errc::invalid_argument, "train: dual_lr must be > 0");
  require(decay_factor > 0.0 && decay_factor <= 1.0, errc::invalid_argument,
          "train: decay_factor must be in (0,1]");
  require(decay_interval >= 0, errc::invalid_argument, "train: decay_interval must be >= 0");
  require(inner_primal_steps >= 1, errc::invalid_argument,
          "train: inner_primal_steps must be >= 1");
  require(log_every >= 1, errc::invalid_argument, "train: log_every must be >= 1");
  require(divergence_threshold > 0.0, errc::invalid_argument,
          "train: divergence_threshold must be > 0");
}

void dual_step(DualState& dual, std::span<const double> losses,
               const std::vector<ConstraintSpec>& constraints, double eta_d) {
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    if (constraints[c].role == Role::objective) continue;
    const double next = dual.lambda[c] + eta_d * (losses[c] - constraints[c].tolerance);
    dual.lambda[c] = next > 0.0 ? next : 0.0;
  }
}

void AdamState::reset(std::size_t n) {
  m1.assign(n, 0.0);
  m2.assign(n, 0.0);
}

void primal_step(Mlp& model, AdamState& adam, std::span<const double> grad,
                 const AdamParams& params, double lr, long step_index) {
  require(grad.size() == model.params.size(), errc::dimension_mismatch,
          "primal_step: gradient not shape-congruent with the model");
  const double c1 = 1.0 / (1.0 - std::pow(params.beta1, static_cast<double>(step_index)));
  const double c2 = 1.0 / (1.0 - std::pow(params.beta2, static_cast<double>(step_index)));
  kernels::active().adam(model.params.data(), adam.m1.data(), adam.m2.data(), grad.data(),
                         static_cast<int>(grad.size()), lr, params.beta1, params.beta2, params.eps,
                         c1, c2);
}

namespace {

// Fixed collocation layouts and sampling boxes prepared once per run.
struct Runtime {
  // bc: initial-condition points (1D problems), periodic t values, Dirichlet
  // or shape boundary points; structural: box-face points
  std::vector<std::vector<double>> ic_pts;
  std::vector<double> periodic_t;
  std::vector<std::vector<double>> bnd_pts;
  int n_terms = 0;  // bc loss normalizer
  // pde/invariance sampling box (includes coefficients when sampled jointly)
  sampler::Box box;
  bool joint_pi = false;  // rows carry coefficients
  // fixed-policy pde points (sampled once at setup)
  Batch fixed_batch;
  long pde_evals_per_epoch = 0;
};

class Engine {
public:
  Engine(const Problem& problem, const std::vector<ConstraintSpec>& constraints,
         std::uint64_t seed)
      : prob_(problem), cons_(constraints) {
    prob_.spec.validate();
    int n_objectives = 0;
    for (const auto& c : cons_) {
      c.validate(prob_.spec);
      if (c.role == Role::objective) ++n_objectives;
      if (c.kind == Kind::observation)
        require(c.dataset_index < static_cast<int>(prob_.observations.size()),
                errc::invalid_argument, "constraint " + c.label + ": dataset index out of range");
    }
    require(n_objectives <= 1, errc::invalid_argument,
            "constraints: at most one spec may carry role=objective");
    rt_.resize(cons_.size());
    for (std::size_t c = 0; c < cons_.size(); ++c) prepare(c, seed);
  }

  int n_constraints() const { return static_cast<int>(cons_.size()); }

  long pde_evals_per_epoch() const {
    long total = 0;
    for (const auto& r : rt_) total += r.pde_evals_per_epoch;
    return total;
  }

  // Draws one epoch of collocation batches; MH targets the loss under the
  // current model. Chain evaluations are added to *counter.
  EpochSamples sample(const Mlp& model, long epoch, std::uint64_t seed, long* counter) const {
    EpochSamples out;
    out.batches.resize(cons_.size());
    for (std::size_t c = 0; c < cons_.size(); ++c) {
      const ConstraintSpec& spec = cons_[c];
      const Runtime& r = rt_[c];
      Batch& batch = out.batches[c];
      const std::uint64_t cseed = derive_seed(seed, {0xd1ceull, static_cast<std::uint64_t>(epoch),
                                                     static_cast<std::uint64_t>(c)});
      switch (spec.kind) {
        case Kind::pde:
        case Kind::invariance: {
          if (spec.policy == Policy::mh) {
            auto loss = [&](std::span<const double> z) { return point_loss(spec, model, z); };
            const auto run = sampler::mh_run(loss, r.box, spec.proposal, cseed);
            batch.pts = run.samples;
            batch.n = static_cast<int>(spec.proposal.keep);
            batch.dim = run.dim;
            if (spec.kind == Kind::pde && counter) *counter += run.loss_evals;
          } else if (spec.policy == Policy::uniform_per_epoch) {
            uniform_batch(spec, r, cseed, batch);
            if (spec.kind == Kind::pde && counter) *counter += batch.n;
          } else {
            batch = r.fixed_batch;
            if (spec.kind == Kind::pde && counter) *counter += batch.n;
          }
          break;
        }
        case Kind::bc: {
          if (prob_.parametric) {
            // fresh coefficient draw per fixed boundary term
            Rng rng(cseed);
            const int cd = prob_.spec.coeffs.dim();
            batch.n = r.n_terms;
            batch.dim = cd;
            batch.pts.resize(static_cast<std::size_t>(batch.n) * cd);
            for (int i = 0; i < batch.n; ++i)
              for (int j = 0; j < cd; ++j)
                batch.pts[static_cast<std::size_t>(i) * cd + j] =
                    rng.uniform(prob_.spec.coeffs.lo[j], prob_.spec.coeffs.hi[j]);
          }
          break;
        }
        case Kind::structural: break;  // fixed points only
        case Kind::observation: {
          const auto& ob = prob_.observations[spec.dataset_index];
          const auto& grid = prob_.obs_grid;
          const int pd = prob_.spec.domain.point_dim();
          Rng rng(cseed);
          batch.n = spec.batch;
          batch.dim = pd + 1;  // point coordinates + reference value
          batch.pts.resize(static_cast<std::size_t>(batch.n) * batch.dim);
          std::vector<double> p;
          const std::size_t gsize = grid.size();
          for (int i = 0; i < batch.n; ++i) {
            const auto flat = static_cast<std::size_t>(rng.uniform() * static_cast<double>(gsize));
            const std::size_t idx = flat >= gsize ? gsize - 1 : flat;
            grid.point(idx, p);
            double* row = batch.pts.data() + static_cast<std::size_t>(i) * batch.dim;
            for (int j = 0; j < pd; ++j) row[j] = p[j];
            row[pd] = ob.field[idx];
          }
          break;
        }
      }
    }
    return out;
  }

  // Mean losses; when grad != nullptr also accumulates sum_c w_c * dloss_c.
  std::vector<double> losses(const Mlp& model, const EpochSamples& samples,
                             std::span<const double> weights, std::vector<double>* grad) const {
    require(samples.batches.size() == cons_.size(), errc::dimension_mismatch,
            "losses: sample list does not match the constraint list");
    std::vector<double> out(cons_.size(), 0.0);
    std::vector<std::vector<double>> shard_grads;
    if (grad) {
      shard_grads.assign(kShards, std::vector<double>());
      for (auto& g : shard_grads) g.assign(model.params.size(), 0.0);
    }
    for (std::size_t c = 0; c < cons_.size(); ++c) {
      const double w = weights.empty() ? 0.0 : weights[c];
      out[c] = constraint_loss(model, c, samples.batches[c], grad ? w : 0.0,
                               grad ? &shard_grads : nullptr);
    }
    if (grad) {
      grad->assign(model.params.size(), 0.0);
      const auto& k = kernels::active();
      for (int s = 0; s < kShards; ++s)
        k.acc(grad->data(), shard_grads[s].data(), static_cast<int>(grad->size()));
    }
    return out;
  }

private:
  void prepare(std::size_t c, std::uint64_t seed) {
    const ConstraintSpec& spec = cons_[c];
    Runtime& r = rt_[c];
    const auto& dom = prob_.spec.domain;
    const int pd = dom.point_dim();
    const int cd = prob_.spec.coeffs.dim();
    switch (spec.kind) {
      case Kind::pde:
      case Kind::invariance: {
        r.joint_pi = prob_.parametric && spec.pi_values.empty() && cd > 0;
        r.box.lo.assign(dom.space_lo.begin(), dom.space_lo.end());
        r.box.hi.assign(dom.space_hi.begin(), dom.space_hi.end());
        if (dom.has_time()) {
          r.box.lo.push_back(0.0);
          r.box.hi.push_back(dom.time_hi);
        }
        if (r.joint_pi) {
          r.box.lo.insert(r.box.lo.end(), prob_.spec.coeffs.lo.begin(),
                          prob_.spec.coeffs.lo.end());
          r.box.hi.insert(r.box.hi.end(), prob_.spec.coeffs.hi.begin(),
                          prob_.spec.coeffs.hi.end());
        }
        if (spec.kind == Kind::pde) {
          if (spec.policy == Policy::mh)
            r.pde_evals_per_epoch = spec.proposal.steps + spec.proposal.chains;
          else
            r.pde_evals_per_epoch =
                static_cast<long>(spec.batch) *
                static_cast<long>(std::max<std::size_t>(1, spec.pi_values.size()));
        }
        if (spec.policy == Policy::fixed) {
          uniform_batch(spec, r, derive_seed(seed, {0xf17edull, static_cast<std::uint64_t>(c)}),
                        r.fixed_batch);
        }
        break;
      }
      case Kind::bc: {
        if (dom.space_dim() == 1) {
          // 1D space-time entries: equispaced IC points plus periodic t pairs
          for (int i = 0; i < spec.n_ic; ++i) {
            const double x =
                dom.space_lo[0] + (dom.space_hi[0] - dom.space_lo[0]) *
                                      (spec.n_ic == 1 ? 0.5 : static_cast<double>(i) / (spec.n_ic - 1));
            r.ic_pts.push_back({x, 0.0});
          }
          if (dom.periodic_x)
            for (int i = 0; i < spec.n_periodic; ++i)
              r.periodic_t.push_back(dom.time_hi * (i + 1) / spec.n_periodic);
          r.n_terms = static_cast<int>(r.ic_pts.size() + r.periodic_t.size());
        } else if (prob_.spec.id == bvp::PdeId::eikonal) {
          const auto pts = bvp::shape_boundary_points(prob_.spec.shape, spec.n_boundary);
          for (const auto& p : pts) r.bnd_pts.push_back({p[0], p[1]});
          r.n_terms = static_cast<int>(r.bnd_pts.size());
        } else {
          // equispaced points around the rectangle perimeter
          const int n = spec.n_boundary;
          const double lx = dom.space_hi[0] - dom.space_lo[0];
          const double ly = dom.space_hi[1] - dom.space_lo[1];
          const double per = 2.0 * (lx + ly);
          for (int i = 0; i < n; ++i) {
            double s = per * i / n;
            double x, y;
            if (s < lx) {
              x = dom.space_lo[0] + s;
              y = dom.space_lo[1];
            } else if (s < lx + ly) {
              x = dom.space_hi[0];
              y = dom.space_lo[1] + (s - lx);
            } else if (s < 2 * lx + ly) {
              x = dom.space_hi[0] - (s - lx - ly);
              y = dom.space_hi[1];
            } else {
              x = dom.space_lo[0];
              y = dom.space_hi[1] - (s - 2 * lx - ly);
            }
            r.bnd_pts.push_back({x, y});
          }
          r.n_terms = n;
        }
        break;
      }
      case Kind::structural: {
        // equispaced points on the faces of the domain box (eikonal sign term)
        require(dom.space_dim() == 2, errc::invalid_argument,
                "structural constraint: expects a 2D stationary domain");
        const int n = spec.batch;
        const double lx = dom.space_hi[0] - dom.space_lo[0];
        const double ly = dom.space_hi[1] - dom.space_lo[1];
        const double per = 2.0 * (lx + ly);
        for (int i = 0; i < n; ++i) {
          double s = per * i / n;
          double x, y;
          if (s < lx) {
            x = dom.space_lo[0] + s;
            y = dom.space_lo[1];
          } else if (s < lx + ly) {
            x = dom.space_hi[0];
            y = dom.space_lo[1] + (s - lx);
          } else if (s < 2 * lx + ly) {
            x = dom.space_hi[0] - (s - lx - ly);
            y = dom.space_hi[1];
          } else {
            x = dom.space_lo[0];
            y = dom.space_hi[1] - (s - 2 * lx - ly);
          }
          r.bnd_pts.push_back({x, y});
        }
        r.n_terms = n;
        break;
      }
      case Kind::observation: {
        require(!prob_.observations.empty(), errc::invalid_argument,
                "observation constraint without observations in the problem");
        prob_.obs_grid.validate();
        break;
      }
    }
  }

  void uniform_batch(const ConstraintSpec& spec, const Runtime& r, std::uint64_t seed,
                     Batch& batch) const {
    Rng rng(seed);
    const int pd = prob_.spec.domain.point_dim();
    const int cd = prob_.spec.coeffs.dim();
    const bool discretized = !spec.pi_values.empty();
    const int dim = discretized ? pd + cd : static_cast<int>(r.box.dim());
    const long groups = discretized ? static_cast<long>(spec.pi_values.size()) : 1;
    batch.n = static_cast<int>(groups * spec.batch);
    batch.dim = dim;
    batch.pts.resize(static_cast<std::size_t>(batch.n) * dim);
    std::size_t row = 0;
    for (long g = 0; g < groups; ++g) {
      for (int i = 0; i < spec.batch; ++i, ++row) {
        double* p = batch.pts.data() + row * dim;
        for (int j = 0; j < r.box.dim(); ++j) p[j] = rng.uniform(r.box.lo[j], r.box.hi[j]);
        if (discretized)
          for (int j = 0; j < cd; ++j) p[pd + j] = spec.pi_values[g][j];
      }
    }
  }

  // Loss of one collocation row for MH targets.
  double point_loss(const ConstraintSpec& spec, const Mlp& model,
                    std::span<const double> z) const {
    thread_local JetWorkspace ws;
    const int pd = prob_.spec.domain.point_dim();
    if (spec.kind == Kind::pde) {
      const JetView jet =
          jet_forward_tape(model, z, JetOptions{prob_.spec.jet_order(), pd}, ws);
      const std::span<const double> pi =
          z.size() > static_cast<std::size_t>(pd)
              ? z.subspan(pd)
              : std::span<const double>(prob_.spec.coeffs.lo);
      const double r = bvp::pde_residual(prob_.spec, jet, pi, z.subspan(0, pd));
      return r * r;
    }
    // invariance
    const std::span<const double> pi = z.size() > static_cast<std::size_t>(pd)
                                           ? z.subspan(pd)
                                           : std::span<const double>(prob_.spec.coeffs.lo);
    const double r = bvp::invariance_residual(model, prob_.spec, pi, z.subspan(0, pd),
                                              spec.transform_index);
    return r * r;
  }

  double constraint_loss(const Mlp& model, std::size_t c, const Batch& batch, double w,
                         std::vector<std::vector<double>>* shard_grads) const {
    const ConstraintSpec& spec = cons_[c];
    const Runtime& r = rt_[c];
    switch (spec.kind) {
      case Kind::pde: return pde_loss(model, spec, batch, w, shard_grads);
      case Kind::invariance: return invariance_loss(model, spec, batch, w, shard_grads);
      case Kind::bc: return bc_loss(model, spec, r, batch, w, shard_grads);
      case Kind::structural: return structural_loss(model, spec, r, w, shard_grads);
      case Kind::observation: return observation_loss(model, spec, batch, w, shard_grads);
    }
    return 0.0;
  }

  template <class Fn>
  double sharded(int n, Fn&& body) const {
    // body(shard, lo, hi) -> partial sum; combined in shard order
    std::array<double, kShards> partial{};
    parallel_shards(kShards, [&](int s) {
      const int lo = static_cast<int>(static_cast<long>(n) * s / kShards);
      const int hi = static_cast<int>(static_cast<long>(n) * (s + 1) / kShards);
      partial[s] = body(s, lo, hi);
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
  }

  double pde_loss(const Mlp& model, const ConstraintSpec& spec, const Batch& batch, double w,
                  std::vector<std::vector<double>>* shard_grads) const {
    require(batch.n >= 1, errc::invalid_argument,
            "constraint " + spec.label + ": empty batch");
    const int pd = prob_.spec.domain.point_dim();
    const double norm = 1.0 / spec.batch;  // per-coefficient batch normalizer
    const double sum = sharded(batch.n, [&](int s, int lo, int hi) {
      JetWorkspace ws;
      std::vector<double> adj;
      double partial = 0.0;
      for (int i = lo; i < hi; ++i) {
        const std::span<const double> row(batch.pts.data() + static_cast<std::size_t>(i) * batch.dim,
                                          static_cast<std::size_t>(batch.dim));
        const JetView jet =
            jet_forward_tape(model, row, JetOptions{prob_.spec.jet_order(), pd}, ws);
        const std::span<const double> pi = batch.dim > pd
                                               ? row.subspan(pd)
                                               : std::span<const double>(prob_.spec.coeffs.lo);
        const double res = bvp::pde_residual(prob_.spec, jet, pi, row.subspan(0, pd));
        partial += res * res;
        if (w != 0.0 && shard_grads) {
          adj.assign(ws.pc(), 0.0);
          bvp::pde_residual_adjoint(prob_.spec, jet, pi, row.subspan(0, pd),
                                    w * 2.0 * res * norm, adj.data());
          jet_backward(model, ws, adj.data(), (*shard_grads)[s].data());
        }
      }
      return partial;
    });
    return sum * norm;
  }

  double invariance_loss(const Mlp& model, const ConstraintSpec& spec, const Batch& batch,
                         double w, std::vector<std::vector<double>>* shard_grads) const {
    require(batch.n >= 1, errc::invalid_argument, "constraint " + spec.label + ": empty batch");
    const int pd = prob_.spec.domain.point_dim();
    const double norm = 1.0 / batch.n;
    const double sum = sharded(batch.n, [&](int s, int lo, int hi) {
      JetWorkspace ws;
      std::vector<double> in, adj(4, 0.0);
      double partial = 0.0;
      for (int i = lo; i < hi; ++i) {
        const std::span<const double> row(batch.pts.data() + static_cast<std::size_t>(i) * batch.dim,
                                          static_cast<std::size_t>(batch.dim));
        const std::span<const double> pi = batch.dim > pd
                                               ? row.subspan(pd)
                                               : std::span<const double>(prob_.spec.coeffs.lo);
        const auto point = row.subspan(0, pd);
        const auto mapped = bvp::transform_point(prob_.spec, spec.transform_index, pi, point);
        bvp::build_model_input(prob_.spec, model, point, pi, in);
        const double u0 = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
        double res;
        if (w != 0.0 && shard_grads) {
          adj.assign(ws.pc(), 0.0);
          // first pass backward needs the residual; evaluate the mapped point
          // with a second workspace to keep this tape intact
          thread_local JetWorkspace ws2;
          bvp::build_model_input(prob_.spec, model, mapped, pi, in);
          const double u1 = jet_forward_tape(model, in, JetOptions{0, 0}, ws2).value;
          res = u0 - u1;
          adj[0] = w * 2.0 * res * norm;
          jet_backward(model, ws, adj.data(), (*shard_grads)[s].data());
          adj[0] = -w * 2.0 * res * norm;
          jet_backward(model, ws2, adj.data(), (*shard_grads)[s].data());
        } else {
          bvp::build_model_input(prob_.spec, model, mapped, pi, in);
          const double u1 = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
          res = u0 - u1;
        }
        partial += res * res;
      }
      return partial;
    });
    return sum * norm;
  }

  double bc_loss(const Mlp& model, const ConstraintSpec& spec, const Runtime& r,
                 const Batch& pi_batch, double w,
                 std::vector<std::vector<double>>* shard_grads) const {
    require(r.n_terms >= 1, errc::invalid_argument, "constraint " + spec.label + ": empty batch");
    const double norm = 1.0 / r.n_terms;
    const int n_ic = static_cast<int>(r.ic_pts.size());
    const int n_bnd = static_cast<int>(r.bnd_pts.size());
    const int n_per = static_cast<int>(r.periodic_t.size());
    const auto& dom = prob_.spec.domain;
    const double sum = sharded(r.n_terms, [&](int s, int lo, int hi) {
      JetWorkspace ws, ws2;
      std::vector<double> in, adj(4, 0.0), point;
      double partial = 0.0;
      for (int i = lo; i < hi; ++i) {
        std::span<const double> pi(prob_.spec.coeffs.lo);
        if (pi_batch.n > 0)
          pi = std::span<const double>(
              pi_batch.pts.data() + static_cast<std::size_t>(i) * pi_batch.dim,
              static_cast<std::size_t>(pi_batch.dim));
        if (i < n_ic + n_bnd) {
          const auto& p = i < n_ic ? r.ic_pts[i] : r.bnd_pts[i - n_ic];
          bvp::build_model_input(prob_.spec, model, p, pi, in);
          const double u = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
          const double res = u - bvp::boundary_value(prob_.spec, p, pi);
          partial += res * res;
          if (w != 0.0 && shard_grads) {
            adj.assign(ws.pc(), 0.0);
            adj[0] = w * 2.0 * res * norm;
            jet_backward(model, ws, adj.data(), (*shard_grads)[s].data());
          }
        } else {
          const double t = r.periodic_t[i - n_ic - n_bnd];
          point = {dom.space_lo[0], t};
          bvp::build_model_input(prob_.spec, model, point, pi, in);
          const double u_lo = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
          point = {dom.space_hi[0], t};
          bvp::build_model_input(prob_.spec, model, point, pi, in);
          const double u_hi = jet_forward_tape(model, in, JetOptions{0, 0}, ws2).value;
          const double res = u_lo - u_hi;
          partial += res * res;
          if (w != 0.0 && shard_grads) {
            adj.assign(ws.pc(), 0.0);
            adj[0] = w * 2.0 * res * norm;
            jet_backward(model, ws, adj.data(), (*shard_grads)[s].data());
            adj[0] = -w * 2.0 * res * norm;
            jet_backward(model, ws2, adj.data(), (*shard_grads)[s].data());
          }
        }
      }
      return partial;
    });
    return sum * norm;
  }

  double structural_loss(const Mlp& model, const ConstraintSpec& spec, const Runtime& r, double w,
                         std::vector<std::vector<double>>* shard_grads) const {
    require(r.n_terms >= 1, errc::invalid_argument, "constraint " + spec.label + ": empty batch");
    const double norm = 1.0 / r.n_terms;
    const double sum = sharded(r.n_terms, [&](int s, int lo, int hi) {
      JetWorkspace ws;
      std::vector<double> in, adj(4, 0.0);
      double partial = 0.0;
      for (int i = lo; i < hi; ++i) {
        bvp::build_model_input(prob_.spec, model, r.bnd_pts[i], prob_.spec.coeffs.lo, in);
        const double u = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
        partial += bvp::structural_hinge(u);
        if (w != 0.0 && shard_grads && u < 0.0) {
          adj.assign(ws.pc(), 0.0);
          adj[0] = -w * norm;
          jet_backward(model, ws, adj.data(), (*shard_grads)[s].data());
        }
      }
      return partial;
    });
    return sum * norm;
  }

  double observation_loss(const Mlp& model, const ConstraintSpec& spec, const Batch& batch,
                          double w, std::vector<std::vector<double>>* shard_grads) const {
    require(batch.n >= 1, errc::invalid_argument, "constraint " + spec.label + ": empty batch");
    const auto& ob = prob_.observations[spec.dataset_index];
    const int pd = prob_.spec.domain.point_dim();
    const double norm = 1.0 / batch.n;
    const double sum = sharded(batch.n, [&](int s, int lo, int hi) {
      JetWorkspace ws;
      std::vector<double> in, adj(4, 0.0);
      double partial = 0.0;
      for (int i = lo; i < hi; ++i) {
        const double* row = batch.pts.data() + static_cast<std::size_t>(i) * batch.dim;
        const std::span<const double> point(row, static_cast<std::size_t>(pd));
        bvp::build_model_input(prob_.spec, model, point, ob.pi, in);
        const double u = jet_forward_tape(model, in, JetOptions{0, 0}, ws).value;
        const double res = u - row[pd];
        partial += res * res;
        if (w != 0.0 && shard_grads) {
          adj.assign(ws.pc(), 0.0);
          adj[0] = w * 2.0 * res * norm;
          jet_backward(model, ws, adj.data(), (*shard_grads)[s].data());
        }
      }
      return partial;
    });
    return sum * norm;
  }

  Problem prob_;
  std::vector<ConstraintSpec> cons_;
  std::vector<Runtime> rt_;
};

double decayed(double base, double factor, long interval, long epoch) {
  if (interval <= 0 || factor == 1.0) return base;
  return base * std::pow(factor, static_cast<double>(epoch / interval));
}

}  // namespace

std::vector<double> empirical_losses(const Mlp& model, const Problem& problem,
                                     const std::vector<ConstraintSpec>& constraints,
                                     const EpochSamples& samples) {
  Engine engine(problem, constraints, 0);
  return engine.losses(model, samples, {}, nullptr);
}

EpochSamples sample_epoch(const Problem& problem, const std::vector<ConstraintSpec>& constraints,
                          const Mlp& model, long epoch, std::uint64_t seed, long* counter) {
  Engine engine(problem, constraints, seed);
  return engine.sample(model, epoch, seed, counter);
}

TrainReport train(const Problem& problem, const std::vector<ConstraintSpec>& constraints,
                  const Mlp& init, const TrainConfig& config) {
  if (config.epochs > 0) config.validate();
  init.validate();
  if (config.mode == Mode::pinn)
    require(config.pinn_weights.size() == constraints.size(), errc::invalid_argument,
            "train: pinn mode needs one weight per constraint");

  const auto t0 = std::chrono::steady_clock::now();
  Engine engine(problem, constraints, config.seed);
  TrainReport report;
  report.model = init;
  report.epochs = config.epochs;
  for (std::size_t c = 0; c < constraints.size(); ++c)
    report.constraint_labels.push_back(
        constraints[c].label.empty()
            ? std::string(to_string(constraints[c].kind)) + std::to_string(c)
            : constraints[c].label);

  const int nc = engine.n_constraints();
  DualState dual;
  dual.lambda.assign(nc, 0.0);
  AdamState adam;
  adam.reset(report.model.params.size());
  std::vector<double> grad(report.model.params.size(), 0.0);
  std::vector<double> weights(nc, 0.0);
  std::vector<double> losses(nc, 0.0);
  long adam_t = 0;

  for (long epoch = 0; epoch < config.epochs; ++epoch) {
    const EpochSamples samples =
        engine.sample(report.model, epoch, config.seed, &report.operator_evals);
    for (int c = 0; c < nc; ++c) {
      if (config.mode == Mode::pinn)
        weights[c] = config.pinn_weights[c];
      else
        weights[c] = constraints[c].role == Role::objective ? 1.0 : dual.lambda[c];
    }
    const double lr = decayed(config.primal_lr, config.decay_factor, config.decay_interval, epoch);
    for (int inner = 0; inner < config.inner_primal_steps; ++inner) {
      losses = engine.losses(report.model, samples, weights, &grad);
      for (int c = 0; c < nc; ++c) {
        require(std::isfinite(losses[c]), errc::runtime_abort,
                "train: non-finite loss for constraint " + report.constraint_labels[c] +
                    " at epoch " + std::to_string(epoch));
        require(losses[c] <= config.divergence_threshold, errc::runtime_abort,
                "train: loss " + std::to_string(losses[c]) + " for constraint " +
                    report.constraint_labels[c] + " exceeded the divergence threshold at epoch " +
                    std::to_string(epoch));
      }
      for (double g : grad)
        require(std::isfinite(g), errc::runtime_abort,
                "train: non-finite gradient at epoch " + std::to_string(epoch));
      primal_step(report.model, adam, grad, config.adam, lr, ++adam_t);
    }
    if (config.mode == Mode::scl) {
      const double eta_d =
          decayed(config.dual_lr, config.decay_factor, config.decay_interval, epoch);
      dual_step(dual, losses, constraints, eta_d);
    }
    if (epoch % config.log_every == 0 || epoch == config.epochs - 1) {
      for (int c = 0; c < nc; ++c)
        report.trajectory.push_back({epoch, c, dual.lambda[c], losses[c]});
    }
  }
  report.final_losses = losses;
  report.final_lambda = dual.lambda;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

TrainReport pinn_baseline(const Problem& problem, const std::vector<ConstraintSpec>& constraints,
                          const Mlp& init, TrainConfig config) {
  config.mode = Mode::pinn;
  return train(problem, constraints, init, config);
}

}  // namespace scl::trainer

#include "scl/jets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "scl/error.hpp"
#include "scl/kernels.hpp"
#include "scl/parallel.hpp"

namespace scl {

namespace {
constexpr int kGradShards = 4;  // fixed: results do not depend on thread count
}

void JetWorkspace::configure(const Mlp& model, int order, int axes) {
  const int m = axes < 0 ? model.input_width() : axes;
  const int channels = 1 + (order >= 1 ? m : 0) + (order == 2 ? m : 0);
  const int pc = kernels::padded_channels(channels);
  if (widths_ == model.widths && pc_ == pc && m_ == m && order_ == order) return;
  widths_ = model.widths;
  pc_ = pc;
  m_ = m;
  order_ = order;
  act_off_.clear();
  pre_off_.clear();
  std::size_t a_total = 0, z_total = 0, maxw = 0;
  const int L = model.n_layers();
  for (int l = 0; l < L; ++l) {
    act_off_.push_back(a_total);
    a_total += static_cast<std::size_t>(model.layers[l].n_in) * pc;
    maxw = std::max(maxw, static_cast<std::size_t>(model.layers[l].n_in));
    if (l > 0) {
      // pre-activation of hidden layer l (input to tanh producing a^l)
      pre_off_.push_back(z_total);
      z_total += static_cast<std::size_t>(model.layers[l].n_in) * pc;
    }
  }
  acts_.assign(a_total, 0.0);
  pre_.assign(z_total, 0.0);
  outv_.assign(static_cast<std::size_t>(pc) * model.output_width(), 0.0);
  bar_a_.assign(maxw * pc, 0.0);
  bar_z_.assign(maxw * pc, 0.0);
  out_ = outv_.data();
}

JetView jet_forward_tape(const Mlp& model, std::span<const double> input, JetOptions opts,
                         JetWorkspace& ws) {
  const int n_in = model.input_width();
  if (static_cast<int>(input.size()) != n_in)
    fail(errc::dimension_mismatch, "jet_forward: input length " + std::to_string(input.size()) +
                                       " != model input width " + std::to_string(n_in));
  require(opts.order >= 0 && opts.order <= 2, errc::invalid_argument,
          "jet_forward: order must be in {0,1,2}");
  for (double x : input)
    require(std::isfinite(x), errc::non_finite, "jet_forward: non-finite input coordinate");
  ws.configure(model, opts.order, opts.axes);
  const int pc = ws.pc_, m = ws.m_;
  require(pc <= 64, errc::invalid_argument, "jet_forward: too many seeded axes (pc > 64)");
  const bool second = opts.order == 2;
  const auto& k = kernels::active();

  // seed input jets
  double* a0 = ws.acts_.data();
  std::memset(a0, 0, static_cast<std::size_t>(n_in) * pc * sizeof(double));
  for (int i = 0; i < n_in; ++i) {
    a0[static_cast<std::size_t>(i) * pc] = input[i];
    if (opts.order >= 1 && i < m) a0[static_cast<std::size_t>(i) * pc + 1 + i] = 1.0;
  }

  const int L = model.n_layers();
  for (int l = 0; l < L; ++l) {
    const auto& ref = model.layers[l];
    const double* a_in = ws.acts_.data() + ws.act_off_[l];
    if (l == L - 1) {
      k.affine(model.w(l), model.b(l), a_in, ws.outv_.data(), ref.n_out, ref.n_in, pc);
    } else {
      double* z = ws.pre_.data() + ws.pre_off_[l];
      k.affine(model.w(l), model.b(l), a_in, z, ref.n_out, ref.n_in, pc);
      double* a_out = ws.acts_.data() + ws.act_off_[l + 1];
      k.tanh_jet(z, a_out, ref.n_out, pc, opts.order >= 1 ? m : 0, second);
    }
  }

  JetView v;
  v.value = ws.outv_[0];
  v.grad = opts.order >= 1 ? ws.outv_.data() + 1 : nullptr;
  v.diag2 = second ? ws.outv_.data() + 1 + m : nullptr;
  v.m = m;
  return v;
}

void jet_backward(const Mlp& model, JetWorkspace& tape, const double* adj, double* grad_flat) {
  const int pc = tape.pc_, m = tape.m_;
  const bool second = tape.order_ == 2;
  const auto& k = kernels::active();
  const int L = model.n_layers();
  // bar_z_ doubles as the adjoint of each affine output, bar_a_ of its input.
  double* zb = tape.bar_z_.data();
  double* ab = tape.bar_a_.data();
  std::memcpy(zb, adj, static_cast<std::size_t>(pc) * sizeof(double));
  for (int l = L - 1; l >= 0; --l) {
    const auto& ref = model.layers[l];
    const double* a_in = tape.acts_.data() + tape.act_off_[l];
    double* wbar = grad_flat + model.layers[l].w_off;
    double* bbar = grad_flat + model.layers[l].b_off;
    if (l == 0) {
      k.affine_bwd(model.w(l), zb, a_in, nullptr, wbar, bbar, ref.n_out, ref.n_in, pc);
    } else {
      std::memset(ab, 0, static_cast<std::size_t>(ref.n_in) * pc * sizeof(double));
      k.affine_bwd(model.w(l), zb, a_in, ab, wbar, bbar, ref.n_out, ref.n_in, pc);
      const double* z = tape.pre_.data() + tape.pre_off_[l - 1];
      k.tanh_jet_bwd(ab, z, a_in, zb, ref.n_in, pc, tape.order_ >= 1 ? m : 0, second);
    }
  }
}

Jet jet_forward(const Mlp& model, std::span<const double> input, int order) {
  model.validate();
  thread_local JetWorkspace ws;
  const JetView v = jet_forward_tape(model, input, JetOptions{order, -1}, ws);
  Jet jet;
  jet.value = v.value;
  if (order >= 1) jet.grad.assign(v.grad, v.grad + v.m);
  if (order == 2) jet.diag2.assign(v.diag2, v.diag2 + v.m);
  require(std::isfinite(jet.value), errc::non_finite, "jet_forward: non-finite value");
  for (double g : jet.grad)
    require(std::isfinite(g), errc::non_finite, "jet_forward: non-finite gradient entry");
  for (double s : jet.diag2)
    require(std::isfinite(s), errc::non_finite, "jet_forward: non-finite diag2 entry");
  return jet;
}

BatchLoss param_gradient(const Mlp& model, std::span<const LossTerm> terms, int axes) {
  BatchLoss out;
  out.grad.flat.assign(model.params.size(), 0.0);
  if (terms.empty()) return out;

  const int n = static_cast<int>(terms.size());
  const int shards = std::min(kGradShards, n);
  std::vector<std::vector<double>> shard_grad(shards);
  std::vector<double> shard_loss(shards, 0.0);
  std::vector<std::string> shard_err(shards);

  parallel_shards(shards, [&](int s) {
    JetWorkspace ws;
    std::vector<double> grad(model.params.size(), 0.0);
    std::vector<double> adj;
    double loss = 0.0;
    const int lo = static_cast<int>(static_cast<long>(n) * s / shards);
    const int hi = static_cast<int>(static_cast<long>(n) * (s + 1) / shards);
    for (int i = lo; i < hi; ++i) {
      const LossTerm& t = terms[i];
      const JetView v = jet_forward_tape(model, t.input, JetOptions{t.order, axes}, ws);
      adj.assign(ws.pc(), 0.0);
      const double val = t.eval(v, adj.data());
      if (!std::isfinite(val)) {
        shard_err[s] = "param_gradient: non-finite loss at batch point " + std::to_string(i);
        return;
      }
      loss += val;
      jet_backward(model, ws, adj.data(), grad.data());
    }
    shard_grad[s] = std::move(grad);
    shard_loss[s] = loss;
  });

  for (int s = 0; s < shards; ++s)
    require(shard_err[s].empty(), errc::non_finite, shard_err[s]);
  const auto& k = kernels::active();
  for (int s = 0; s < shards; ++s) {
    out.value += shard_loss[s];
    k.acc(out.grad.flat.data(), shard_grad[s].data(), static_cast<int>(model.params.size()));
  }
  return out;
}

}  // namespace scl

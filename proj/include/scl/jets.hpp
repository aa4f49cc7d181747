#pragma once

#include <functional>
#include <span>
#include <vector>

#include "scl/mlp.hpp"

namespace scl {

// Value, exact first derivatives, and diagonal second derivatives of the
// network output with respect to (a leading subset of) its inputs, at one
// point. Mixed partials are out of scope: every catalog residual needs only
// d2u/dz_i^2.
struct Jet {
  double value = 0.0;
  std::vector<double> grad;   // order >= 1
  std::vector<double> diag2;  // order == 2
};

// Non-owning view into a propagated jet (m seeded axes). diag2 is null below
// order 2.
struct JetView {
  double value = 0.0;
  const double* grad = nullptr;
  const double* diag2 = nullptr;
  int m = 0;
};

struct JetOptions {
  int order = 2;  // 0: value, 1: +grad, 2: +diag2
  int axes = -1;  // number of leading input axes to seed; -1 = all
};

// Reusable propagation tape: padded-channel activations for every layer plus
// backward scratch. One instance per thread.
class JetWorkspace {
public:
  void configure(const Mlp& model, int order, int axes);

  const double* out() const { return out_; }  // [pc] channels of the output jet
  int pc() const { return pc_; }
  int m() const { return m_; }
  int order() const { return order_; }

private:
  friend JetView jet_forward_tape(const Mlp&, std::span<const double>, JetOptions, JetWorkspace&);
  friend void jet_backward(const Mlp&, JetWorkspace&, const double*, double*);

  std::vector<int> widths_;
  int pc_ = 0, m_ = 0, order_ = 0;
  std::vector<double> acts_;   // a^0..a^{L-1}, padded channels
  std::vector<double> pre_;    // z^1..z^{L-1} (pre-activations of hidden layers)
  std::vector<double> outv_;   // output row [1][pc]
  std::vector<double> bar_a_;  // backward scratch
  std::vector<double> bar_z_;
  std::vector<std::size_t> act_off_;
  std::vector<std::size_t> pre_off_;
  const double* out_ = nullptr;
};

// Forward propagation leaving the tape in `ws` for a subsequent backward
// pass. Validates input dimension/finiteness only; the caller owns parameter
// sanity (the public jet_forward below checks both).
JetView jet_forward_tape(const Mlp& model, std::span<const double> input, JetOptions opts,
                         JetWorkspace& ws);

// Accumulates d(sum_c adj[c] * out[c]) / d(params) into grad_flat, which must
// be params-sized. adj holds pc padded channels (value, grad_j at 1+j, diag2_j
// at 1+m+j, padding zero).
void jet_backward(const Mlp& model, JetWorkspace& tape, const double* adj, double* grad_flat);

// Spec-level operation: full input seeding, owning result, strict validation.
Jet jet_forward(const Mlp& model, std::span<const double> input, int order);

// One additive term of a batch loss: the model is evaluated at `input` with
// the given jet order, `eval` returns the term value and fills `adj` (the
// d(term)/d(jet) weights, semantic channel layout: value, grad..., diag2...).
struct LossTerm {
  std::vector<double> input;
  int order = 2;
  std::function<double(const JetView&, double* adj)> eval;
};

struct ParamGradient {
  std::vector<double> flat;  // congruent with Mlp::params
};

struct BatchLoss {
  double value = 0.0;
  ParamGradient grad;
};

// Loss value and parameter gradient of sum_i eval_i(jet(input_i)).
// Deterministic for a fixed term order: terms are split into a fixed number
// of shards whose partial results merge in shard order, independent of the
// thread count.
BatchLoss param_gradient(const Mlp& model, std::span<const LossTerm> terms, int axes = -1);

}  // namespace scl

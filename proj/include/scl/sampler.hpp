#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace scl::sampler {

// Axis-aligned sampling box (domain, or domain x coefficient box).
struct Box {
  std::vector<double> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(std::span<const double> z) const;
  void validate() const;
};

// Random-walk proposal: diagonal covariance (variances), total chain steps N,
// kept tail N0. The step/keep budget may be split across independent replica
// chains; each replica then runs steps/chains steps and keeps keep/chains.
struct ProposalSpec {
  std::vector<double> cov_diag;
  long steps = 5000;
  long keep = 1000;
  int chains = 1;
  std::uint64_t seed = 0;  // stream tag mixed with the caller seed
  void validate(int dim) const;
};

// One chain's bookkeeping.
struct ChainState {
  std::vector<double> z;
  double loss = 0.0;
  long accepted = 0;
  long proposed = 0;
};

// min(1, loss_prop/loss_cur) * 1(in_domain), with x/0 := 1 so chains cannot
// freeze in zero-loss regions.
double acceptance_prob(double loss_prop, double loss_cur, bool in_domain);

using LossFn = std::function<double(std::span<const double>)>;

struct RunResult {
  std::vector<double> samples;  // keep rows x dim, replicas concatenated in order
  std::vector<double> losses;   // loss value at each kept sample
  int dim = 0;
  long accepted = 0;
  long proposed = 0;
  long loss_evals = 0;  // chain evaluations including initial states and burn-in

  double acceptance_rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed); }
};

// Runs the chain(s) from uniform starts and returns the final kept states
// (including repeats from rejections). Fully deterministic given the seed;
// replicas may execute in parallel. The loss must be nonnegative and finite
// on (a neighborhood of) the box; a NaN/inf evaluation is a structured error
// naming the offending point.
RunResult mh_run(const LossFn& loss, const Box& box, const ProposalSpec& proposal,
                 std::uint64_t seed);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<long> counts;
};

struct Diagnostics {
  double acceptance_rate = 0.0;
  std::vector<Histogram> per_axis;
};

Diagnostics chain_diagnostics(const RunResult& run, const Box& box, int bins = 50);

}  // namespace scl::sampler

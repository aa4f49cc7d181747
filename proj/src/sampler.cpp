#include "scl/sampler.hpp"

#include <cmath>
#include <string>

#include "scl/error.hpp"
#include "scl/parallel.hpp"
#include "scl/rng.hpp"

namespace scl::sampler {

bool Box::contains(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (z[i] < lo[i] || z[i] > hi[i]) return false;
  return true;
}

void Box::validate() const {
  require(!lo.empty() && lo.size() == hi.size(), errc::invalid_argument,
          "sampler box: bounds must be non-empty and congruent");
  for (std::size_t i = 0; i < lo.size(); ++i)
    require(lo[i] < hi[i], errc::invalid_argument, "sampler box: requires lo < hi");
}

void ProposalSpec::validate(int dim) const {
  require(static_cast<int>(cov_diag.size()) == dim, errc::dimension_mismatch,
          "proposal: covariance diagonal size must match the box dimension");
  for (double v : cov_diag)
    require(v > 0.0 && std::isfinite(v), errc::invalid_argument,
            "proposal: covariance entries must be positive");
  require(steps >= 1, errc::invalid_argument, "proposal: steps must be >= 1");
  require(keep >= 1 && keep <= steps, errc::invalid_argument,
          "proposal: requires 0 < keep <= steps");
  require(chains >= 1, errc::invalid_argument, "proposal: chains must be >= 1");
  require(steps % chains == 0 && keep % chains == 0, errc::invalid_argument,
          "proposal: steps and keep must be divisible by the chain count");
}

double acceptance_prob(double loss_prop, double loss_cur, bool in_domain) {
  require(loss_prop >= 0.0 && std::isfinite(loss_prop), errc::invalid_argument,
          "acceptance_prob: proposal loss must be finite and nonnegative");
  require(loss_cur >= 0.0 && std::isfinite(loss_cur), errc::invalid_argument,
          "acceptance_prob: current loss must be finite and nonnegative");
  if (!in_domain) return 0.0;
  if (loss_cur == 0.0) return 1.0;  // degenerate-denominator rule
  const double ratio = loss_prop / loss_cur;
  return ratio >= 1.0 ? 1.0 : ratio;
}

RunResult mh_run(const LossFn& loss, const Box& box, const ProposalSpec& proposal,
                 std::uint64_t seed) {
  box.validate();
  const int dim = box.dim();
  proposal.validate(dim);

  const int chains = proposal.chains;
  const long steps_per = proposal.steps / chains;
  const long keep_per = proposal.keep / chains;
  require(keep_per <= steps_per, errc::invalid_argument, "proposal: keep/chains > steps/chains");

  std::vector<double> sigma(dim);
  for (int i = 0; i < dim; ++i) sigma[i] = std::sqrt(proposal.cov_diag[i]);

  RunResult out;
  out.dim = dim;
  out.samples.assign(static_cast<std::size_t>(proposal.keep) * dim, 0.0);
  out.losses.assign(static_cast<std::size_t>(proposal.keep), 0.0);
  std::vector<ChainState> states(chains);
  std::vector<std::string> errs(chains);

  parallel_shards(chains, [&](int c) {
    Rng rng(derive_seed(seed, {0x3c4a1ull, proposal.seed, static_cast<std::uint64_t>(c)}));
    ChainState st;
    st.z.resize(dim);
    for (int i = 0; i < dim; ++i) st.z[i] = rng.uniform(box.lo[i], box.hi[i]);
    auto eval = [&](std::span<const double> z) {
      const double l = loss(z);
      if (!(std::isfinite(l) && l >= 0.0)) {
        std::string msg = "mh_run: loss not finite/nonnegative at point (";
        for (int i = 0; i < dim; ++i) msg += (i ? ", " : "") + std::to_string(z[i]);
        msg += ")";
        throw Error(errc::non_finite, msg);
      }
      return l;
    };
    try {
      st.loss = eval(st.z);
      std::vector<double> prop(dim);
      double* rows = out.samples.data() + static_cast<std::size_t>(c) * keep_per * dim;
      double* record = out.losses.data() + static_cast<std::size_t>(c) * keep_per;
      for (long n = 0; n < steps_per; ++n) {
        for (int i = 0; i < dim; ++i) prop[i] = st.z[i] + sigma[i] * rng.normal();
        // the loss is evaluated at every proposal (one differential-operator
        // application per step, the App.-style accounting unit)
        const double lp = eval(prop);
        const double p = acceptance_prob(lp, st.loss, box.contains(prop));
        ++st.proposed;
        if (p >= 1.0 || rng.uniform() < p) {
          st.z = prop;
          st.loss = lp;
          ++st.accepted;
        }
        const long tail = n - (steps_per - keep_per);
        if (tail >= 0) {
          for (int i = 0; i < dim; ++i) rows[tail * dim + i] = st.z[i];
          record[tail] = st.loss;
        }
      }
      states[c] = std::move(st);
    } catch (const Error& e) {
      errs[c] = e.what();
    }
  });

  for (const auto& e : errs)
    if (!e.empty()) throw Error(errc::non_finite, e);
  for (const auto& st : states) {
    out.accepted += st.accepted;
    out.proposed += st.proposed;
  }
  out.loss_evals = chains + proposal.steps;
  return out;
}

Diagnostics chain_diagnostics(const RunResult& run, const Box& box, int bins) {
  require(!run.samples.empty(), errc::invalid_argument, "chain_diagnostics: empty sample list");
  require(bins >= 1, errc::invalid_argument, "chain_diagnostics: bins must be >= 1");
  Diagnostics d;
  d.acceptance_rate = run.acceptance_rate();
  const long n = static_cast<long>(run.losses.size());
  for (int ax = 0; ax < run.dim; ++ax) {
    Histogram h;
    h.lo = box.lo[ax];
    h.hi = box.hi[ax];
    h.counts.assign(bins, 0);
    for (long i = 0; i < n; ++i) {
      const double v = run.samples[static_cast<std::size_t>(i) * run.dim + ax];
      int b = static_cast<int>((v - h.lo) / (h.hi - h.lo) * bins);
      if (b < 0) b = 0;
      if (b >= bins) b = bins - 1;
      ++h.counts[b];
    }
    d.per_axis.push_back(std::move(h));
  }
  return d;
}

}  // namespace scl::sampler

#include <doctest.h>

#include <cmath>
#include <vector>

#include "scl/error.hpp"
#include "scl/jets.hpp"
#include "scl/mlp.hpp"
#include "scl/rng.hpp"

using namespace scl;

namespace {

// Finite-difference oracle: central differences of the value forward pass.
double fd_value(const Mlp& m, std::vector<double> x) {
  return jet_forward(m, x, 0).value;
}

void fd_check(const Mlp& m, const std::vector<double>& x, double step, double tol) {
  const Jet jet = jet_forward(m, x, 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fp = fd_value(m, xp), fm = fd_value(m, xm), f0 = jet.value;
    const double g_fd = (fp - fm) / (2 * step);
    const double s_fd = (fp - 2 * f0 + fm) / (step * step);
    const double gscale = std::max(1.0, std::fabs(g_fd));
    const double sscale = std::max(1.0, std::fabs(s_fd));
    CHECK(std::fabs(jet.grad[i] - g_fd) / gscale < tol);
    CHECK(std::fabs(jet.diag2[i] - s_fd) / sscale < tol * 10);
  }
}

Mlp random_mlp(Rng& rng, const std::vector<int>& widths) {
  Mlp m = make_mlp(widths, rng.next_u64());
  return m;
}

}  // namespace

TEST_CASE("jet of a single tanh neuron at the odd point") {
  // u = tanh(w*x) with w=1: value 0, grad sigma'(0)=1, diag2 sigma''(0)=0
  Mlp m = make_mlp_zeros({1, 1, 1});
  m.w(0)[0] = 1.0;
  m.w(1)[0] = 1.0;
  const Jet j = jet_forward(m, std::vector<double>{0.0}, 2);
  CHECK(j.value == 0.0);
  CHECK(j.grad[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(j.diag2[0] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("jet of a purely linear network") {
  // u = 3x + 2t, no hidden layers
  Mlp m = make_mlp_zeros({2, 1});
  m.w(0)[0] = 3.0;
  m.w(0)[1] = 2.0;
  const Jet j = jet_forward(m, std::vector<double>{1.0, 1.0}, 2);
  CHECK(j.value == 5.0);
  CHECK(j.grad[0] == 3.0);
  CHECK(j.grad[1] == 2.0);
  CHECK(j.diag2[0] == 0.0);
  CHECK(j.diag2[1] == 0.0);
}

TEST_CASE("zero hidden weights give zero derivatives") {
  Mlp m = make_mlp_zeros({3, 8, 8, 1});
  for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i] = 0.0;
  m.b(0)[2] = 0.7;  // bias only; still independent of the input
  const Jet j = jet_forward(m, std::vector<double>{0.3, -0.2, 0.9}, 2);
  for (double g : j.grad) CHECK(g == 0.0);
  for (double s : j.diag2) CHECK(s == 0.0);
}

TEST_CASE("jet derivatives agree with central finite differences") {
  Rng rng(101);
  const Mlp m = random_mlp(rng, {2, 8, 8, 1});
  fd_check(m, {0.4, -0.3}, 1e-4, 1e-5);
}

TEST_CASE("property: random mlps match finite differences") {
  Rng rng(2024);
  for (int rep = 0; rep < 25; ++rep) {
    const int depth = 1 + static_cast<int>(rng.uniform() * 4);
    const int in = 1 + static_cast<int>(rng.uniform() * 3);
    std::vector<int> widths{in};
    for (int l = 0; l < depth; ++l) widths.push_back(2 + static_cast<int>(rng.uniform() * 15));
    widths.push_back(1);
    const Mlp m = random_mlp(rng, widths);
    std::vector<double> x(in);
    for (auto& v : x) v = rng.uniform(-1.5, 1.5);
    fd_check(m, x, 1e-4, 1e-5);
  }
}

TEST_CASE("order monotonicity is exact") {
  Rng rng(5);
  const Mlp m = random_mlp(rng, {2, 10, 10, 1});
  const std::vector<double> x{0.7, -1.1};
  const Jet j0 = jet_forward(m, x, 0);
  const Jet j1 = jet_forward(m, x, 1);
  const Jet j2 = jet_forward(m, x, 2);
  CHECK(j0.value == j2.value);
  CHECK(j1.value == j2.value);
  CHECK(j1.grad == j2.grad);
}

TEST_CASE("jet_forward validates inputs") {
  Rng rng(6);
  const Mlp m = random_mlp(rng, {2, 4, 1});
  CHECK_THROWS_AS((void)jet_forward(m, std::vector<double>{1.0}, 2), Error);
  CHECK_THROWS_AS((void)jet_forward(m, std::vector<double>{1.0, std::nan("")}, 2), Error);
  Mlp bad = m;
  bad.params[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS((void)jet_forward(bad, std::vector<double>{1.0, 1.0}, 2), Error);
}

namespace {

LossTerm square_term(std::vector<double> x, double scale = 1.0) {
  LossTerm t;
  t.input = std::move(x);
  t.order = 0;
  t.eval = [scale](const JetView& v, double* adj) {
    adj[0] = scale * 2.0 * v.value;
    return scale * v.value * v.value;
  };
  return t;
}

}  // namespace

TEST_CASE("param_gradient of u^2 for a linear net") {
  // u = w1*x1 + w2*x2, loss = u(x0)^2 at x0=(1,0): d/dw1 = 2*w1
  Mlp m = make_mlp_zeros({2, 1});
  m.w(0)[0] = 1.5;
  m.w(0)[1] = -0.4;
  const std::vector<LossTerm> terms{square_term({1.0, 0.0})};
  const BatchLoss out = param_gradient(m, terms);
  CHECK(out.value == doctest::Approx(2.25));
  CHECK(out.grad.flat[0] == doctest::Approx(2.0 * 1.5));
  CHECK(out.grad.flat[1] == doctest::Approx(0.0));
}

TEST_CASE("param_gradient of an empty batch is zero") {
  Rng rng(8);
  const Mlp m = random_mlp(rng, {2, 6, 1});
  const BatchLoss out = param_gradient(m, std::vector<LossTerm>{});
  CHECK(out.value == 0.0);
  for (double g : out.grad.flat) CHECK(g == 0.0);
}

TEST_CASE("param_gradient matches finite differences over parameters") {
  Rng rng(9);
  Mlp m = random_mlp(rng, {2, 8, 8, 1});
  std::vector<LossTerm> terms;
  for (int i = 0; i < 16; ++i) {
    // mean squared convection residual: r = g_t + beta*g_x
    LossTerm t;
    t.input = {rng.uniform(0.0, 6.28), rng.uniform(0.0, 1.0)};
    t.order = 1;
    t.eval = [](const JetView& v, double* adj) {
      const double beta = 3.0;
      const double r = v.grad[1] + beta * v.grad[0];
      const double w = 2.0 * r / 16.0;
      adj[1 + 1] = w;
      adj[1 + 0] = beta * w;
      return r * r / 16.0;
    };
    terms.push_back(std::move(t));
  }
  const BatchLoss out = param_gradient(m, terms);
  const double step = 1e-5;
  double max_rel = 0.0;
  for (std::size_t p = 0; p < m.params.size(); p += 7) {  // sample every 7th parameter
    const double saved = m.params[p];
    m.params[p] = saved + step;
    double lp = 0.0;
    for (const auto& t : terms) {
      thread_local JetWorkspace ws;
      const JetView v = jet_forward_tape(m, t.input, JetOptions{t.order, -1}, ws);
      std::vector<double> adj(ws.pc(), 0.0);
      lp += t.eval(v, adj.data());
    }
    m.params[p] = saved - step;
    double lm = 0.0;
    for (const auto& t : terms) {
      thread_local JetWorkspace ws;
      const JetView v = jet_forward_tape(m, t.input, JetOptions{t.order, -1}, ws);
      std::vector<double> adj(ws.pc(), 0.0);
      lm += t.eval(v, adj.data());
    }
    m.params[p] = saved;
    const double fd = (lp - lm) / (2 * step);
    const double scale = std::max(1.0, std::fabs(fd));
    max_rel = std::max(max_rel, std::fabs(out.grad.flat[p] - fd) / scale);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("param_gradient additivity") {
  Rng rng(11);
  const Mlp m = random_mlp(rng, {2, 6, 6, 1});
  std::vector<LossTerm> a, b, ab;
  for (int i = 0; i < 5; ++i) {
    auto t = square_term({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    a.push_back(t);
    ab.push_back(t);
  }
  for (int i = 0; i < 9; ++i) {
    auto t = square_term({rng.uniform(-1, 1), rng.uniform(-1, 1)}, 0.5);
    b.push_back(t);
    ab.push_back(t);
  }
  const auto ga = param_gradient(m, a);
  const auto gb = param_gradient(m, b);
  const auto gab = param_gradient(m, ab);
  for (std::size_t p = 0; p < m.params.size(); ++p) {
    const double sum = ga.grad.flat[p] + gb.grad.flat[p];
    const double scale = std::max({1.0, std::fabs(sum), std::fabs(gab.grad.flat[p])});
    CHECK(std::fabs(gab.grad.flat[p] - sum) / scale < 1e-12);
  }
}

TEST_CASE("param_gradient reports non-finite loss with the batch point") {
  Mlp m = make_mlp_zeros({2, 1});
  m.w(0)[0] = 1.0;
  LossTerm bad;
  bad.input = {1.0, 1.0};
  bad.order = 0;
  bad.eval = [](const JetView&, double*) { return std::nan(""); };
  CHECK_THROWS_WITH_AS((void)param_gradient(m, std::vector<LossTerm>{bad}),
                       doctest::Contains("batch point 0"), Error);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(12);
  const Mlp m = random_mlp(rng, {3, 10, 10, 1});
  const std::string path = "test_ckpt.bin";
  save_checkpoint(m, path);
  const Mlp back = load_checkpoint(path);
  CHECK(back.widths == m.widths);
  CHECK(back.params == m.params);
  std::remove(path.c_str());
}

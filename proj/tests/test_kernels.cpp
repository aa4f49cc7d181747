#include <doctest.h>

#include <cmath>
#include <vector>

#include "scl/kernels.hpp"
#include "scl/rng.hpp"

using namespace scl;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("kernel tanh matches std::tanh closely and scalar/avx2 bitwise") {
  const auto& scalar = *kernels::by_name("scalar");
  const kernels::Ops* avx2 = kernels::by_name("avx2");
  Rng rng(42);
  double max_rel = 0.0;
  for (int i = 0; i < 200000; ++i) {
    double x;
    switch (i % 4) {
      case 0: x = rng.uniform(-1.0, 1.0); break;
      case 1: x = rng.uniform(-25.0, 25.0); break;
      case 2: x = rng.normal() * 1e-6; break;
      default: x = rng.normal() * 5.0; break;
    }
    const double mine = scalar.tanh1(x);
    const double ref = std::tanh(x);
    const double denom = std::max(1e-300, std::fabs(ref));
    max_rel = std::max(max_rel, std::fabs(mine - ref) / denom);
    if (avx2) CHECK(avx2->tanh1(x) == mine);
  }
  CHECK(max_rel < 1e-13);
  // exact edge behavior
  CHECK(scalar.tanh1(0.0) == 0.0);
  CHECK(scalar.tanh1(50.0) == 1.0);
  CHECK(scalar.tanh1(-50.0) == -1.0);
}

TEST_CASE("scalar and avx2 kernels produce identical bits") {
  const kernels::Ops* avx2 = kernels::by_name("avx2");
  if (!avx2) return;  // non-x86 host
  const auto& scalar = *kernels::by_name("scalar");
  Rng rng(7);

  for (const int pc : {4, 8, 12}) {
    for (const int n_out : {1, 3, 50}) {
      const int n_in = 37;
      const auto W = random_vec(rng, static_cast<std::size_t>(n_out) * n_in);
      const auto b = random_vec(rng, n_out);
      const auto a = random_vec(rng, static_cast<std::size_t>(n_in) * pc);
      std::vector<double> z1(static_cast<std::size_t>(n_out) * pc), z2 = z1;
      scalar.affine(W.data(), b.data(), a.data(), z1.data(), n_out, n_in, pc);
      avx2->affine(W.data(), b.data(), a.data(), z2.data(), n_out, n_in, pc);
      CHECK(z1 == z2);

      // backward
      const auto zbar = random_vec(rng, static_cast<std::size_t>(n_out) * pc);
      std::vector<double> abar1(static_cast<std::size_t>(n_in) * pc, 0.0), abar2 = abar1;
      std::vector<double> wbar1(W.size(), 0.0), wbar2 = wbar1;
      std::vector<double> bbar1(n_out, 0.0), bbar2 = bbar1;
      scalar.affine_bwd(W.data(), zbar.data(), a.data(), abar1.data(), wbar1.data(), bbar1.data(),
                        n_out, n_in, pc);
      avx2->affine_bwd(W.data(), zbar.data(), a.data(), abar2.data(), wbar2.data(), bbar2.data(),
                       n_out, n_in, pc);
      CHECK(abar1 == abar2);
      CHECK(wbar1 == wbar2);
      CHECK(bbar1 == bbar2);
    }
  }

  for (const bool second : {false, true}) {
    const int m = 2, pc = second ? 8 : 4, n = 53;
    const auto z = random_vec(rng, static_cast<std::size_t>(n) * pc, 2.0);
    std::vector<double> a1(z.size()), a2(z.size());
    scalar.tanh_jet(z.data(), a1.data(), n, pc, m, second);
    avx2->tanh_jet(z.data(), a2.data(), n, pc, m, second);
    CHECK(a1 == a2);

    const auto abar = random_vec(rng, z.size());
    std::vector<double> zb1(z.size()), zb2(z.size());
    scalar.tanh_jet_bwd(abar.data(), z.data(), a1.data(), zb1.data(), n, pc, m, second);
    avx2->tanh_jet_bwd(abar.data(), z.data(), a2.data(), zb2.data(), n, pc, m, second);
    CHECK(zb1 == zb2);
  }

  {
    const int n = 1001;
    auto w1 = random_vec(rng, n), w2 = w1;
    auto m1a = random_vec(rng, n, 0.01), m1b = m1a;
    std::vector<double> m2a(n, 0.0), m2b(n, 0.0);
    for (int i = 0; i < n; ++i) m2a[i] = m2b[i] = std::fabs(rng.normal()) * 0.01;
    const auto g = random_vec(rng, n);
    scalar.adam(w1.data(), m1a.data(), m2a.data(), g.data(), n, 1e-3, 0.9, 0.999, 1e-8, 1.1, 1.2);
    avx2->adam(w2.data(), m1b.data(), m2b.data(), g.data(), n, 1e-3, 0.9, 0.999, 1e-8, 1.1, 1.2);
    CHECK(w1 == w2);
    CHECK(m1a == m1b);
    CHECK(m2a == m2b);

    auto d1 = random_vec(rng, n), d2 = d1;
    const auto s = random_vec(rng, n);
    scalar.acc(d1.data(), s.data(), n);
    avx2->acc(d2.data(), s.data(), n);
    CHECK(d1 == d2);
  }
}

TEST_CASE("active kernel dispatch") {
  const auto& ops = kernels::active();
  CHECK((std::string(ops.name) == "scalar" || std::string(ops.name) == "avx2"));
  if (kernels::avx2_available()) CHECK(std::string(kernels::active().name) == "avx2");
  CHECK(kernels::by_name("nope") == nullptr);
}

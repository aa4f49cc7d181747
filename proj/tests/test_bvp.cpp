#include <doctest.h>

#include <cmath>
#include <vector>

#include "scl/bvp.hpp"
#include "scl/error.hpp"
#include "scl/jets.hpp"
#include "scl/oracles.hpp"
#include "scl/rng.hpp"

using namespace scl;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Hand-built jets of analytic fields, for feeding residuals directly.
Jet jet_of_convection_exact(double x, double t, double beta) {
  Jet j;
  j.value = std::sin(x - beta * t);
  j.grad = {std::cos(x - beta * t), -beta * std::cos(x - beta * t)};
  j.diag2 = {-j.value, -beta * beta * j.value};
  return j;
}

JetView view(const Jet& j) {
  JetView v;
  v.value = j.value;
  v.grad = j.grad.empty() ? nullptr : j.grad.data();
  v.diag2 = j.diag2.empty() ? nullptr : j.diag2.data();
  v.m = static_cast<int>(j.grad.size());
  return v;
}

}  // namespace

TEST_CASE("convection residual vanishes on the exact solution") {
  const auto spec = bvp::make_convection(30.0, 30.0, true);
  const std::vector<double> pi{30.0};
  Rng rng(1);
  for (int i = 0; i < 64; ++i) {
    const double x = rng.uniform(0, 2 * kPi), t = rng.uniform(0, 1);
    const Jet j = jet_of_convection_exact(x, t, 30.0);
    const double r = bvp::pde_residual(spec, view(j), pi, std::vector<double>{x, t});
    CHECK(std::fabs(r) < 1e-10);
  }
}

TEST_CASE("convection residual of a unit time slope") {
  const auto spec = bvp::make_convection(7.0, 7.0, true);
  Jet j;
  j.value = 0.0;
  j.grad = {0.0, 1.0};  // u_x = 0, u_t = 1
  j.diag2 = {0.0, 0.0};
  const double r = bvp::pde_residual(spec, view(j), std::vector<double>{7.0},
                                     std::vector<double>{1.0, 0.5});
  CHECK(r == 1.0);
}

TEST_CASE("helmholtz residual identity with constructed forcing") {
  const auto spec = bvp::make_helmholtz(1.0, {1.0, 1.0}, {1.0, 1.0}, true);
  Rng rng(3);
  for (int i = 0; i < 256; ++i) {
    const double x = rng.uniform(0, 1), y = rng.uniform(0, 1);
    const double a1 = 1.0, a2 = 1.0;
    Jet j;
    j.value = oracles::helmholtz_exact(x, y, a1, a2);
    j.grad = {kPi * a1 * std::cos(kPi * a1 * x) * std::sin(kPi * a2 * y),
              kPi * a2 * std::sin(kPi * a1 * x) * std::cos(kPi * a2 * y)};
    j.diag2 = {-kPi * kPi * a1 * a1 * j.value, -kPi * kPi * a2 * a2 * j.value};
    const double r = bvp::pde_residual(spec, view(j), std::vector<double>{a1, a2},
                                       std::vector<double>{x, y});
    CHECK(std::fabs(r) < 1e-10);
  }
}

TEST_CASE("reaction-diffusion residual on a space-time monomial") {
  // u(x,t) = t + x^2/2: u_t = 1, u_xx = 1 -> r = 1 - nu - rho*u*(1-u)
  const auto spec = bvp::make_reaction_diffusion({2.0, 2.0}, {3.0, 3.0}, true);
  const double x = 0.4, t = 0.7;
  Jet j;
  j.value = t + 0.5 * x * x;
  j.grad = {x, 1.0};
  j.diag2 = {1.0, 0.0};
  const double r = bvp::pde_residual(spec, view(j), std::vector<double>{2.0, 3.0},
                                     std::vector<double>{x, t});
  CHECK(r == doctest::Approx(1.0 - 2.0 - 3.0 * j.value * (1.0 - j.value)).epsilon(1e-14));
}

TEST_CASE("forcing is zero except helmholtz") {
  Rng rng(5);
  const auto conv = bvp::make_convection(10.0, 10.0, true);
  const auto rd = bvp::make_reaction_diffusion({1, 1}, {2, 2}, true);
  const auto brg = bvp::make_burgers(0.1, 0.1, true);
  for (int i = 0; i < 32; ++i) {
    const std::vector<double> pt{rng.uniform(0, 1), rng.uniform(0, 1)};
    CHECK(bvp::forcing(conv, pt, std::vector<double>{10.0}) == 0.0);
    CHECK(bvp::forcing(rd, pt, std::vector<double>{1.0, 2.0}) == 0.0);
    CHECK(bvp::forcing(brg, pt, std::vector<double>{0.1}) == 0.0);
  }
  const auto helm = bvp::make_helmholtz(1.0, {1, 1}, {1, 1}, true);
  const std::vector<double> pi{1.0, 1.0};
  CHECK(bvp::forcing(helm, std::vector<double>{0.5, 0.5}, pi) ==
        doctest::Approx(1.0 - 2.0 * kPi * kPi).epsilon(1e-14));
  CHECK(bvp::forcing(helm, std::vector<double>{0.0, 0.37}, pi) == doctest::Approx(0.0));
}

TEST_CASE("boundary residuals") {
  const auto conv = bvp::make_convection(30.0, 30.0, true);
  const std::vector<double> pi{30.0};
  // IC at x = pi/2: h = sin(pi/2) = 1
  CHECK(bvp::boundary_residual(conv, 1.0, std::vector<double>{kPi / 2, 0.0}, pi) ==
        doctest::Approx(0.0));
  // interior point is rejected
  CHECK_THROWS_AS(
      (void)bvp::boundary_residual(conv, 1.0, std::vector<double>{kPi / 2, 0.5}, pi), Error);

  const auto rd = bvp::make_reaction_diffusion({3, 3}, {3, 3}, true);
  const std::vector<double> pi2{3.0, 3.0};
  // IC at x = pi: h = exp(0) = 1, u = 0 -> residual -1
  CHECK(bvp::boundary_residual(rd, 0.0, std::vector<double>{kPi, 0.0}, pi2) ==
        doctest::Approx(-1.0));
}

TEST_CASE("structural hinge") {
  CHECK(bvp::structural_hinge(0.3) == 0.0);
  CHECK(bvp::structural_hinge(-0.2) == doctest::Approx(0.2));
  CHECK(bvp::structural_hinge(0.0) == 0.0);
  // nonnegative, convex (midpoint), zero iff u >= 0
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    CHECK(bvp::structural_hinge(a) >= 0.0);
    CHECK(bvp::structural_hinge(0.5 * (a + b)) <=
          0.5 * (bvp::structural_hinge(a) + bvp::structural_hinge(b)) + 1e-15);
    if (a >= 0.0) CHECK(bvp::structural_hinge(a) == 0.0);
    if (a < 0.0) CHECK(bvp::structural_hinge(a) > 0.0);
  }
}

TEST_CASE("invariance transform wraps time by the solution period") {
  const auto spec = bvp::make_convection(30.0, 30.0, true);
  const std::vector<double> pi{30.0};
  const double period = 2.0 * kPi / 30.0;
  const auto p1 = bvp::transform_point(spec, 0, pi, std::vector<double>{1.0, 0.4});
  CHECK(p1[0] == 1.0);
  CHECK(p1[1] == doctest::Approx(0.4 + period));
  const auto p2 = bvp::transform_point(spec, 0, pi, std::vector<double>{1.0, 0.95});
  CHECK(p2[1] <= 1.0);
  CHECK(p2[1] > 0.0);
  // wrap preserves the exact solution's value
  CHECK(oracles::convection_exact(1.0, p2[1], 30.0) ==
        doctest::Approx(oracles::convection_exact(1.0, 0.95 + period, 30.0)).epsilon(1e-12));
  // no transform for slow convection where the period exceeds T
  CHECK_THROWS_AS(
      (void)bvp::transform_point(spec, 0, std::vector<double>{1.0}, std::vector<double>{1.0, 0.5}),
      Error);
}

TEST_CASE("invariance residual equals a two-pass subtraction exactly") {
  const auto spec = bvp::make_convection(30.0, 30.0, true);
  const std::vector<double> pi{30.0};
  const Mlp m = make_mlp({2, 12, 12, 1}, 99);
  Rng rng(8);
  for (int i = 0; i < 16; ++i) {
    const std::vector<double> pt{rng.uniform(0, 2 * kPi), rng.uniform(0, 1)};
    const double r = bvp::invariance_residual(m, spec, pi, pt, 0);
    const auto mapped = bvp::transform_point(spec, 0, pi, pt);
    const double direct = jet_forward(m, pt, 0).value - jet_forward(m, mapped, 0).value;
    CHECK(r == direct);
  }
  // a constant model has zero invariance residual
  Mlp constant = make_mlp_zeros({2, 4, 1});
  constant.b(1)[0] = 3.25;
  CHECK(bvp::invariance_residual(constant, spec, pi, std::vector<double>{1.0, 0.5}, 0) == 0.0);
}

TEST_CASE("shape signed distances") {
  bvp::Shape circle;
  circle.kind = bvp::Shape::Kind::circle;
  circle.center = {0.0, 0.0};
  circle.radius = 0.5;
  CHECK(bvp::shape_signed_distance(circle, 0.0, 0.0) == doctest::Approx(-0.5));
  CHECK(bvp::shape_signed_distance(circle, 1.0, 0.0) == doctest::Approx(0.5));

  bvp::Shape square;
  square.kind = bvp::Shape::Kind::square;
  square.center = {0.0, 0.0};
  square.half_extent = 0.5;
  CHECK(bvp::shape_signed_distance(square, 0.0, 0.0) == doctest::Approx(-0.5));
  CHECK(bvp::shape_signed_distance(square, 1.0, 1.0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(bvp::shape_signed_distance(square, 0.75, 0.0) == doctest::Approx(0.25));
}

TEST_CASE("pde residual rejects coefficient mismatches") {
  const auto spec = bvp::make_convection(30.0, 30.0, true);
  Jet j;
  j.value = 0.0;
  j.grad = {0.0, 0.0};
  CHECK_THROWS_AS((void)bvp::pde_residual(spec, view(j), std::vector<double>{1.0, 2.0},
                                          std::vector<double>{0.0, 0.0}),
                  Error);
}

TEST_CASE("residual adjoints match finite differences through the jet") {
  // check d(residual)/d(jet entries) for each catalog entry via bumping
  Rng rng(12);
  const std::vector<bvp::BVPSpec> specs{
      bvp::make_convection(5.0, 5.0, true),
      bvp::make_reaction_diffusion({2.0, 2.0}, {1.5, 1.5}, true),
      bvp::make_eikonal(bvp::Shape{}),
      bvp::make_helmholtz(1.0, {1.0, 1.0}, {1.5, 1.5}, true),
      bvp::make_burgers(0.3, 0.3, true),
  };
  for (const auto& spec : specs) {
    const std::vector<double> pi(spec.coeffs.lo);
    const std::vector<double> pt{0.3, 0.6};
    Jet j;
    j.value = rng.uniform(-1, 1);
    j.grad = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    j.diag2 = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const int m = 2;
    std::vector<double> adj(1 + 2 * m, 0.0);
    bvp::pde_residual_adjoint(spec, view(j), pi, pt, 1.0, adj.data());
    const double h = 1e-7;
    auto bump = [&](int channel) {
      Jet jp = j, jm = j;
      if (channel == 0) {
        jp.value += h;
        jm.value -= h;
      } else if (channel <= m) {
        jp.grad[channel - 1] += h;
        jm.grad[channel - 1] -= h;
      } else {
        jp.diag2[channel - 1 - m] += h;
        jm.diag2[channel - 1 - m] -= h;
      }
      return (bvp::pde_residual(spec, view(jp), pi, pt) -
              bvp::pde_residual(spec, view(jm), pi, pt)) /
             (2 * h);
    };
    for (int c = 0; c < 1 + 2 * m; ++c)
      CHECK(adj[c] == doctest::Approx(bump(c)).epsilon(1e-5));
  }
}

#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include "scl/error.hpp"
#include "scl/fft.hpp"
#include "scl/oracles.hpp"
#include "scl/rng.hpp"

using namespace scl;
using oracles::EvalGrid;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

EvalGrid rd_grid(int nx, int nt, double t_hi = 1.0) {
  EvalGrid g;
  g.axes.push_back({"x", nx, 0.0, 2.0 * kPi, true});
  g.axes.push_back({"t", nt, 0.0, t_hi, false});
  return g;
}

// First-order upwind advection solver on a periodic grid (independent oracle
// for the convection solution).
std::vector<double> upwind_convection(int nx, double beta, double t_end, double cfl) {
  const double dx = 2.0 * kPi / nx;
  std::vector<double> u(nx), next(nx);
  for (int i = 0; i < nx; ++i) u[i] = std::sin(i * dx);
  const int steps = static_cast<int>(std::ceil(t_end * beta / (cfl * dx)));
  const double dt = t_end / steps;
  const double c = beta * dt / dx;
  for (int s = 0; s < steps; ++s) {
    for (int i = 0; i < nx; ++i) next[i] = u[i] - c * (u[i] - u[(i + nx - 1) % nx]);
    u.swap(next);
  }
  return u;
}

}  // namespace

TEST_CASE("fft matches a direct dft and round trips") {
  Rng rng(31);
  const int n = 64;
  std::vector<std::complex<double>> a(n), orig;
  for (auto& v : a) v = {rng.normal(), rng.normal()};
  orig = a;
  fft_inplace(a, false);
  for (int k = 0; k < n; k += 7) {
    std::complex<double> direct{0.0, 0.0};
    for (int j = 0; j < n; ++j)
      direct += orig[j] * std::polar(1.0, -2.0 * kPi * j * k / n);
    CHECK(std::abs(a[k] - direct) < 1e-10);
  }
  fft_inplace(a, true);
  for (int j = 0; j < n; ++j) CHECK(std::abs(a[j] - orig[j]) < 1e-12);
}

TEST_CASE("convection exact solution basics") {
  CHECK(oracles::convection_exact(kPi / 2, 0.0, 17.0) == doctest::Approx(1.0));
  const double beta = 4.0;
  CHECK(oracles::convection_exact(0.77, 2.0 * kPi / beta, beta) ==
        doctest::Approx(std::sin(0.77)).epsilon(1e-12));
  // periodic in x
  Rng rng(3);
  for (int i = 0; i < 16; ++i) {
    const double t = rng.uniform(0, 1);
    CHECK(oracles::convection_exact(0.0, t, 30.0) ==
          doctest::Approx(oracles::convection_exact(2.0 * kPi, t, 30.0)).epsilon(1e-12));
  }
}

TEST_CASE("convection exact agrees with an upwind finite-difference solver") {
  const double beta = 30.0;
  const int nx = 512;
  const auto u = upwind_convection(nx, beta, 1.0, 0.9);
  double max_err = 0.0;
  for (int i = 0; i < nx; ++i) {
    const double x = 2.0 * kPi * i / nx;
    max_err = std::max(max_err, std::fabs(u[i] - oracles::convection_exact(x, 1.0, beta)));
  }
  CHECK(max_err < 5e-2);
}

TEST_CASE("helmholtz exact basics") {
  CHECK(oracles::helmholtz_exact(0.5, 0.5, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(oracles::helmholtz_exact(0.0, 0.31, 1.7, 1.3) == doctest::Approx(0.0));
}

TEST_CASE("rd reference: reaction-only closed form") {
  const double rho = 3.0;
  const auto field = oracles::rd_reference(rd_grid(64, 5), 0.0, rho, 1e-3);
  const EvalGrid g = rd_grid(64, 5);
  for (int i = 0; i < 64; ++i) {
    const double x = g.coord(0, i);
    const double z = (x - kPi) / (kPi / 4.0);
    const double h0 = std::exp(-0.5 * z * z);
    for (int j = 0; j < 5; ++j) {
      const double t = g.coord(1, j);
      const double expect = h0 * std::exp(rho * t) / (h0 * std::exp(rho * t) + 1.0 - h0);
      CHECK(field[static_cast<std::size_t>(i) * 5 + j] == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("rd reference: diffusion preserves the spatial mean") {
  const int nx = 128, nt = 4;
  const auto field = oracles::rd_reference(rd_grid(nx, nt), 3.0, 0.0, 1e-3);
  double mean0 = 0.0;
  for (int i = 0; i < nx; ++i) mean0 += field[static_cast<std::size_t>(i) * nt + 0];
  mean0 /= nx;
  for (int j = 1; j < nt; ++j) {
    double mean = 0.0;
    for (int i = 0; i < nx; ++i) mean += field[static_cast<std::size_t>(i) * nt + j];
    mean /= nx;
    CHECK(mean == doctest::Approx(mean0).epsilon(1e-10));
  }
}

TEST_CASE("rd reference: self-convergence under dt halving") {
  const auto a = oracles::rd_reference(rd_grid(256, 2), 3.0, 3.0, 1e-3);
  const auto b = oracles::rd_reference(rd_grid(256, 2), 3.0, 3.0, 5e-4);
  CHECK(oracles::max_abs_error(a, b) < 1e-4);
}

TEST_CASE("rd reference stays in [0,1] for unit-range ICs") {
  const auto field = oracles::rd_reference(rd_grid(128, 8), 2.0, 4.0, 1e-3);
  for (double v : field) {
    CHECK(v >= -1e-9);
    CHECK(v <= 1.0 + 1e-9);
  }
}

TEST_CASE("rd reference rejects bad arguments") {
  CHECK_THROWS_AS((void)oracles::rd_reference(rd_grid(100, 4), 1.0, 1.0, 1e-3), Error);  // not 2^k
  CHECK_THROWS_AS((void)oracles::rd_reference(rd_grid(64, 4), 1.0, 1.0, -1.0), Error);
}

TEST_CASE("eikonal signed distance oracle") {
  bvp::Shape circle;
  circle.kind = bvp::Shape::Kind::circle;
  circle.radius = 0.5;
  CHECK(oracles::eikonal_signed_distance(std::vector<double>{0.0, 0.0}, circle) ==
        doctest::Approx(-0.5));
  CHECK(oracles::eikonal_signed_distance(std::vector<double>{1.0, 0.0}, circle) ==
        doctest::Approx(0.5));

  bvp::Shape cloud;
  cloud.kind = bvp::Shape::Kind::point_cloud;
  cloud.cloud = {{0.0, 0.0}};
  CHECK_THROWS_AS((void)oracles::eikonal_signed_distance(std::vector<double>{0.1, 0.1}, cloud),
                  Error);

  // two-circle union vs brute-force nearest boundary point
  bvp::Shape two;
  two.kind = bvp::Shape::Kind::two_circles;
  two.center = {-0.5, -0.3};
  two.radius = 0.35;
  two.center2 = {0.45, 0.4};
  two.radius2 = 0.3;
  const auto boundary = bvp::shape_boundary_points(two, 40000);
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
    double nearest = 1e300;
    for (const auto& p : boundary)
      nearest = std::min(nearest, std::hypot(x - p[0], y - p[1]));
    const double sd = oracles::eikonal_signed_distance(std::vector<double>{x, y}, two);
    CHECK(std::fabs(std::fabs(sd) - nearest) < 1e-6);
  }
}

TEST_CASE("relative l2 basics and scale invariance") {
  std::vector<double> ref{1.0, -2.0, 3.0};
  CHECK(oracles::relative_l2(ref, ref) == 0.0);
  std::vector<double> zero(3, 0.0);
  CHECK(oracles::relative_l2(zero, ref) == doctest::Approx(1.0));
  std::vector<double> twice{2.0, -4.0, 6.0};
  CHECK(oracles::relative_l2(twice, ref) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)oracles::relative_l2(ref, zero), Error);

  Rng rng(23);
  std::vector<double> pred(50), base(50);
  for (auto& v : pred) v = rng.normal();
  for (auto& v : base) v = rng.normal();
  const double e = oracles::relative_l2(pred, base);
  for (const double s : {3.0, -0.25}) {
    auto ps = pred;
    auto rs = base;
    for (auto& v : ps) v *= s;
    for (auto& v : rs) v *= s;
    CHECK(oracles::relative_l2(ps, rs) == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("synthesized observations match the oracle and are reproducible") {
  const auto spec = bvp::make_convection(1.0, 30.0, false);
  EvalGrid g = rd_grid(32, 8);
  const std::vector<std::vector<double>> pis{{10.0}, {20.0}};
  const auto obs = oracles::synthesize_observations(spec, pis, g, 0.0, 5);
  REQUIRE(obs.size() == 2);
  std::vector<double> p;
  for (std::size_t j = 0; j < obs.size(); ++j) {
    for (std::size_t i = 0; i < obs[j].field.size(); ++i) {
      g.point(i, p);
      CHECK(obs[j].field[i] ==
            doctest::Approx(oracles::convection_exact(p[0], p[1], pis[j][0])).epsilon(1e-12));
    }
  }
  const auto noisy1 = oracles::synthesize_observations(spec, pis, g, 0.01, 99);
  const auto noisy2 = oracles::synthesize_observations(spec, pis, g, 0.01, 99);
  CHECK(noisy1[0].field == noisy2[0].field);
  CHECK(noisy1[1].field == noisy2[1].field);
  CHECK(noisy1[0].field != obs[0].field);
  // out-of-box coefficients are rejected
  CHECK_THROWS_AS((void)oracles::synthesize_observations(spec, {{55.0}}, g, 0.0, 5), Error);
}

TEST_CASE("oracle fields annihilate the pde residual through exact jets") {
  // convection and helmholtz: residual of the oracle's analytic jet < 1e-8 on a grid
  const auto conv = bvp::make_convection(12.0, 12.0, true);
  for (int ix = 0; ix < 32; ++ix)
    for (int it = 0; it < 32; ++it) {
      const double x = 2.0 * kPi * ix / 32, t = static_cast<double>(it) / 31;
      Jet j;
      j.value = oracles::convection_exact(x, t, 12.0);
      j.grad = {std::cos(x - 12.0 * t), -12.0 * std::cos(x - 12.0 * t)};
      JetView v;
      v.value = j.value;
      v.grad = j.grad.data();
      v.m = 2;
      CHECK(std::fabs(bvp::pde_residual(conv, v, std::vector<double>{12.0},
                                        std::vector<double>{x, t})) < 1e-8);
    }
}

TEST_CASE("field csv and binary round trip") {
  EvalGrid g = rd_grid(4, 3);
  std::vector<double> field(g.size());
  Rng rng(77);
  for (auto& v : field) v = rng.normal();
  const std::string bpath = "test_field.bin";
  oracles::write_field_bin(bpath, g, field);
  const auto [g2, f2] = oracles::read_field_bin(bpath);
  CHECK(f2 == field);
  REQUIRE(g2.axes.size() == 2);
  CHECK(g2.axes[0].name == "x");
  CHECK(g2.axes[0].count == 4);
  CHECK(g2.axes[0].periodic);
  std::remove(bpath.c_str());

  const std::string cpath = "test_field.csv";
  oracles::write_field_csv(cpath, g, field);
  std::FILE* f = std::fopen(cpath.c_str(), "rb");
  REQUIRE(f != nullptr);
  char line[256];
  REQUIRE(std::fgets(line, sizeof(line), f) != nullptr);
  CHECK(std::string(line) == "x,t,value\n");
  std::fclose(f);
  std::remove(cpath.c_str());
}

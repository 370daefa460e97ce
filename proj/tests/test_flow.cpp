#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hofer/flow.hpp"

using namespace hofer;

namespace {

const double pi = std::numbers::pi;

// h on (d, 1-d) with cosine shoulders; independent of the library's builder.
double shoulder(double h, double d) {
  auto ramp = [&](double x) { return x <= d / 4 ? 0.0 : x >= d ? 1.0 : 0.5 - 0.5 * std::cos(pi * (x - d / 4) / (0.75 * d)); };
  return h * std::min(ramp(h), ramp(1 - h));
}

ScalarField rotation(AnnulusGrid g, double d = 0.05) {
  return ScalarField::sample(g, d / 8, [d](double, double h) { return shoulder(h, d); });
}

ScalarField stirrer(AnnulusGrid g, double amp) {
  return ScalarField::sample(g, 0.02, [amp](double t, double h) {
    double s = std::sin(pi * h);
    return amp * std::sin(2 * pi * t) * s * s * s * s;
  });
}

}  // namespace

TEST_CASE("vector field of constants and linear fields") {
  AnnulusGrid g(32, 64);
  auto c = hamiltonian_vector_field(ScalarField::sample(g, 0.0, [](double, double) { return 2.0; }));
  double vt, vh;
  c.at(0.4, 0.5, vt, vh);
  CHECK(vt == 0.0);
  CHECK(vh == 0.0);
  auto lin = hamiltonian_vector_field(ScalarField::sample(g, 0.0, [](double, double h) { return h; }));
  lin.at(0.31, 0.47, vt, vh);
  CHECK(vt == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(vh) < 1e-12);
  auto sq = hamiltonian_vector_field(ScalarField::sample(g, 0.0, [](double, double h) { return h * h; }));
  sq.at(0.0 + 0.5 / 32, 0.5 + 0.5 / 64, vt, vh);
  CHECK(vt == doctest::Approx(1.0 + 1.0 / 64).epsilon(1e-12));
}

TEST_CASE("centered differences converge at second order") {
  auto H = [](double t, double h) { return std::sin(2 * pi * t) * h * h * h; };
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    AnnulusGrid g(n, n);
    auto vf = hamiltonian_vector_field(ScalarField::sample(g, 0.0, H));
    double err = 0.0;
    for (int j = n / 4; j < 3 * n / 4; ++j)
      for (int i = 0; i < n; ++i) {
        double t = g.theta_center(i), h = g.h_center(j);
        std::size_t k = 2 * g.index(i, j);
        err = std::max(err, std::abs(vf.v[k] - 3 * std::sin(2 * pi * t) * h * h));
        err = std::max(err, std::abs(vf.v[k + 1] + 2 * pi * std::cos(2 * pi * t) * h * h * h));
      }
    if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("zero path is the identity") {
  AnnulusGrid g(32, 32);
  HamiltonianPath p;
  p.append(ScalarField(g, 0.05), 1.0);
  auto m = integrate_flow(p);
  for (int j = 0; j < g.n_h; ++j)
    for (int i = 0; i < g.n_theta; ++i) {
      CHECK(m.at(i, j).theta == m.node(i, j).theta);
      CHECK(m.at(i, j).h == m.node(i, j).h);
    }
  CHECK(hofer_length(p) == 0.0);
  CHECK(area_distortion(m) < 1e-12);
  CHECK(translation_winding(p, {0.5, 0.5}) == 0.0);
  CHECK(translation_iterate(m, {0.5, 0.5}, 10) == 0.0);
  Region sq = rectangle_region(0.2, 0.7, 0.3, 0.6);
  CHECK(region_transport(m, sq, sq).hausdorff < 1e-12);
}

TEST_CASE("rigid rotation advances the lift by one") {
  AnnulusGrid g(128, 128);
  HamiltonianPath p;
  p.append(rotation(g), 1.0);
  FlowOptions opt;
  opt.dt = 1e-3;
  auto m = integrate_flow(p, opt);
  for (int j = 16; j < 112; ++j) {
    CHECK(m.at(7, j).theta - m.node(7, j).theta == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(m.at(7, j).h - m.node(7, j).h) < 1e-12);
  }
  CHECK(translation_winding(p, {0.3, 0.5}, opt) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(translation_iterate(m, {0.3, 0.5}, 50) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(area_distortion(m) < 1e-3);
  CHECK(hofer_length(p) == doctest::Approx(rotation(g).max()));
}

TEST_CASE("winding and length are additive over concatenation") {
  AnnulusGrid g(64, 64);
  HamiltonianPath one;
  one.append(rotation(g), 1.0);
  one.append(stirrer(g, 0.01), 0.5);
  HamiltonianPath k = one;
  for (int r = 2; r <= 5; ++r) {
    k = k.then(one);
    CHECK(hofer_length(k) == doctest::Approx(r * hofer_length(one)).epsilon(1e-14));
  }
  FlowOptions opt;
  opt.dt = 2e-3;
  CHECK(translation_winding(k, {0.5, 0.5}, opt) == doctest::Approx(5.0).epsilon(0.01));
}

TEST_CASE("integrator error shrinks at fourth order in dt") {
  // Smooth divergence-free field from H = sin(2πθ) sin²(πh) / (2π).
  Velocity v = [](double t, double h, double& vt, double& vh) {
    vt = std::sin(2 * pi * t) * std::sin(2 * pi * h) / 2;
    vh = -std::cos(2 * pi * t) * std::pow(std::sin(pi * h), 2);
  };
  FlowOptions opt;
  opt.strict = true;
  Point seed{0.21, 0.37};
  auto run = [&](double dt) {
    opt.dt = dt;
    return rk4_flow(v, seed, 2.0, opt, 1.0);
  };
  auto diff = [](Point a, Point b) { return std::hypot(a.theta - b.theta, a.h - b.h); };
  double e1 = diff(run(0.1), run(0.05));
  double e2 = diff(run(0.05), run(0.025));
  double e3 = diff(run(0.025), run(0.0125));
  CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.1));
  CHECK(std::log2(e2 / e3) == doctest::Approx(4.0).epsilon(0.1));
  // The energy H is a first integral; RK4 drifts by O(dt^4).
  auto H = [](Point p) { return std::sin(2 * pi * p.theta) * std::pow(std::sin(pi * p.h), 2) / (2 * pi); };
  CHECK(std::abs(H(run(0.0125)) - H(seed)) < 1e-6);
}

TEST_CASE("running a path then its reverse returns home") {
  AnnulusGrid g(64, 64);
  HamiltonianPath p;
  p.append(stirrer(g, 0.05), 0.7);
  p.append(rotation(g), 0.3);
  FlowOptions opt;
  opt.dt = 1e-2;
  auto m = integrate_flow(p.then(p.reversed()), opt);
  double worst = 0.0;
  for (int j = 0; j < g.n_h; ++j)
    for (int i = 0; i < g.n_theta; ++i)
      worst = std::max(worst, std::hypot(m.at(i, j).theta - m.node(i, j).theta, m.at(i, j).h - m.node(i, j).h));
  CHECK(worst < 10 * opt.dt);
}

TEST_CASE("strict mode rejects oversized steps") {
  AnnulusGrid g(64, 64);
  HamiltonianPath p;
  p.append(stirrer(g, 5.0), 0.1);
  FlowOptions opt;
  opt.dt = 0.01;
  opt.strict = true;
  auto prep = prepare(p);
  CHECK_THROWS_AS(advect(*prep, {0.3, 0.5}, opt), NumericalFault);
  opt.strict = false;
  auto q = advect(*prep, {0.3, 0.5}, opt);
  opt.dt = 1e-4;
  auto r = advect(*prep, {0.3, 0.5}, opt);
  CHECK(std::hypot(q.theta - r.theta, q.h - r.h) < 1e-4);
}

TEST_CASE("shears are advanced exactly at any speed") {
  AnnulusGrid g(64, 64);
  HamiltonianPath p;
  p.append(rotation(g).scaled(50.0), 0.1);
  FlowOptions opt;
  opt.strict = true;
  CHECK(prepare(p)->segments[0].shear);
  CHECK(translation_winding(p, {0.5, 0.5}, opt) == doctest::Approx(5.0).epsilon(1e-9));
  HamiltonianPath q;
  q.append(stirrer(g, 0.05), 1.0);
  CHECK_FALSE(prepare(q)->segments[0].shear);
}

TEST_CASE("non-integer winding is a numerical fault") {
  AnnulusGrid g(64, 64);
  HamiltonianPath p;
  p.append(rotation(g), 0.5);
  CHECK_THROWS_AS(translation_winding(p, {0.5, 0.5}), NumericalFault);
}

TEST_CASE("coarse map grid and re-advection agree") {
  AnnulusGrid g(128, 128);
  HamiltonianPath p;
  p.append(stirrer(g, 0.05), 1.0);
  p.append(rotation(g), 1.0);
  FlowOptions opt;
  opt.dt = 2e-3;
  opt.map_grid = AnnulusGrid(32, 32);
  auto m = integrate_flow(p, opt);
  CHECK(m.grid == AnnulusGrid(32, 32));
  Point q{0.41, 0.52};
  Point exact = m.apply(q), approx = m.interpolate(q);
  CHECK(std::hypot(exact.theta - approx.theta, exact.h - approx.h) < 5e-3);
}

TEST_CASE("stirring inside the disk does not change the translation number") {
  AnnulusGrid g(128, 128);
  HamiltonianPath p;
  p.append(rotation(g), 1.0);
  p.append(stirrer(g, 0.03), 1.0);
  FlowOptions opt;
  opt.dt = 2e-3;
  auto m = integrate_flow(p, opt);
  CHECK(translation_iterate(m, {0.5, 0.5}, 50) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("hausdorff distance and self intersection") {
  Region a = rectangle_region(0.2, 0.4, 0.2, 0.4);
  Region b = rectangle_region(0.2, 0.4, 0.2, 0.45);
  CHECK(hausdorff_distance(a, b) == doctest::Approx(0.05).epsilon(1e-9));
  Region shifted = rectangle_region(3.2, 3.4, 0.2, 0.4);
  CHECK(hausdorff_distance(a, shifted) < 1e-12);
  Region bow{{{0.1, 0.1}, {0.3, 0.3}, {0.3, 0.1}, {0.1, 0.3}}};
  CHECK(self_intersects(bow));
  CHECK_FALSE(self_intersects(a));
}

TEST_CASE("maps read from disk carry no lift") {
  AnnulusGrid g(16, 16);
  std::stringstream ss;
  write_map_csv(ss, identity_map(g));
  auto m = read_map_csv(ss);
  CHECK_FALSE(m.lift_valid);
  CHECK(area_distortion(m) < 1e-12);
  CHECK_THROWS_AS(translation_iterate(m, {0.5, 0.5}, 3), PreconditionError);
}

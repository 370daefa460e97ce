#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "hofer/reeb.hpp"
#include "oracles.hpp"

using namespace hofer;

namespace {

// Mass of the component containing `start` after deleting arc `cut`.
double side_mass(const ReebGraph& g, int cut, int start) {
  std::vector<char> seen(g.nodes.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  double m = 0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    m += g.nodes[v].measure;
    for (int k = 0; k < int(g.arcs.size()); ++k) {
      if (k == cut) continue;
      const auto& a = g.arcs[k];
      int w = a.lo == v ? a.hi : a.hi == v ? a.lo : -1;
      if (w < 0 || seen[w]) continue;
      seen[w] = 1;
      m += a.measure;
      stack.push_back(w);
    }
  }
  return m;
}

// The defining inequality holds at the median and fails once it is moved.
void check_median(const ReebGraph& g, const MedianResult& m) {
  double total = g.total_measure(), half = total / 2;
  REQUIRE(median_balanced(g, m, 1e-12 * total));
  if (m.arc >= 0) {
    const auto& a = g.arcs[m.arc];
    double t = m.arc_fraction * a.measure;
    double lo = side_mass(g, m.arc, a.lo) + t, hi = side_mass(g, m.arc, a.hi) + a.measure - t;
    CHECK(lo == doctest::Approx(half).epsilon(1e-9));
    CHECK(hi == doctest::Approx(half).epsilon(1e-9));
    double eps = 1e-3 * total;
    CHECK(hi + eps > half);  // moving toward lo by eps leaves more than half on the hi side
    CHECK(lo + eps > half);
  } else {
    for (int k = 0; k < int(g.arcs.size()); ++k) {
      const auto& a = g.arcs[k];
      if (a.lo != m.node && a.hi != m.node) continue;
      int other = a.lo == m.node ? a.hi : a.lo;
      double branch = side_mass(g, k, other) + a.measure;
      // A point just inside this arc has everything else behind it.
      CHECK(total - branch > half - 1e-12);
    }
  }
}

void check_against_flood_fill(const ScalarField& f, double A, double s, const std::vector<double>& levels) {
  SphereModel model(f, s, A);
  auto g = build_reeb(model);
  CHECK(g.nodes.size() == g.arcs.size() + 1);
  auto sph = oracle::sphere_of(f);
  for (double c : levels) CHECK(g.components_at(c) == oracle::flood_fill_components(sph, c));
}

}  // namespace

TEST_CASE("zero field: one plateau and two caps") {
  AnnulusGrid g(32, 32);
  SphereModel model(ScalarField(g, 0.05), 0.1, 0.6);
  auto rg = build_reeb(model);
  REQUIRE(rg.nodes.size() == 3);
  CHECK(rg.arcs.size() == 2);
  int caps = 0;
  for (const auto& n : rg.nodes) caps += n.kind == NodeKind::cap;
  CHECK(caps == 2);
  CHECK(rg.total_measure() == doctest::Approx(1.2));
  auto m = find_median(rg);
  CHECK(m.value == 0.0);
  check_median(rg, m);
}

TEST_CASE("single bump gives a path") {
  AnnulusGrid g(128, 128);
  double r = 0.2;
  auto f = ScalarField::sample(g, 0.02, [r](double t, double h) { return oracle::bump(t, h, 0.5, 0.5, r, 1.0); });
  SphereModel model(f, 0.2, 0.6);
  auto rg = build_reeb(model);
  CHECK(rg.nodes.size() == 4);  // background plateau, bump top, two caps
  CHECK(rg.arcs.size() == 3);
  double bump_arc = 0;
  for (const auto& a : rg.arcs) bump_arc = std::max(bump_arc, a.measure);
  CHECK(bump_arc == doctest::Approx(oracle::pi * r * r).epsilon(0.02));
  check_against_flood_fill(f, 0.6, 0.2, {0.01, 0.3, 0.7, 0.99});
  check_median(rg, find_median(rg));
}

TEST_CASE("two bumps of different heights") {
  AnnulusGrid g(96, 96);
  auto f = ScalarField::sample(g, 0.02, [](double t, double h) {
    return oracle::bump(t, h, 0.25, 0.5, 0.15, 1.0) + oracle::bump(t, h, 0.75, 0.5, 0.15, 2.0);
  });
  SphereModel model(f, 0.0, 0.6);
  auto rg = build_reeb(model);
  int maxima = 0;
  for (const auto& n : rg.nodes) maxima += n.kind == NodeKind::max;
  CHECK(maxima == 2);
  std::vector<double> levels;
  for (int k = 0; k < 20; ++k) levels.push_back(0.013 + k * 0.1);
  check_against_flood_fill(f, 0.6, 0.0, levels);
  check_median(rg, find_median(rg));
}

TEST_CASE("contour tree matches flood fill on random fields") {
  std::mt19937_64 rng(20240611);
  AnnulusGrid g(64, 64);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = oracle::random_field(g, rng);
    std::uniform_real_distribution<double> lv(f.min(), f.max());
    std::vector<double> levels;
    for (int k = 0; k < 20; ++k) levels.push_back(lv(rng));
    std::uniform_real_distribution<double> sd(0.0, 0.2);
    double s = sd(rng);
    check_against_flood_fill(f, 0.6, s, levels);
    auto rg = build_reeb(SphereModel(f, s, 0.6));
    CHECK(rg.total_measure() == doctest::Approx(1.2).epsilon(1e-12));
    check_median(rg, find_median(rg));
  }
}

TEST_CASE("median of the height function sits at A - s") {
  AnnulusGrid g(256, 256);
  auto f = oracle::hat_field(g, 0.02);
  for (double s : {0.0, 0.1, 0.2}) {
    auto rg = build_reeb(SphereModel(f, s, 0.6));
    auto m = find_median(rg);
    CHECK(m.value == doctest::Approx(0.6 - s).epsilon(0.01));
    check_median(rg, m);
  }
}

TEST_CASE("plateau of area A is the median") {
  AnnulusGrid g(128, 128);
  // 1 on the band 0.15 < h < 0.85, whose area 0.7 exceeds A.
  auto f = ScalarField::sample(g, 0.02, [](double, double h) {
    return std::min(oracle::cos_step((h - 0.05) / 0.1), oracle::cos_step((0.95 - h) / 0.1));
  });
  for (double s : {0.0, 0.1, 0.2}) {
    auto rg = build_reeb(SphereModel(f, s, 0.6));
    auto m = find_median(rg);
    CHECK(m.value == 1.0);
    REQUIRE(m.node >= 0);
    CHECK(rg.nodes[m.node].plateau);
    check_median(rg, m);
  }
}

TEST_CASE("symmetric bumps balance at the background") {
  AnnulusGrid g(64, 64);
  auto f = ScalarField::sample(g, 0.02, [](double t, double h) {
    return oracle::bump(t, h, 0.25, 0.5, 0.2, 1.0) + oracle::bump(t, h, 0.75, 0.5, 0.2, 1.0);
  });
  auto rg = build_reeb(SphereModel(f, 0.1, 0.6));
  auto m = find_median(rg);
  REQUIRE(m.node >= 0);
  CHECK(rg.nodes[m.node].plateau);
  CHECK(rg.nodes[m.node].kind == NodeKind::saddle);
  CHECK(m.value == 0.0);
}

TEST_CASE("adding a constant on the sphere shifts the median value") {
  std::mt19937_64 rng(7);
  AnnulusGrid g(64, 64);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = oracle::random_field(g, rng);
    auto a = find_median(build_reeb(SphereModel(f, 0.1, 0.6)));
    auto b = find_median(build_reeb(SphereModel(f, 0.1, 0.6, 2.5)));
    CHECK(a.node == b.node);
    CHECK(a.arc == b.arc);
    CHECK(b.value - a.value == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("json and edge list dumps") {
  AnnulusGrid g(32, 32);
  auto f = ScalarField::sample(g, 0.05, [](double t, double h) { return oracle::bump(t, h, 0.5, 0.5, 0.2, 1.0); });
  auto rg = build_reeb(SphereModel(f, 0.0, 0.6));
  std::stringstream js, ed;
  write_reeb_json(js, rg, find_median(rg));
  auto j = nlohmann::json::parse(js.str());
  CHECK(j["nodes"].size() == rg.nodes.size());
  CHECK(j["arcs"].size() == rg.arcs.size());
  CHECK(j["median"].contains("value"));
  write_reeb_edges(ed, rg);
  CHECK(ed.str().find("--") != std::string::npos);
}

TEST_CASE("cap area outside [0, 2A-1] is rejected") {
  AnnulusGrid g(16, 16);
  CHECK_THROWS_AS(SphereModel(ScalarField(g, 0.1), 0.3, 0.6), PreconditionError);
  CHECK_THROWS_AS(SphereModel(ScalarField(g, 0.1), -0.1, 0.6), PreconditionError);
  CHECK_THROWS_AS(SphereModel(ScalarField(g, 0.1), 0.0, 0.5), PreconditionError);
}

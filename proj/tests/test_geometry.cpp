#include <doctest.h>

#include <cmath>
#include <random>

#include "dunkl/geometry.hpp"
#include "dunkl/measure.hpp"

using namespace dunkl;

namespace {

Vec random_vec(std::mt19937_64& rng, int n, double s = 3.0) {
  std::uniform_real_distribution<double> u(-s, s);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// closure of a set of matrices by repeated products, no dedup shortcuts beyond a plain scan
int brute_force_order(const std::vector<Mat>& gens) {
  std::vector<Mat> all{Mat::Identity(gens[0].rows(), gens[0].cols())};
  for (int len = 0; len < 12; ++len) {
    std::vector<Mat> next = all;
    for (const Mat& a : all)
      for (const Mat& g : gens) {
        Mat p = a * g;
        bool seen = false;
        for (const Mat& b : next) seen = seen || (b - p).norm() < 1e-9;
        if (!seen) next.push_back(p);
      }
    if (next.size() == all.size()) break;
    all = next;
  }
  return static_cast<int>(all.size());
}

}  // namespace

TEST_CASE("rank-1 root is rescaled to norm sqrt 2") {
  RootSystem rs = build_root_system({vec({1.0})}, {0.5});
  REQUIRE(rs.roots.size() == 2);
  CHECK(rs.roots[0][0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(rs.roots[1][0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
  CHECK(rs.multiplicity[0] == 0.5);
  CHECK(rs.multiplicity[1] == 0.5);
}

TEST_CASE("product system in the plane has four roots") {
  RootSystem rs = build_root_system({vec({1.0, 0.0}), vec({0.0, 1.0})}, {1.0, 1.0});
  REQUIRE(rs.roots.size() == 4);
  for (const Vec& a : rs.roots) CHECK(std::abs(a.norm() - std::sqrt(2.0)) < 1e-12);
  bool has[4] = {};
  for (const Vec& a : rs.roots) {
    if ((a - vec({std::sqrt(2.0), 0})).norm() < 1e-12) has[0] = true;
    if ((a - vec({-std::sqrt(2.0), 0})).norm() < 1e-12) has[1] = true;
    if ((a - vec({0, std::sqrt(2.0)})).norm() < 1e-12) has[2] = true;
    if ((a - vec({0, -std::sqrt(2.0)})).norm() < 1e-12) has[3] = true;
  }
  CHECK((has[0] && has[1] && has[2] && has[3]));
}

TEST_CASE("invalid root systems are rejected") {
  CHECK_THROWS_AS(build_root_system({vec({1.0, 0.0}), vec({-1.0, 0.0})}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(build_root_system({vec({1.0})}, {-0.5}), Error);
  CHECK_THROWS_AS(build_root_system({vec({1.0, 0.0}), vec({2.0, 0.0})}, {1.0, 1.0}), Error);
  // A2 needs one multiplicity on its single orbit
  const double s = std::sqrt(3.0) / 2.0;
  CHECK_THROWS_AS(build_root_system({vec({1.0, 0.0}), vec({0.5, s}), vec({-0.5, s})}, {1.0, 1.0, 2.0}), Error);
  CHECK_THROWS_AS(build_root_system({}, {}), Error);
}

TEST_CASE("root system invariants for the built-in systems") {
  for (const RootSystem& rs : {rank1_system(0.5), product_system({1.0, 0.5}), product_system({1, 1, 1}), a2_system(1.0),
                               b2_system(0.5, 1.0)}) {
    for (size_t i = 0; i < rs.roots.size(); ++i) {
      const Vec& a = rs.roots[i];
      CHECK(std::abs(a.norm() - std::sqrt(2.0)) < 1e-12);
      int parallel = 0;
      for (const Vec& b : rs.roots)
        if (std::abs(std::abs(a.dot(b)) - 2.0) < 1e-9) ++parallel;
      CHECK(parallel == 2);
      for (size_t j = 0; j < rs.roots.size(); ++j) {
        Vec img = reflect(rs.roots[j], a);
        int hit = -1;
        for (size_t q = 0; q < rs.roots.size(); ++q)
          if ((rs.roots[q] - img).norm() < 1e-10) hit = static_cast<int>(q);
        REQUIRE(hit >= 0);
        CHECK(rs.multiplicity[hit] == doctest::Approx(rs.multiplicity[i]));
      }
    }
  }
}

TEST_CASE("reflection examples") {
  const Vec a1 = vec({std::sqrt(2.0)});
  CHECK(reflect(a1, vec({3.0}))[0] == doctest::Approx(-3.0));
  const Vec a2 = vec({std::sqrt(2.0), 0.0});
  Vec y = reflect(a2, vec({1.0, 2.0}));
  CHECK(y[0] == doctest::Approx(-1.0));
  CHECK(y[1] == doctest::Approx(2.0));
  Vec h = vec({0.0, 5.0});
  CHECK((reflect(a2, h) - h).norm() == 0.0);
}

TEST_CASE("reflection is an involutive isometry fixing its hyperplane") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + t % 3;
    Vec a = random_vec(rng, n), x = random_vec(rng, n);
    if (a.norm() < 1e-3) continue;
    Vec y = reflect(a, reflect(a, x));
    CHECK((y - x).norm() < 1e-12 * std::max(1.0, x.norm()));
    CHECK(std::abs(reflect(a, x).norm() - x.norm()) < 1e-12 * std::max(1.0, x.norm()));
    Vec p = x - x.dot(a) / a.squaredNorm() * a;
    CHECK((reflect(a, p) - p).norm() < 1e-12 * std::max(1.0, p.norm()));
  }
}

TEST_CASE("group orders") {
  CHECK(generate_group(rank1_system(1.0)).size() == 2);
  CoxeterGroup z2 = generate_group(product_system({1.0, 1.0}));
  REQUIRE(z2.size() == 4);
  for (const Mat& m : z2.elements) {
    CHECK(m.isDiagonal(1e-12));
    CHECK(std::abs(std::abs(m(0, 0)) - 1.0) < 1e-12);
  }
  RootSystem a2 = a2_system(1.0);
  std::vector<Mat> gens;
  for (int i : a2.positive()) gens.push_back(reflection_matrix(a2.roots[i]));
  const int oracle = brute_force_order(gens);
  CHECK(oracle == 6);
  CHECK(generate_group(a2).size() == oracle);
  CHECK(generate_group(b2_system(1.0, 0.5)).size() == 8);
  CHECK(generate_group(product_system({1, 1, 1})).size() == 8);
  CHECK(generate_group(rank1_system(0.0)).elements[0].isIdentity());
}

TEST_CASE("element cap is enforced") {
  CHECK_THROWS_AS(generate_group(a2_system(1.0), 4), Error);
}

TEST_CASE("group closure, inverses and word table") {
  for (const RootSystem& rs : {rank1_system(1.0), product_system({1.0, 1.0}), a2_system(1.0), b2_system(1.0, 2.0)}) {
    CoxeterGroup g = generate_group(rs);
    for (int i = 0; i < g.size(); ++i) {
      CHECK(g.find(g.elements[i].transpose()) >= 0);
      Mat prod = Mat::Identity(rs.dimension, rs.dimension);
      for (int r : g.words[i]) prod = prod * reflection_matrix(rs.roots[r]);
      CHECK((prod - g.elements[i]).norm() < 1e-9);
      for (int j = 0; j < g.size(); ++j) CHECK(g.find(g.elements[i] * g.elements[j]) >= 0);
    }
  }
}

TEST_CASE("orbits") {
  CoxeterGroup g1 = generate_group(rank1_system(1.0));
  auto o = orbit(g1, vec({2.0}));
  REQUIRE(o.size() == 2);
  CHECK(std::abs(o[0][0] + o[1][0]) < 1e-15);
  CHECK(orbit(g1, vec({0.0})).size() == 1);
  CoxeterGroup g2 = generate_group(product_system({1.0, 1.0}));
  auto balls = orbit(g2, Ball{vec({1.0, 1.0}), 0.5});
  REQUIRE(balls.size() == 4);
  for (const Ball& b : balls) {
    CHECK(std::abs(std::abs(b.center[0]) - 1.0) < 1e-15);
    CHECK(std::abs(std::abs(b.center[1]) - 1.0) < 1e-15);
    CHECK(b.radius == 0.5);
  }
  CHECK(orbit(generate_group(a2_system(1.0)), vec({0.3, 0.1})).size() == 6);
}

TEST_CASE("orbit distance examples") {
  CoxeterGroup g1 = generate_group(rank1_system(1.0));
  CHECK(orbit_distance(g1, vec({1.0}), vec({-3.0})) == doctest::Approx(2.0));
  CoxeterGroup g2 = generate_group(product_system({1.0, 1.0}));
  CHECK(orbit_distance(g2, vec({1.0, 1.0}), vec({-1.0, 1.0})) == doctest::Approx(0.0));
  std::mt19937_64 rng(3);
  CoxeterGroup ga = generate_group(a2_system(1.0));
  for (int t = 0; t < 50; ++t) {
    Vec x = random_vec(rng, 2);
    for (const Mat& s : ga.elements) CHECK(orbit_distance(ga, x, s * x) < 1e-12);
  }
}

TEST_CASE("orbit distance is a G-invariant pseudo-metric bounded by the Euclidean distance") {
  std::mt19937_64 rng(11);
  for (const RootSystem& rs : {rank1_system(1.0), product_system({1.0, 1.0}), a2_system(1.0)}) {
    CoxeterGroup g = generate_group(rs);
    for (int t = 0; t < 200; ++t) {
      Vec x = random_vec(rng, rs.dimension), y = random_vec(rng, rs.dimension), z = random_vec(rng, rs.dimension);
      const double d = orbit_distance(g, x, y);
      CHECK(d >= 0.0);
      CHECK(d <= (x - y).norm() + 1e-15);
      CHECK(std::abs(d - orbit_distance(g, y, x)) < 1e-12);
      CHECK(orbit_distance(g, x, z) <= d + orbit_distance(g, y, z) + 1e-12);
      for (const Mat& s : g.elements) CHECK(std::abs(orbit_distance(g, s * x, y) - d) < 1e-12);
    }
  }
}

TEST_CASE("chambers") {
  RootSystem r1 = rank1_system(1.0);
  WeylChamber c = chamber_of(r1, vec({3.0}));
  REQUIRE(c.signs.size() == 1);
  CHECK(c.signs[0] == 1);
  CHECK(!c.on_wall);
  CHECK(c.contains(r1, vec({1.0})));
  CHECK(c.contains(r1, vec({2.0})));
  CHECK(!c.contains(r1, vec({-1.0})));
  CHECK(orbit_distance(generate_group(r1), vec({1.0}), vec({2.0})) == doctest::Approx(1.0));

  RootSystem z2 = product_system({1.0, 1.0});
  WeylChamber cz = chamber_of(z2, vec({1.0, -2.0}));
  // positive roots are sqrt2 e1 and sqrt2 e2, in that order
  REQUIRE(cz.signs.size() == 2);
  CHECK(cz.signs[0] == 1);
  CHECK(cz.signs[1] == -1);
  WeylChamber wall = chamber_of(z2, vec({0.0, 1.0}));
  CHECK(wall.on_wall);
  CHECK(wall.contains(z2, vec({0.0, 1.0})));
}

TEST_CASE("orbit distance equals the Euclidean distance within a chamber") {
  std::mt19937_64 rng(5);
  for (const RootSystem& rs : {rank1_system(1.0), product_system({1.0, 1.0}), a2_system(1.0)}) {
    CoxeterGroup g = generate_group(rs);
    int pairs = 0;
    while (pairs < 1000) {
      Vec x = random_vec(rng, rs.dimension), y = random_vec(rng, rs.dimension);
      WeylChamber c = chamber_of(rs, x);
      if (!c.contains(rs, y)) continue;
      ++pairs;
      CHECK(std::abs(orbit_distance(g, x, y) - (x - y).norm()) < 1e-12);
    }
  }
}

TEST_CASE("group elements preserve the weight") {
  std::mt19937_64 rng(9);
  for (const RootSystem& rs : {rank1_system(0.7), product_system({1.0, 0.3}), a2_system(1.5), b2_system(0.5, 1.0)}) {
    WeightedMeasure m(rs);
    CoxeterGroup g = generate_group(rs);
    for (int t = 0; t < 100; ++t) {
      Vec x = random_vec(rng, rs.dimension);
      const double w = weight(m, x);
      for (const Mat& s : g.elements) CHECK(std::abs(weight(m, s * x) - w) <= 1e-10 * w);
    }
  }
}

TEST_CASE("json round trip re-validates") {
  RootSystem a2 = a2_system(0.5);
  RootSystem back = root_system_from_json(root_system_to_json(a2));
  CHECK(back.roots.size() == a2.roots.size());
  CHECK(generate_group(back).size() == 6);
  nlohmann::json bad = {{"dimension", 1}, {"roots", {{1.0}, {-1.0}}}, {"multiplicity", {1.0, 2.0}}};
  CHECK_THROWS_AS(root_system_from_json(bad), Error);
  nlohmann::json malformed = {{"dimension", 1}};
  CHECK_THROWS_AS(root_system_from_json(malformed), Error);
}

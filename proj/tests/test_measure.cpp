#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dunkl/measure.hpp"

using namespace dunkl;

namespace {

// closed-form rank-1 volume: integral of 2^k |x|^{2k} over [c-r, c+r]
double rank1_volume(double k, double c, double r) {
  auto F = [k](double x) { return std::copysign(std::pow(std::abs(x), 2 * k + 1), x) / (2 * k + 1); };
  return std::pow(2.0, k) * (F(c + r) - F(c - r));
}

QuadratureSpec gauss(int n) {
  QuadratureSpec q;
  q.resolution = n;
  return q;
}

}  // namespace

TEST_CASE("weight examples") {
  WeightedMeasure m1(rank1_system(1.0));
  for (double x : {-2.0, -0.3, 0.0, 0.7, 5.0}) CHECK(weight(m1, vec({x})) == doctest::Approx(2 * x * x).epsilon(1e-14));
  WeightedMeasure m2(product_system({1.0, 1.0}));
  CHECK(weight(m2, vec({1.0, 2.0})) == doctest::Approx(16.0).epsilon(1e-14));
  WeightedMeasure m0(a2_system(0.0));
  CHECK(weight(m0, vec({0.4, -1.1})) == 1.0);
  CHECK(weight(m2, vec({0.0, 2.0})) == 0.0);
  CHECK(m1.hom_dim == doctest::Approx(3.0));
  CHECK(WeightedMeasure(a2_system(1.0)).hom_dim == doctest::Approx(8.0));
}

TEST_CASE("weight is homogeneous of degree N_hom - N") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3), ut(0.1, 10);
  for (const RootSystem& rs : {rank1_system(0.5), product_system({1.0, 0.25}), a2_system(0.7), b2_system(1.0, 0.5)}) {
    WeightedMeasure m(rs);
    for (int i = 0; i < 200; ++i) {
      Vec x(rs.dimension);
      for (int d = 0; d < rs.dimension; ++d) x[d] = u(rng);
      const double t = ut(rng);
      const double wt = weight(m, t * x);
      CHECK(std::abs(wt - std::pow(t, m.hom_dim - m.dim()) * weight(m, x)) / wt < 1e-12);
    }
  }
}

TEST_CASE("integrate examples") {
  WeightedMeasure m1(rank1_system(1.0));
  auto one = [](const Vec&) { return cplx(1.0); };
  CHECK(integrate(m1, one, Ball{vec({0.0}), 1.0}, gauss(16)).real() == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  WeightedMeasure m0(rank1_system(0.0));
  CHECK(integrate(m0, one, Ball{vec({0.0}), 1.0}, gauss(16)).real() == doctest::Approx(2.0).epsilon(1e-14));
  auto odd = [](const Vec& x) { return cplx(std::sin(x[0]) * std::exp(x[0] * x[0] / 5)); };
  CHECK(std::abs(integrate(m1, odd, Ball{vec({0.0}), 1.7}, gauss(16))) < 1e-14);
  WeightedMeasure m2(product_system({1.0, 1.0}));
  auto odd2 = [](const Vec& x) { return cplx(x[0] * std::cos(x[1])); };
  CHECK(std::abs(integrate(m2, odd2, Ball{vec({0.0, 0.0}), 1.3}, gauss(16))) < 1e-13);
  QuadratureSpec mid;
  mid.scheme = Scheme::tensor_midpoint;
  mid.resolution = 8;
  auto bad = [](const Vec& x) { return cplx(1.0 / (x[0] - 0.28125)); };
  CHECK_THROWS_AS(integrate(m0, bad, BoxRegion{vec({0.0}), vec({0.5})}, mid), Error);
  // samples on a hyperplane are dropped when the weight vanishes there
  auto sing = [](const Vec& x) { return cplx(1.0 / x[0]); };
  QuadratureSpec mid1 = mid;
  mid1.resolution = 9;
  CHECK_NOTHROW(integrate(m1, sing, BoxRegion{vec({-0.5}), vec({1.0})}, mid1));
}

TEST_CASE("rank-1 ball volumes match the antiderivative") {
  WeightedMeasure m(rank1_system(1.0));
  for (double r : {0.01, 0.5, 1.0, 3.7, 100.0})
    CHECK(std::abs(ball_volume(m, vec({0.0}), r, gauss(16)) - 4.0 / 3.0 * r * r * r) <= 1e-8 * (4.0 / 3.0) * r * r * r);
  for (double k : {0.0, 0.3, 0.5, 1.0, 2.25}) {
    WeightedMeasure mk(rank1_system(k));
    for (auto [c, r] : {std::pair{0.0, 1.0}, {0.4, 1.0}, {-2.0, 0.5}, {1.5, 3.0}, {0.5, 0.5}}) {
      const double exact = rank1_volume(k, c, r);
      CHECK(std::abs(ball_volume(mk, vec({c}), r, gauss(32)) - exact) <= 1e-10 * exact);
    }
  }
  WeightedMeasure m0(rank1_system(0.0));
  CHECK(ball_volume(m0, vec({3.3}), 0.7, gauss(8)) == doctest::Approx(1.4).epsilon(1e-14));
  CHECK_THROWS_AS(ball_volume(m0, vec({0.0}), 0.0, gauss(8)), Error);
  CHECK_THROWS_AS(ball_volume(m0, vec({0.0}), 1.0, gauss(4)), Error);
}

TEST_CASE("planar ball volumes against polar closed forms") {
  // Z2^2 with k=(1,1): w = 4 x1^2 x2^2, so w(B(0,r)) = pi r^6 / 6
  WeightedMeasure m(product_system({1.0, 1.0}));
  for (double r : {0.5, 1.0, 2.0})
    CHECK(std::abs(ball_volume(m, vec({0.0, 0.0}), r, gauss(16)) - std::numbers::pi * std::pow(r, 6) / 6) <
          1e-12 * std::pow(r, 6));
  // Lebesgue disc, any center
  WeightedMeasure m0(product_system({0.0, 0.0}));
  CHECK(ball_volume(m0, vec({0.3, -1.2}), 0.9, gauss(16)) == doctest::Approx(std::numbers::pi * 0.81).epsilon(1e-13));
  // k=(1/2,1/2): w = 2|x1||x2|, w(B(0,r)) = 2 r^4 / 4 * int |cos sin| = r^4
  WeightedMeasure mh(product_system({0.5, 0.5}));
  CHECK(ball_volume(mh, vec({0.0, 0.0}), 1.3, gauss(16)) == doctest::Approx(std::pow(1.3, 4)).epsilon(1e-12));
}

TEST_CASE("scaling law w(B(tx,tr)) = t^N w(B(x,r))") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2), ur(0.05, 2), ut(0.2, 5);
  for (const RootSystem& rs : {rank1_system(0.5), rank1_system(1.0), rank1_system(0.3), product_system({1.0, 1.0}),
                               product_system({0.5, 1.0}), a2_system(1.0)}) {
    WeightedMeasure m(rs);
    for (int i = 0; i < 20; ++i) {
      Vec x(rs.dimension);
      for (int d = 0; d < rs.dimension; ++d) x[d] = u(rng);
      const double r = ur(rng), t = ut(rng);
      const double a = ball_volume(m, t * x, t * r, gauss(64)), b = ball_volume(m, x, r, gauss(64));
      CHECK(std::abs(a / b / std::pow(t, m.hom_dim) - 1.0) < 1e-6);
    }
  }
  WeightedMeasure m(rank1_system(1.0));
  const double v1 = ball_volume(m, vec({0.7}), 0.4, gauss(64)), v2 = ball_volume(m, vec({1.4}), 0.8, gauss(64));
  CHECK(v2 / v1 == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("volume asymptotics ratios") {
  WeightedMeasure m(rank1_system(1.0));
  auto rep = check_volume_asymptotics(m, {{vec({0.0}), 0.5}, {vec({0.0}), 3.0}}, gauss(16));
  CHECK(rep.min_ratio == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(rep.max_ratio == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  WeightedMeasure m0(rank1_system(0.0));
  auto rep0 = check_volume_asymptotics(m0, {{vec({1.0}), 0.5}, {vec({-4.0}), 3.0}}, gauss(16));
  CHECK(rep0.min_ratio == doctest::Approx(2.0));
  CHECK(rep0.max_ratio == doctest::Approx(2.0));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5, 5), lr(-6, 3);
  for (const RootSystem& rs : {rank1_system(1.0), product_system({1.0, 1.0}), a2_system(0.5)}) {
    WeightedMeasure mm(rs);
    std::vector<std::pair<Vec, double>> samples;
    for (int i = 0; i < 500; ++i) {
      Vec x(rs.dimension);
      for (int d = 0; d < rs.dimension; ++d) x[d] = u(rng);
      samples.push_back({x, std::exp2(lr(rng))});
    }
    auto r = check_volume_asymptotics(mm, samples, gauss(16));
    CHECK(r.min_ratio > 0.0);
    CHECK(std::isfinite(r.max_ratio));
    // the bracket is a fixed constant: it does not drift with scale
    CHECK(r.max_ratio / r.min_ratio < 100.0);
  }
}

TEST_CASE("growth checks") {
  WeightedMeasure m(rank1_system(1.0));
  auto [lo, hi] = check_growth(m, vec({0.0}), 0.5, 4.0, gauss(16));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lo == doctest::Approx(64.0).epsilon(1e-12));
  WeightedMeasure m0(product_system({0.0, 0.0}));
  auto [a, b] = check_growth(m0, vec({1.0, 2.0}), 0.3, 1.1, gauss(16));
  CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
  auto [c, d] = check_growth(m, vec({0.3}), 0.7, 0.7, gauss(16));
  CHECK(c == doctest::Approx(1.0));
  CHECK(d == doctest::Approx(1.0));
  CHECK_THROWS_AS(check_growth(m, vec({0.0}), 2.0, 1.0, gauss(16)), Error);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-5, 5), lr(-5, 3);
  double min_lo = INFINITY, max_hi = 0.0;
  for (int i = 0; i < 500; ++i) {
    double r1 = std::exp2(lr(rng)), r2 = r1 * std::exp2(std::abs(lr(rng)));
    auto [g1, g2] = check_growth(m, vec({u(rng)}), r1, r2, gauss(16));
    min_lo = std::min(min_lo, g1);
    max_hi = std::max(max_hi, g2);
  }
  CHECK(min_lo > 0.0);
  CHECK(max_hi < INFINITY);
  CHECK(max_hi <= 1.0 + 1e-9);  // rank-1: ball volume grows at most like r^N_hom
}

TEST_CASE("integration is invariant under the group") {
  WeightedMeasure m(a2_system(1.0));
  CoxeterGroup g = generate_group(m.rs);
  auto f = [](const Vec& x) { return cplx(std::exp(-(x[0] - 0.3) * (x[0] - 0.3) - 2 * (x[1] + 0.1) * (x[1] + 0.1)) * (1 + x[0])); };
  const cplx base = integrate(m, f, Ball{vec({0, 0}), 1.5}, gauss(32));
  for (const Mat& s : g.elements) {
    auto fs = [&](const Vec& x) { return f(s * x); };
    CHECK(std::abs(integrate(m, fs, Ball{vec({0, 0}), 1.5}, gauss(32)) - base) < 1e-8 * std::abs(base));
  }
}

TEST_CASE("annuli and whole-space integrals") {
  WeightedMeasure m(rank1_system(1.0));
  auto one = [](const Vec&) { return cplx(1.0); };
  CHECK(integrate(m, one, AnnulusRegion{vec({0.0}), 0.5, 2.0}, gauss(16)).real() ==
        doctest::Approx(4.0 / 3.0 * (8.0 - 0.125)).epsilon(1e-13));
  WeightedMeasure m2(product_system({1.0, 1.0}));
  CHECK(integrate(m2, one, AnnulusRegion{vec({0.0, 0.0}), 1.0, 2.0}, gauss(16)).real() ==
        doctest::Approx(std::numbers::pi / 6 * 63).epsilon(1e-12));
  // c_k of the Gaussian in rank one: 2^{2k+1/2} Gamma(k+1/2)
  QuadratureSpec q = gauss(32);
  q.truncation_radius = 12.0;
  q.tolerance = 1e-12;
  q.panel_length = 1.0;
  for (double k : {0.0, 0.5, 1.0, 0.3}) {
    WeightedMeasure mk(rank1_system(k));
    auto r = integrate_whole(mk, [](const Vec& x) { return cplx(std::exp(-x.squaredNorm() / 2)); }, q);
    CHECK(r.converged);
    CHECK(r.value.real() == doctest::Approx(std::pow(2.0, 2 * k + 0.5) * std::tgamma(k + 0.5)).epsilon(1e-10));
  }
}

TEST_CASE("quadrature schemes converge and the resolution gate passes") {
  WeightedMeasure m(rank1_system(0.5));
  const double exact = rank1_volume(0.5, 0.3, 1.0);
  for (Scheme s : {Scheme::tensor_midpoint, Scheme::adaptive_dyadic}) {
    QuadratureSpec q;
    q.scheme = s;
    q.resolution = 256;
    CHECK(std::abs(ball_volume(m, vec({0.3}), 1.0, q) - exact) < 1e-4);
  }
  auto gate = ball_volume_convergence(m, vec({0.3}), 1.0, gauss(16));
  CHECK(gate.passed);
  WeightedMeasure m2(b2_system(0.5, 1.0));
  CHECK(ball_volume_convergence(m2, vec({0.2, -0.4}), 1.0, gauss(32)).passed);
}

TEST_CASE("ball volume csv") {
  std::ostringstream os;
  write_ball_volume_csv(os, {{vec({0.0, 1.0}), 0.5, 0.25, gauss(16)}});
  CHECK(os.str() == "center_1,center_2,radius,volume,scheme,resolution\n0,1,0.5,0.25,tensor-gauss-legendre,16\n");
}

TEST_CASE("fast ball volume agrees with closed forms and quadrature") {
  WeightedMeasure r1(rank1_system(1.0));
  CHECK(std::abs(fast_ball_volume(r1, vec({0.0}), 1.0) - 4.0 / 3.0) < 1e-14);
  WeightedMeasure p11(product_system({1.0, 1.0}));
  CHECK(std::abs(fast_ball_volume(p11, vec({0.0, 0.0}), 1.3) / (M_PI * std::pow(1.3, 6) / 6) - 1) < 1e-12);
  WeightedMeasure phalf(product_system({0.5, 0.5}));
  CHECK(std::abs(fast_ball_volume(phalf, vec({0.0, 0.0}), 2.0) / 16.0 - 1) < 1e-9);
  WeightedMeasure p(product_system({0.7, 1.3}));
  QuadratureSpec q;
  q.resolution = 96;
  for (const Vec& c : {vec({0.3, -0.2}), vec({2.0, 0.5}), vec({-0.1, 3.0})}) {
    const double f = fast_ball_volume(p, c, 0.9), s = ball_volume(p, c, 0.9, q);
    CHECK(std::abs(f / s - 1) < 1e-9);
  }
  CHECK(product_multiplicities(a2_system(1.0)) == std::nullopt);
}

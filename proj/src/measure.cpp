#include "dunkl/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace dunkl {

namespace {

constexpr int kGradeLevels = 14;

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

struct Axis {
  Scheme scheme;
  int n;
  bool grade;  // weight is not piecewise polynomial: refine towards hyperplanes
  double panel = 0.0;
};

Rule1D piece(const Axis& ax, double a, double b, bool sing_a, bool sing_b) {
  if (b <= a) return {};
  if (ax.panel > 0.0 && b - a > ax.panel) {
    const int np = static_cast<int>(std::ceil((b - a) / ax.panel));
    const double h = (b - a) / np;
    Axis one = ax;
    one.panel = 0.0;
    Rule1D r;
    for (int i = 0; i < np; ++i) r.append(piece(one, a + i * h, a + (i + 1) * h, sing_a && i == 0, sing_b && i == np - 1));
    return r;
  }
  const bool ga = ax.grade && sing_a, gb = ax.grade && sing_b;
  switch (ax.scheme) {
    case Scheme::tensor_gauss:
      return graded_gauss(a, b, ax.n, ga, gb, kGradeLevels);
    case Scheme::tensor_midpoint:
      return midpoint_on(a, b, ax.n);
    case Scheme::adaptive_dyadic: {
      // midpoint panels halving towards singular ends
      if (!sing_a && !sing_b) return midpoint_on(a, b, ax.n);
      if (sing_a && sing_b) {
        Rule1D r = piece(ax, a, 0.5 * (a + b), true, false);
        r.append(piece(ax, 0.5 * (a + b), b, false, true));
        return r;
      }
      Rule1D r;
      double lo = 0.0, hi = 1.0;
      std::vector<std::pair<double, double>> panels;
      for (int j = 0; j < 2 * kGradeLevels; ++j) {
        const double mid = 0.5 * (lo + hi);
        panels.push_back({mid, hi});
        hi = mid;
      }
      panels.push_back({0.0, hi});
      for (auto [u, v] : panels) {
        double p = sing_a ? u : 1.0 - v, q = sing_a ? v : 1.0 - u;
        r.append(midpoint_on(a + (b - a) * p, a + (b - a) * q, std::max(2, ax.n / 4)));
      }
      return r;
    }
  }
  return {};
}

// rule on [a,b] broken at the singular points inside; ends flagged singular when they sit on one
Rule1D broken(const Axis& ax, double a, double b, std::vector<double> sing) {
  std::sort(sing.begin(), sing.end());
  const double tol = 1e-13 * std::max({1.0, std::abs(a), std::abs(b)});
  auto on_sing = [&](double p) {
    for (double s : sing)
      if (std::abs(p - s) <= tol) return true;
    return false;
  };
  std::vector<double> pts{a};
  for (double s : sing)
    if (s > a + tol && s < b - tol) pts.push_back(s);
  pts.push_back(b);
  Rule1D r;
  for (size_t i = 0; i + 1 < pts.size(); ++i) r.append(piece(ax, pts[i], pts[i + 1], on_sing(pts[i]), on_sing(pts[i + 1])));
  return r;
}

// geometric radial panels from a to b
Rule1D radial(const Axis& ax, double a, double b) {
  Rule1D r;
  if (a <= 0.0) {
    const double first = b / 64.0;
    r = piece(ax, 0.0, first, true, false);
    a = first;
  }
  double lo = a;
  while (lo < b) {
    const double hi = std::min(b, 2.0 * lo);
    r.append(piece(ax, lo, hi, false, false));
    lo = hi;
  }
  return r;
}

void add_point(PointRule& pr, const WeightedMeasure& m, const Vec& x, double w) {
  pr.x.push_back(x);
  pr.w.push_back(w * weight(m, x));
}

std::vector<Vec> positive_roots(const RootSystem& rs) {
  std::vector<Vec> out;
  for (int i : rs.positive()) out.push_back(rs.roots[i]);
  return out;
}

PointRule ball_rule_1d(const WeightedMeasure& m, const Axis& ax, double c, double r) {
  PointRule pr;
  Rule1D rule = broken(ax, c - r, c + r, {0.0});
  for (size_t i = 0; i < rule.size(); ++i) add_point(pr, m, vec({rule.x[i]}), rule.w[i]);
  return pr;
}

PointRule ball_rule_2d(const WeightedMeasure& m, const Axis& ax, const Vec& c, double r) {
  const auto pos = positive_roots(m.rs);
  std::vector<double> theta_breaks;
  auto add_x1 = [&](double x1) {
    const double s = (x1 - c[0]) / r;
    if (std::abs(s) < 1.0) theta_breaks.push_back(std::asin(s));
  };
  add_x1(0.0);
  for (const Vec& a : pos) {
    const Vec d = vec({-a[1], a[0]});
    const double A = d.squaredNorm(), B = -2.0 * d.dot(c), C = c.squaredNorm() - r * r;
    const double disc = B * B - 4.0 * A * C;
    if (disc > 0.0) {
      const double sq = std::sqrt(disc);
      add_x1((-B - sq) / (2.0 * A) * d[0]);
      add_x1((-B + sq) / (2.0 * A) * d[0]);
    }
  }
  const double pi2 = std::numbers::pi / 2.0;
  Rule1D outer = broken(ax, -pi2, pi2, theta_breaks);
  PointRule pr;
  for (size_t i = 0; i < outer.size(); ++i) {
    const double th = outer.x[i];
    const double x1 = c[0] + r * std::sin(th);
    const double h = r * std::cos(th);
    std::vector<double> x2_breaks;
    for (const Vec& a : pos)
      if (std::abs(a[1]) > 1e-12) x2_breaks.push_back(-a[0] * x1 / a[1]);
    Rule1D inner = broken(ax, c[1] - h, c[1] + h, x2_breaks);
    for (size_t j = 0; j < inner.size(); ++j) add_point(pr, m, vec({x1, inner.x[j]}), outer.w[i] * h * inner.w[j]);
  }
  return pr;
}

PointRule box_rule(const WeightedMeasure& m, const Axis& ax, const Vec& lo, const Vec& hi, const Ball* clip) {
  const int n = m.dim();
  std::vector<Rule1D> axes;
  for (int d = 0; d < n; ++d) axes.push_back(broken(ax, lo[d], hi[d], {0.0}));
  PointRule pr;
  std::vector<size_t> idx(n, 0);
  while (true) {
    Vec x(n);
    double w = 1.0;
    for (int d = 0; d < n; ++d) {
      x[d] = axes[d].x[idx[d]];
      w *= axes[d].w[idx[d]];
    }
    if (!clip || (x - clip->center).norm() < clip->radius) add_point(pr, m, x, w);
    int d = 0;
    while (d < n && ++idx[d] == axes[d].size()) idx[d++] = 0;
    if (d == n) break;
  }
  return pr;
}

PointRule centered_annulus(const WeightedMeasure& m, const Axis& ax, double a, double b) {
  PointRule pr;
  Rule1D rad = radial(ax, a, b);
  if (m.dim() == 1) {
    for (size_t i = 0; i < rad.size(); ++i) {
      add_point(pr, m, vec({rad.x[i]}), rad.w[i]);
      add_point(pr, m, vec({-rad.x[i]}), rad.w[i]);
    }
    return pr;
  }
  std::vector<double> phi_breaks;
  for (const Vec& al : positive_roots(m.rs)) {
    double p = std::atan2(al[0], -al[1]);
    for (int s = -2; s <= 2; ++s) phi_breaks.push_back(p + s * std::numbers::pi);
  }
  Rule1D ang = broken(ax, 0.0, 2.0 * std::numbers::pi, phi_breaks);
  for (size_t i = 0; i < rad.size(); ++i)
    for (size_t j = 0; j < ang.size(); ++j) {
      const double rho = rad.x[i];
      add_point(pr, m, vec({rho * std::cos(ang.x[j]), rho * std::sin(ang.x[j])}), rad.w[i] * ang.w[j] * rho);
    }
  return pr;
}

}  // namespace

WeightedMeasure::WeightedMeasure(RootSystem r) : rs(std::move(r)) {
  hom_dim = rs.dimension + rs.k_sum();
}

bool WeightedMeasure::polynomial_weight() const {
  for (double k : rs.multiplicity)
    if (!is_integer(2.0 * k)) return false;
  return true;
}

void QuadratureSpec::validate() const {
  if (resolution < 8) fail(ErrorCode::invalid_argument, "quadrature resolution must be at least 8");
  if (!(tolerance > 0.0)) fail(ErrorCode::invalid_argument, "quadrature tolerance must be positive");
  if (!(truncation_radius > 0.0)) fail(ErrorCode::invalid_argument, "truncation radius must be positive");
}

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::tensor_midpoint: return "tensor-midpoint";
    case Scheme::tensor_gauss: return "tensor-gauss-legendre";
    case Scheme::adaptive_dyadic: return "adaptive-dyadic";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& s) {
  if (s == "tensor-midpoint") return Scheme::tensor_midpoint;
  if (s == "tensor-gauss-legendre") return Scheme::tensor_gauss;
  if (s == "adaptive-dyadic") return Scheme::adaptive_dyadic;
  fail(ErrorCode::unresolved_name, "unknown quadrature scheme '" + s + "'");
}

double weight(const WeightedMeasure& m, const Vec& x) {
  double w = 1.0;
  for (size_t i = 0; i < m.rs.roots.size(); ++i) {
    const double k = m.rs.multiplicity[i];
    if (k == 0.0) continue;
    w *= std::pow(std::abs(x.dot(m.rs.roots[i])), k);
  }
  return w;
}

PointRule region_rule(const WeightedMeasure& m, const Region& region, const QuadratureSpec& q) {
  q.validate();
  const Axis ax{q.scheme, q.resolution, !m.polynomial_weight(), q.panel_length};
  const int n = m.dim();
  if (const Ball* b = std::get_if<Ball>(&region)) {
    if (!(b->radius > 0.0)) fail(ErrorCode::invalid_argument, "ball radius must be positive");
    if (n == 1) return ball_rule_1d(m, ax, b->center[0], b->radius);
    if (n == 2 && q.scheme != Scheme::tensor_midpoint) return ball_rule_2d(m, ax, b->center, b->radius);
    Vec lo = b->center.array() - b->radius, hi = b->center.array() + b->radius;
    Axis mid{Scheme::tensor_midpoint, q.resolution, false, 0.0};
    return box_rule(m, mid, lo, hi, b);
  }
  if (const AnnulusRegion* a = std::get_if<AnnulusRegion>(&region)) {
    if (!(a->outer > a->inner) || a->inner < 0.0) fail(ErrorCode::invalid_argument, "annulus needs 0 <= inner < outer");
    if (a->center.norm() == 0.0 && n <= 2) return centered_annulus(m, ax, a->inner, a->outer);
    PointRule big = region_rule(m, Ball{a->center, a->outer}, q);
    if (a->inner > 0.0) {
      PointRule small = region_rule(m, Ball{a->center, a->inner}, q);
      for (size_t i = 0; i < small.x.size(); ++i) {
        big.x.push_back(small.x[i]);
        big.w.push_back(-small.w[i]);
      }
    }
    return big;
  }
  const BoxRegion& bx = std::get<BoxRegion>(region);
  return box_rule(m, ax, bx.lo, bx.hi, nullptr);
}

cplx integrate(const WeightedMeasure& m, const Integrand& f, const Region& region, const QuadratureSpec& q) {
  PointRule pr = region_rule(m, region, q);
  cplx s = 0.0;
  for (size_t i = 0; i < pr.x.size(); ++i) {
    if (pr.w[i] == 0.0) continue;  // on a hyperplane with positive multiplicity
    const cplx v = f(pr.x[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorCode::numeric, "integrand is not finite at a quadrature node");
    s += v * pr.w[i];
  }
  return s;
}

WholeSpaceIntegral integrate_whole(const WeightedMeasure& m, const Integrand& f, const QuadratureSpec& q) {
  const Vec o = Vec::Zero(m.dim());
  const cplx a = integrate(m, f, Ball{o, q.truncation_radius}, q);
  const cplx b = integrate(m, f, Ball{o, 2.0 * q.truncation_radius}, q);
  WholeSpaceIntegral out;
  out.value = b;
  out.richardson_delta = std::abs(b - a);
  out.converged = out.richardson_delta < q.tolerance;
  return out;
}

double ball_volume(const WeightedMeasure& m, const Vec& x, double r, const QuadratureSpec& q) {
  if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "ball radius must be positive");
  PointRule pr = region_rule(m, Ball{x, r}, q);
  double s = 0.0;
  for (double w : pr.w) s += w;
  return s;
}

double volume_model(const WeightedMeasure& m, const Vec& x, double r) {
  double v = std::pow(r, m.dim());
  for (size_t i = 0; i < m.rs.roots.size(); ++i)
    v *= std::pow(std::abs(x.dot(m.rs.roots[i])) + r, m.rs.multiplicity[i]);
  return v;
}

AsymptoticsReport check_volume_asymptotics(const WeightedMeasure& m, const std::vector<std::pair<Vec, double>>& samples,
                                           const QuadratureSpec& q) {
  AsymptoticsReport rep;
  rep.min_ratio = INFINITY;
  rep.max_ratio = 0.0;
  for (const auto& [x, r] : samples) {
    const double ratio = ball_volume(m, x, r, q) / volume_model(m, x, r);
    rep.ratios.push_back(ratio);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

std::pair<double, double> check_growth(const WeightedMeasure& m, const Vec& x, double r1, double r2,
                                       const QuadratureSpec& q) {
  if (!(r1 > 0.0) || r2 < r1) fail(ErrorCode::precondition, "growth check needs r2 >= r1 > 0");
  const double ratio = ball_volume(m, x, r2, q) / ball_volume(m, x, r1, q);
  const double t = r2 / r1;
  return {ratio / std::pow(t, m.dim()), ratio / std::pow(t, m.hom_dim)};
}

ConvergenceGate ball_volume_convergence(const WeightedMeasure& m, const Vec& x, double r, const QuadratureSpec& q) {
  QuadratureSpec q2 = q;
  q2.resolution *= 2;
  ConvergenceGate g;
  g.coarse = ball_volume(m, x, r, q);
  g.fine = ball_volume(m, x, r, q2);
  g.passed = std::abs(g.fine - g.coarse) <= q.tolerance * std::max(1.0, std::abs(g.fine));
  return g;
}

std::optional<std::vector<double>> product_multiplicities(const RootSystem& rs) {
  const int n = rs.dimension;
  std::vector<double> ks(n, 0.0);
  std::vector<int> count(n, 0);
  for (size_t i = 0; i < rs.roots.size(); ++i) {
    const Vec& a = rs.roots[i];
    int axis = -1;
    for (int d = 0; d < n; ++d) {
      if (std::abs(std::abs(a[d]) - std::sqrt(2.0)) < 1e-12) {
        if (axis >= 0) return std::nullopt;
        axis = d;
      } else if (std::abs(a[d]) > 1e-12) {
        return std::nullopt;
      }
    }
    if (axis < 0) return std::nullopt;
    ++count[axis];
    ks[axis] = rs.multiplicity[i];
  }
  for (int d = 0; d < n; ++d)
    if (count[d] != 2) return std::nullopt;
  return ks;
}

double interval_mass(double k, double a, double b) {
  auto F = [k](double x) { return std::copysign(std::pow(std::abs(x), 2 * k + 1), x) / (2 * k + 1); };
  return std::pow(2.0, k) * (F(b) - F(a));
}

double fast_ball_volume(const WeightedMeasure& m, const Vec& x, double r) {
  if (r <= 0.0) return 0.0;
  auto ks = product_multiplicities(m.rs);
  if (ks && m.dim() == 1) return interval_mass((*ks)[0], x[0] - r, x[0] + r);
  if (ks && m.dim() == 2) {
    // x1 = c1 + r sin(theta); the chord in x2 has a closed-form mass
    const double k1 = (*ks)[0], k2 = (*ks)[1];
    // breaks where x1 crosses 0 and where a chord end crosses x2 = 0
    std::vector<std::pair<double, bool>> breaks;
    if (std::abs(x[0]) < r) breaks.push_back({std::asin(-x[0] / r), true});
    if (std::abs(x[1]) < r) {
      const double t = std::acos(std::abs(x[1]) / r);
      breaks.push_back({-t, false});
      breaks.push_back({t, false});
    }
    breaks.push_back({M_PI / 2, false});
    std::sort(breaks.begin(), breaks.end());
    const bool smooth = std::abs(2 * k1 - std::round(2 * k1)) < 1e-12;
    double lo = -M_PI / 2, total = 0.0;
    bool lo_wall = false;
    for (auto [hi, hi_wall] : breaks) {
      if (hi - lo < 1e-15) {
        lo_wall = lo_wall || hi_wall;
        continue;
      }
      Rule1D rule = smooth || !(lo_wall || hi_wall) ? composite_gauss(lo, hi, {}, 24, 3)
                                                    : graded_gauss(lo, hi, 24, lo_wall, hi_wall, 14);
      for (size_t i = 0; i < rule.size(); ++i) {
        const double s = std::sin(rule.x[i]), c = std::cos(rule.x[i]);
        const double x1 = x[0] + r * s, h = r * c;
        total += rule.w[i] * r * c * std::pow(2.0, k1) * std::pow(std::abs(x1), 2 * k1) * interval_mass(k2, x[1] - h, x[1] + h);
      }
      lo = hi;
      lo_wall = hi_wall;
    }
    return total;
  }
  return ball_volume(m, x, r, QuadratureSpec{});
}

void write_ball_volume_csv(std::ostream& os, const std::vector<BallVolumeRow>& rows) {
  const int n = rows.empty() ? 1 : static_cast<int>(rows.front().center.size());
  for (int d = 0; d < n; ++d) os << "center_" << d + 1 << ",";
  os << "radius,volume,scheme,resolution\n";
  os.precision(17);
  for (const auto& row : rows) {
    for (int d = 0; d < n; ++d) os << row.center[d] << ",";
    os << row.radius << "," << row.volume << "," << scheme_name(row.spec.scheme) << "," << row.spec.resolution << "\n";
  }
}

}  // namespace dunkl

#include "dunkl/function_spaces.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "dunkl/parallel.hpp"

namespace dunkl {

namespace {

struct Sampled {
  std::vector<cplx> v;
  std::vector<double> w;
  double mass = 0.0;
};

Sampled sample(const PointRule& pr, const Integrand& f) {
  Sampled s;
  for (size_t i = 0; i < pr.x.size(); ++i) {
    if (pr.w[i] == 0.0) continue;
    const cplx v = f(pr.x[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) fail(ErrorCode::numeric, "function is not finite at a quadrature node");
    s.v.push_back(v);
    s.w.push_back(pr.w[i]);
    s.mass += pr.w[i];
  }
  if (!(s.mass > 0.0)) fail(ErrorCode::precondition, "set has zero measure");
  return s;
}

cplx mean(const Sampled& s) {
  cplx acc = 0.0;
  for (size_t i = 0; i < s.v.size(); ++i) acc += s.w[i] * s.v[i];
  return acc / s.mass;
}

double oscillation(const Sampled& s) {
  const cplx m = mean(s);
  double acc = 0.0;
  for (size_t i = 0; i < s.v.size(); ++i) acc += s.w[i] * std::abs(s.v[i] - m);
  return acc / s.mass;
}

double best_constant(const Sampled& s) {
  double lo = INFINITY, hi = -INFINITY, scale = 0.0;
  for (const cplx& v : s.v) {
    lo = std::min(lo, v.real());
    hi = std::max(hi, v.real());
    scale = std::max(scale, std::abs(v));
  }
  for (const cplx& v : s.v)
    if (std::abs(v.imag()) > 1e-12 * std::max(1.0, scale))
      fail(ErrorCode::precondition, "sharp maximal function needs a real-valued function");
  auto F = [&](double c) {
    double acc = 0.0;
    for (size_t i = 0; i < s.v.size(); ++i) acc += s.w[i] * std::abs(s.v[i].real() - c);
    return acc / s.mass;
  };
  // F is convex and 1-Lipschitz in c, so the bracket width bounds the error in the value
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = F(c1), f2 = F(c2);
  while (b - a > 1e-13 * std::max(1.0, scale)) {
    if (f1 <= f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = F(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = F(c2);
    }
  }
  return std::min({f1, f2, F(0.5 * (a + b))});
}

bool contains(const Ball& b, const Vec& x) { return (x - b.center).norm() < b.radius; }

template <class Measure>
BmoReport run_bmo(const BallFamily& family, int rounds, int jobs, Measure&& osc_of) {
  if (rounds < 0) fail(ErrorCode::invalid_argument, "refinement rounds must be >= 0");
  family.validate();
  BmoReport rep;
  BallFamily fam = family;
  for (int round = 0; round <= rounds; ++round) {
    if (round > 0) fam = fam.refined();
    std::vector<double> osc(fam.size());
    parallel_for(fam.size(), jobs, [&](size_t i) { osc[i] = osc_of(fam.ball(i)); });
    rep.table.clear();
    double best = -1.0;
    for (size_t i = 0; i < osc.size(); ++i) {
      rep.table.push_back({fam.ball(i), osc[i]});
      if (osc[i] > best) {
        best = osc[i];
        rep.argmax = fam.ball(i);
      }
    }
    // the refined family contains the previous one, so the running max is the estimate on it
    const double est = rep.round_estimates.empty() ? best : std::max(best, rep.round_estimates.back());
    rep.round_estimates.push_back(est);
  }
  rep.norm_estimate = rep.round_estimates.back();
  rep.refinement_delta = rounds > 0 ? rep.round_estimates[rounds] - rep.round_estimates[rounds - 1] : 0.0;
  rep.family_policy = fam.policy();
  return rep;
}

// max over u in (0,1) of |d/du exp(1 - 1/(1 - u^2))|
double bump_slope() {
  static const double v = [] {
    auto g = [](double u) {
      const double t = 1.0 - u * u;
      return std::exp(1.0 - 1.0 / t) * 2.0 * u / (t * t);
    };
    double a = 0.0, b = 1.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    while (b - a > 1e-15) {
      const double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
      if (g(c1) >= g(c2)) b = c2;
      else a = c1;
    }
    return g(0.5 * (a + b)) * (1.0 + 1e-12);
  }();
  return v;
}

}  // namespace

PointRule orbit_rule(const CoxeterGroup& g, const WeightedMeasure& m, const Ball& b, const QuadratureSpec& q) {
  std::vector<Ball> balls;
  for (const Ball& o : orbit(g, b)) {
    bool dup = false;
    for (const Ball& e : balls) dup = dup || (e.center - o.center).norm() <= 1e-12 * std::max(1.0, b.radius);
    if (!dup) balls.push_back(o);
  }
  if (m.dim() == 1) {
    // union of intervals, exactly
    std::vector<std::pair<double, double>> iv;
    for (const Ball& o : balls) iv.push_back({o.center[0] - o.radius, o.center[0] + o.radius});
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (auto [lo, hi] : iv) {
      if (!merged.empty() && lo <= merged.back().second) merged.back().second = std::max(merged.back().second, hi);
      else merged.push_back({lo, hi});
    }
    PointRule out;
    for (auto [lo, hi] : merged) {
      PointRule pr = region_rule(m, BoxRegion{vec({lo}), vec({hi})}, q);
      out.x.insert(out.x.end(), pr.x.begin(), pr.x.end());
      out.w.insert(out.w.end(), pr.w.begin(), pr.w.end());
    }
    return out;
  }
  // each point of the union is shared among the balls that contain it
  PointRule out;
  for (const Ball& o : balls) {
    PointRule pr = region_rule(m, o, q);
    for (size_t i = 0; i < pr.x.size(); ++i) {
      int count = 0;
      for (const Ball& e : balls) count += (pr.x[i] - e.center).norm() <= e.radius;
      out.x.push_back(pr.x[i]);
      out.w.push_back(pr.w[i] / std::max(count, 1));
    }
  }
  return out;
}

cplx mean_on_set(const WeightedMeasure& m, const Integrand& f, const Ball& b, const QuadratureSpec& q) {
  return mean(sample(region_rule(m, b, q), f));
}

cplx mean_on_orbit(const CoxeterGroup& g, const WeightedMeasure& m, const Integrand& f, const Ball& b,
                   const QuadratureSpec& q) {
  return mean(sample(orbit_rule(g, m, b, q), f));
}

BallFamily dyadic_family(int dim, double domain, double pitch, double r0, int jmin, int jmax) {
  BallFamily fam;
  fam.domain = domain;
  fam.pitch = pitch;
  fam.r0 = r0;
  fam.jmin = jmin;
  fam.jmax = jmax;
  if (dim < 1 || !(domain >= 0.0) || !(pitch > 0.0) || !(r0 > 0.0) || jmin > jmax)
    fail(ErrorCode::invalid_argument, "ball family needs dim >= 1, domain >= 0, pitch > 0, r0 > 0, jmin <= jmax");
  const int half = static_cast<int>(std::floor(domain / pitch + 1e-9));
  std::vector<int> idx(dim, -half);
  while (true) {
    Vec c(dim);
    for (int i = 0; i < dim; ++i) c[i] = idx[i] * pitch;
    fam.centers.push_back(c);
    int a = dim - 1;
    while (a >= 0 && idx[a] == half) idx[a--] = -half;
    if (a < 0) break;
    ++idx[a];
  }
  for (int j = jmin; j <= jmax; ++j) fam.radii.push_back(std::ldexp(r0, j));
  return fam;
}

BallFamily BallFamily::refined() const {
  return dyadic_family(static_cast<int>(centers.front().size()), domain, pitch / 2.0, r0, jmin - 1, jmax + 1);
}

std::string BallFamily::policy() const {
  std::ostringstream os;
  os << "dyadic lattice pitch " << pitch << " on [-" << domain << ", " << domain << "]^N, radii " << r0 << " * 2^j for j in ["
     << jmin << ", " << jmax << "]";
  return os.str();
}

void BallFamily::validate() const {
  if (centers.empty() || radii.empty()) fail(ErrorCode::invalid_argument, "ball family is empty");
  for (double r : radii)
    if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "ball radii must be positive");
  for (const Vec& c : centers)
    if (c.cwiseAbs().maxCoeff() > domain * (1.0 + 1e-12)) fail(ErrorCode::invalid_argument, "ball center outside the domain");
}

double maximal_function(const WeightedMeasure& m, const Integrand& f, const Vec& x, const BallFamily& family,
                        const QuadratureSpec& q) {
  double best = -1.0;
  auto absf = [&](const Vec& y) { return cplx(std::abs(f(y))); };
  for (size_t i = 0; i < family.size(); ++i) {
    const Ball b = family.ball(i);
    if (contains(b, x)) best = std::max(best, mean_on_set(m, absf, b, q).real());
  }
  if (best < 0.0) fail(ErrorCode::precondition, "no ball of the family contains the point");
  return best;
}

double best_constant_oscillation(const WeightedMeasure& m, const Integrand& g, const Ball& b, const QuadratureSpec& q) {
  return best_constant(sample(region_rule(m, b, q), g));
}

double sharp_maximal(const WeightedMeasure& m, const Integrand& g, const Vec& x, const BallFamily& family,
                     const QuadratureSpec& q) {
  double best = -1.0;
  for (size_t i = 0; i < family.size(); ++i) {
    const Ball b = family.ball(i);
    if (contains(b, x)) best = std::max(best, best_constant_oscillation(m, g, b, q));
  }
  if (best < 0.0) fail(ErrorCode::precondition, "no ball of the family contains the point");
  return best;
}

double lp_norm(const WeightedMeasure& m, const Integrand& f, double p, const QuadratureSpec& q,
               const std::optional<Region>& support) {
  if (!(p > 1.0) || !std::isfinite(p)) fail(ErrorCode::invalid_argument, "lp_norm needs 1 < p < inf");
  auto fp = [&](const Vec& x) { return cplx(std::pow(std::abs(f(x)), p)); };
  const double s = support ? integrate(m, fp, *support, q).real() : integrate_whole(m, fp, q).value.real();
  return std::pow(std::max(s, 0.0), 1.0 / p);
}

BmoReport bmo_norm(const WeightedMeasure& m, const Integrand& b, const BallFamily& family, int rounds,
                   const QuadratureSpec& q, int jobs) {
  return run_bmo(family, rounds, jobs, [&](const Ball& B) { return oscillation(sample(region_rule(m, B, q), b)); });
}

BmoReport bmo_d_norm(const CoxeterGroup& g, const WeightedMeasure& m, const Integrand& b, const BallFamily& family,
                     int rounds, const QuadratureSpec& q, int jobs) {
  return run_bmo(family, rounds, jobs, [&](const Ball& B) { return oscillation(sample(orbit_rule(g, m, B, q), b)); });
}

std::vector<JnSample> jn_samples(const CoxeterGroup& g, int dim, int count, uint64_t seed, double domain) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<JnSample> out;
  for (int i = 0; i < count; ++i) {
    JnSample s;
    s.x = Vec(dim);
    for (int a = 0; a < dim; ++a) s.x[a] = domain * (2.0 * u(rng) - 1.0);
    s.r = std::ldexp(1.0, -3) * std::pow(2.0, 5.0 * u(rng));
    s.r1 = s.r * std::pow(2.0, 6.0 * u(rng));
    // partners up to 3r away, so some fall outside the nearby-centers range
    Vec dir(dim);
    for (int a = 0; a < dim; ++a) dir[a] = 2.0 * u(rng) - 1.0;
    s.y = s.x + 3.0 * s.r * u(rng) * dir / std::max(dir.norm(), 1e-12);
    s.sigma = static_cast<int>(rng() % g.size());
    s.j = 1 + static_cast<int>(rng() % 6);
    s.s = std::array<double, 3>{1.0, 2.0, 4.0}[rng() % 3];
    out.push_back(s);
  }
  return out;
}

std::vector<JnRow> john_nirenberg_suite(const WeightedMeasure& m, const CoxeterGroup& g, const Integrand& b, double bmo,
                                        const std::vector<JnSample>& samples, const QuadratureSpec& q) {
  std::vector<JnRow> rows;
  auto add = [&](const char* name, int i, double lhs, double shape) {
    double ratio = 0.0;
    if (lhs > 0.0) ratio = shape * bmo > 0.0 ? lhs / (shape * bmo) : INFINITY;
    rows.push_back({name, i, lhs, shape, ratio});
  };
  for (size_t i = 0; i < samples.size(); ++i) {
    const JnSample& s = samples[i];
    const int idx = static_cast<int>(i);
    const cplx bx = mean_on_set(m, b, {s.x, s.r}, q);
    add("scale-change", idx, std::abs(bx - mean_on_set(m, b, {s.x, s.r1}, q)), std::log(s.r1 / s.r));
    if ((s.x - s.y).norm() <= 2.0 * s.r) add("nearby-centers", idx, std::abs(bx - mean_on_set(m, b, {s.y, s.r}, q)), 1.0);
    const Vec sx = g.elements.at(s.sigma) * s.x;
    add("reflected-center", idx, std::abs(bx - mean_on_set(m, b, {sx, s.r}, q)), std::log((sx - s.x).norm() / s.r + 4.0));
    auto dev = [&](const Vec& y) { return cplx(std::pow(std::abs(b(y) - bx), s.s)); };
    const double big = std::ldexp(s.r, s.j);
    add("john-nirenberg", idx, std::pow(mean_on_set(m, dev, {s.x, big}, q).real(), 1.0 / s.s), s.j);
  }
  return rows;
}

LipschitzWitness tent(const Vec& center, double height, double half_width) {
  if (!(half_width > 0.0)) fail(ErrorCode::invalid_argument, "tent needs a positive half width");
  LipschitzWitness w;
  w.name = "tent";
  w.center = center;
  w.b = [center, height, half_width](const Vec& x) { return cplx(height * std::max(0.0, 1.0 - (x - center).norm() / half_width)); };
  w.support_radius = center.norm() + half_width;
  w.lipschitz = std::abs(height) / half_width;
  w.g_invariant = center.norm() == 0.0;
  return w;
}

LipschitzWitness plateau(const Vec& center, double height, double inner, double outer) {
  if (!(outer > inner) || inner < 0.0) fail(ErrorCode::invalid_argument, "plateau needs 0 <= inner < outer");
  LipschitzWitness w;
  w.name = "plateau";
  w.center = center;
  w.b = [center, height, inner, outer](const Vec& x) {
    return cplx(height * std::clamp((outer - (x - center).norm()) / (outer - inner), 0.0, 1.0));
  };
  w.support_radius = center.norm() + outer;
  w.lipschitz = std::abs(height) / (outer - inner);
  w.g_invariant = center.norm() == 0.0;
  return w;
}

LipschitzWitness smooth_bump(const Vec& center, double height, double radius) {
  if (!(radius > 0.0)) fail(ErrorCode::invalid_argument, "bump needs a positive radius");
  LipschitzWitness w;
  w.name = "bump";
  w.center = center;
  w.b = [center, height, radius](const Vec& x) {
    const double u = (x - center).norm() / radius;
    return u < 1.0 ? cplx(height * std::exp(1.0 - 1.0 / (1.0 - u * u))) : cplx(0.0);
  };
  w.support_radius = center.norm() + radius;
  w.lipschitz = std::abs(height) * bump_slope() / radius;
  w.g_invariant = center.norm() == 0.0;
  return w;
}

LipschitzWitness scaled(const LipschitzWitness& w, double factor) {
  LipschitzWitness out = w;
  const Integrand b = w.b;
  out.b = [b, factor](const Vec& x) { return factor * b(x); };
  out.lipschitz = std::abs(factor) * w.lipschitz;
  return out;
}

std::vector<LipschitzWitness> lipschitz_family(int dim, uint64_t seed, int count) {
  if (dim < 1 || count < 0) fail(ErrorCode::invalid_argument, "lipschitz_family needs dim >= 1 and count >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LipschitzWitness> out;
  for (int i = 0; i < count; ++i) {
    const double h = 0.5 + 1.5 * u(rng), a = 0.5 + u(rng);
    Vec c = Vec::Zero(dim);
    if (i % 2 == 1) {
      // off-center by at least 0.3, and off every coordinate hyperplane
      for (int k = 0; k < dim; ++k) c[k] = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.3 + 0.5 * u(rng)) / std::sqrt(double(dim));
    }
    switch (i % 3) {
      case 0:
        out.push_back(tent(c, h, a));
        break;
      case 1:
        out.push_back(plateau(c, h, 0.4 * a, a));
        break;
      default:
        out.push_back(smooth_bump(c, h, a));
    }
    out.back().name += "-" + std::to_string(i);
  }
  return out;
}

void write_bmo_csv(std::ostream& os, const BmoReport& rep) {
  const int n = rep.table.empty() ? 0 : static_cast<int>(rep.table.front().ball.center.size());
  for (int i = 0; i < n; ++i) os << "center_" << i << ",";
  os << "radius,oscillation\n";
  os.precision(17);
  for (const auto& row : rep.table) {
    for (int i = 0; i < n; ++i) os << row.ball.center[i] << ",";
    os << row.ball.radius << "," << row.oscillation << "\n";
  }
}

void write_jn_csv(std::ostream& os, const std::vector<JnRow>& rows) {
  os << "inequality,sample,lhs,shape,ratio\n";
  os.precision(17);
  for (const auto& r : rows) os << r.inequality << "," << r.sample << "," << r.lhs << "," << r.shape << "," << r.ratio << "\n";
}

}  // namespace dunkl

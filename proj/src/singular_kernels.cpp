#include "dunkl/singular_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace dunkl {

double cutoff_profile(double r) {
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  const double u = 2.0 * r - 1.0;
  const double a = std::exp(-1.0 / (1.0 - u)), b = std::exp(-1.0 / u);
  return a / (a + b);
}

int default_s0(const WeightedMeasure& m) {
  int s = 2 * static_cast<int>(std::floor(m.hom_dim / 2.0)) + 2;
  return s;
}

double default_epsilon(const WeightedMeasure& m, int s0) { return std::min(1.0, s0 - m.hom_dim) / 2.0; }

void KernelSpec::validate(const WeightedMeasure& m) const {
  if (!eval) fail(ErrorCode::invalid_argument, "kernel '" + name + "' has no evaluator");
  if (s0 % 2 != 0 || s0 <= m.hom_dim)
    fail(ErrorCode::invalid_argument, "s0 must be an even integer above the homogeneous dimension");
  if (!(epsilon > 0.0 && epsilon < std::min(1.0, s0 - m.hom_dim)))
    fail(ErrorCode::invalid_argument, "epsilon must lie in (0, min(1, s0 - N))");
}

KernelSpec builtin_riesz_kernel(const WeightedMeasure& m, int axis, double scale) {
  if (axis < 0 || axis >= m.dim()) fail(ErrorCode::invalid_argument, "Riesz axis out of range");
  const double N = m.hom_dim;
  KernelSpec ks;
  ks.name = "riesz";
  ks.eval = [axis, N, scale](const Vec& x) { return cplx(scale * x[axis] * std::pow(x.norm(), -N - 1.0)); };
  ks.gradient = [axis, N, scale](const Vec& x) {
    const double r = x.norm();
    CVec g(x.size());
    for (int i = 0; i < x.size(); ++i)
      g[i] = scale * ((i == axis ? std::pow(r, -N - 1.0) : 0.0) - (N + 1.0) * x[axis] * x[i] * std::pow(r, -N - 3.0));
    return g;
  };
  ks.s0 = default_s0(m);
  ks.epsilon = default_epsilon(m, ks.s0);
  ks.odd = true;
  ks.homogeneous = true;
  ks.scale = scale;
  return ks;
}

KernelSpec radial_power_kernel(const WeightedMeasure& m, double scale) {
  const double N = m.hom_dim;
  KernelSpec ks;
  ks.name = "radial-power";
  ks.eval = [N, scale](const Vec& x) { return cplx(scale * std::pow(x.norm(), -N)); };
  ks.gradient = [N, scale](const Vec& x) {
    const double r = x.norm();
    return CVec((-N * scale * std::pow(r, -N - 2.0) * x).cast<cplx>());
  };
  ks.s0 = default_s0(m);
  ks.epsilon = default_epsilon(m, ks.s0);
  ks.homogeneous = true;
  ks.scale = scale;
  return ks;
}

namespace {

// ||x||^{1-N} / (1 + ||x||^2): radial, bounded annulus integrals and a nonzero limit L
KernelSpec radial_atan_kernel(const WeightedMeasure& m, double scale) {
  const double N = m.hom_dim;
  KernelSpec ks;
  ks.name = "radial-atan";
  ks.eval = [N, scale](const Vec& x) {
    const double r = x.norm();
    return cplx(scale * std::pow(r, 1.0 - N) / (1.0 + r * r));
  };
  ks.s0 = default_s0(m);
  ks.epsilon = default_epsilon(m, ks.s0);
  // the shell integrals reduce to N w(B(0,1)) int_0^1 dr / (1 + r^2)
  ks.L = scale * N * fast_ball_volume(m, Vec::Zero(m.dim()), 1.0) * M_PI / 4.0;
  ks.scale = scale;
  return ks;
}

}  // namespace

KernelSpec scaled(const KernelSpec& ks, double factor) {
  KernelSpec out = ks;
  out.eval = [f = ks.eval, factor](const Vec& x) { return factor * f(x); };
  if (ks.gradient) out.gradient = [g = ks.gradient, factor](const Vec& x) { return CVec(factor * g(x)); };
  out.L = factor * ks.L;
  out.scale = factor * ks.scale;
  return out;
}

KernelRegistry::KernelRegistry() {
  factories_["riesz"] = [](const WeightedMeasure& m, const nlohmann::json& p) {
    return builtin_riesz_kernel(m, p.value("axis", 0), p.value("scale", 1.0));
  };
  factories_["radial-power"] = [](const WeightedMeasure& m, const nlohmann::json& p) {
    return radial_power_kernel(m, p.value("scale", 1.0));
  };
  factories_["radial-atan"] = [](const WeightedMeasure& m, const nlohmann::json& p) {
    return radial_atan_kernel(m, p.value("scale", 1.0));
  };
}

KernelRegistry& KernelRegistry::instance() {
  static KernelRegistry r;
  return r;
}

void KernelRegistry::add(const std::string& name, KernelFactory f) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!f) fail(ErrorCode::invalid_argument, "kernel factory for '" + name + "' is empty");
  factories_[name] = std::move(f);
}

bool KernelRegistry::contains(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  return factories_.count(name) > 0;
}

KernelSpec KernelRegistry::make(const std::string& name, const WeightedMeasure& m, const nlohmann::json& params) const {
  KernelFactory f;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = factories_.find(name);
    if (it == factories_.end()) fail(ErrorCode::unresolved_name, "unknown kernel '" + name + "'");
    f = it->second;
  }
  KernelSpec ks;
  try {
    ks = f(m, params.is_null() ? nlohmann::json::object() : params);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, "bad parameters for kernel '" + name + "': " + e.what());
  }
  ks.name = name;
  ks.validate(m);
  return ks;
}

std::vector<std::string> KernelRegistry::names() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& kv : factories_) out.push_back(kv.first);
  return out;
}

namespace {

CVec numeric_gradient(const KernelSpec& ks, const Vec& x) {
  if (ks.gradient) return ks.gradient(x);
  const double h = 1e-5 * x.norm();
  CVec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (ks.eval(a) - ks.eval(b)) / (2 * h);
  }
  return g;
}

double max_hessian_entry(const KernelSpec& ks, const Vec& x) {
  const int n = static_cast<int>(x.size());
  double worst = 0.0;
  if (ks.gradient) {
    const double h = 1e-4 * x.norm();
    for (int j = 0; j < n; ++j) {
      Vec a = x, b = x;
      a[j] += h;
      b[j] -= h;
      const CVec d = (ks.gradient(a) - ks.gradient(b)) / (2 * h);
      worst = std::max(worst, d.cwiseAbs().maxCoeff());
    }
    return worst;
  }
  const double h = 1e-3 * x.norm();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto at = [&](double si, double sj) {
        Vec p = x;
        p[i] += si * h;
        p[j] += sj * h;
        return ks.eval(p);
      };
      const cplx v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
      worst = std::max(worst, std::abs(v));
    }
  return worst;
}

std::vector<Vec> unit_directions(int n) {
  std::vector<Vec> out;
  if (n == 1) return {vec({1.0}), vec({-1.0})};
  if (n == 2) {
    for (int i = 0; i < 24; ++i) {
      const double a = 0.1 + 2 * M_PI * i / 24;
      out.push_back(vec({std::cos(a), std::sin(a)}));
    }
    return out;
  }
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 6; ++j) {
      const double a = 0.1 + 2 * M_PI * i / 12, b = 0.2 + M_PI * (j + 0.5) / 6;
      Vec v = Vec::Zero(n);
      v[0] = std::sin(b) * std::cos(a);
      v[1] = std::sin(b) * std::sin(a);
      v[2] = std::cos(b);
      out.push_back(v);
    }
  return out;
}

}  // namespace

AssumptionReport verify_assumptions(const KernelSpec& ks, const WeightedMeasure& m, const QuadratureSpec& q,
                                    const AssumptionOptions& opt) {
  AssumptionReport rep;
  const Vec origin = Vec::Zero(m.dim());
  auto shell = [&](double a, double b) { return integrate(m, ks.eval, AnnulusRegion{origin, a, b}, q); };

  // (A): annuli with both radii on a log grid over [1e-3, 1e3]
  std::vector<double> radii;
  for (int i = 0; i <= 12; ++i) radii.push_back(std::pow(10.0, -3.0 + 0.5 * i));
  std::vector<cplx> shells;
  for (size_t i = 0; i + 1 < radii.size(); ++i) shells.push_back(shell(radii[i], radii[i + 1]));
  auto sup_over = [&](size_t lo, size_t hi) {
    double s = 0.0;
    for (size_t i = lo; i < hi; ++i) {
      cplx acc = 0.0;
      for (size_t j = i; j < hi; ++j) {
        acc += shells[j];
        s = std::max(s, std::abs(acc));
      }
    }
    return s;
  };
  rep.annulus_sup = sup_over(0, shells.size());
  const double inner = sup_over(2, shells.size() - 2);
  rep.annulus_growth = rep.annulus_sup - inner;
  rep.a_pass = std::isfinite(rep.annulus_sup) && rep.annulus_sup <= opt.annulus_bound &&
               rep.annulus_growth <= opt.growth_tolerance * rep.annulus_sup + 1e-12;

  // (D): scaled derivative sizes on shells of radius 10^{-2..2}
  const int orders = std::min(ks.s0, 2) + 1;
  std::vector<std::vector<double>> per_shell(orders);
  for (int e = -2; e <= 2; ++e) {
    const double r = std::pow(10.0, e);
    std::vector<double> worst(orders, 0.0);
    for (const Vec& u : unit_directions(m.dim())) {
      const Vec x = r * u;
      worst[0] = std::max(worst[0], std::pow(r, m.hom_dim) * std::abs(ks.eval(x)));
      if (orders > 1) worst[1] = std::max(worst[1], std::pow(r, m.hom_dim + 1) * numeric_gradient(ks, x).cwiseAbs().maxCoeff());
      if (orders > 2) worst[2] = std::max(worst[2], std::pow(r, m.hom_dim + 2) * max_hessian_entry(ks, x));
    }
    for (int o = 0; o < orders; ++o) per_shell[o].push_back(worst[o]);
  }
  rep.d_pass = true;
  for (int o = 0; o < orders; ++o) {
    const auto& v = per_shell[o];
    const double c = *std::max_element(v.begin(), v.end());
    // a violation shows up as growth toward 0 or infinity; faster decay is allowed
    const double ends = std::max(v.front(), v.back()), interior = *std::max_element(v.begin() + 1, v.end() - 1);
    rep.derivative_constants.push_back(c);
    rep.derivative_spread.push_back(interior > 0 ? ends / interior : (ends == 0 ? 1.0 : INFINITY));
    rep.d_pass = rep.d_pass && std::isfinite(c) && rep.derivative_spread.back() < 2.0;
  }

  // (L): I(eps) along eps = 2^{-i}
  cplx I = 0.0, last = 0.0, prev = 0.0;
  for (int i = 0; i < opt.cauchy_steps; ++i) {
    const cplx s = shell(std::ldexp(1.0, -i - 1), std::ldexp(1.0, -i));
    I += s;
    rep.cauchy.push_back(std::abs(s));
    prev = last;
    last = s;
  }
  // geometric tail of the shell contributions
  rep.L_extrapolated = I;
  if (std::abs(prev) > 0.0) {
    const cplx rho = last / prev;
    if (std::abs(rho) < 0.9) rep.L_extrapolated = I + last * rho / (1.0 - rho);
  }
  const size_t n = rep.cauchy.size();
  const double tol = opt.cauchy_tolerance * std::max(1.0, std::abs(rep.L_extrapolated));
  rep.l_pass = n >= 2 && rep.cauchy[n - 1] < tol && rep.cauchy[n - 2] < tol;
  return rep;
}

PointFn truncate(const KernelSpec& ks, double t) {
  if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "truncation radius must be positive");
  return [f = ks.eval, c = ks.cutoff, t](const Vec& x) {
    const double phi = c(x.norm() / t);
    return phi == 1.0 ? cplx(0.0) : f(x) * (1.0 - phi);
  };
}

DyadicKernel dyadic_piece(const KernelSpec& ks, int level) {
  DyadicKernel dk;
  dk.level = level;
  dk.scale = std::ldexp(1.0, level);
  dk.profile = [f = ks.eval, c = ks.cutoff, s = dk.scale](const Vec& x) {
    const double r = x.norm();
    const double v = c(r / s) - c(2.0 * r / s);
    return v == 0.0 ? cplx(0.0) : f(x) * v;
  };
  return dk;
}

TwoPointKernel::TwoPointKernel(const WeightedMeasure& m, KernelSpec ks, int nodes, int panels)
    : m_(m), ks_(std::move(ks)), g_(generate_group(m.rs)), nodes_(nodes), panels_(panels) {
  auto k = product_multiplicities(m.rs);
  if (!k) fail(ErrorCode::unsupported, "two-point kernels need a rank-one or product root system");
  ks_axis_ = *k;
}

namespace {

struct AxisTranslation {
  double k, x, y;
};

// theta in [0, pi] at which the rank-one product formula reaches radius z
double theta_of(double z, double d, double P) {
  const double c2 = std::clamp((z * z - d * d) / P, 0.0, 1.0);
  return 2.0 * std::acos(std::sqrt(c2));
}

}  // namespace

cplx TwoPointKernel::operator()(int level, const Vec& x, const Vec& y) const {
  if (x.size() != m_.dim() || y.size() != m_.dim()) fail(ErrorCode::invalid_argument, "two-point kernel arguments have the wrong dimension");
  const double s = std::ldexp(1.0, level);
  if (orbit_distance(g_, x, y) > s) return 0.0;
  const DyadicKernel dk = dyadic_piece(ks_, level);
  const int n = m_.dim();
  Vec p(n);

  // integrate axis a given the squared radius already used by axes < a
  std::function<cplx(int, double)> rec = [&](int a, double used) -> cplx {
    if (a == n) return dk.profile(p);
    const double k = ks_axis_[a], xa = x[a], ya = y[a];
    const double d = xa - ya, budget = s * s - used;
    if (budget <= 0.0) return 0.0;
    if (k == 0.0 || xa * ya == 0.0) {
      if (d * d > budget) return 0.0;
      p[a] = d;
      return rec(a + 1, used + d * d);
    }
    const double P = 4.0 * xa * ya;
    const double z_end0 = std::abs(xa + ya), z_end1 = std::abs(d);  // theta = 0 and theta = pi
    const double zmin = std::min(z_end0, z_end1), zmax = std::max(z_end0, z_end1);
    const double hi = std::min(zmax, std::sqrt(budget));
    const double lo2 = a == n - 1 ? s * s / 16.0 - used : 0.0;
    const double lo = std::max(zmin, lo2 > 0.0 ? std::sqrt(lo2) : 0.0);
    if (lo >= hi) return 0.0;
    double ta = theta_of(lo, d, P), tb = theta_of(hi, d, P);
    if (ta > tb) std::swap(ta, tb);
    std::vector<double> breaks;
    for (double b : {s / 4.0, s / 2.0}) {
      const double r2 = b * b - used;
      if (r2 <= 0.0) continue;
      const double z = std::sqrt(r2);
      if (z > lo && z < hi) breaks.push_back(theta_of(z, d, P));
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.push_back(tb);
    const double ca = std::tgamma(k + 0.5) / (std::sqrt(M_PI) * std::tgamma(k));
    const bool rough = std::abs(2 * k - std::round(2 * k)) > 1e-12;
    cplx total = 0.0;
    double left = ta;
    for (double right : breaks) {
      if (right <= left) continue;
      const bool ga = rough && left == 0.0, gb = rough && right == M_PI;
      Rule1D rule = (ga || gb) ? graded_gauss(left, right, nodes_, ga, gb, 12) : composite_gauss(left, right, {}, nodes_, panels_);
      for (size_t i = 0; i < rule.size(); ++i) {
        const double th = rule.x[i], ch = std::cos(th / 2), sh = std::sin(th / 2);
        const double q = P * ch * ch;  // z^2 - d^2
        const double z = std::sqrt(std::max(0.0, d * d + q));
        const double wt = rule.w[i] * ca * 2.0 * sh * sh * std::pow(std::sin(th), 2 * k - 1);
        if (wt == 0.0) continue;
        double up, um;  // (1 + d/z)/2 and (1 - d/z)/2 without cancellation
        if (z == 0.0) {
          up = um = 0.5;
        } else if (d >= 0.0) {
          const double zp = z + d;
          up = 0.5 * zp / z;
          um = 0.5 * (q / zp) / z;
        } else {
          const double zm = z - d;
          um = 0.5 * zm / z;
          up = 0.5 * (q / zm) / z;
        }
        p[a] = z;
        cplx v = up * rec(a + 1, used + z * z);
        if (um != 0.0) {
          p[a] = -z;
          v += um * rec(a + 1, used + z * z);
        }
        total += wt * v;
      }
      left = right;
    }
    return total;
  };
  return rec(0, 0.0);
}

cplx TwoPointKernel::sum(int lo, int hi, const Vec& x, const Vec& y) const {
  cplx s = 0.0;
  for (int l = lo; l <= hi; ++l) s += (*this)(l, x, y);
  return s;
}

GridFunction two_point_kernel(const SpectralContext& ctx, const DyadicKernel& dk, const Vec& x) {
  if (dk.scale > ctx.options().space_radius)
    fail(ErrorCode::precondition, "dyadic level does not fit the spectral grid");
  GridFunction f = ctx.sample_space(dk.profile, dk.scale);
  return translate(ctx, x, f);
}

std::vector<DyadicSample> dyadic_samples(const TwoPointKernel& tpk, int level, int count, uint64_t seed) {
  // the same normalized draw at every level, so levels differ only by the dilation
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = tpk.measure().dim();
  const double s = std::ldexp(1.0, level);
  auto in_ball = [&](double radius) {
    Vec v(n);
    do {
      for (int i = 0; i < n; ++i) v[i] = unif(rng);
    } while (v.norm() > 1.0);
    return Vec(radius * v);
  };
  std::vector<DyadicSample> out;
  const auto& g = tpk.group();
  for (int i = 0; i < count; ++i) {
    DyadicSample smp;
    smp.x = in_ball(3.0 * s);
    const Mat& sigma = g.elements[rng() % g.size()];
    smp.y = sigma * smp.x + in_ball(1.25 * s);
    smp.y2 = smp.y + in_ball(0.25 * s);
    out.push_back(smp);
  }
  return out;
}

namespace {

struct EstimateTerms {
  double size = 0.0, smooth = 0.0;
};

EstimateTerms estimate_terms(const TwoPointKernel& tpk, int level, const DyadicSample& smp, bool with_smooth = true) {
  const double s = std::ldexp(1.0, level), eps = tpk.kernel().epsilon;
  const WeightedMeasure& m = tpk.measure();
  const cplx K = tpk(level, smp.x, smp.y);
  const double wx = fast_ball_volume(m, smp.x, s), wy = fast_ball_volume(m, smp.y, s);
  const double decay = std::pow(1.0 + (smp.x - smp.y).norm() / s, eps);
  EstimateTerms t;
  t.size = std::abs(K) * decay * std::sqrt(wx * wy);
  const double dy = (smp.y - smp.y2).norm();
  if (with_smooth && dy > 0.0) {
    const double wy2 = fast_ball_volume(m, smp.y2, s);
    const double rhs = std::pow(dy / s, eps) / decay / std::sqrt(wx) * (1.0 / std::sqrt(wy) + 1.0 / std::sqrt(wy2));
    t.smooth = std::abs(K - tpk(level, smp.x, smp.y2)) / rhs;
  }
  return t;
}

// compass search over the coordinates of x and y (y2 moves with y), steps 2^l/8 down to 2^l/64
template <class F>
double climb(const TwoPointKernel& tpk, int level, DyadicSample smp, double value, F&& objective) {
  const int n = tpk.measure().dim();
  for (double h = std::ldexp(1.0, level - 3); h >= std::ldexp(1.0, level - 6); h /= 2) {
    for (int sweep = 0; sweep < 3; ++sweep) {
      bool moved = false;
      for (int c = 0; c < 2 * n; ++c)
        for (double sgn : {-1.0, 1.0}) {
          DyadicSample t = smp;
          if (c < n) {
            t.x[c] += sgn * h;
          } else {
            t.y[c - n] += sgn * h;
            t.y2[c - n] += sgn * h;
          }
          const double v = objective(t);
          if (v > value) {
            value = v;
            smp = t;
            moved = true;
          }
        }
      if (!moved) break;
    }
  }
  return value;
}

}  // namespace

std::vector<EstimateRow> check_dyadic_estimates(const TwoPointKernel& tpk, int level, const std::vector<DyadicSample>& samples) {
  std::vector<EstimateTerms> terms;
  for (const auto& smp : samples) terms.push_back(estimate_terms(tpk, level, smp));
  double size = 0.0, smooth = 0.0;
  for (const auto& t : terms) {
    size = std::max(size, t.size);
    smooth = std::max(smooth, t.smooth);
  }
  // random samples undershoot a sup attained on a small set; polish the best of each
  std::vector<size_t> idx(samples.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const size_t top = std::min<size_t>(1, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + top, idx.end(), [&](size_t a, size_t b) { return terms[a].size > terms[b].size; });
  for (size_t i = 0; i < top; ++i)
    size = std::max(size, climb(tpk, level, samples[idx[i]], terms[idx[i]].size,
                                [&](const DyadicSample& t) { return estimate_terms(tpk, level, t, false).size; }));
  std::partial_sort(idx.begin(), idx.begin() + top, idx.end(), [&](size_t a, size_t b) { return terms[a].smooth > terms[b].smooth; });
  for (size_t i = 0; i < top; ++i)
    smooth = std::max(smooth, climb(tpk, level, samples[idx[i]], terms[idx[i]].smooth,
                                    [&](const DyadicSample& t) { return estimate_terms(tpk, level, t).smooth; }));
  const int n = static_cast<int>(samples.size());
  return {{level, "size", size, n}, {level, "smoothness", smooth, n}};
}

KernelSumReport kernel_sum(const TwoPointKernel& tpk, const Vec& x, const Vec& y, const Vec& y2, int lo, int hi) {
  const double d = orbit_distance(tpk.group(), x, y);
  if (d <= 1e-14 * std::max(1.0, x.norm())) fail(ErrorCode::precondition, "kernel is undefined on the orbit diagonal");
  const double dy = (y - y2).norm();
  if (dy >= d / 2.0) fail(ErrorCode::precondition, "the smoothness partner must satisfy ||y - y'|| < d(x, y) / 2");
  const double eps = tpk.kernel().epsilon, dist = (x - y).norm();
  const double wd = fast_ball_volume(tpk.measure(), x, d);
  KernelSumReport rep;
  double abs_sum = 0.0, diff_sum = 0.0;
  for (int l = lo; l <= hi; ++l) {
    const cplx a = tpk(l, x, y);
    rep.value += a;
    abs_sum += std::abs(a);
    if (dy > 0.0) diff_sum += std::abs(a - tpk(l, x, y2));
  }
  rep.sum_functional = abs_sum * wd * std::pow(dist / d, eps);
  rep.holder_functional = dy > 0.0 ? diff_sum * wd * std::pow(dist / dy, eps) : 0.0;
  return rep;
}

void write_estimate_csv(std::ostream& os, const std::vector<EstimateRow>& rows) {
  os << "level,functional,constant,samples\n";
  os.precision(17);
  for (const auto& r : rows) os << r.level << "," << r.functional << "," << r.constant << "," << r.samples << "\n";
}

}  // namespace dunkl

#include "dunkl/commutator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "dunkl/parallel.hpp"

namespace dunkl {

namespace {

bool needs_grading(double k) { return std::abs(2.0 * k - std::round(2.0 * k)) > 1e-12; }

// Panels covering [lo, hi], split at 0, no longer than len; the panel touching 0 is graded when asked.
std::vector<std::pair<double, double>> panel_list(double lo, double hi, double len, bool grade) {
  std::vector<std::pair<double, double>> out;
  auto piece = [&](double a, double b) {
    if (!(b > a)) return;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / len - 1e-9)));
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
      const double pa = a + i * h, pb = (i + 1 == n) ? b : a + (i + 1) * h;
      const bool at_zero = grade && (pa == 0.0 || pb == 0.0);
      if (!at_zero) {
        out.emplace_back(pa, pb);
        continue;
      }
      // geometric sub-panels towards 0
      const double sigma = 0.15;
      const int levels = 8;
      const double sgn = (pa == 0.0) ? 1.0 : -1.0, far = (pa == 0.0) ? pb : pa;
      std::vector<double> cuts{0.0};
      double r = std::abs(far) * std::pow(sigma, levels);
      for (int j = 0; j < levels; ++j, r /= sigma) cuts.push_back(r);
      cuts.push_back(std::abs(far));
      std::vector<std::pair<double, double>> sub;
      for (size_t j = 0; j + 1 < cuts.size(); ++j) sub.emplace_back(sgn * cuts[j], sgn * cuts[j + 1]);
      if (sgn < 0) {
        std::reverse(sub.begin(), sub.end());
        for (auto& s : sub) std::swap(s.first, s.second);
      }
      out.insert(out.end(), sub.begin(), sub.end());
    }
  };
  if (lo < 0.0 && hi > 0.0) {
    piece(lo, 0.0);
    piece(0.0, hi);
  } else {
    piece(lo, hi);
  }
  return out;
}

double dw1(double k, double y) { return k == 0.0 ? 1.0 : std::pow(2.0, k) * std::pow(std::abs(y), 2.0 * k); }

Rule1D rule_of(const std::vector<std::pair<double, double>>& panels, int n) {
  Rule1D r;
  for (const auto& [a, b] : panels) r.append(gauss_on(a, b, n));
  return r;
}

// Lagrange basis values at t for the Gauss nodes xs
void lagrange(const std::vector<double>& xs, double t, std::vector<double>& out) {
  const size_t n = xs.size();
  out.assign(n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    if (t == xs[j]) {
      out[j] = 1.0;
      return;
    }
  }
  for (size_t j = 0; j < n; ++j) {
    double v = 1.0;
    for (size_t i = 0; i < n; ++i)
      if (i != j) v *= (t - xs[i]) / (xs[j] - xs[i]);
    out[j] = v;
  }
}

double lp_of(const GridFunction& grid, const std::vector<cplx>& v, double p) {
  double s = 0.0;
  for (size_t i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p) * grid.quad_weights[i];
  return std::pow(s, 1.0 / p);
}

double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

void add_to(std::vector<cplx>& acc, const std::vector<cplx>& v) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

constexpr int kCoarseNodes = 16;

}  // namespace

void EngineOptions::validate() const {
  if (!(input_radius > 0.0)) fail(ErrorCode::invalid_argument, "input radius must be positive");
  if (max_level < 0 || max_level > 60) fail(ErrorCode::invalid_argument, "max level must lie in [0, 60]");
  if (!(output_panel > 0.0) || !(input_panel > 0.0)) fail(ErrorCode::invalid_argument, "panel lengths must be positive");
  if (nodes < 2 || theta_nodes < 2 || theta_panels < 1) fail(ErrorCode::invalid_argument, "too few quadrature nodes");
  if (!(outer_ratio > 1.0)) fail(ErrorCode::invalid_argument, "outer panel ratio must exceed 1");
  if (jobs < 1) fail(ErrorCode::invalid_argument, "jobs must be at least 1");
}

size_t LevelTable::bytes() const {
  return nodes.size() * sizeof(double) + row_start.size() * sizeof(size_t) + col.size() * sizeof(uint32_t) +
         weight.size() * sizeof(cplx) + proj.size() * sizeof(double) + proj_first.size() * sizeof(uint32_t);
}

CommutatorEngine::CommutatorEngine(const WeightedMeasure& m, const KernelSpec& ks, const EngineOptions& opt)
    : m_(m), tpk_(m, ks, opt.theta_nodes, opt.theta_panels), opt_(opt) {
  opt_.validate();
  if (m.dim() != 1) fail(ErrorCode::unsupported, "the commutator engine is rank-one only");
  k_ = product_multiplicities(m.rs).value().at(0);
  const bool grade = needs_grading(k_);
  const double R = opt_.input_radius;

  // input rule: equal panels of length R / 2^a so coarse panels line up with them
  const int a = std::max(0, static_cast<int>(std::ceil(std::log2(R / opt_.input_panel) - 1e-12)));
  input_panel_ = R / std::ldexp(1.0, a);
  input_ = rule_of(panel_list(-R, R, input_panel_, grade), opt_.nodes);
  for (size_t i = 0; i < input_.size(); ++i) input_dw_.push_back(input_.w[i] * dw1(k_, input_.x[i]));

  // output grid: inner panels on [-(R+2), R+2], geometric panels beyond, out to 2^{M+1} + R
  const double r_in = R + 2.0, r_out = std::ldexp(1.0, opt_.max_level + 1) + R;
  auto pos = panel_list(0.0, r_in, opt_.output_panel, grade);
  for (double x = r_in; x < r_out;) {
    const double y = std::min(x * opt_.outer_ratio, r_out);
    pos.emplace_back(x, y);
    x = y;
  }
  std::vector<std::pair<double, double>> all;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) all.emplace_back(-it->second, -it->first);
  all.insert(all.end(), pos.begin(), pos.end());
  for (const auto& [pa, pb] : all) {
    Panel p{pa, pb, out_.points.size(), opt_.nodes};
    const Rule1D r = gauss_on(pa, pb, opt_.nodes);
    for (size_t i = 0; i < r.size(); ++i) {
      out_.points.push_back(vec({r.x[i]}));
      out_.quad_weights.push_back(r.w[i] * dw1(k_, r.x[i]));
      out_.values.push_back(0.0);
    }
    panels_.push_back(p);
  }
  out_.support_radius = r_out;
}

GridFunction CommutatorEngine::make_output(std::vector<cplx> values) const {
  if (values.size() != out_.size()) fail(ErrorCode::invalid_argument, "values do not match the output grid");
  GridFunction g = out_;
  g.values = std::move(values);
  return g;
}

cplx CommutatorEngine::interpolate(const std::vector<cplx>& values, double x) const {
  if (values.size() != out_.size()) fail(ErrorCode::invalid_argument, "values do not match the output grid");
  if (x < panels_.front().a || x > panels_.back().b) return 0.0;
  auto it = std::upper_bound(panels_.begin(), panels_.end(), x, [](double t, const Panel& p) { return t < p.a; });
  const Panel& p = *std::prev(it == panels_.begin() ? std::next(it) : it);
  std::vector<double> xs(p.n), lv;
  for (int j = 0; j < p.n; ++j) xs[j] = out_.points[p.offset + j][0];
  lagrange(xs, x, lv);
  cplx s = 0.0;
  for (int j = 0; j < p.n; ++j) s += lv[j] * values[p.offset + j];
  return s;
}

Integrand CommutatorEngine::interpolant(std::vector<cplx> values) const {
  auto v = std::make_shared<std::vector<cplx>>(std::move(values));
  return [this, v](const Vec& x) { return interpolate(*v, x[0]); };
}

double CommutatorEngine::input_norm(const Integrand& f, double p) const {
  if (!(p >= 1.0)) fail(ErrorCode::invalid_argument, "norm exponent must be at least 1");
  double s = 0.0;
  for (size_t i = 0; i < input_.size(); ++i) s += std::pow(std::abs(f(vec({input_.x[i]}))), p) * input_dw_[i];
  return std::pow(s, 1.0 / p);
}

std::shared_ptr<const LevelTable> CommutatorEngine::level(int l) const {
  if (std::abs(l) > opt_.max_level)
    fail(ErrorCode::precondition, "kernel level " + std::to_string(l) + " is beyond the engine's top level");
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(l);
    if (it != cache_.end()) {
      lru_.remove(l);
      lru_.push_front(l);
      return it->second;
    }
  }
  auto t = std::make_shared<const LevelTable>(build(l));
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, fresh] = cache_.emplace(l, t);
  if (!fresh) return it->second;
  lru_.push_front(l);
  bytes_ += t->bytes();
  while (bytes_ > opt_.cache_bytes && lru_.size() > 1) {
    const int victim = lru_.back();
    lru_.pop_back();
    bytes_ -= cache_[victim]->bytes();
    cache_.erase(victim);
  }
  return t;
}

size_t CommutatorEngine::cached_bytes() const {
  std::lock_guard<std::mutex> lock(mu_);
  return bytes_;
}

LevelTable CommutatorEngine::build(int l) const {
  LevelTable t;
  t.level = l;
  const double s = std::ldexp(1.0, l), R = opt_.input_radius;
  const bool grade = needs_grading(k_);
  const size_t n_out = out_.size();
  // coarse panels: 2^c per side, each a union of fine input panels
  const int c = std::max(0, static_cast<int>(std::ceil(std::log2(R / (s / 8.0)) - 1e-12)));
  const int a = static_cast<int>(std::lround(std::log2(R / input_panel_)));
  const double coarse_len = R / std::ldexp(1.0, c);
  t.projected = c <= a - 2;

  struct Row {
    std::vector<double> nodes;  // own nodes (fine rows)
    std::vector<uint32_t> col;  // into the shared coarse nodes (projected rows)
    std::vector<cplx> w;
  };
  std::vector<Row> rows(n_out);

  if (t.projected) {
    // K_l(x, .) is smooth on the scale of the coarse panels: interpolate it there and integrate g against the
    // Lagrange basis on the fine input rule.
    const Rule1D coarse = rule_of(panel_list(-R, R, coarse_len, false), kCoarseNodes);
    t.nodes = coarse.x;
    t.proj_first.resize(input_.size());
    t.proj.resize(input_.size() * kCoarseNodes);
    std::vector<double> xs(kCoarseNodes), lv;
    for (size_t i = 0; i < input_.size(); ++i) {
      const double y = input_.x[i];
      const size_t p = std::min(coarse.size() / kCoarseNodes - 1, static_cast<size_t>((y + R) / coarse_len));
      t.proj_first[i] = static_cast<uint32_t>(p * kCoarseNodes);
      for (int j = 0; j < kCoarseNodes; ++j) xs[j] = coarse.x[p * kCoarseNodes + j];
      lagrange(xs, y, lv);
      for (int j = 0; j < kCoarseNodes; ++j) t.proj[i * kCoarseNodes + j] = lv[j] * input_dw_[i];
    }
    parallel_for(n_out, opt_.jobs, [&](size_t i) {
      const double x = out_.points[i][0];
      if (std::abs(x) - s > R) return;
      const Vec xv = vec({x});
      for (size_t j = 0; j < coarse.size(); ++j) {
        if (std::abs(std::abs(x) - std::abs(coarse.x[j])) > s) continue;
        const cplx v = tpk_(l, xv, vec({coarse.x[j]}));
        if (v != 0.0) {
          rows[i].col.push_back(static_cast<uint32_t>(j));
          rows[i].w.push_back(v);
        }
      }
    });
  } else {
    const double len = std::min(s / 8.0, input_panel_);
    parallel_for(n_out, opt_.jobs, [&](size_t i) {
      const double x = out_.points[i][0];
      // K_l(x, y) vanishes unless some orbit image of y is within 2^l of x
      std::vector<std::pair<double, double>> win;
      for (double c : {x, -x}) {
        const double a = std::max(c - s, -R), b = std::min(c + s, R);
        if (b > a) win.emplace_back(a, b);
      }
      if (win.empty()) return;
      std::sort(win.begin(), win.end());
      if (win.size() == 2 && win[1].first <= win[0].second) {
        win[0].second = std::max(win[0].second, win[1].second);
        win.pop_back();
      }
      // break where the cutoff ramps of the nearest orbit image start and end
      std::vector<double> cuts;
      for (double c : {x, -x})
        for (double d : {-s / 2, -s / 4, 0.0, s / 4, s / 2}) cuts.push_back(c + d);
      const Vec xv = vec({x});
      for (const auto& [a, b] : win) {
        std::vector<double> brk{a, b};
        for (double c : cuts)
          if (c > a + 1e-12 * s && c < b - 1e-12 * s) brk.push_back(c);
        std::sort(brk.begin(), brk.end());
        std::vector<std::pair<double, double>> pl;
        for (size_t q = 0; q + 1 < brk.size(); ++q) {
          auto part = panel_list(brk[q], brk[q + 1], len, grade);
          pl.insert(pl.end(), part.begin(), part.end());
        }
        const Rule1D r = rule_of(pl, opt_.nodes);
        for (size_t j = 0; j < r.size(); ++j) {
          const cplx v = tpk_(l, xv, vec({r.x[j]}));
          if (v == 0.0) continue;
          rows[i].nodes.push_back(r.x[j]);
          rows[i].w.push_back(v * r.w[j] * dw1(k_, r.x[j]));
        }
      }
    });
  }

  t.row_start.assign(n_out + 1, 0);
  for (size_t i = 0; i < n_out; ++i) {
    t.row_start[i + 1] = t.row_start[i] + rows[i].w.size();
    for (size_t j = 0; j < rows[i].w.size(); ++j) {
      if (t.projected) {
        t.col.push_back(rows[i].col[j]);
      } else {
        t.col.push_back(static_cast<uint32_t>(t.nodes.size()));
        t.nodes.push_back(rows[i].nodes[j]);
      }
      t.weight.push_back(rows[i].w[j]);
    }
    Row().w.swap(rows[i].w);
  }
  return t;
}

std::vector<cplx> CommutatorEngine::node_values(const LevelTable& t, const Integrand& g) const {
  std::vector<cplx> out;
  if (t.projected) {
    out.assign(t.nodes.size(), 0.0);
    for (size_t i = 0; i < input_.size(); ++i) {
      const cplx gi = g(vec({input_.x[i]}));
      if (gi == 0.0) continue;
      for (int j = 0; j < kCoarseNodes; ++j) out[t.proj_first[i] + j] += t.proj[i * kCoarseNodes + j] * gi;
    }
  } else {
    out.reserve(t.nodes.size());
    for (double y : t.nodes) out.push_back(g(vec({y})));
  }
  return out;
}

std::vector<cplx> CommutatorEngine::apply_level(int l, const Integrand& f) const {
  const auto t = level(l);
  const std::vector<cplx> g = node_values(*t, f);
  std::vector<cplx> out(out_.size(), 0.0);
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t e = t->row_start[i]; e < t->row_start[i + 1]; ++e) out[i] += t->weight[e] * g[t->col[e]];
  return out;
}

std::vector<cplx> CommutatorEngine::commutator_level(int l, const Integrand& b, const Integrand& f,
                                                    double* magnitude) const {
  const auto t = level(l);
  const std::vector<cplx> g = node_values(*t, f);
  const std::vector<cplx> bg = node_values(*t, [&](const Vec& y) {
    const cplx fy = f(y);
    return fy == 0.0 ? cplx(0.0) : b(y) * fy;
  });
  std::vector<cplx> out(out_.size(), 0.0);
  for (size_t i = 0; i < out.size(); ++i) {
    if (t->row_start[i] == t->row_start[i + 1]) continue;
    cplx A = 0.0, B = 0.0;
    for (size_t e = t->row_start[i]; e < t->row_start[i + 1]; ++e) {
      A += t->weight[e] * g[t->col[e]];
      B += t->weight[e] * bg[t->col[e]];
    }
    const cplx bx = b(out_.points[i]);
    out[i] = bx * A - B;
    if (magnitude) *magnitude = std::max(*magnitude, std::abs(bx * A) + std::abs(B));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------------------------

CommutatorSeries::CommutatorSeries(const CommutatorEngine& e, Integrand b, Integrand f)
    : e_(e), b_(std::move(b)), f_(std::move(f)) {}

const std::vector<cplx>& CommutatorSeries::level(int l) {
  auto it = levels_.find(l);
  if (it == levels_.end()) {
    double mag = 0.0;
    it = levels_.emplace(l, e_.commutator_level(l, b_, f_, &mag)).first;
    magnitude_ = std::max(magnitude_, mag);
  }
  return it->second;
}

std::vector<cplx> CommutatorSeries::truncated(int m) {
  if (m < 0) fail(ErrorCode::invalid_argument, "truncation level must be non-negative");
  std::vector<cplx> acc(e_.output_size(), 0.0);
  add_to(acc, level(0));
  for (int l = 1; l <= m; ++l) {
    add_to(acc, level(l));
    add_to(acc, level(-l));
  }
  return acc;
}

std::vector<cplx> CommutatorSeries::tail(int m) {
  std::vector<cplx> acc(e_.output_size(), 0.0);
  for (int l = m + 1; l <= e_.max_level(); ++l) {
    add_to(acc, level(l));
    add_to(acc, level(-l));
  }
  return acc;
}

GridFunction commutator_truncated(const CommutatorEngine& e, const Integrand& b, const Integrand& f, int m) {
  CommutatorSeries s(e, b, f);
  return e.make_output(s.truncated(m));
}

LimitRecord commutator_limit(CommutatorSeries& s, double p0, double tol) {
  if (!(p0 > 1.0)) fail(ErrorCode::invalid_argument, "the limit is taken in L^p0 with p0 > 1");
  if (!(tol > 0.0)) fail(ErrorCode::invalid_argument, "tolerance must be positive");
  const CommutatorEngine& e = s.engine();
  const GridFunction& grid = e.output_grid();
  LimitRecord rec;
  std::vector<cplx> prev, cur = s.truncated(0);
  for (int m = 0;; ++m) {
    if (m + 1 > e.max_level())
      throw ConvergenceError("commutator partial sums did not settle below the tolerance by level " +
                                 std::to_string(e.max_level()),
                             rec.cauchy);
    std::vector<cplx> inc = s.level(m + 1);
    add_to(inc, s.level(-m - 1));
    // increments at rounding level of the two terms b T f and T(b f) count as zero
    const double dn = max_abs(inc) <= 1e-13 * s.magnitude() ? 0.0 : lp_of(grid, inc, p0);
    const double cn = lp_of(grid, cur, p0);
    rec.norms.push_back(cn);
    rec.cauchy.push_back(dn == 0.0 ? 0.0 : (cn == 0.0 ? INFINITY : dn / cn));
    if (m >= 1 && rec.cauchy[m - 1] < tol && rec.cauchy[m] < tol) {
      rec.m_star = m - 1;
      rec.value = e.make_output(prev);
      return rec;
    }
    prev = cur;
    add_to(cur, inc);
  }
}

LimitRecord commutator_limit(const CommutatorEngine& e, const Integrand& b, const Integrand& f, double p0, double tol) {
  CommutatorSeries s(e, b, f);
  return commutator_limit(s, p0, tol);
}

// ---------------------------------------------------------------------------------------------------------------

NormEstimate estimate_operator_norm(const CommutatorEngine& e, const std::vector<BmoFunction>& bs,
                                    const std::vector<NamedFunction>& fs,
                                    const std::vector<std::pair<size_t, size_t>>& pairs, const std::vector<double>& ps,
                                    double tol, int jobs) {
  for (double p : ps)
    if (!(p > 1.0) || !std::isfinite(p)) fail(ErrorCode::invalid_argument, "norm exponents must lie in (1, inf)");
  for (const auto& [bi, fi] : pairs)
    if (bi >= bs.size() || fi >= fs.size()) fail(ErrorCode::invalid_argument, "pair index out of range");
  std::vector<std::vector<NormRow>> per(pairs.size());
  parallel_for(pairs.size(), jobs, [&](size_t i) {
    const BmoFunction& b = bs[pairs[i].first];
    const NamedFunction& f = fs[pairs[i].second];
    CommutatorSeries s(e, b.fn, f.fn);
    for (double p : ps) {
      NormRow r;
      r.b_id = b.id;
      r.f_id = f.id;
      r.p = p;
      r.bmo = b.bmo;
      r.f_norm = e.input_norm(f.fn, p);
      try {
        LimitRecord lim = commutator_limit(s, (1.0 + p) / 2.0, tol);
        r.m_star = lim.m_star;
        r.cf_norm = lim.value.lp_norm(p);
        r.norm_ratio = r.cf_norm / r.f_norm;
        if (b.bmo <= 0.0) {
          r.status = "degenerate";
        } else {
          r.ratio = r.norm_ratio / b.bmo;
          r.status = "ok";
        }
      } catch (const ConvergenceError&) {
        r.status = "not-converged";
      }
      per[i].push_back(r);
    }
  });
  NormEstimate est;
  est.family = std::to_string(pairs.size()) + " pairs";
  for (auto& v : per)
    for (auto& r : v) {
      if (r.status == "ok") {
        est.measured_norm = std::max(est.measured_norm, r.norm_ratio);
        est.bmo_ratio = std::max(est.bmo_ratio, r.ratio);
      }
      est.rows.push_back(std::move(r));
    }
  return est;
}

std::vector<BmoFunction> standard_b_family(const WeightedMeasure& m, int count, uint64_t seed, const QuadratureSpec& q) {
  if (m.dim() != 1) fail(ErrorCode::unsupported, "the standard BMO family is rank-one");
  if (count < 1) fail(ErrorCode::invalid_argument, "family size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const BallFamily fam = dyadic_family(1, 4.0, 0.25, 0.25, -3, 4);
  std::vector<BmoFunction> out;
  for (int i = 0; i < count; ++i) {
    const double c = -1.5 + 3.0 * U(rng), w = 0.5 + 1.5 * U(rng), h = 0.5 + 1.5 * U(rng);
    BmoFunction b;
    switch (i % 7) {
      case 0: b.fn = tent(vec({c}), h, w).b; b.id = "tent"; break;
      case 1: b.fn = plateau(vec({c}), h, 0.5 * w, w).b; b.id = "plateau"; break;
      case 2: b.fn = smooth_bump(vec({c}), h, w).b; b.id = "bump"; break;
      case 3: b.fn = [h](const Vec& x) { return cplx(h * std::log(std::abs(x[0]))); }; b.id = "log-abs"; break;
      case 4: b.fn = [c, w, h](const Vec& x) { return cplx(h * std::atan((x[0] - c) / w)); }; b.id = "atan"; break;
      case 5: b.fn = [c, w, h](const Vec& x) { return cplx(h * std::tanh((x[0] - c) / w)); }; b.id = "tanh"; break;
      default: b.fn = [h](const Vec&) { return cplx(h); }; b.id = "constant"; break;
    }
    b.id += "-" + std::to_string(i);
    b.bmo = (i % 7 == 6) ? 0.0 : bmo_norm(m, b.fn, fam, 1, q).norm_estimate;
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<NamedFunction> standard_f_family(double radius, int count, uint64_t seed) {
  if (!(radius > 0.0) || count < 1) fail(ErrorCode::invalid_argument, "bad input family parameters");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<NamedFunction> out;
  for (int i = 0; i < count; ++i) {
    const double w = radius * (0.2 + 0.3 * U(rng));
    const double c = (radius - w) * (2.0 * U(rng) - 1.0);
    const double om = (i % 2) ? 6.0 * U(rng) : 0.0, ph = 6.283185307179586 * U(rng);
    NamedFunction f;
    f.id = (om > 0 ? "wave-" : "bump-") + std::to_string(i);
    f.fn = [c, w, om, ph](const Vec& x) {
      const double u = (x[0] - c) / w;
      if (std::abs(u) >= 1.0) return cplx(0.0);
      return cplx(std::exp(1.0 - 1.0 / (1.0 - u * u)) * (om > 0 ? std::cos(om * x[0] + ph) : 1.0));
    };
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::pair<size_t, size_t>> standard_pairs(size_t nb, size_t nf, int count, uint64_t seed) {
  if (nb == 0 || nf == 0 || count < 0) fail(ErrorCode::invalid_argument, "bad pair family parameters");
  std::mt19937_64 rng(seed);
  std::vector<std::pair<size_t, size_t>> out;
  for (int i = 0; i < count; ++i) out.emplace_back(rng() % nb, rng() % nf);
  return out;
}

// ---------------------------------------------------------------------------------------------------------------

int Decomposition::piece(const Vec& z) const {
  const double r5 = 5.0 * ball.radius;
  if ((z - ball.center).norm() <= r5) return 0;
  for (size_t j = 0; j < sigmas.size(); ++j)
    if ((sigmas[j].transpose() * z - ball.center).norm() <= r5) return 2 + static_cast<int>(j);
  return 1;
}

std::vector<SharpRow> sharp_maximal_diagnostic(const CommutatorEngine& e, const Integrand& b, const Integrand& f,
                                               double bmo, int m, double p,
                                               const std::vector<std::pair<double, double>>& samples,
                                               const BallFamily& family, const QuadratureSpec& q) {
  if (!(p > 1.0)) fail(ErrorCode::invalid_argument, "p must exceed 1");
  const double s = (1.0 + p) / 2.0;
  const WeightedMeasure& meas = e.measure();
  const CoxeterGroup& G = e.two_point().group();
  const Integrand Cf = e.interpolant(CommutatorSeries(e, b, f).truncated(m));
  auto T = [&](const Integrand& g) {
    std::vector<cplx> acc(e.output_size(), 0.0);
    for (int l = -m; l <= m; ++l) add_to(acc, e.apply_level(l, g));
    return e.interpolant(std::move(acc));
  };
  auto power = [](const Integrand& g, double s) {
    return Integrand([g, s](const Vec& x) { return cplx(std::pow(std::abs(g(x)), s)); });
  };
  std::vector<SharpRow> rows;
  for (size_t n = 0; n < samples.size(); ++n) {
    const auto [x, r] = samples[n];
    if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "sample radius must be positive");
    Decomposition d{Ball{vec({x}), r}, {}};
    for (size_t j = 1; j < G.elements.size(); ++j) d.sigmas.push_back(G.elements[j]);
    const int pieces = 2 + static_cast<int>(d.sigmas.size());
    std::vector<Integrand> parts;
    for (int i = 0; i < pieces; ++i)
      parts.push_back([f, d, i](const Vec& z) { return d.piece(z) == i ? f(z) : cplx(0.0); });

    SharpRow row;
    row.sample = static_cast<int>(n);
    row.x = x;
    row.radius = r;
    row.s = s;
    for (double y : e.input_rule().x) {
      const Vec yv = vec({y});
      cplx sum = 0.0;
      for (const auto& g : parts) sum += g(yv);
      row.partition_error = std::max(row.partition_error, std::abs(sum - f(yv)));
    }
    row.lhs = best_constant_oscillation(meas, Cf, d.ball, q);
    const Vec xv = vec({x});
    double bracket = 0.0;
    for (const auto& g : parts) bracket += std::pow(maximal_function(meas, power(T(g), s), xv, family, q), 1.0 / s);
    for (const Mat& sg : G.elements) {
      const Vec sx = sg * xv;
      bracket += maximal_function(meas, f, sx, family, q);
      bracket += std::pow(maximal_function(meas, power(f, s), sx, family, q), 1.0 / s);
    }
    row.rhs = bmo * bracket;
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : (row.lhs == 0.0 ? 0.0 : INFINITY);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------------------------------------------

std::vector<size_t> tail_sample_points(const CommutatorEngine& e, int count, double lo, double hi, uint64_t seed) {
  if (!(lo > 0.0 && hi > lo) || count < 1) fail(ErrorCode::invalid_argument, "bad sample range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto& pts = e.output_grid().points;
  std::vector<size_t> out;
  for (int i = 0; i < count; ++i) {
    const double target = lo * std::pow(hi / lo, (i + U(rng)) / count) * (U(rng) < 0.5 ? -1.0 : 1.0);
    size_t best = 0;
    for (size_t j = 1; j < pts.size(); ++j)
      if (std::abs(pts[j][0] - target) < std::abs(pts[best][0] - target)) best = j;
    out.push_back(best);
  }
  return out;
}

TailReport tail_bounds_probe(const CommutatorEngine& e, const LipschitzWitness& b, const Integrand& f, int m, double p,
                             const std::vector<size_t>& output_points, const BallFamily& family,
                             const QuadratureSpec& q) {
  if (std::ldexp(1.0, m) < 2.0 * b.support_radius)
    fail(ErrorCode::precondition, "the tail bounds need 2^m >= 2 r_b");
  if (m >= e.max_level()) fail(ErrorCode::precondition, "no levels above m on this engine");
  const int M = e.max_level();
  const double eps = e.kernel().epsilon, Nh = e.measure().hom_dim, N = e.measure().dim();
  const auto& pts = e.output_grid().points;
  double b_sup = 0.0;
  for (double y : e.input_rule().x) b_sup = std::max(b_sup, std::abs(b.b(vec({y}))));
  for (const auto& x : pts) b_sup = std::max(b_sup, std::abs(b.b(x)));
  const double f_p = e.input_norm(f, p);
  const Integrand bf = [&](const Vec& y) { return b.b(y) * f(y); };

  std::vector<double> small(pts.size(), 0.0), local(pts.size(), 0.0), far(pts.size(), 0.0);
  CommutatorSeries series(e, b.b, f);
  for (int l = -M; l < -m; ++l) {
    const auto& c = series.level(l);
    for (size_t i : output_points) small[i] += std::abs(c[i]);
  }
  for (int l = m + 1; l <= M; ++l) {
    const auto tf = e.apply_level(l, f), tbf = e.apply_level(l, bf);
    for (size_t i : output_points) {
      local[i] += std::abs(b.b(pts[i]) * tf[i]);
      far[i] += std::abs(tbf[i]);
    }
  }
  const CoxeterGroup& G = e.two_point().group();
  TailReport rep;
  auto push = [&](const std::string& name, double x, double lhs, double shape) {
    TailRow r{name, m, x, lhs, shape, shape > 0.0 ? lhs / shape : (lhs == 0.0 ? 0.0 : INFINITY)};
    rep.implied[name] = std::max(rep.implied[name], r.ratio);
    rep.rows.push_back(r);
  };
  for (size_t i : output_points) {
    const double x = pts[i][0], ax = std::abs(x);
    double mf = 0.0;
    if (small[i] > 0.0)
      for (const Mat& sg : G.elements) mf += maximal_function(e.measure(), f, sg * pts[i], family, q);
    push("small-scale", x, small[i], b.lipschitz * std::pow(2.0, -eps * m) * mf);
    push("local", x, local[i], ax <= b.support_radius ? b_sup * std::pow(2.0, -m * N / p) * f_p : 0.0);
    const double env = ax < std::ldexp(1.0, m) ? std::pow(2.0, -m * Nh) : std::pow(ax, -Nh);
    push("far", x, far[i], b_sup * env * f_p);
  }
  return rep;
}

DecayFit tail_decay(CommutatorSeries& s, double p, const std::vector<int>& ms) {
  if (ms.size() < 2) fail(ErrorCode::invalid_argument, "a slope needs at least two levels");
  DecayFit fit;
  fit.ms = ms;
  for (int m : ms) {
    if (m < 0 || m >= s.engine().max_level()) fail(ErrorCode::precondition, "tail level outside the engine's range");
    fit.norms.push_back(lp_of(s.engine().output_grid(), s.tail(m), p));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ms.size());
  for (size_t i = 0; i < ms.size(); ++i) {
    const double y = std::log2(fit.norms[i]);
    sx += ms[i];
    sy += y;
    sxx += double(ms[i]) * ms[i];
    sxy += ms[i] * y;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

// ---------------------------------------------------------------------------------------------------------------

int covering_number(const std::vector<std::vector<double>>& points, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::invalid_argument, "delta must be positive");
  std::vector<size_t> centers;
  for (size_t i = 0; i < points.size(); ++i) {
    bool covered = false;
    for (size_t c : centers) {
      double d = 0.0;
      for (size_t j = 0; j < points[i].size() && d <= delta; ++j) d = std::max(d, std::abs(points[i][j] - points[c][j]));
      if (d <= delta) {
        covered = true;
        break;
      }
    }
    if (!covered) centers.push_back(i);
  }
  return static_cast<int>(centers.size());
}

std::vector<NamedFunction> unit_ball_sample(const CommutatorEngine& e, double radius, int count, uint64_t seed, double p,
                                            int dictionary) {
  if (!(radius > 0.0) || radius > e.options().input_radius)
    fail(ErrorCode::precondition, "sample support must lie inside the engine's input radius");
  if (count < 1 || dictionary < 1) fail(ErrorCode::invalid_argument, "bad sample sizes");
  const double w = 2.0 * radius / (dictionary + 1);
  std::vector<double> centers;
  for (int j = 0; j < dictionary; ++j) centers.push_back(-radius + w * (j + 1));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> Z(0.0, 1.0);
  std::vector<NamedFunction> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> a(dictionary);
    for (double& v : a) v = Z(rng);
    auto fn = [centers, w, a](const Vec& x) {
      double s = 0.0;
      for (size_t j = 0; j < centers.size(); ++j) {
        const double u = (x[0] - centers[j]) / w;
        if (std::abs(u) < 1.0) s += a[j] * std::exp(1.0 - 1.0 / (1.0 - u * u));
      }
      return cplx(s);
    };
    const double nrm = e.input_norm(fn, p);
    out.push_back({"unit-" + std::to_string(i), [fn, nrm](const Vec& x) { return fn(x) / nrm; }});
  }
  return out;
}

CompactnessReport compactness_probe(const CommutatorEngine& e, const LipschitzWitness& b,
                                    const std::vector<NamedFunction>& basis, int m, double p,
                                    const std::vector<double>& delta_fractions, int slope_functions) {
  if (basis.empty()) fail(ErrorCode::invalid_argument, "empty basis");
  if (m < 0 || m > e.max_level()) fail(ErrorCode::precondition, "truncation level outside the engine's range");
  const auto& grid = e.output_grid();
  CompactnessReport rep;
  rep.m = m;
  rep.omega_radius = b.support_radius + std::ldexp(1.0, m + 1);
  const double r_loc = b.support_radius + std::ldexp(1.0, m);
  std::vector<size_t> inside;
  for (size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid.points[i][0]) <= rep.omega_radius) inside.push_back(i);

  std::vector<std::vector<double>> images;
  const double eps = e.kernel().epsilon;
  for (size_t n = 0; n < basis.size(); ++n) {
    const auto& f = basis[n].fn;
    CommutatorSeries s(e, b.b, f);
    const std::vector<cplx> v = s.truncated(m);
    double out_mass = 0.0, all_mass = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      const double t = std::pow(std::abs(v[i]), p) * grid.quad_weights[i];
      all_mass += t;
      if (std::abs(grid.points[i][0]) > rep.omega_radius) out_mass += t;
    }
    rep.leakage = std::max(rep.leakage, all_mass > 0.0 ? std::pow(out_mass / all_mass, 1.0 / p) : 0.0);

    const Integrand cut = [f, r_loc](const Vec& y) { return std::abs(y[0]) <= r_loc ? f(y) : cplx(0.0); };
    const std::vector<cplx> vc = CommutatorSeries(e, b.b, cut).truncated(m);
    double gap = 0.0, vmax = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      gap = std::max(gap, std::abs(v[i] - vc[i]));
      vmax = std::max(vmax, std::abs(v[i]));
    }
    rep.localization_gap = std::max(rep.localization_gap, vmax > 0.0 ? gap / vmax : gap);

    std::vector<double> img;
    double holder = 0.0;
    for (size_t a : inside) {
      img.push_back(v[a].real());
      rep.uniform_bound = std::max(rep.uniform_bound, std::abs(v[a]));
      for (size_t c : inside) {
        const double d = std::abs(grid.points[a][0] - grid.points[c][0]);
        if (c <= a || d > 1.0) continue;
        holder = std::max(holder, std::abs(v[a] - v[c]) / std::pow(d, eps));
      }
    }
    images.push_back(std::move(img));
    rep.holder_per_function.push_back(holder);
    rep.holder_modulus = std::max(rep.holder_modulus, holder);
    if (static_cast<int>(n) < slope_functions && m + 5 < e.max_level()) {
      std::vector<int> ms;
      for (int j = m + 1; j <= std::min(m + 5, e.max_level() - 1); ++j) ms.push_back(j);
      rep.tail_slopes.push_back(tail_decay(s, p, ms).slope);
    }
  }
  std::vector<double> h = rep.holder_per_function;
  std::nth_element(h.begin(), h.begin() + h.size() / 2, h.end());
  const double med = h[h.size() / 2];
  rep.holder_spread = med > 0.0 ? rep.holder_modulus / med : (rep.holder_modulus == 0.0 ? 1.0 : INFINITY);
  for (double frac : delta_fractions) {
    const double delta = frac * rep.uniform_bound;
    rep.covering_numbers.emplace_back(frac, delta > 0.0 ? covering_number(images, delta) : 1);
  }
  rep.images = std::move(images);
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------

GridFunction operator_apply(const CommutatorEngine& e, const Integrand& f, int m) {
  if (m < 0 || m > e.max_level()) fail(ErrorCode::precondition, "truncation level outside the engine's range");
  std::vector<cplx> acc(e.output_size(), 0.0);
  for (int l = -m; l <= m; ++l) add_to(acc, e.apply_level(l, f));
  return e.make_output(std::move(acc));
}

cplx level_symbol(const KernelSpec& ks, double k, int l, double xi) {
  const DyadicKernel dk = dyadic_piece(ks, l);
  const double s = dk.scale;
  const int panels = 2 + static_cast<int>(std::ceil(0.75 * s * std::abs(xi) / 6.0));
  cplx acc = 0.0;
  for (double sgn : {-1.0, 1.0}) {
    for (const auto& [a, b] : {std::pair{s / 4, s / 2}, std::pair{s / 2, s}}) {
      const Rule1D r = composite_gauss(a, b, {}, 16, panels);
      for (size_t i = 0; i < r.size(); ++i) {
        const double x = sgn * r.x[i];
        acc += r.w[i] * dw1(k, x) * dk.profile(vec({x})) * rank1_kernel_imag(k, x * xi);
      }
    }
  }
  return acc / rank1_ck(k);
}

GridFunction operator_apply_spectral(const SpectralContext& ctx, const KernelSpec& ks, const GridFunction& f, int m) {
  if (ctx.dim() != 1) fail(ErrorCode::unsupported, "spectral kernel sums are rank-one only");
  if (!ctx.on_space_grid(f)) fail(ErrorCode::invalid_argument, "input is not on the spectral grid");
  if (m < 0) fail(ErrorCode::invalid_argument, "truncation level must be non-negative");
  if (!f.support_radius || std::ldexp(1.0, m) + *f.support_radius > ctx.options().space_radius)
    fail(ErrorCode::precondition, "the kernel sum would wrap around the spectral window");
  const double k = ctx.axis_k(0);
  const GridFunction mult = ctx.sample_freq([&](const Vec& xi) {
    cplx s = 0.0;
    for (int l = -m; l <= m; ++l) s += level_symbol(ks, k, l, xi[0]);
    return s * ctx.ck();
  });
  GridFunction out = apply_multiplier(ctx, f, mult);
  out.aliased = out.aliased || f.aliased;
  return out;
}

// ---------------------------------------------------------------------------------------------------------------

void write_norm_csv(std::ostream& os, const NormEstimate& est) {
  os << "b,f,p,m_star,cf_norm,f_norm,bmo,norm_ratio,ratio,status\n";
  os.precision(10);
  for (const auto& r : est.rows)
    os << r.b_id << ',' << r.f_id << ',' << r.p << ',' << r.m_star << ',' << r.cf_norm << ',' << r.f_norm << ','
       << r.bmo << ',' << r.norm_ratio << ',' << r.ratio << ',' << r.status << '\n';
}

void write_tail_csv(std::ostream& os, const TailReport& rep) {
  os << "tail,m,x,lhs,shape,ratio\n";
  os.precision(10);
  for (const auto& r : rep.rows)
    os << r.tail << ',' << r.m << ',' << r.x << ',' << r.lhs << ',' << r.shape << ',' << r.ratio << '\n';
}

void write_sharp_csv(std::ostream& os, const std::vector<SharpRow>& rows) {
  os << "sample,x,radius,s,lhs,rhs,ratio,partition_error\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.sample << ',' << r.x << ',' << r.radius << ',' << r.s << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio
       << ',' << r.partition_error << '\n';
}

void write_compactness_csv(std::ostream& os, const CompactnessReport& rep) {
  os << "quantity,index,value\n";
  os.precision(10);
  os << "omega_radius,0," << rep.omega_radius << '\n'
     << "leakage,0," << rep.leakage << '\n'
     << "localization_gap,0," << rep.localization_gap << '\n'
     << "uniform_bound,0," << rep.uniform_bound << '\n'
     << "holder_modulus,0," << rep.holder_modulus << '\n'
     << "holder_spread,0," << rep.holder_spread << '\n';
  for (size_t i = 0; i < rep.holder_per_function.size(); ++i)
    os << "holder," << i << ',' << rep.holder_per_function[i] << '\n';
  for (const auto& [d, n] : rep.covering_numbers) os << "covering," << d << ',' << n << '\n';
  for (size_t i = 0; i < rep.tail_slopes.size(); ++i) os << "tail_slope," << i << ',' << rep.tail_slopes[i] << '\n';
}

}  // namespace dunkl

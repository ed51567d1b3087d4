#include "dunkl/spectral.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <ostream>

namespace dunkl {

namespace {

constexpr double kSeriesCutoff = 6.0;

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

cplx series(double k, cplx t, int order) {
  // sum a_n t^n with a_n = a_{n-1} / (n + 2k [n odd])
  cplx term = 1.0, sum = 1.0;
  for (int n = 1; n <= order; ++n) {
    term *= t / (n + (n % 2 ? 2.0 * k : 0.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && n > 2) break;
  }
  return sum;
}

cplx series_dt(double k, cplx t, int order) {
  // derivative in t of the series above
  cplx term = 1.0, sum = 0.0;
  for (int n = 1; n <= order; ++n) {
    term *= (n == 1 ? cplx(1.0) : t) / (n + (n % 2 ? 2.0 * k : 0.0));
    // term now holds a_n t^{n-1}
    sum += static_cast<double>(n) * term;
    if (std::abs(term) * n < 1e-17 * std::abs(sum) && n > 2) break;
  }
  return sum;
}

// normalized Bessel j_nu(t) = Gamma(nu+1) (2/t)^nu J_nu(t), t > 0
double jnorm(double nu, double t) {
  return std::exp(std::lgamma(nu + 1.0) + nu * std::log(2.0 / t)) * boost::math::cyl_bessel_j(nu, t);
}
double inorm(double nu, double t) {
  return std::exp(std::lgamma(nu + 1.0) + nu * std::log(2.0 / t)) * boost::math::cyl_bessel_i(nu, t);
}

// Multiply the tensor (first axis slowest) along `axis` by M.
std::vector<cplx> apply_axis(const std::vector<cplx>& data, std::vector<int>& shape, int axis, const CMat& M) {
  long pre = 1, post = 1;
  for (int d = 0; d < axis; ++d) pre *= shape[d];
  for (size_t d = axis + 1; d < shape.size(); ++d) post *= shape[d];
  const long n = shape[axis], m = M.rows();
  using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<cplx> out(static_cast<size_t>(pre * m * post));
  for (long p = 0; p < pre; ++p) {
    Eigen::Map<const RowMat> slab(data.data() + p * n * post, n, post);
    Eigen::Map<RowMat> dst(out.data() + p * m * post, m, post);
    dst.noalias() = M * slab;
  }
  shape[axis] = static_cast<int>(m);
  return out;
}

std::vector<Vec> tensor_points(const std::vector<const Rule1D*>& axes, std::vector<double>* weights,
                               const std::vector<const std::vector<double>*>& dws) {
  const int n = static_cast<int>(axes.size());
  std::vector<Vec> pts;
  std::vector<size_t> idx(n, 0);
  while (true) {
    Vec x(n);
    double w = 1.0;
    for (int d = 0; d < n; ++d) {
      x[d] = axes[d]->x[idx[d]];
      w *= (*dws[d])[idx[d]];
    }
    pts.push_back(x);
    if (weights) weights->push_back(w);
    int d = n - 1;
    while (d >= 0 && ++idx[d] == axes[d]->size()) idx[d--] = 0;
    if (d < 0) break;
  }
  return pts;
}

double deficit(const GridFunction& a, const GridFunction& b) {
  const double na = a.l2_norm(), nb = b.l2_norm();
  if (na == 0.0) return 0.0;
  return std::abs(1.0 - (nb * nb) / (na * na));
}

CMat kernel_matrix(double k, const AxisGrid& space, const AxisGrid& freq) {
  const long nx = space.size(), nf = freq.size();
  CMat K(nf, nx);
  // both grids are mirror symmetric: fill the quadrant x, xi > 0 and reflect
  const long hx = nx / 2, hf = nf / 2;
  for (long j = hf; j < nf; ++j)
    for (long i = hx; i < nx; ++i) {
      const cplx e = rank1_kernel_imag(k, space.rule.x[i] * freq.rule.x[j]);
      const long mi = nx - 1 - i, mj = nf - 1 - j;
      K(j, i) = e;
      K(mj, mi) = e;
      K(j, mi) = std::conj(e);
      K(mj, i) = std::conj(e);
    }
  return K;
}

}  // namespace

double rank1_ck(double k) { return std::pow(2.0, 2.0 * k + 0.5) * std::tgamma(k + 0.5); }

cplx rank1_kernel_imag(double k, double t) {
  if (k == 0.0) return std::exp(cplx(0.0, -t));
  if (std::abs(t) <= kSeriesCutoff) return series(k, cplx(0.0, -t), 200);
  const double a = std::abs(t);
  return cplx(jnorm(k - 0.5, a), -t / (2.0 * k + 1.0) * jnorm(k + 0.5, a));
}

cplx rank1_kernel_imag_dt(double k, double t) {
  if (k == 0.0) return cplx(0.0, -1.0) * std::exp(cplx(0.0, -t));
  if (std::abs(t) <= kSeriesCutoff) return cplx(0.0, -1.0) * series_dt(k, cplx(0.0, -t), 200);
  // d/dt j_nu(t) = -t / (2(nu+1)) j_{nu+1}(t)
  const double a = std::abs(t), c = 2.0 * k + 1.0;
  const double j1 = jnorm(k + 0.5, a), j2 = jnorm(k + 1.5, a);
  return cplx(-t / c * j1, -j1 / c + t * t / (c * (2.0 * k + 3.0)) * j2);
}

cplx rank1_kernel(double k, double x, cplx y, int order) {
  const cplx t = x * y;
  if (k == 0.0) return std::exp(t);
  if (std::abs(t) <= kSeriesCutoff) return series(k, t, order);
  if (std::abs(t.real()) < 1e-300) return rank1_kernel_imag(k, -t.imag());
  if (std::abs(t.imag()) < 1e-300) {
    const double s = t.real(), a = std::abs(s);
    return inorm(k - 0.5, a) + s / (2.0 * k + 1.0) * inorm(k + 0.5, a);
  }
  if (std::abs(t) <= 40.0) return series(k, t, std::max(order, 400));
  fail(ErrorCode::unsupported, "kernel evaluation needs a real or purely imaginary product at large arguments");
}

cplx rank1_kernel_dx(double k, double x, cplx y, int order) {
  const cplx t = x * y;
  if (k == 0.0) return y * std::exp(t);
  if (std::abs(t) <= kSeriesCutoff || (std::abs(t.real()) > 1e-300 && std::abs(t.imag()) > 1e-300))
    return y * series_dt(k, t, std::max(order, 400));
  if (std::abs(t.real()) < 1e-300) {
    // y = -i xi, t = x y = -i (x xi)
    const double xi = -y.imag();
    return xi * rank1_kernel_imag_dt(k, x * xi);
  }
  const double s = t.real(), a = std::abs(s), c = 2.0 * k + 1.0;
  // d/ds i_nu(s) = s / (2(nu+1)) i_{nu+1}(s)
  const double i1 = inorm(k + 0.5, a), i2 = inorm(k + 1.5, a);
  return y * (s / c * i1 + i1 / c + s * s / (c * (2.0 * k + 3.0)) * i2);
}

void GridFunction::check() const {
  if (points.size() != values.size() || values.size() != quad_weights.size())
    fail(ErrorCode::invalid_argument, "grid function arrays differ in length");
  if (support_radius) {
    for (size_t i = 0; i < values.size(); ++i)
      if (points[i].norm() > *support_radius && std::abs(values[i]) >= 1e-12)
        fail(ErrorCode::invalid_argument, "grid function does not vanish outside its support radius");
  }
}

double GridFunction::l2_norm() const { return lp_norm(2.0); }

double GridFunction::lp_norm(double p) const {
  double s = 0.0;
  for (size_t i = 0; i < values.size(); ++i) s += std::pow(std::abs(values[i]), p) * quad_weights[i];
  return std::pow(s, 1.0 / p);
}

AxisGrid make_axis(double k, double extent, double conjugate_extent, const SpectralOptions& opt) {
  const double h = opt.phase_per_panel / conjugate_extent;
  const int panels = std::max(1, static_cast<int>(std::ceil(extent / h)));
  Rule1D pos;
  const double w = extent / panels;
  for (int p = 0; p < panels; ++p) {
    if (p == 0 && !is_integer(2.0 * k))
      pos.append(graded_gauss(0.0, w, opt.nodes_per_panel, true, false, 14));
    else
      pos.append(gauss_on(p * w, (p + 1) * w, opt.nodes_per_panel));
  }
  AxisGrid g;
  const size_t n = pos.size();
  for (size_t i = 0; i < n; ++i) {
    g.rule.x.push_back(-pos.x[n - 1 - i]);
    g.rule.w.push_back(pos.w[n - 1 - i]);
  }
  g.rule.append(pos);
  for (size_t i = 0; i < g.size(); ++i)
    g.dw.push_back(g.rule.w[i] * (k == 0.0 ? 1.0 : std::pow(2.0, k) * std::pow(std::abs(g.rule.x[i]), 2.0 * k)));
  return g;
}

SpectralContext::SpectralContext(const WeightedMeasure& m, const SpectralOptions& opt) : measure_(m), opt_(opt) {
  auto ks = product_multiplicities(m.rs);
  if (!ks)
    fail(ErrorCode::unsupported, "no closed-form Dunkl kernel: spectral tools need a rank-one or product root system");
  ks_ = *ks;
  for (double k : ks_) {
    ck_ *= rank1_ck(k);
    space_.push_back(make_axis(k, opt.space_radius, opt.freq_radius, opt));
    freq_.push_back(make_axis(k, opt.freq_radius, opt.space_radius, opt));
    kernel_.push_back(kernel_matrix(k, space_.back(), freq_.back()));
  }
}

GridFunction SpectralContext::sample_space(const std::function<cplx(const Vec&)>& f, std::optional<double> support) const {
  GridFunction g;
  std::vector<const Rule1D*> axes;
  std::vector<const std::vector<double>*> dws;
  for (const auto& a : space_) {
    axes.push_back(&a.rule);
    dws.push_back(&a.dw);
    g.shape.push_back(static_cast<int>(a.size()));
  }
  g.points = tensor_points(axes, &g.quad_weights, dws);
  g.values.reserve(g.points.size());
  for (const Vec& x : g.points) g.values.push_back(f(x));
  g.support_radius = support;
  return g;
}

GridFunction SpectralContext::sample_freq(const std::function<cplx(const Vec&)>& f) const {
  GridFunction g;
  std::vector<const Rule1D*> axes;
  std::vector<const std::vector<double>*> dws;
  for (const auto& a : freq_) {
    axes.push_back(&a.rule);
    dws.push_back(&a.dw);
    g.shape.push_back(static_cast<int>(a.size()));
  }
  g.points = tensor_points(axes, &g.quad_weights, dws);
  for (const Vec& x : g.points) g.values.push_back(f(x));
  return g;
}

GridFunction SpectralContext::zero_space() const {
  return sample_space([](const Vec&) { return cplx(0.0); });
}

bool SpectralContext::on_space_grid(const GridFunction& g) const {
  if (static_cast<int>(g.shape.size()) != dim()) return false;
  for (int a = 0; a < dim(); ++a)
    if (g.shape[a] != static_cast<int>(space_[a].size())) return false;
  return g.size() == g.points.size() && !g.points.empty() && std::abs(g.points.back()[dim() - 1] - space_.back().rule.x.back()) < 1e-12;
}

bool SpectralContext::on_freq_grid(const GridFunction& g) const {
  if (static_cast<int>(g.shape.size()) != dim()) return false;
  for (int a = 0; a < dim(); ++a)
    if (g.shape[a] != static_cast<int>(freq_[a].size())) return false;
  return g.size() == g.points.size() && !g.points.empty() && std::abs(g.points.back()[dim() - 1] - freq_.back().rule.x.back()) < 1e-12;
}

std::function<cplx(const Vec&)> dunkl_operator(const WeightedMeasure& m, const Vec& xi, std::function<cplx(const Vec&)> f,
                                               CGradient grad) {
  if (!grad) fail(ErrorCode::invalid_argument, "the Dunkl operator needs the gradient of f");
  return [m, xi, f = std::move(f), grad = std::move(grad)](const Vec& x) -> cplx {
    const CVec g = grad(x);
    cplx out = xi.cast<cplx>().dot(g);
    const double scale = std::max(1.0, x.norm());
    for (size_t i = 0; i < m.rs.roots.size(); ++i) {
      const double k = m.rs.multiplicity[i];
      if (k == 0.0) continue;
      const Vec& a = m.rs.roots[i];
      const double ax = a.dot(x);
      cplx q;
      // below this the difference quotient loses its digits to cancellation
      if (std::abs(ax) <= 1e-8 * scale)
        q = a.cast<cplx>().dot(g);
      else
        q = (f(x) - f(reflect(a, x))) / ax;
      out += 0.5 * k * a.dot(xi) * q;
    }
    return out;
  };
}

cplx dunkl_kernel(const SpectralContext& ctx, const Vec& x, const CVec& y) {
  if (x.size() != ctx.dim() || y.size() != ctx.dim()) fail(ErrorCode::invalid_argument, "kernel arguments have the wrong dimension");
  cplx e = 1.0;
  for (int a = 0; a < ctx.dim(); ++a) e *= rank1_kernel(ctx.axis_k(a), x[a], y[a], ctx.options().series_order);
  return e;
}

GridFunction dunkl_transform(const SpectralContext& ctx, const GridFunction& f) {
  if (!ctx.on_space_grid(f)) fail(ErrorCode::invalid_argument, "function is not sampled on the context's space grid");
  std::vector<int> shape = f.shape;
  std::vector<cplx> data = f.values;
  for (int a = 0; a < ctx.dim(); ++a) {
    const AxisGrid& sp = ctx.space(a);
    CMat M = ctx.kernel(a) / rank1_ck(ctx.axis_k(a));
    for (long i = 0; i < M.cols(); ++i) M.col(i) *= sp.dw[i];
    data = apply_axis(data, shape, a, M);
  }
  GridFunction out = ctx.sample_freq([](const Vec&) { return cplx(0.0); });
  out.values = std::move(data);
  out.aliased = f.aliased || deficit(f, out) > 1e-4;
  return out;
}

GridFunction inverse_transform(const SpectralContext& ctx, const GridFunction& g) {
  if (!ctx.on_freq_grid(g)) fail(ErrorCode::invalid_argument, "function is not sampled on the context's frequency grid");
  std::vector<int> shape = g.shape;
  std::vector<cplx> data = g.values;
  for (int a = 0; a < ctx.dim(); ++a) {
    const AxisGrid& fr = ctx.freq(a);
    CMat M = ctx.kernel(a).adjoint() / rank1_ck(ctx.axis_k(a));
    for (long j = 0; j < M.cols(); ++j) M.col(j) *= fr.dw[j];
    data = apply_axis(data, shape, a, M);
  }
  GridFunction out = ctx.zero_space();
  out.values = std::move(data);
  out.aliased = g.aliased;
  return out;
}

std::vector<cplx> inverse_transform_at(const SpectralContext& ctx, const GridFunction& g, const std::vector<Vec>& pts) {
  if (!ctx.on_freq_grid(g)) fail(ErrorCode::invalid_argument, "function is not sampled on the context's frequency grid");
  std::vector<cplx> out;
  out.reserve(pts.size());
  for (const Vec& p : pts) {
    std::vector<int> shape = g.shape;
    std::vector<cplx> data = g.values;
    for (int a = 0; a < ctx.dim(); ++a) {
      const AxisGrid& fr = ctx.freq(a);
      const double k = ctx.axis_k(a), c = rank1_ck(k);
      CMat row(1, fr.size());
      for (size_t j = 0; j < fr.size(); ++j) row(0, j) = std::conj(rank1_kernel_imag(k, p[a] * fr.rule.x[j])) * fr.dw[j] / c;
      data = apply_axis(data, shape, a, row);
    }
    out.push_back(data[0]);
  }
  return out;
}

GridFunction translate(const SpectralContext& ctx, const Vec& x, const GridFunction& f) {
  if (x.size() != ctx.dim()) fail(ErrorCode::invalid_argument, "translation point has the wrong dimension");
  GridFunction fh = dunkl_transform(ctx, f);
  std::vector<int> shape = fh.shape;
  std::vector<cplx> data = fh.values;
  for (int a = 0; a < ctx.dim(); ++a) {
    const AxisGrid& fr = ctx.freq(a);
    const double k = ctx.axis_k(a), c = rank1_ck(k);
    CMat M = ctx.kernel(a).transpose() / c;
    for (long j = 0; j < M.cols(); ++j) M.col(j) *= std::conj(rank1_kernel_imag(k, x[a] * fr.rule.x[j])) * fr.dw[j];
    data = apply_axis(data, shape, a, M);
  }
  GridFunction out = ctx.zero_space();
  out.values = std::move(data);
  out.aliased = fh.aliased;
  return out;
}

GridFunction apply_multiplier(const SpectralContext& ctx, const GridFunction& f, const GridFunction& mult) {
  GridFunction fh = dunkl_transform(ctx, f);
  if (!ctx.on_freq_grid(mult)) fail(ErrorCode::invalid_argument, "multiplier is not sampled on the frequency grid");
  for (size_t i = 0; i < fh.size(); ++i) fh.values[i] *= mult.values[i];
  return inverse_transform(ctx, fh);
}

const SpectralContext::CheckGrid& SpectralContext::check_grid() const {
  std::lock_guard<std::mutex> lock(*check_mutex_);
  if (!check_) {
    SpectralOptions alt = opt_;
    alt.freq_radius *= 1.25;
    alt.phase_per_panel *= 0.8;
    auto c = std::make_shared<CheckGrid>();
    for (int a = 0; a < dim(); ++a) {
      c->freq.push_back(make_axis(ks_[a], alt.freq_radius, alt.space_radius, alt));
      c->kernel.push_back(kernel_matrix(ks_[a], space_[a], c->freq.back()));
    }
    check_ = c;
  }
  return *check_;
}

GridFunction convolve(const SpectralContext& ctx, const GridFunction& f, const GridFunction& g, ConvolutionMode mode) {
  if (!ctx.on_space_grid(f) || !ctx.on_space_grid(g)) fail(ErrorCode::invalid_argument, "convolution operands are on mismatched grids");
  if (mode == ConvolutionMode::spectral) {
    GridFunction fh = dunkl_transform(ctx, f), gh = dunkl_transform(ctx, g);
    for (size_t i = 0; i < fh.size(); ++i) fh.values[i] *= gh.values[i] * ctx.ck();
    fh.aliased = fh.aliased || gh.aliased;
    return inverse_transform(ctx, fh);
  }
  // h(x) = int f(y) tau_x g(-y) dw(y), with
  // tau_x g(-y) = c^{-1} int E(i xi, x) E(-i xi, y) Fg(xi) dw(xi) on the check grid.
  // Summing over y first keeps the cost at one transform per operand.
  const auto& cg = ctx.check_grid();
  auto forward = [&](const GridFunction& u) {
    std::vector<int> shape = u.shape;
    std::vector<cplx> data = u.values;
    for (int a = 0; a < ctx.dim(); ++a) {
      CMat M = cg.kernel[a] / rank1_ck(ctx.axis_k(a));
      for (long i = 0; i < M.cols(); ++i) M.col(i) *= ctx.space(a).dw[i];
      data = apply_axis(data, shape, a, M);
    }
    return data;
  };
  std::vector<cplx> gh = forward(g), fh = forward(f);
  std::vector<int> shape;
  for (int a = 0; a < ctx.dim(); ++a) shape.push_back(static_cast<int>(cg.freq[a].size()));
  for (size_t j = 0; j < gh.size(); ++j) fh[j] *= gh[j] * ctx.ck();
  for (int a = 0; a < ctx.dim(); ++a) {
    CMat M = cg.kernel[a].adjoint() / rank1_ck(ctx.axis_k(a));
    for (long j = 0; j < M.cols(); ++j) M.col(j) *= cg.freq[a].dw[j];
    fh = apply_axis(fh, shape, a, M);
  }
  GridFunction out = ctx.zero_space();
  out.values = std::move(fh);
  out.aliased = f.aliased || g.aliased;
  return out;
}

void write_grid_function_csv(std::ostream& os, const GridFunction& g) {
  const int n = g.points.empty() ? 1 : static_cast<int>(g.points.front().size());
  for (int d = 0; d < n; ++d) os << "x" << d + 1 << ",";
  os << "real,imag,quad_weight\n";
  os.precision(17);
  for (size_t i = 0; i < g.size(); ++i) {
    for (int d = 0; d < n; ++d) os << g.points[i][d] << ",";
    os << g.values[i].real() << "," << g.values[i].imag() << "," << g.quad_weights[i] << "\n";
  }
}

}  // namespace dunkl

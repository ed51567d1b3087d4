#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>

#include "dunkl/measure.hpp"

namespace dunkl {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Rank-one kernel pieces. k is the multiplicity of the pair {±sqrt2}.
cplx rank1_kernel(double k, double x, cplx y, int series_order = 200);
cplx rank1_kernel_dx(double k, double x, cplx y, int series_order = 200);
// E(x, -i xi) as a function of t = x xi, through the Bessel representation for large |t|
cplx rank1_kernel_imag(double k, double t);
cplx rank1_kernel_imag_dt(double k, double t);
double rank1_ck(double k);  // integral of e^{-x^2/2} against 2^k |x|^{2k} dx

struct GridFunction {
  std::vector<Vec> points;
  std::vector<cplx> values;
  std::vector<double> quad_weights;  // against dw
  std::optional<double> support_radius;
  std::vector<int> shape;  // tensor layout (first axis slowest) when sampled on a product grid
  bool aliased = false;

  size_t size() const { return values.size(); }
  void check() const;
  double l2_norm() const;
  double lp_norm(double p) const;
};

struct SpectralOptions {
  double space_radius = 4.5;   // grid covers [-R, R] per axis
  double freq_radius = 96.0;   // frequency grid covers [-Omega, Omega] per axis
  int nodes_per_panel = 16;
  double phase_per_panel = 12.0;  // max of (panel width) x (conjugate extent) per panel
  int series_order = 200;
};

// One axis of a product grid: Gauss panels on [-L, L] broken at 0.
struct AxisGrid {
  Rule1D rule;
  std::vector<double> dw;  // rule weights times 2^k |x|^{2k}
  size_t size() const { return rule.size(); }
};

AxisGrid make_axis(double k, double extent, double conjugate_extent, const SpectralOptions& opt);

class SpectralContext {
 public:
  SpectralContext(const WeightedMeasure& m, const SpectralOptions& opt = {});

  const WeightedMeasure& measure() const { return measure_; }
  int dim() const { return measure_.dim(); }
  double ck() const { return ck_; }
  double axis_k(int a) const { return ks_[a]; }
  const SpectralOptions& options() const { return opt_; }
  const AxisGrid& space(int a) const { return space_[a]; }
  const AxisGrid& freq(int a) const { return freq_[a]; }
  // kernel(a)(j, i) = E(x_i, -i xi_j) on axis a
  const CMat& kernel(int a) const { return kernel_[a]; }

  GridFunction sample_space(const std::function<cplx(const Vec&)>& f, std::optional<double> support = {}) const;
  GridFunction sample_freq(const std::function<cplx(const Vec&)>& f) const;
  GridFunction zero_space() const;
  bool on_space_grid(const GridFunction& g) const;
  bool on_freq_grid(const GridFunction& g) const;

  // a second, denser frequency grid with a different panel layout, built on first use
  struct CheckGrid {
    std::vector<AxisGrid> freq;
    std::vector<CMat> kernel;
  };
  const CheckGrid& check_grid() const;

 private:
  WeightedMeasure measure_;
  SpectralOptions opt_;
  std::vector<double> ks_;
  double ck_ = 1.0;
  std::vector<AxisGrid> space_, freq_;
  std::vector<CMat> kernel_;
  std::shared_ptr<std::mutex> check_mutex_ = std::make_shared<std::mutex>();
  mutable std::shared_ptr<CheckGrid> check_;
};

// T_xi f for any root system; grad supplies the gradient (used on hyperplanes and for the derivative part)
using CGradient = std::function<CVec(const Vec&)>;
std::function<cplx(const Vec&)> dunkl_operator(const WeightedMeasure& m, const Vec& xi,
                                               std::function<cplx(const Vec&)> f, CGradient grad);

// E(x, y) for rank-one and product systems; each coordinate of y real or purely imaginary
cplx dunkl_kernel(const SpectralContext& ctx, const Vec& x, const CVec& y);

GridFunction dunkl_transform(const SpectralContext& ctx, const GridFunction& f);
GridFunction inverse_transform(const SpectralContext& ctx, const GridFunction& g);
// inverse transform evaluated at arbitrary points
std::vector<cplx> inverse_transform_at(const SpectralContext& ctx, const GridFunction& g, const std::vector<Vec>& pts);

// values y -> tau_x f(-y) on the space grid
GridFunction translate(const SpectralContext& ctx, const Vec& x, const GridFunction& f);

enum class ConvolutionMode { spectral, translation };
GridFunction convolve(const SpectralContext& ctx, const GridFunction& f, const GridFunction& g, ConvolutionMode mode);

// Apply a frequency multiplier: F^{-1}(mult . F f)
GridFunction apply_multiplier(const SpectralContext& ctx, const GridFunction& f, const GridFunction& mult);

void write_grid_function_csv(std::ostream& os, const GridFunction& g);

}  // namespace dunkl

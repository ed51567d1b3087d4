#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <string>

#include <json.hpp>

#include "dunkl/spectral.hpp"

namespace dunkl {

// phi as a function of the radius: 1 on [0, 1/2], 0 on [1, inf), C-infinity in between
double cutoff_profile(double r);

struct CutoffSpec {
  std::string profile = "smooth-step";
  double operator()(double r) const { return cutoff_profile(r); }
};

using PointFn = std::function<cplx(const Vec&)>;

struct KernelSpec {
  std::string name;
  PointFn eval;
  std::function<CVec(const Vec&)> gradient;  // optional, central differences otherwise
  int s0 = 0;
  double epsilon = 0.0;
  cplx L = 0.0;  // declared cancellation limit
  bool odd = false;
  bool homogeneous = false;  // K(t x) = t^{-N} K(x), N the homogeneous dimension
  double scale = 1.0;
  CutoffSpec cutoff;

  void validate(const WeightedMeasure& m) const;
};

// smallest even integer above the homogeneous dimension, and the default epsilon for it
int default_s0(const WeightedMeasure& m);
double default_epsilon(const WeightedMeasure& m, int s0);

KernelSpec builtin_riesz_kernel(const WeightedMeasure& m, int axis, double scale = 1.0);
// ||x||^{-N}: even, no cancellation, fails (A)
KernelSpec radial_power_kernel(const WeightedMeasure& m, double scale = 1.0);
KernelSpec scaled(const KernelSpec& ks, double factor);

using KernelFactory = std::function<KernelSpec(const WeightedMeasure&, const nlohmann::json& params)>;

class KernelRegistry {
 public:
  static KernelRegistry& instance();
  void add(const std::string& name, KernelFactory f);
  bool contains(const std::string& name) const;
  KernelSpec make(const std::string& name, const WeightedMeasure& m, const nlohmann::json& params = {}) const;
  std::vector<std::string> names() const;

 private:
  KernelRegistry();
  mutable std::mutex mu_;
  std::map<std::string, KernelFactory> factories_;
};

struct AssumptionReport {
  double annulus_sup = 0.0;
  double annulus_growth = 0.0;  // change of the sup on the last log-range extension
  bool a_pass = false;
  std::vector<double> derivative_constants;  // measured sup of ||x||^{N+|b|} |d^b K| per order
  std::vector<double> derivative_spread;     // outermost shells over the interior max, per order
  bool d_pass = false;
  std::vector<double> cauchy;  // |I(2^{-i-1}) - I(2^{-i})| with I(e) = int_{e<|x|<1} K dw
  cplx L_extrapolated = 0.0;
  bool l_pass = false;
};

struct AssumptionOptions {
  double annulus_bound = 1e3;
  double growth_tolerance = 0.05;  // relative to the sup
  double cauchy_tolerance = 1e-6;
  int cauchy_steps = 24;
};

AssumptionReport verify_assumptions(const KernelSpec& ks, const WeightedMeasure& m, const QuadratureSpec& q,
                                    const AssumptionOptions& opt = {});

// K^{t}(x) = K(x)(1 - phi(x / t))
PointFn truncate(const KernelSpec& ks, double t);

struct DyadicKernel {
  int level = 0;
  double scale = 1.0;  // 2^level
  PointFn profile;     // K_l = K^{2^{l-1}} - K^{2^l}
};

DyadicKernel dyadic_piece(const KernelSpec& ks, int level);

// K_l(x, y) = tau_x K_l(-y) from the product formula for rank-one translations, applied axis by axis.
class TwoPointKernel {
 public:
  TwoPointKernel(const WeightedMeasure& m, KernelSpec ks, int nodes = 16, int panels = 3);

  const KernelSpec& kernel() const { return ks_; }
  const WeightedMeasure& measure() const { return m_; }
  const CoxeterGroup& group() const { return g_; }
  cplx operator()(int level, const Vec& x, const Vec& y) const;
  cplx sum(int lo, int hi, const Vec& x, const Vec& y) const;

 private:
  WeightedMeasure m_;
  KernelSpec ks_;
  std::vector<double> ks_axis_;
  CoxeterGroup g_;
  int nodes_, panels_;
};

// Cross-check: y -> K_l(x, y) on the spectral grid through translate().
GridFunction two_point_kernel(const SpectralContext& ctx, const DyadicKernel& dk, const Vec& x);

struct EstimateRow {
  int level = 0;
  std::string functional;
  double constant = 0.0;
  int samples = 0;
};

struct DyadicSample {
  Vec x, y, y2;  // y2 is the Hoelder partner of y
};

// Samples for level l, dilation-covariant: x within 3 * 2^l of 0, y near an orbit image of x at distance ~2^l,
// y2 within 2^l/4 of y.
std::vector<DyadicSample> dyadic_samples(const TwoPointKernel& tpk, int level, int count, uint64_t seed);

std::vector<EstimateRow> check_dyadic_estimates(const TwoPointKernel& tpk, int level, const std::vector<DyadicSample>& samples);

struct KernelSumReport {
  cplx value = 0.0;
  double sum_functional = 0.0;     // sum |K_l| w(B(x,d)) ||x-y||^eps / d^eps
  double holder_functional = 0.0;  // sum |K_l(x,y) - K_l(x,y')| w(B(x,d)) ||x-y||^eps / ||y-y'||^eps
};

KernelSumReport kernel_sum(const TwoPointKernel& tpk, const Vec& x, const Vec& y, const Vec& y2, int lo, int hi);

void write_estimate_csv(std::ostream& os, const std::vector<EstimateRow>& rows);

}  // namespace dunkl

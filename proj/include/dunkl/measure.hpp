#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <variant>

#include "dunkl/geometry.hpp"
#include "dunkl/quadrature.hpp"

namespace dunkl {

struct WeightedMeasure {
  RootSystem rs;
  double hom_dim = 0.0;  // N + sum of k over all roots
  explicit WeightedMeasure(RootSystem r);
  int dim() const { return rs.dimension; }
  // true when every multiplicity makes |<x,a>|^{2k} a polynomial
  bool polynomial_weight() const;
};

enum class Scheme { tensor_midpoint, tensor_gauss, adaptive_dyadic };

struct QuadratureSpec {
  Scheme scheme = Scheme::tensor_gauss;
  int resolution = 32;
  double truncation_radius = 16.0;
  double tolerance = 1e-8;
  double panel_length = 0.0;  // > 0: split every piece into panels no longer than this
  void validate() const;
};

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& s);

struct AnnulusRegion {
  Vec center;
  double inner = 0.0, outer = 0.0;
};
struct BoxRegion {
  Vec lo, hi;
};
using Region = std::variant<Ball, AnnulusRegion, BoxRegion>;

using Integrand = std::function<cplx(const Vec&)>;

double weight(const WeightedMeasure& m, const Vec& x);

// Nodes and weights (against dw) covering the region; the workhorse behind integrate.
struct PointRule {
  std::vector<Vec> x;
  std::vector<double> w;
};
PointRule region_rule(const WeightedMeasure& m, const Region& region, const QuadratureSpec& q);

cplx integrate(const WeightedMeasure& m, const Integrand& f, const Region& region, const QuadratureSpec& q);

struct WholeSpaceIntegral {
  cplx value;
  double richardson_delta = 0.0;
  bool converged = false;
};
WholeSpaceIntegral integrate_whole(const WeightedMeasure& m, const Integrand& f, const QuadratureSpec& q);

double ball_volume(const WeightedMeasure& m, const Vec& x, double r, const QuadratureSpec& q);

// Per-axis multiplicities when the roots are exactly {±sqrt2 e_i}, i.e. a product of rank-one systems.
std::optional<std::vector<double>> product_multiplicities(const RootSystem& rs);
// w([a, b]) for the rank-one weight 2^k |x|^{2k}
double interval_mass(double k, double a, double b);
// Closed form in rank one, a one-dimensional integral for planar products, quadrature otherwise.
double fast_ball_volume(const WeightedMeasure& m, const Vec& x, double r);

struct AsymptoticsReport {
  double min_ratio = 0.0, max_ratio = 0.0;
  std::vector<double> ratios;
};
double volume_model(const WeightedMeasure& m, const Vec& x, double r);
AsymptoticsReport check_volume_asymptotics(const WeightedMeasure& m, const std::vector<std::pair<Vec, double>>& samples,
                                           const QuadratureSpec& q);

std::pair<double, double> check_growth(const WeightedMeasure& m, const Vec& x, double r1, double r2,
                                       const QuadratureSpec& q);

struct ConvergenceGate {
  double coarse = 0.0, fine = 0.0;
  bool passed = false;
};
ConvergenceGate ball_volume_convergence(const WeightedMeasure& m, const Vec& x, double r, const QuadratureSpec& q);

struct BallVolumeRow {
  Vec center;
  double radius, volume;
  QuadratureSpec spec;
};
void write_ball_volume_csv(std::ostream& os, const std::vector<BallVolumeRow>& rows);

}  // namespace dunkl

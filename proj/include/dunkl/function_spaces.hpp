#pragma once

#include <iosfwd>
#include <string>

#include "dunkl/measure.hpp"

namespace dunkl {

// Nodes and dw-weights for the union of the orbit balls sigma(B). Overlaps are counted once.
PointRule orbit_rule(const CoxeterGroup& g, const WeightedMeasure& m, const Ball& b, const QuadratureSpec& q);

cplx mean_on_set(const WeightedMeasure& m, const Integrand& f, const Ball& b, const QuadratureSpec& q);
cplx mean_on_orbit(const CoxeterGroup& g, const WeightedMeasure& m, const Integrand& f, const Ball& b,
                   const QuadratureSpec& q);

// Centers on pitch * Z^N inside [-domain, domain]^N, radii r0 * 2^j for j in [jmin, jmax].
struct BallFamily {
  std::vector<Vec> centers;
  std::vector<double> radii;
  double domain = 0.0, pitch = 0.0, r0 = 0.0;
  int jmin = 0, jmax = 0;

  size_t size() const { return centers.size() * radii.size(); }
  Ball ball(size_t i) const { return {centers[i / radii.size()], radii[i % radii.size()]}; }
  // halves the pitch and widens the radius range by one step on each side; a superset of *this
  BallFamily refined() const;
  std::string policy() const;
  void validate() const;
};

BallFamily dyadic_family(int dim, double domain, double pitch, double r0, int jmin = -6, int jmax = 6);

double maximal_function(const WeightedMeasure& m, const Integrand& f, const Vec& x, const BallFamily& family,
                        const QuadratureSpec& q);

// inf_c of the mean of |g - c| on the ball, by golden-section search over c in [min g, max g]
double best_constant_oscillation(const WeightedMeasure& m, const Integrand& g, const Ball& b, const QuadratureSpec& q);
double sharp_maximal(const WeightedMeasure& m, const Integrand& g, const Vec& x, const BallFamily& family,
                     const QuadratureSpec& q);

// over the support region when one is given, otherwise over R^N truncated at q.truncation_radius
double lp_norm(const WeightedMeasure& m, const Integrand& f, double p, const QuadratureSpec& q,
               const std::optional<Region>& support = std::nullopt);

struct BallOscillation {
  Ball ball;
  double oscillation = 0.0;
};

// Lower bounds only: the sup over all balls is not computable.
struct BmoReport {
  double norm_estimate = 0.0;
  Ball argmax;
  std::vector<BallOscillation> table;  // on the last family
  std::vector<double> round_estimates;
  double refinement_delta = 0.0;  // change on the last refinement
  std::string family_policy;
};

BmoReport bmo_norm(const WeightedMeasure& m, const Integrand& b, const BallFamily& family, int rounds,
                   const QuadratureSpec& q, int jobs = 1);
BmoReport bmo_d_norm(const CoxeterGroup& g, const WeightedMeasure& m, const Integrand& b, const BallFamily& family,
                     int rounds, const QuadratureSpec& q, int jobs = 1);

// Samples for the mean-value inequalities used by the boundedness proof.
struct JnSample {
  Vec x, y;
  double r = 1.0, r1 = 2.0;
  int sigma = 0;  // index into the group elements
  int j = 1;
  double s = 2.0;
};

struct JnRow {
  std::string inequality;  // scale-change, nearby-centers, reflected-center, john-nirenberg
  int sample = 0;
  double lhs = 0.0, shape = 0.0, ratio = 0.0;
};

std::vector<JnSample> jn_samples(const CoxeterGroup& g, int dim, int count, uint64_t seed, double domain = 2.0);
// ratio = lhs / (shape * bmo); nearby-centers only on samples with ||x - y|| <= 2r
std::vector<JnRow> john_nirenberg_suite(const WeightedMeasure& m, const CoxeterGroup& g, const Integrand& b, double bmo,
                                        const std::vector<JnSample>& samples, const QuadratureSpec& q);

struct LipschitzWitness {
  std::string name;
  Integrand b;
  Vec center;
  double support_radius = 0.0;  // supp b in B(0, r_b)
  double lipschitz = 0.0;       // L_b
  bool g_invariant = false;
};

LipschitzWitness tent(const Vec& center, double height, double half_width);
LipschitzWitness plateau(const Vec& center, double height, double inner, double outer);
LipschitzWitness smooth_bump(const Vec& center, double height, double radius);
LipschitzWitness scaled(const LipschitzWitness& w, double factor);
// deterministic mix of tents, plateaus and bumps; centered members are G-invariant for every G
std::vector<LipschitzWitness> lipschitz_family(int dim, uint64_t seed, int count);

void write_bmo_csv(std::ostream& os, const BmoReport& rep);
void write_jn_csv(std::ostream& os, const std::vector<JnRow>& rows);

}  // namespace dunkl

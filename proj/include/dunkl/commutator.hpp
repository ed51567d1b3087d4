#pragma once

#include <iosfwd>
#include <list>
#include <map>
#include <memory>
#include <mutex>

#include "dunkl/function_spaces.hpp"
#include "dunkl/singular_kernels.hpp"

namespace dunkl {

// Rank-one commutator engine: output grid, input quadrature, and lazily built two-point level tables.
struct EngineOptions {
  double input_radius = 2.0;  // f (and b f) supported in [-R, R]
  int max_level = 12;         // levels -M..M are available
  double output_panel = 0.25;
  double input_panel = 0.125;  // input panels are also capped at 2^{l-3}
  int nodes = 8;               // Gauss nodes per panel, input and output
  int theta_nodes = 12, theta_panels = 2;
  double outer_ratio = 1.4142135623730951;  // geometric outer panels: two per octave
  size_t cache_bytes = size_t(1) << 30;     // level tables are evicted least-recently-used beyond this
  int jobs = 1;
  void validate() const;
};

// K_l(x_i, y) dw(y) for every output point x_i, in compressed rows over a pool of input nodes.
struct LevelTable {
  int level = 0;
  // projected levels interpolate K_l(x, .) on coarse panels: g enters through its moments against the Lagrange
  // basis, proj[i * 16 + j] for input node i and coarse node proj_first[i] + j
  bool projected = false;
  std::vector<double> proj;
  std::vector<uint32_t> proj_first;
  std::vector<double> nodes;
  std::vector<size_t> row_start;
  std::vector<uint32_t> col;
  std::vector<cplx> weight;
  size_t bytes() const;
};

struct Panel {
  double a = 0.0, b = 0.0;
  size_t offset = 0;
  int n = 0;
};

class CommutatorEngine {
 public:
  CommutatorEngine(const WeightedMeasure& m, const KernelSpec& ks, const EngineOptions& opt = {});

  const WeightedMeasure& measure() const { return m_; }
  const KernelSpec& kernel() const { return tpk_.kernel(); }
  const TwoPointKernel& two_point() const { return tpk_; }
  const EngineOptions& options() const { return opt_; }
  double k() const { return k_; }
  int max_level() const { return opt_.max_level; }

  // output grid: points and dw weights, values zero
  const GridFunction& output_grid() const { return out_; }
  size_t output_size() const { return out_.size(); }
  GridFunction make_output(std::vector<cplx> values) const;
  // Gauss-Legendre interpolation inside each output panel; zero beyond the grid
  cplx interpolate(const std::vector<cplx>& values, double x) const;
  Integrand interpolant(std::vector<cplx> values) const;

  // the input rule on [-R, R]: used for norms of f and for sampling
  const Rule1D& input_rule() const { return input_; }
  double input_norm(const Integrand& f, double p) const;

  std::shared_ptr<const LevelTable> level(int l) const;
  size_t cached_bytes() const;

  // int K_l(x_i, y) f(y) dw(y)
  std::vector<cplx> apply_level(int l, const Integrand& f) const;
  // int (b(x_i) - b(y)) K_l(x_i, y) f(y) dw(y)
  // magnitude, when given, is raised to the max of |b(x_i) A_i| + |B_i| over the two terms
  std::vector<cplx> commutator_level(int l, const Integrand& b, const Integrand& f, double* magnitude = nullptr) const;

 private:
  LevelTable build(int l) const;
  std::vector<cplx> node_values(const LevelTable& t, const Integrand& g) const;

  WeightedMeasure m_;
  TwoPointKernel tpk_;
  EngineOptions opt_;
  double k_ = 0.0;
  GridFunction out_;
  std::vector<Panel> panels_;
  Rule1D input_;
  std::vector<double> input_dw_;
  double input_panel_ = 0.0;

  mutable std::mutex mu_;
  mutable std::map<int, std::shared_ptr<const LevelTable>> cache_;
  mutable std::list<int> lru_;
  mutable size_t bytes_ = 0;
};

// Per-level contributions for one (b, f) pair, computed on demand.
class CommutatorSeries {
 public:
  CommutatorSeries(const CommutatorEngine& e, Integrand b, Integrand f);
  const std::vector<cplx>& level(int l);
  // C_m f = sum over |l| <= m
  std::vector<cplx> truncated(int m);
  // (C_M - C_m) f with M the engine's top level
  std::vector<cplx> tail(int m);
  const CommutatorEngine& engine() const { return e_; }
  // largest size of the two terms seen so far, the rounding scale of the contributions
  double magnitude() const { return magnitude_; }

 private:
  const CommutatorEngine& e_;
  Integrand b_, f_;
  double magnitude_ = 0.0;
  std::map<int, std::vector<cplx>> levels_;
};

GridFunction commutator_truncated(const CommutatorEngine& e, const Integrand& b, const Integrand& f, int m);

struct LimitRecord {
  GridFunction value;
  int m_star = 0;
  std::vector<double> cauchy;  // ||C_{m+1} f - C_m f|| / ||C_m f|| in L^{p0}
  std::vector<double> norms;   // ||C_m f|| in L^{p0}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> cauchy)
      : Error(ErrorCode::not_converged, what), cauchy_(std::move(cauchy)) {}
  const std::vector<double>& cauchy() const { return cauchy_; }

 private:
  std::vector<double> cauchy_;
};

// smallest m with two consecutive relative Cauchy differences below tol; throws ConvergenceError past the top level
LimitRecord commutator_limit(CommutatorSeries& s, double p0, double tol = 1e-4);
LimitRecord commutator_limit(const CommutatorEngine& e, const Integrand& b, const Integrand& f, double p0, double tol = 1e-4);

struct BmoFunction {
  std::string id;
  Integrand fn;
  double bmo = 0.0;  // estimated norm; 0 marks a constant
};

struct NamedFunction {
  std::string id;
  Integrand fn;
};

struct NormRow {
  std::string b_id, f_id;
  double p = 2.0;
  int m_star = -1;
  double cf_norm = 0.0, f_norm = 0.0, bmo = 0.0;
  double norm_ratio = 0.0;  // ||C f|| / ||f||
  double ratio = 0.0;       // ||C f|| / (||b||_BMO ||f||)
  std::string status;       // ok, degenerate, not-converged
};

struct NormEstimate {
  double measured_norm = 0.0;  // sup of norm_ratio over ok rows
  double bmo_ratio = 0.0;      // sup of ratio over ok rows
  std::vector<NormRow> rows;
  std::string family;
};

NormEstimate estimate_operator_norm(const CommutatorEngine& e, const std::vector<BmoFunction>& bs,
                                    const std::vector<NamedFunction>& fs,
                                    const std::vector<std::pair<size_t, size_t>>& pairs, const std::vector<double>& ps,
                                    double tol = 1e-4, int jobs = 1);

// Standard families for the norm harness. b: BMO functions with estimated norms, f: smooth bumps in [-R, R].
std::vector<BmoFunction> standard_b_family(const WeightedMeasure& m, int count, uint64_t seed, const QuadratureSpec& q);
std::vector<NamedFunction> standard_f_family(double radius, int count, uint64_t seed);
std::vector<std::pair<size_t, size_t>> standard_pairs(size_t nb, size_t nf, int count, uint64_t seed);

// Partition of R^N around B = B(x0, r): f1 on 5B, f2 off the orbit of 5B, f_j on U_j.
struct Decomposition {
  Ball ball;
  std::vector<Mat> sigmas;  // the non-identity group elements, in order
  int piece(const Vec& z) const;  // 0: 5B, 1: off the orbit, 2 + j: U_j
};

struct SharpRow {
  int sample = 0;
  double x = 0.0, radius = 0.0;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  double partition_error = 0.0;
  double s = 0.0;
};

std::vector<SharpRow> sharp_maximal_diagnostic(const CommutatorEngine& e, const Integrand& b, const Integrand& f,
                                               double bmo, int m, double p,
                                               const std::vector<std::pair<double, double>>& samples,
                                               const BallFamily& family, const QuadratureSpec& q);

struct TailRow {
  std::string tail;  // small-scale, local, far
  int m = 0;
  double x = 0.0, lhs = 0.0, shape = 0.0, ratio = 0.0;
};

struct TailReport {
  std::vector<TailRow> rows;
  std::map<std::string, double> implied;  // max ratio per tail
};

TailReport tail_bounds_probe(const CommutatorEngine& e, const LipschitzWitness& b, const Integrand& f, int m, double p,
                             const std::vector<size_t>& output_points, const BallFamily& family, const QuadratureSpec& q);
// output indices spread log-uniformly in |x| over [lo, hi]
std::vector<size_t> tail_sample_points(const CommutatorEngine& e, int count, double lo, double hi, uint64_t seed);

struct DecayFit {
  std::vector<int> ms;
  std::vector<double> norms;  // ||(C - C_m) f|| in L^p
  double slope = 0.0;         // least squares slope of log2 norms against m
};

DecayFit tail_decay(CommutatorSeries& s, double p, const std::vector<int>& ms);

struct CompactnessReport {
  int m = 0;
  double omega_radius = 0.0;  // r_b + 2^{m+1}
  double leakage = 0.0;       // L^p mass outside Omega over total, worst over the basis
  double localization_gap = 0.0;  // max |C_m f - C_m (f chi_{B(0, r_b + 2^m)})| relative
  double uniform_bound = 0.0;
  double holder_modulus = 0.0;
  std::vector<double> holder_per_function;
  double holder_spread = 0.0;  // max / median of holder_per_function
  std::vector<std::pair<double, int>> covering_numbers;  // (delta, N(delta))
  std::vector<double> tail_slopes;
  std::vector<std::vector<double>> images;  // C_m f on the output points inside Omega, one per basis function
};

// Normalized random smooth functions: random combinations of a fixed dictionary of bumps in [-radius, radius].
std::vector<NamedFunction> unit_ball_sample(const CommutatorEngine& e, double radius, int count, uint64_t seed, double p,
                                            int dictionary = 6);

CompactnessReport compactness_probe(const CommutatorEngine& e, const LipschitzWitness& b,
                                    const std::vector<NamedFunction>& basis, int m, double p,
                                    const std::vector<double>& delta_fractions, int slope_functions = 3);

// greedy delta-net size in the sup metric
int covering_number(const std::vector<std::vector<double>>& points, double delta);

// Sum_{|l| <= m} K_l * f on the engine's output grid (direct kernel-sum quadrature).
GridFunction operator_apply(const CommutatorEngine& e, const Integrand& f, int m);
// The same sum through the Dunkl transform on a rank-one spectral context; needs 2^m + supp f <= R.
GridFunction operator_apply_spectral(const SpectralContext& ctx, const KernelSpec& ks, const GridFunction& f, int m);
// F(K_l)(xi) for a rank-one kernel, by quadrature on the annulus 2^{l-2} <= |x| <= 2^l
cplx level_symbol(const KernelSpec& ks, double k, int l, double xi);

void write_norm_csv(std::ostream& os, const NormEstimate& est);
void write_tail_csv(std::ostream& os, const TailReport& rep);
void write_sharp_csv(std::ostream& os, const std::vector<SharpRow>& rows);
void write_compactness_csv(std::ostream& os, const CompactnessReport& rep);

}  // namespace dunkl

#include "dunkl/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dunkl/commutator.hpp"
#include "dunkl/function_spaces.hpp"
#include "dunkl/measure.hpp"
#include "dunkl/parallel.hpp"
#include "dunkl/singular_kernels.hpp"
#include "dunkl/spectral.hpp"

namespace dunkl {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------------------------------------------
// config reading

class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorCode::config, where_ + " must be a JSON object");
  }
  ~Reader() = default;

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  void get(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) bad(key, "an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) bad(key, "a non-negative integer");
      out = v->get<uint64_t>();
    }
  }
  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) bad(key, "a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) bad(key, "a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) bad(key, "an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) bad(key, "an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void get(const char* key, std::vector<int>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) bad(key, "an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) bad(key, "an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) bad(key, "an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) bad(key, "an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void get(const char* key, std::vector<SystemSpec>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->empty()) bad(key, "a non-empty array of root systems");
      out.clear();
      for (size_t i = 0; i < v->size(); ++i) {
        Reader r((*v)[i], where_ + "." + key + "[" + std::to_string(i) + "]");
        SystemSpec s;
        r.get("name", s.name);
        r.get("k", s.k);
        r.finish();
        if (s.name.empty()) fail(ErrorCode::config, r.where_ + " needs a name");
        out.push_back(std::move(s));
      }
    }
  }
  template <class F>
  void section(const char* key, F&& body) {
    if (const json* v = find(key)) {
      Reader r(*v, where_ + "." + key);
      body(r);
      r.finish();
    }
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(ErrorCode::config, "unknown key '" + it.key() + "' in " + where_);
  }

 private:
  [[noreturn]] void bad(const char* key, const char* what) const {
    fail(ErrorCode::config, where_ + "." + key + " must be " + what);
  }
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) fail(ErrorCode::config, msg);
}

void require_kernel(const std::string& name, const std::string& where) {
  if (!KernelRegistry::instance().contains(name))
    fail(ErrorCode::unresolved_name, where + ": unknown kernel '" + name + "'");
}

const std::vector<std::string>& bmo_function_names() {
  static const std::vector<std::string> n{"log-abs", "atan", "tent", "plateau", "bump", "tanh"};
  return n;
}

void validate(const ExperimentConfig& c) {
  require(c.schema == kConfigSchema, "unsupported config schema '" + c.schema + "', expected '" + kConfigSchema + "'");
  require(!c.output_dir.empty(), "output_dir must not be empty");
  for (const auto* list : {&c.geometry.systems, &c.measure.systems, &c.kernel.systems})
    for (const auto& s : *list) make_system(s);

  const auto& g = c.geometry;
  require(g.chamber_pairs >= 1 && g.samples >= 1, "geometry sample counts must be positive");
  require(g.tolerance > 0.0, "geometry.tolerance must be positive");

  const auto& m = c.measure;
  require(m.scaling_samples >= 1 && m.growth_samples >= 1 && m.resolution >= 8, "measure counts must be positive and resolution at least 8");
  require(m.scaling_tolerance > 0.0 && m.closed_form_tolerance > 0.0, "measure tolerances must be positive");

  const auto& s = c.spectral;
  for (double k : s.rank1_k) require(k >= 0.0, "spectral.rank1_k must be non-negative");
  require(s.product_k.empty() || s.product_k.size() == 2, "spectral.product_k needs two multiplicities");
  for (double k : s.product_k) require(k >= 0.0, "spectral.product_k must be non-negative");
  require(s.test_functions >= 1 && s.test_functions <= 10, "spectral.test_functions must lie in [1, 10]");
  require(s.space_radius > 0.0 && s.freq_radius > 0.0 && s.product_space_radius > 0.0, "spectral radii must be positive");
  require(s.tolerance > 0.0 && s.residual_tolerance > 0.0, "spectral tolerances must be positive");

  const auto& k = c.kernel;
  require_kernel(k.kernel, "kernel.kernel");
  require(k.level_min <= k.level_max, "kernel.level_min must not exceed kernel.level_max");
  require(k.samples >= 2 && k.resolution >= 8, "kernel samples must be at least 2 and resolution at least 8");
  require(k.stability > 1.0 && k.telescoping_tolerance > 0.0, "kernel tolerances must be positive");

  const auto& b = c.bmo;
  require(b.k >= 0.0, "bmo.k must be non-negative");
  require(!b.functions.empty(), "bmo.functions must not be empty");
  for (const auto& f : b.functions)
    if (std::find(bmo_function_names().begin(), bmo_function_names().end(), f) == bmo_function_names().end())
      fail(ErrorCode::unresolved_name, "bmo.functions: unknown function '" + f + "'");
  require(b.domain > 0.0 && b.pitch > 0.0 && b.r0 > 0.0 && b.jmin <= b.jmax, "bmo ball family is empty");
  require(b.rounds >= 0 && b.jn_samples >= 1, "bmo counts must be non-negative");
  require(b.refinement_tolerance > 0.0 && b.ratio_bound > 1.0, "bmo tolerances must be positive");

  const auto& cm = c.commutator;
  require_kernel(cm.kernel, "commutator.kernel");
  require(!cm.k.empty() && !cm.p.empty(), "commutator.k and commutator.p must not be empty");
  for (double v : cm.k) require(v >= 0.0, "commutator.k must be non-negative");
  for (double v : cm.p) require(v > 1.0 && std::isfinite(v), "commutator.p must lie in (1, inf)");
  if (cm.b_family != "standard" && cm.b_family != "constant")
    fail(ErrorCode::unresolved_name, "commutator.b_family: unknown family '" + cm.b_family + "'");
  if (cm.f_family != "standard")
    fail(ErrorCode::unresolved_name, "commutator.f_family: unknown family '" + cm.f_family + "'");
  require(cm.b_count >= 1 && cm.f_count >= 1 && cm.pairs >= 1, "commutator family sizes must be positive");
  require(cm.max_level >= 1 && cm.input_radius > 0.0, "commutator engine settings must be positive");
  require(cm.tolerance > 0.0 && cm.growth_limit > 0.0 && cm.degenerate_tolerance > 0.0 && cm.partition_tolerance > 0.0,
          "commutator tolerances must be positive");
  require(cm.sharp_samples >= 1 && cm.sharp_m >= 0 && cm.sharp_m <= cm.max_level, "commutator sharp settings out of range");
  require(cm.sharp_p > 1.0, "commutator.sharp_p must exceed 1");

  const auto& t = c.tail;
  require_kernel(t.kernel, "tail.kernel");
  require(!t.k.empty(), "tail.k must not be empty");
  for (double v : t.k) require(v >= 0.0, "tail.k must be non-negative");
  require(t.p > 1.0, "tail.p must exceed 1");
  require(t.m_min >= 0 && t.m_max > t.m_min && t.m_max < t.max_level, "tail m range must satisfy 0 <= m_min < m_max < max_level");
  require(t.points >= 1 && t.witnesses >= 1, "tail counts must be positive");
  require(t.slope_factor > 0.0 && t.constant_spread > 1.0, "tail tolerances must be positive");

  const auto& q = c.compactness;
  require_kernel(q.kernel, "compactness.kernel");
  require(q.k >= 0.0 && q.p > 1.0, "compactness needs k >= 0 and p > 1");
  require(q.m >= 0 && q.m < q.max_level, "compactness.m must lie below max_level");
  require(q.basis.size() >= 2, "compactness.basis needs at least two sizes");
  for (int n : q.basis) require(n >= 1, "compactness.basis sizes must be positive");
  require(std::is_sorted(q.basis.begin(), q.basis.end()), "compactness.basis sizes must be increasing");
  require(q.dictionary >= 1 && q.radius > 0.0 && q.delta > 0.0 && q.leakage > 0.0 && q.holder_spread > 1.0,
          "compactness settings must be positive");
}

// ---------------------------------------------------------------------------------------------------------------
// shared helpers

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// independent stream per (suite, purpose)
uint64_t sub_seed(uint64_t seed, uint64_t tag) { return splitmix(seed ^ splitmix(tag)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string label(const SystemSpec& s) {
  std::string out = s.name + "(";
  for (size_t i = 0; i < s.k.size(); ++i) out += (i ? "," : "") + fmt(s.k[i]);
  return out + ")";
}

std::string k_label(double k) { return "k=" + fmt(k); }

class Csv {
 public:
  explicit Csv(const std::string& header) {
    os_.precision(17);
    os_ << header << '\n';
  }
  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((os_ << (first ? "" : ",") << v, first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

void gate_le(SuiteReport& r, const std::string& name, double value, double threshold, const std::string& detail = "") {
  r.gates.push_back({name, std::isfinite(value) && value <= threshold, value, threshold, detail});
}

void gate_lt(SuiteReport& r, const std::string& name, double value, double threshold, const std::string& detail = "") {
  r.gates.push_back({name, std::isfinite(value) && value < threshold, value, threshold, detail});
}

void gate_true(SuiteReport& r, const std::string& name, bool ok, double value, const std::string& detail) {
  r.gates.push_back({name, ok, value, 0.0, detail});
}

double finite_or_inf(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Vec random_vec(std::mt19937_64& rng, int n, double a) {
  std::uniform_real_distribution<double> u(-a, a);
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

QuadratureSpec gauss_spec(int n) {
  QuadratureSpec q;
  q.resolution = n;
  return q;
}

double spread(const std::vector<double>& v) {
  double lo = INFINITY, hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return lo > 0.0 ? hi / lo : INFINITY;
}

// ---------------------------------------------------------------------------------------------------------------
// geometry

SuiteReport geometry_suite(const ExperimentConfig& cfg, uint64_t seed) {
  const GeometryConfig& c = cfg.geometry;
  SuiteReport rep;
  Csv csv("system,check,count,max_error");
  std::mt19937_64 rng(sub_seed(seed, 1));
  for (const SystemSpec& spec : c.systems) {
    const RootSystem rs = make_system(spec);
    const CoxeterGroup G = generate_group(rs);
    const std::string sys = label(spec);
    const int n = rs.dimension;

    int misses = 0;
    for (const Mat& a : G.elements) {
      if (G.find(a.transpose()) < 0) ++misses;
      for (const Mat& b : G.elements)
        if (G.find(a * b) < 0) ++misses;
    }
    csv.row(sys, "closure", G.size(), misses);
    gate_le(rep, "group closure " + sys, misses, 0, std::to_string(G.size()) + " elements");

    double inv = 0.0;
    for (const Vec& a : rs.roots) {
      const Mat s = reflection_matrix(a);
      inv = std::max(inv, (s * s - Mat::Identity(n, n)).norm());
      for (int t = 0; t < c.samples / static_cast<int>(rs.roots.size()) + 1; ++t) {
        const Vec x = random_vec(rng, n, 3.0);
        inv = std::max(inv, (reflect(a, reflect(a, x)) - x).norm() / std::max(1.0, x.norm()));
      }
    }
    csv.row(sys, "involution", rs.roots.size(), inv);
    gate_le(rep, "reflection involution " + sys, inv, c.tolerance);

    double inv_d = 0.0;
    for (int t = 0; t < c.samples; ++t) {
      const Vec x = random_vec(rng, n, 3.0), y = random_vec(rng, n, 3.0);
      const double d = orbit_distance(G, x, y);
      for (const Mat& g : G.elements) {
        inv_d = std::max(inv_d, std::abs(orbit_distance(G, g * x, y) - d));
        inv_d = std::max(inv_d, std::abs(orbit_distance(G, x, g * y) - d));
      }
    }
    csv.row(sys, "orbit_distance_invariance", c.samples, inv_d);
    gate_le(rep, "orbit distance invariance " + sys, inv_d, c.tolerance);

    double ch = 0.0;
    int pairs = 0;
    while (pairs < c.chamber_pairs) {
      const Vec x = random_vec(rng, n, 2.0), y = random_vec(rng, n, 2.0);
      if (!chamber_of(rs, x).contains(rs, y)) continue;
      ++pairs;
      ch = std::max(ch, std::abs(orbit_distance(G, x, y) - (x - y).norm()));
    }
    csv.row(sys, "chamber", pairs, ch);
    gate_le(rep, "chamber distance " + sys, ch, c.tolerance, std::to_string(pairs) + " in-chamber pairs");
    rep.measured[sys] = {{"group_order", G.size()}, {"involution", inv}, {"invariance", inv_d}, {"chamber", ch}};
  }
  rep.files.emplace_back("geometry.csv", csv.str());
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// measure

SuiteReport measure_suite(const ExperimentConfig& cfg, uint64_t seed) {
  const MeasureConfig& c = cfg.measure;
  SuiteReport rep;
  Csv csv("system,check,sample,value");
  std::mt19937_64 rng(sub_seed(seed, 2));
  std::uniform_real_distribution<double> ur(0.05, 2.0), ut(0.2, 5.0), lr(-5.0, 3.0);
  const QuadratureSpec fine = gauss_spec(c.resolution), coarse = gauss_spec(16);
  for (const SystemSpec& spec : c.systems) {
    const WeightedMeasure m(make_system(spec));
    const std::string sys = label(spec);
    double worst = 0.0;
    for (int i = 0; i < c.scaling_samples; ++i) {
      const Vec x = random_vec(rng, m.dim(), 2.0);
      const double r = ur(rng), t = ut(rng);
      const double a = ball_volume(m, t * x, t * r, fine), b = ball_volume(m, x, r, fine);
      const double e = std::abs(a / b / std::pow(t, m.hom_dim) - 1.0);
      worst = std::max(worst, finite_or_inf(e));
      csv.row(sys, "scaling", i, e);
    }
    gate_le(rep, "scaling law " + sys, worst, c.scaling_tolerance);

    double lo = INFINITY, hi = 0.0;
    std::vector<std::pair<Vec, double>> asym;
    for (int i = 0; i < c.growth_samples; ++i) {
      const Vec x = random_vec(rng, m.dim(), 5.0);
      const double r1 = std::exp2(lr(rng)), r2 = r1 * std::exp2(std::abs(lr(rng)));
      const auto [g1, g2] = check_growth(m, x, r1, r2, coarse);
      lo = std::min(lo, g1);
      hi = std::max(hi, finite_or_inf(g2));
      asym.emplace_back(x, r1);
    }
    csv.row(sys, "growth_lower", c.growth_samples, lo);
    csv.row(sys, "growth_upper", c.growth_samples, hi);
    gate_true(rep, "growth brackets " + sys, lo > 0.0 && std::isfinite(hi), hi,
              "lower " + fmt(lo) + ", upper " + fmt(hi) + " over " + std::to_string(c.growth_samples) + " samples");

    const AsymptoticsReport a = check_volume_asymptotics(m, asym, coarse);
    csv.row(sys, "asymptotics_min", asym.size(), a.min_ratio);
    csv.row(sys, "asymptotics_max", asym.size(), a.max_ratio);
    gate_true(rep, "volume asymptotics " + sys, a.min_ratio > 0.0 && std::isfinite(a.max_ratio), a.max_ratio / a.min_ratio,
              "ratio bracket [" + fmt(a.min_ratio) + ", " + fmt(a.max_ratio) + "]");
    rep.measured[sys] = {{"scaling_error", worst}, {"growth_lower", lo}, {"growth_upper", num(hi)},
                         {"asymptotics", {a.min_ratio, num(a.max_ratio)}}};
  }
  // closed form in rank one, k = 1: w(B(0, r)) = 4 r^3 / 3
  const WeightedMeasure m1(rank1_system(1.0));
  double worst = 0.0;
  int i = 0;
  for (double r : {0.1, 0.5, 1.0, 2.5, 7.0}) {
    const double v = ball_volume(m1, vec({0.0}), r, fine), e = std::abs(v / (4.0 / 3.0 * r * r * r) - 1.0);
    worst = std::max(worst, e);
    csv.row("rank1(1)", "closed_form", i++, e);
  }
  gate_le(rep, "closed-form ball volume rank1(1)", worst, c.closed_form_tolerance);
  rep.measured["closed_form_error"] = worst;
  rep.files.emplace_back("measure.csv", csv.str());
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// spectral

double bump(double u) { return std::abs(u) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0; }

const std::vector<std::function<double(double)>>& factors() {
  static const std::vector<std::function<double(double)>> f = {
      [](double) { return 1.0; },
      [](double x) { return x; },
      [](double x) { return x * x; },
      [](double x) { return std::cos(x); },
      [](double x) { return std::sin(2 * x); },
      [](double x) { return std::exp(x / 2); },
      [](double x) { return x * x * x; },
      [](double x) { return std::cos(3 * x); },
      [](double x) { return (1 + x) * (1 + x); },
      [](double x) { return x * std::sin(x); }};
  return f;
}

// smooth compactly supported test functions: a bump times a smooth factor
GridFunction test_function(const SpectralContext& ctx, int i, double radius) {
  const auto& fac = factors()[i % 10];
  if (ctx.dim() == 1) return ctx.sample_space([&](const Vec& x) { return cplx(bump(x[0] / radius) * fac(x[0])); }, radius);
  const auto& fac2 = factors()[(i + 3) % 10];
  if (i % 2 == 0)
    return ctx.sample_space(
        [&](const Vec& x) { return cplx(bump(x[0] / radius) * bump(x[1] / radius) * fac(x[0]) * fac2(x[1])); },
        radius * std::sqrt(2.0));
  return ctx.sample_space([&](const Vec& x) { return cplx(bump(x.norm() / radius) * fac(x[0] - 0.5 * x[1])); }, radius);
}

double rel_gap(const GridFunction& a, const GridFunction& b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.values[i] - b.values[i]) * a.quad_weights[i];
    den += std::norm(b.values[i]) * a.quad_weights[i];
  }
  return std::sqrt(num / den);
}

struct SpectralTally {
  double plancherel = 0.0, inversion = 0.0, residual = 0.0, outside = 0.0, contraction = 0.0, convolution = 0.0;
  int aliased = 0;
};

// mass of t outside the orbit of B(x, r), relative to its total mass
double outside_fraction(const GridFunction& t, const std::vector<Vec>& orbit_pts, double r) {
  double outside = 0.0, total = 0.0;
  for (size_t i = 0; i < t.size(); ++i) {
    const double w = std::abs(t.values[i]) * t.quad_weights[i];
    total += w;
    double d = INFINITY;
    for (const Vec& o : orbit_pts) d = std::min(d, (t.points[i] - o).norm());
    if (d > r) outside += w;
  }
  return total > 0.0 ? outside / total : 0.0;
}

void transform_checks(const SpectralContext& ctx, int count, double radius, SpectralTally& t, Csv& csv,
                      const std::string& sys) {
  for (int i = 0; i < count; ++i) {
    const GridFunction f = test_function(ctx, i, radius);
    const GridFunction F = dunkl_transform(ctx, f);
    const GridFunction back = inverse_transform(ctx, F);
    const double pl = std::abs(F.l2_norm() / f.l2_norm() - 1.0), inv = rel_gap(back, f);
    if (F.aliased || back.aliased) ++t.aliased;
    t.plancherel = std::max(t.plancherel, finite_or_inf(pl));
    t.inversion = std::max(t.inversion, finite_or_inf(inv));
    csv.row(sys, "plancherel", i, pl);
    csv.row(sys, "inversion", i, inv);
  }
}

SpectralTally rank1_spectral(const SpectralConfig& c, double k, std::mt19937_64& rng, Csv& csv) {
  const WeightedMeasure m(rank1_system(k));
  SpectralOptions opt;
  opt.space_radius = c.space_radius;
  opt.freq_radius = c.freq_radius;
  const SpectralContext ctx(m, opt);
  const std::string sys = "rank1(" + fmt(k) + ")";
  SpectralTally t;
  transform_checks(ctx, c.test_functions, 3.0, t, csv, sys);

  std::uniform_real_distribution<double> freq(-12.0, 12.0), real(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const cplx y = trial % 2 ? cplx(real(rng), 0.0) : cplx(0.0, freq(rng));
    auto E = [&](const Vec& x) { return rank1_kernel(k, x[0], y); };
    auto op = dunkl_operator(m, vec({1.0}), E, [&](const Vec& x) { return CVec::Constant(1, rank1_kernel_dx(k, x[0], y)); });
    double worst = std::abs(op(vec({0.0})) - y);
    for (double x : ctx.space(0).rule.x)
      worst = std::max(worst, std::abs(op(vec({x})) - y * E(vec({x}))) / std::max(1.0, std::abs(E(vec({x})))));
    t.residual = std::max(t.residual, finite_or_inf(worst));
    csv.row(sys, "residual", trial, worst);
  }

  const CoxeterGroup G = generate_group(m.rs);
  const double r = 2.0;
  const GridFunction g = test_function(ctx, 3, r);
  int idx = 0;
  for (double x : {0.5, 1.2, 2.4}) {
    const GridFunction tg = translate(ctx, vec({x}), g);
    if (tg.aliased) ++t.aliased;
    const double out = outside_fraction(tg, orbit(G, vec({x})), r);
    const double con = std::max(0.0, tg.l2_norm() / g.l2_norm() - 1.0);
    t.outside = std::max(t.outside, out);
    t.contraction = std::max(t.contraction, con);
    csv.row(sys, "translation_outside", idx, out);
    csv.row(sys, "translation_contraction", idx++, con);
  }

  for (int trial = 0; trial < 4; ++trial) {
    const int i = static_cast<int>(rng() % 10), j = static_cast<int>(rng() % 10);
    const GridFunction f = test_function(ctx, i, 1.5 + 0.2 * trial), h = test_function(ctx, j, 2.0);
    const GridFunction s = convolve(ctx, f, h, ConvolutionMode::spectral);
    const GridFunction tr = convolve(ctx, f, h, ConvolutionMode::translation);
    const double gap = rel_gap(tr, s);
    t.convolution = std::max(t.convolution, finite_or_inf(gap));
    csv.row(sys, "convolution", trial, gap);
  }
  return t;
}

SpectralTally product_spectral(const SpectralConfig& c, std::mt19937_64& rng, Csv& csv) {
  const WeightedMeasure m(product_system(c.product_k));
  SpectralOptions opt;
  opt.space_radius = c.product_space_radius;
  opt.freq_radius = c.freq_radius;
  const SpectralContext ctx(m, opt);
  const std::string sys = label({"product", c.product_k});
  SpectralTally t;
  const double radius = std::min(2.5, c.product_space_radius / 1.1);
  transform_checks(ctx, c.test_functions, radius, t, csv, sys);

  // the kernel factorizes; each coordinate satisfies its rank-one system
  std::uniform_real_distribution<double> freq(-12.0, 12.0), real(-2.0, 2.0);
  for (int trial = 0; trial < 6; ++trial) {
    CVec y(2);
    y[0] = trial % 2 ? cplx(real(rng), 0.0) : cplx(0.0, freq(rng));
    y[1] = trial % 3 ? cplx(0.0, freq(rng)) : cplx(real(rng), 0.0);
    const double k0 = c.product_k[0], k1 = c.product_k[1];
    auto E = [&](const Vec& p) { return dunkl_kernel(ctx, p, y); };
    auto grad = [&](const Vec& p) {
      CVec gv(2);
      gv[0] = rank1_kernel_dx(k0, p[0], y[0]) * rank1_kernel(k1, p[1], y[1]);
      gv[1] = rank1_kernel(k0, p[0], y[0]) * rank1_kernel_dx(k1, p[1], y[1]);
      return gv;
    };
    double worst = 0.0;
    for (int a = 0; a < 2; ++a) {
      Vec xi = Vec::Zero(2);
      xi[a] = 1.0;
      auto op = dunkl_operator(m, xi, E, grad);
      for (int s = 0; s < 12; ++s) {
        Vec p = random_vec(rng, 2, 2.0);
        if (s == 0) p = Vec::Zero(2);
        if (s == 1) p[0] = 0.0;
        worst = std::max(worst, std::abs(op(p) - y[a] * E(p)) / std::max(1.0, std::abs(E(p))));
      }
    }
    t.residual = std::max(t.residual, finite_or_inf(worst));
    csv.row(sys, "residual", trial, worst);
  }

  const CoxeterGroup G = generate_group(m.rs);
  const double r = 1.5;
  const GridFunction g = ctx.sample_space([&](const Vec& p) { return cplx(bump(p.norm() / r) * (1 + p[0])); }, r);
  int idx = 0;
  for (const Vec& x : {vec({0.8, -0.6}), vec({-0.4, 0.3})}) {
    const GridFunction tg = translate(ctx, x, g);
    if (tg.aliased) ++t.aliased;
    const double out = outside_fraction(tg, orbit(G, x), r);
    const double con = std::max(0.0, tg.l2_norm() / g.l2_norm() - 1.0);
    t.outside = std::max(t.outside, out);
    t.contraction = std::max(t.contraction, con);
    csv.row(sys, "translation_outside", idx, out);
    csv.row(sys, "translation_contraction", idx++, con);
  }

  const GridFunction f1 = test_function(ctx, 1, 2.0), f2 = test_function(ctx, 2, 1.5);
  const double gap =
      rel_gap(convolve(ctx, f1, f2, ConvolutionMode::translation), convolve(ctx, f1, f2, ConvolutionMode::spectral));
  t.convolution = finite_or_inf(gap);
  csv.row(sys, "convolution", 0, gap);
  return t;
}

SuiteReport spectral_suite(const ExperimentConfig& cfg, uint64_t seed) {
  const SpectralConfig& c = cfg.spectral;
  SuiteReport rep;
  Csv csv("system,check,case,value");
  std::mt19937_64 rng(sub_seed(seed, 3));
  auto record = [&](const std::string& sys, const SpectralTally& t) {
    gate_le(rep, "plancherel " + sys, t.plancherel, c.tolerance);
    gate_le(rep, "inversion " + sys, t.inversion, c.tolerance);
    gate_le(rep, "kernel system residual " + sys, t.residual, c.residual_tolerance);
    gate_le(rep, "translation support " + sys, t.outside, c.tolerance, "mass outside the orbit of B(x, r)");
    gate_le(rep, "translation contraction " + sys, t.contraction, 1e-8);
    gate_le(rep, "convolution modes " + sys, t.convolution, c.tolerance);
    gate_le(rep, "aliasing " + sys, t.aliased, 0);
    rep.measured[sys] = {{"plancherel", t.plancherel}, {"inversion", t.inversion}, {"residual", t.residual},
                         {"outside_mass", t.outside},  {"convolution", t.convolution}, {"aliased", t.aliased}};
  };
  for (double k : c.rank1_k) record("rank1(" + fmt(k) + ")", rank1_spectral(c, k, rng, csv));
  if (!c.product_k.empty()) record(label({"product", c.product_k}), product_spectral(c, rng, csv));
  rep.files.emplace_back("spectral.csv", csv.str());
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// singular kernels

SuiteReport kernel_suite(const ExperimentConfig& cfg, uint64_t seed, int jobs) {
  const KernelConfig& c = cfg.kernel;
  SuiteReport rep;
  Csv csv("system,level,functional,constant,samples");
  const QuadratureSpec q = gauss_spec(c.resolution);
  std::mt19937_64 rng(sub_seed(seed, 4));
  for (const SystemSpec& spec : c.systems) {
    const WeightedMeasure m(make_system(spec));
    const std::string sys = label(spec);
    const KernelSpec ks = KernelRegistry::instance().make(c.kernel, m);
    const AssumptionReport a = verify_assumptions(ks, m, q);
    gate_true(rep, "assumption A " + sys, a.a_pass, a.annulus_sup, "annulus sup " + fmt(a.annulus_sup));
    gate_true(rep, "assumption D " + sys, a.d_pass && a.derivative_constants.size() >= 3,
              static_cast<double>(a.derivative_constants.size()) - 1, "derivative orders checked up to |beta| = 2");
    gate_true(rep, "assumption L " + sys, a.l_pass, std::abs(a.L_extrapolated),
              "extrapolated limit " + fmt(std::abs(a.L_extrapolated)));

    // the dyadic pieces telescope to a difference of truncations
    double tele = 0.0;
    const int n = m.dim();
    for (int i = 0; i < 200; ++i) {
      const Vec y = random_vec(rng, n, 4.0);
      cplx s = 0.0;
      for (int l = -3; l <= 3; ++l) s += dyadic_piece(ks, l).profile(y);
      const cplx rhs = truncate(ks, std::ldexp(1.0, -4))(y) - truncate(ks, 8.0)(y);
      const double scale = std::max(std::abs(ks.eval(y)), 1e-300);
      tele = std::max(tele, std::abs(s - rhs) / scale);
    }
    gate_le(rep, "dyadic telescoping " + sys, tele, c.telescoping_tolerance);

    const TwoPointKernel tpk(m, ks);
    const int count = n == 1 ? c.samples : std::max(2, c.samples * 6 / 10);
    const int levels = c.level_max - c.level_min + 1;
    std::vector<std::vector<EstimateRow>> per(levels);
    parallel_for(static_cast<size_t>(levels), jobs, [&](size_t i) {
      const int l = c.level_min + static_cast<int>(i);
      per[i] = check_dyadic_estimates(tpk, l, dyadic_samples(tpk, l, count, sub_seed(seed, 40)));
    });
    std::map<std::string, std::vector<double>> by;
    bool finite = true;
    for (const auto& rows : per)
      for (const auto& r : rows) {
        csv.row(sys, r.level, r.functional, r.constant, r.samples);
        finite = finite && std::isfinite(r.constant) && r.constant > 0.0;
        by[r.functional].push_back(r.constant);
      }
    json stab = json::object();
    for (const auto& [name, v] : by) {
      const double s = spread(v);
      stab[name] = num(s);
      gate_lt(rep, "level stability " + name + " " + sys, s, c.stability);
    }

    // the summed functionals stay finite
    double sum_f = 0.0, hold_f = 0.0;
    for (const auto& s : dyadic_samples(tpk, 0, 40, sub_seed(seed, 41))) {
      if ((s.y - s.y2).norm() >= orbit_distance(tpk.group(), s.x, s.y) / 2.0) continue;
      const KernelSumReport kr = kernel_sum(tpk, s.x, s.y, s.y2, c.level_min, c.level_max);
      sum_f = std::max(sum_f, finite_or_inf(kr.sum_functional));
      hold_f = std::max(hold_f, finite_or_inf(kr.holder_functional));
    }
    gate_true(rep, "estimates finite " + sys, finite && std::isfinite(sum_f) && std::isfinite(hold_f), std::max(sum_f, hold_f),
              "size and smoothness constants per level, summed size and Hoelder functionals");
    rep.measured[sys] = {{"annulus_sup", a.annulus_sup},
                         {"derivative_constants", a.derivative_constants},
                         {"L_extrapolated", std::abs(a.L_extrapolated)},
                         {"telescoping", tele},
                         {"level_stability", stab},
                         {"sum_functional", num(sum_f)},
                         {"holder_functional", num(hold_f)}};
  }
  rep.files.emplace_back("kernel.csv", csv.str());
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// BMO

LipschitzWitness witness_named(const std::string& name) {
  if (name == "tent") return tent(vec({0.3}), 1.0, 1.0);
  if (name == "plateau") return plateau(vec({-0.2}), 1.0, 0.4, 1.0);
  return smooth_bump(vec({0.1}), 1.0, 0.9);
}

Integrand bmo_function(const std::string& name) {
  if (name == "log-abs") return [](const Vec& x) { return cplx(std::log(x.norm())); };
  if (name == "atan") return [](const Vec& x) { return cplx(std::atan(3 * x[0]) + 0.2 * std::cos(5 * x[0])); };
  if (name == "tanh") return [](const Vec& x) { return cplx(std::tanh(2 * x[0] - 0.5)); };
  return witness_named(name).b;
}

SuiteReport bmo_suite(const ExperimentConfig& cfg, uint64_t seed, int jobs) {
  const BmoConfig& c = cfg.bmo;
  SuiteReport rep;
  Csv csv("function,bmo,bmo_d,first_round,refinement_delta,dense_family,ratio");
  const QuadratureSpec q;
  const WeightedMeasure m(rank1_system(c.k));
  const CoxeterGroup G = generate_group(m.rs);
  const BallFamily fam = dyadic_family(1, c.domain, c.pitch, c.r0, c.jmin, c.jmax);
  const BallFamily dense = dyadic_family(1, c.domain, c.pitch / 10, c.r0, c.jmin, c.jmax);

  const double cst = bmo_norm(m, [](const Vec&) { return cplx(3.0); }, fam, 1, q, jobs).norm_estimate;
  gate_le(rep, "constant has zero oscillation", cst, 1e-14);

  const Integrand b0 = bmo_function(c.functions.front());
  const double base = bmo_norm(m, b0, fam, 0, q, jobs).norm_estimate;
  const double shifted = bmo_norm(m, [&](const Vec& x) { return b0(x) - 4.0; }, fam, 0, q, jobs).norm_estimate;
  const double twice = bmo_norm(m, [&](const Vec& x) { return -2.0 * b0(x); }, fam, 0, q, jobs).norm_estimate;
  gate_le(rep, "shift invariance", std::abs(shifted - base), 1e-10 * std::max(1.0, base));
  gate_le(rep, "homogeneity", std::abs(twice - 2.0 * base), 1e-10 * std::max(1.0, base));

  double worst_ratio = 0.0, worst_refine = 0.0, worst_lip = 0.0;
  bool monotone = true;
  json per = json::object();
  for (const auto& name : c.functions) {
    const Integrand b = bmo_function(name);
    const BmoReport r = bmo_norm(m, b, fam, c.rounds, q, jobs);
    const double d = bmo_d_norm(G, m, b, fam, 0, q, jobs).norm_estimate;
    const double brute = bmo_norm(m, b, dense, 0, q, jobs).norm_estimate;
    for (size_t i = 1; i < r.round_estimates.size(); ++i) monotone = monotone && r.round_estimates[i] >= r.round_estimates[i - 1];
    const double first = r.round_estimates.front();
    const double refine = brute > 0.0 ? std::max(0.0, (brute - r.norm_estimate) / brute) : 0.0;
    const double ratio = d > 0.0 ? r.norm_estimate / d : INFINITY;
    worst_refine = std::max(worst_refine, refine);
    worst_ratio = std::max(worst_ratio, ratio);
    if (name == "tent" || name == "plateau" || name == "bump") {
      const LipschitzWitness w = witness_named(name);
      worst_lip = std::max(worst_lip, r.norm_estimate / (2.0 * w.lipschitz * fam.radii.back()));
    }
    csv.row(name, r.norm_estimate, d, first, r.refinement_delta, brute, ratio);
    per[name] = {{"bmo", r.norm_estimate}, {"bmo_d", d}, {"rounds", r.round_estimates}, {"dense", brute}};
  }
  gate_true(rep, "refinement rounds are monotone", monotone, 0.0, "round estimates never decrease");
  gate_lt(rep, "refined family within tolerance of a dense one", worst_refine, c.refinement_tolerance);
  gate_le(rep, "Lipschitz oscillation bound", worst_lip, 1.0, "estimate over 2 L_b r_max");
  gate_lt(rep, "BMO over BMO_d bounded", worst_ratio, c.ratio_bound);

  const auto samples = jn_samples(G, 1, c.jn_samples, sub_seed(seed, 5));
  const double bmo0 = std::max(base, 1e-300);
  const auto rows = john_nirenberg_suite(m, G, b0, bmo0, samples, q);
  double jn = 0.0;
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && std::isfinite(r.ratio) && r.lhs >= 0.0;
    jn = std::max(jn, finite_or_inf(r.ratio));
  }
  gate_true(rep, "mean-value inequality ratios finite", ok, jn, std::to_string(rows.size()) + " rows");
  std::ostringstream jcsv;
  write_jn_csv(jcsv, rows);
  per["john_nirenberg_max_ratio"] = num(jn);
  per["family"] = fam.policy();
  rep.measured = per;
  rep.files.emplace_back("bmo.csv", csv.str());
  rep.files.emplace_back("john_nirenberg.csv", jcsv.str());
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// commutator norms and the sharp-maximal diagnostic

std::unique_ptr<CommutatorEngine> make_engine(const WeightedMeasure& m, const std::string& kernel, double radius,
                                              int max_level, int jobs) {
  EngineOptions o;
  o.input_radius = radius;
  o.max_level = max_level;
  o.jobs = jobs;
  return std::make_unique<CommutatorEngine>(m, KernelRegistry::instance().make(kernel, m), o);
}

SuiteReport commutator_suite(const ExperimentConfig& cfg, uint64_t seed, int jobs) {
  const CommutatorConfig& c = cfg.commutator;
  SuiteReport rep;
  Csv csv("k,b,f,p,m_star,cf_norm,f_norm,bmo,norm_ratio,ratio,status");
  Csv sharp("k,sample,x,radius,s,lhs,rhs,ratio,partition_error");
  const QuadratureSpec q;
  double sharp_seconds = 0.0;
  for (double k : c.k) {
    const std::string kl = k_label(k);
    const WeightedMeasure m(rank1_system(k));
    const auto e = make_engine(m, c.kernel, c.input_radius, c.max_level, jobs);

    std::vector<BmoFunction> bs;
    if (c.b_family == "standard") {
      bs = standard_b_family(m, c.b_count, sub_seed(seed, 60), q);
    } else {
      for (int i = 0; i < c.b_count; ++i) {
        const double h = 0.5 + 0.25 * i;
        bs.push_back({"constant-" + std::to_string(i), [h](const Vec&) { return cplx(h); }, 0.0});
      }
    }
    const auto fs = standard_f_family(c.input_radius, c.f_count, sub_seed(seed, 61));
    const auto pairs = standard_pairs(bs.size(), fs.size(), 2 * c.pairs, sub_seed(seed, 62));
    const NormEstimate est = estimate_operator_norm(*e, bs, fs, pairs, c.p, c.tolerance, jobs);

    const size_t half = static_cast<size_t>(c.pairs) * c.p.size();
    double sup_half = 0.0, sup_all = 0.0, degenerate = 0.0;
    int ok = 0, deg = 0, stuck = 0;
    bool finite = true;
    for (size_t i = 0; i < est.rows.size(); ++i) {
      const NormRow& r = est.rows[i];
      csv.row(k, r.b_id, r.f_id, r.p, r.m_star, r.cf_norm, r.f_norm, r.bmo, r.norm_ratio, r.ratio, r.status);
      if (r.status == "ok") {
        ++ok;
        finite = finite && std::isfinite(r.ratio);
        sup_all = std::max(sup_all, r.ratio);
        if (i < half) sup_half = std::max(sup_half, r.ratio);
      } else if (r.status == "degenerate") {
        ++deg;
        degenerate = std::max(degenerate, r.f_norm > 0.0 ? r.cf_norm / r.f_norm : r.cf_norm);
      } else {
        ++stuck;
      }
    }
    const double growth = sup_half > 0.0 ? sup_all / sup_half - 1.0 : 0.0;
    gate_true(rep, "sup ratio finite " + kl, finite && std::isfinite(sup_all), sup_all,
              std::to_string(ok) + " converged cells");
    gate_lt(rep, "family doubling growth " + kl, growth, c.growth_limit,
            fmt(sup_half) + " over " + std::to_string(c.pairs) + " pairs, " + fmt(sup_all) + " over " +
                std::to_string(2 * c.pairs));
    gate_le(rep, "constant b annihilated " + kl, degenerate, c.degenerate_tolerance,
            std::to_string(deg) + " degenerate cells");
    gate_le(rep, "all cells converged " + kl, stuck, 0);

    // sharp-maximal diagnostic on the first pair of the family
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(sub_seed(seed, 63));
    std::uniform_real_distribution<double> ux(-c.input_radius, c.input_radius), ur(-4.0, 0.0);
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i < c.sharp_samples; ++i) {
      const double x = ux(rng);
      samples.emplace_back(x, std::exp2(ur(rng)));
    }
    QuadratureSpec qs;
    qs.resolution = 16;
    const BallFamily fam = dyadic_family(1, c.input_radius + 1.0, 0.125, 0.125, 0, 4);
    const BmoFunction& b = bs[pairs.front().first];
    const NamedFunction& f = fs[pairs.front().second];
    const auto rows = sharp_maximal_diagnostic(*e, b.fn, f.fn, b.bmo, c.sharp_m, c.sharp_p, samples, fam, qs);
    double part = 0.0, worst = 0.0;
    bool sharp_finite = true;
    for (const auto& r : rows) {
      sharp.row(k, r.sample, r.x, r.radius, r.s, r.lhs, r.rhs, r.ratio, r.partition_error);
      part = std::max(part, r.partition_error);
      sharp_finite = sharp_finite && std::isfinite(r.ratio) && std::isfinite(r.lhs);
      worst = std::max(worst, finite_or_inf(r.ratio));
    }
    sharp_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    gate_le(rep, "partition identity " + kl, part, c.partition_tolerance);
    gate_true(rep, "sharp maximal ratios finite " + kl, sharp_finite, worst,
              std::to_string(rows.size()) + " samples, b = " + b.id + ", f = " + f.id);

    rep.measured[kl] = {{"sup_ratio_pairs", sup_half},  {"sup_ratio_doubled", sup_all}, {"growth", growth},
                        {"measured_norm", est.measured_norm}, {"degenerate_max", degenerate}, {"ok", ok},
                        {"degenerate", deg},          {"not_converged", stuck},       {"sharp_max_ratio", num(worst)},
                        {"partition_error", part},    {"sharp_s", (1.0 + c.sharp_p) / 2.0}};
  }
  rep.measured["sharp_seconds"] = sharp_seconds;
  rep.files.emplace_back("commutator_norm.csv", csv.str());
  rep.files.emplace_back("sharp_maximal.csv", sharp.str());
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// tails

SuiteReport tail_suite(const ExperimentConfig& cfg, uint64_t seed, int jobs) {
  const TailConfig& c = cfg.tail;
  SuiteReport rep;
  Csv csv("k,witness,tail,m,x,lhs,shape,ratio");
  const double radius = 2.0;
  const double p0 = (1.0 + c.p) / 2.0;
  QuadratureSpec q;
  q.resolution = 16;
  const BallFamily fam = dyadic_family(1, radius + 1.5, 1.0 / 16, 1.0 / 16, 0, 6);
  const auto witnesses = lipschitz_family(1, sub_seed(seed, 70), c.witnesses);
  const NamedFunction f = standard_f_family(radius, 1, sub_seed(seed, 71)).front();
  std::vector<int> ms;
  for (int m = c.m_min; m <= c.m_max; ++m) ms.push_back(m);
  for (double k : c.k) {
    const std::string kl = k_label(k);
    const WeightedMeasure meas(rank1_system(k));
    const auto e = make_engine(meas, c.kernel, radius, c.max_level, jobs);
    const double eps = e->kernel().epsilon;
    const auto pts = tail_sample_points(*e, c.points, 0.05, std::ldexp(1.0, c.max_level - 4), sub_seed(seed, 72));
    json per = json::object();
    for (const auto& w : witnesses) {
      const std::string tag = kl + " " + w.name;
      CommutatorSeries s(*e, w.b, f.fn);
      const DecayFit fit = tail_decay(s, p0, ms);
      for (size_t i = 0; i < ms.size(); ++i) csv.row(k, w.name, "difference-norm", ms[i], p0, fit.norms[i], 0, 0);
      gate_le(rep, "tail slope " + tag, fit.slope, -c.slope_factor * eps, "regression over m in [" +
              std::to_string(c.m_min) + ", " + std::to_string(c.m_max) + "], epsilon " + fmt(eps));

      double local_out = 0.0;
      bool finite = true;
      std::map<std::string, std::vector<double>> implied;
      for (int m : ms) {
        if (std::ldexp(1.0, m) < 2.0 * w.support_radius) continue;
        const TailReport tr = tail_bounds_probe(*e, w, f.fn, m, c.p, pts, fam, q);
        for (const auto& r : tr.rows) {
          csv.row(k, w.name, r.tail, r.m, r.x, r.lhs, r.shape, r.ratio);
          finite = finite && std::isfinite(r.ratio);
          if (r.tail == "local" && std::abs(r.x) > w.support_radius) local_out = std::max(local_out, r.lhs);
        }
        for (const auto& [name, v] : tr.implied)
          if (name != "local" && v > 0.0) implied[name].push_back(v);
      }
      gate_le(rep, "local tail vanishes outside B(0, r_b) " + tag, local_out, 0.0);
      gate_true(rep, "tail envelopes finite " + tag, finite, static_cast<double>(pts.size()),
                std::to_string(pts.size()) + " sample points per level");
      json consts = json::object();
      // the envelope holds with one constant for all m: the implied constant may shrink with m, never grow
      for (const auto& [name, v] : implied) {
        const double growth = *std::max_element(v.begin(), v.end()) / v.front();
        consts[name] = v;
        gate_lt(rep, name + " constant uniform in m " + tag, growth, c.constant_spread,
                "largest implied constant over the one at the first admissible level");
      }
      per[w.name] = {{"slope", fit.slope}, {"norms", fit.norms}, {"implied", consts}, {"epsilon", eps}};
    }
    rep.measured[kl] = per;
  }
  rep.measured["p0"] = p0;
  rep.files.emplace_back("tail_decay.csv", csv.str());
  return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// compactness

SuiteReport compactness_suite(const ExperimentConfig& cfg, uint64_t seed, int jobs) {
  const CompactnessConfig& c = cfg.compactness;
  SuiteReport rep;
  const WeightedMeasure meas(rank1_system(c.k));
  const auto e = make_engine(meas, c.kernel, c.radius, c.max_level, jobs);
  const LipschitzWitness w = smooth_bump(vec({0.0}), 1.0, 0.8);
  const auto basis = unit_ball_sample(*e, c.radius, c.basis.back(), sub_seed(seed, 80), c.p, c.dictionary);
  const CompactnessReport r = compactness_probe(*e, w, basis, c.m, c.p, {c.delta}, 3);

  gate_lt(rep, "output localization", r.leakage, c.leakage, "L^p mass outside B(0, r_b + 2^{m+1})");
  gate_le(rep, "input localization", r.localization_gap, 1e-12);
  gate_true(rep, "uniform bound finite", std::isfinite(r.uniform_bound) && r.uniform_bound > 0.0, r.uniform_bound, "");
  gate_true(rep, "Hoelder modulus finite", std::isfinite(r.holder_modulus), r.holder_modulus, "");
  gate_lt(rep, "Hoelder modulus spread", r.holder_spread, c.holder_spread, "max over median across the basis");

  // the same delta for every basis size: a fraction of the uniform bound over the smallest sample
  const size_t n0 = static_cast<size_t>(c.basis.front());
  double u0 = 0.0;
  for (size_t i = 0; i < n0; ++i)
    for (double v : r.images[i]) u0 = std::max(u0, std::abs(v));
  const double delta = c.delta * u0;
  std::vector<int> counts;
  std::ostringstream os;
  write_compactness_csv(os, r);
  std::string text = os.str();
  for (int n : c.basis) {
    const std::vector<std::vector<double>> sub(r.images.begin(), r.images.begin() + n);
    counts.push_back(covering_number(sub, delta));
    text += "covering_by_basis," + std::to_string(n) + "," + std::to_string(counts.back()) + "\n";
  }
  const int first = counts.front(), last = counts.back();
  gate_le(rep, "covering numbers flatten", std::abs(last - first), 0,
          "N(delta) = " + std::to_string(first) + " at " + std::to_string(c.basis.front()) + " functions, " +
              std::to_string(last) + " at " + std::to_string(c.basis.back()) + ", delta = " + fmt(c.delta) +
              " x uniform bound");
  rep.measured = {{"leakage", r.leakage},
                  {"localization_gap", r.localization_gap},
                  {"uniform_bound", r.uniform_bound},
                  {"holder_modulus", r.holder_modulus},
                  {"holder_spread", num(r.holder_spread)},
                  {"delta", delta},
                  {"covering_numbers", counts},
                  {"basis_sizes", c.basis},
                  {"tail_slopes", r.tail_slopes},
                  {"omega_radius", r.omega_radius}};
  rep.files.emplace_back("compactness.csv", text);
  return rep;
}

}  // namespace

// ---------------------------------------------------------------------------------------------------------------

RootSystem make_system(const SystemSpec& s) {
  auto need = [&](size_t n) {
    if (s.k.size() != n)
      fail(ErrorCode::config, "root system '" + s.name + "' takes " + std::to_string(n) + " multiplicities");
  };
  if (s.name == "rank1") {
    need(1);
    return rank1_system(s.k[0]);
  }
  if (s.name == "product") {
    if (s.k.empty() || s.k.size() > 3) fail(ErrorCode::config, "product systems take 1 to 3 multiplicities");
    return product_system(s.k);
  }
  if (s.name == "a2") {
    need(1);
    return a2_system(s.k[0]);
  }
  if (s.name == "b2") {
    need(2);
    return b2_system(s.k[0], s.k[1]);
  }
  fail(ErrorCode::unresolved_name, "unknown root system '" + s.name + "'");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader r(j, "config");
  if (!j.contains("schema")) fail(ErrorCode::config, "config lacks the schema field");
  r.get("schema", c.schema);
  r.get("seed", c.seed);
  r.get("output_dir", c.output_dir);
  r.section("geometry", [&](Reader& s) {
    auto& g = c.geometry;
    s.get("systems", g.systems);
    s.get("chamber_pairs", g.chamber_pairs);
    s.get("samples", g.samples);
    s.get("tolerance", g.tolerance);
  });
  r.section("measure", [&](Reader& s) {
    auto& m = c.measure;
    s.get("systems", m.systems);
    s.get("scaling_samples", m.scaling_samples);
    s.get("growth_samples", m.growth_samples);
    s.get("resolution", m.resolution);
    s.get("scaling_tolerance", m.scaling_tolerance);
    s.get("closed_form_tolerance", m.closed_form_tolerance);
  });
  r.section("spectral", [&](Reader& s) {
    auto& m = c.spectral;
    s.get("rank1_k", m.rank1_k);
    s.get("product_k", m.product_k);
    s.get("test_functions", m.test_functions);
    s.get("space_radius", m.space_radius);
    s.get("freq_radius", m.freq_radius);
    s.get("product_space_radius", m.product_space_radius);
    s.get("tolerance", m.tolerance);
    s.get("residual_tolerance", m.residual_tolerance);
  });
  r.section("kernel", [&](Reader& s) {
    auto& m = c.kernel;
    s.get("kernel", m.kernel);
    s.get("systems", m.systems);
    s.get("level_min", m.level_min);
    s.get("level_max", m.level_max);
    s.get("samples", m.samples);
    s.get("resolution", m.resolution);
    s.get("stability", m.stability);
    s.get("telescoping_tolerance", m.telescoping_tolerance);
  });
  r.section("bmo", [&](Reader& s) {
    auto& m = c.bmo;
    s.get("k", m.k);
    s.get("functions", m.functions);
    s.get("domain", m.domain);
    s.get("pitch", m.pitch);
    s.get("r0", m.r0);
    s.get("jmin", m.jmin);
    s.get("jmax", m.jmax);
    s.get("rounds", m.rounds);
    s.get("jn_samples", m.jn_samples);
    s.get("refinement_tolerance", m.refinement_tolerance);
    s.get("ratio_bound", m.ratio_bound);
  });
  r.section("commutator", [&](Reader& s) {
    auto& m = c.commutator;
    s.get("kernel", m.kernel);
    s.get("k", m.k);
    s.get("p", m.p);
    s.get("b_family", m.b_family);
    s.get("f_family", m.f_family);
    s.get("b_count", m.b_count);
    s.get("f_count", m.f_count);
    s.get("pairs", m.pairs);
    s.get("max_level", m.max_level);
    s.get("input_radius", m.input_radius);
    s.get("tolerance", m.tolerance);
    s.get("growth_limit", m.growth_limit);
    s.get("degenerate_tolerance", m.degenerate_tolerance);
    s.get("sharp_samples", m.sharp_samples);
    s.get("sharp_m", m.sharp_m);
    s.get("sharp_p", m.sharp_p);
    s.get("partition_tolerance", m.partition_tolerance);
  });
  r.section("tail", [&](Reader& s) {
    auto& m = c.tail;
    s.get("kernel", m.kernel);
    s.get("k", m.k);
    s.get("p", m.p);
    s.get("m_min", m.m_min);
    s.get("m_max", m.m_max);
    s.get("points", m.points);
    s.get("witnesses", m.witnesses);
    s.get("max_level", m.max_level);
    s.get("slope_factor", m.slope_factor);
    s.get("constant_spread", m.constant_spread);
  });
  r.section("compactness", [&](Reader& s) {
    auto& m = c.compactness;
    s.get("kernel", m.kernel);
    s.get("k", m.k);
    s.get("m", m.m);
    s.get("p", m.p);
    s.get("basis", m.basis);
    s.get("dictionary", m.dictionary);
    s.get("radius", m.radius);
    s.get("delta", m.delta);
    s.get("leakage", m.leakage);
    s.get("holder_spread", m.holder_spread);
    s.get("max_level", m.max_level);
  });
  r.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, "malformed config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  auto systems = [](const std::vector<SystemSpec>& v) {
    json a = json::array();
    for (const auto& s : v) a.push_back({{"name", s.name}, {"k", s.k}});
    return a;
  };
  const auto& g = c.geometry;
  const auto& m = c.measure;
  const auto& s = c.spectral;
  const auto& k = c.kernel;
  const auto& b = c.bmo;
  const auto& cm = c.commutator;
  const auto& t = c.tail;
  const auto& q = c.compactness;
  return {{"schema", c.schema},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"geometry",
           {{"systems", systems(g.systems)}, {"chamber_pairs", g.chamber_pairs}, {"samples", g.samples}, {"tolerance", g.tolerance}}},
          {"measure",
           {{"systems", systems(m.systems)},
            {"scaling_samples", m.scaling_samples},
            {"growth_samples", m.growth_samples},
            {"resolution", m.resolution},
            {"scaling_tolerance", m.scaling_tolerance},
            {"closed_form_tolerance", m.closed_form_tolerance}}},
          {"spectral",
           {{"rank1_k", s.rank1_k},
            {"product_k", s.product_k},
            {"test_functions", s.test_functions},
            {"space_radius", s.space_radius},
            {"freq_radius", s.freq_radius},
            {"product_space_radius", s.product_space_radius},
            {"tolerance", s.tolerance},
            {"residual_tolerance", s.residual_tolerance}}},
          {"kernel",
           {{"kernel", k.kernel},
            {"systems", systems(k.systems)},
            {"level_min", k.level_min},
            {"level_max", k.level_max},
            {"samples", k.samples},
            {"resolution", k.resolution},
            {"stability", k.stability},
            {"telescoping_tolerance", k.telescoping_tolerance}}},
          {"bmo",
           {{"k", b.k},
            {"functions", b.functions},
            {"domain", b.domain},
            {"pitch", b.pitch},
            {"r0", b.r0},
            {"jmin", b.jmin},
            {"jmax", b.jmax},
            {"rounds", b.rounds},
            {"jn_samples", b.jn_samples},
            {"refinement_tolerance", b.refinement_tolerance},
            {"ratio_bound", b.ratio_bound}}},
          {"commutator",
           {{"kernel", cm.kernel},
            {"k", cm.k},
            {"p", cm.p},
            {"b_family", cm.b_family},
            {"f_family", cm.f_family},
            {"b_count", cm.b_count},
            {"f_count", cm.f_count},
            {"pairs", cm.pairs},
            {"max_level", cm.max_level},
            {"input_radius", cm.input_radius},
            {"tolerance", cm.tolerance},
            {"growth_limit", cm.growth_limit},
            {"degenerate_tolerance", cm.degenerate_tolerance},
            {"sharp_samples", cm.sharp_samples},
            {"sharp_m", cm.sharp_m},
            {"sharp_p", cm.sharp_p},
            {"partition_tolerance", cm.partition_tolerance}}},
          {"tail",
           {{"kernel", t.kernel},
            {"k", t.k},
            {"p", t.p},
            {"m_min", t.m_min},
            {"m_max", t.m_max},
            {"points", t.points},
            {"witnesses", t.witnesses},
            {"max_level", t.max_level},
            {"slope_factor", t.slope_factor},
            {"constant_spread", t.constant_spread}}},
          {"compactness",
           {{"kernel", q.kernel},
            {"k", q.k},
            {"m", q.m},
            {"p", q.p},
            {"basis", q.basis},
            {"dictionary", q.dictionary},
            {"radius", q.radius},
            {"delta", q.delta},
            {"leakage", q.leakage},
            {"holder_spread", q.holder_spread},
            {"max_level", q.max_level}}}};
}

bool SuiteReport::pass() const {
  return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.pass; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> n{"validate-geometry", "validate-measure", "validate-spectral", "verify-kernel",
                                          "bmo",               "commutator-norm",  "tail-decay",        "compactness"};
  return n;
}

SuiteReport run_suite(const std::string& name, const ExperimentConfig& cfg, int jobs, uint64_t seed) {
  if (jobs < 1) fail(ErrorCode::invalid_argument, "jobs must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport r;
  if (name == "validate-geometry")
    r = geometry_suite(cfg, seed);
  else if (name == "validate-measure")
    r = measure_suite(cfg, seed);
  else if (name == "validate-spectral")
    r = spectral_suite(cfg, seed);
  else if (name == "verify-kernel")
    r = kernel_suite(cfg, seed, jobs);
  else if (name == "bmo")
    r = bmo_suite(cfg, seed, jobs);
  else if (name == "commutator-norm")
    r = commutator_suite(cfg, seed, jobs);
  else if (name == "tail-decay")
    r = tail_suite(cfg, seed, jobs);
  else if (name == "compactness")
    r = compactness_suite(cfg, seed, jobs);
  else
    fail(ErrorCode::unresolved_name, "unknown suite '" + name + "'");
  r.suite = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

json report_to_json(const SuiteReport& r) {
  json gates = json::array();
  for (const auto& g : r.gates)
    gates.push_back({{"name", g.name}, {"pass", g.pass}, {"value", num(g.value)}, {"threshold", num(g.threshold)}, {"detail", g.detail}});
  json files = json::array();
  for (const auto& f : r.files) files.push_back(f.first);
  return {{"suite", r.suite}, {"pass", r.pass()}, {"seconds", r.seconds}, {"gates", gates}, {"measured", r.measured}, {"files", files}};
}

}  // namespace dunkl

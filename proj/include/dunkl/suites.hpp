#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "dunkl/common.hpp"
#include "dunkl/geometry.hpp"

namespace dunkl {

// Named experiment suites behind the command-line runner. Every suite computes its gates, its measured constants and
// its CSV reports in memory; writing files is left to the caller.

inline constexpr const char* kConfigSchema = "dunkl-lab/1";

struct SystemSpec {
  std::string name;  // rank1, product, a2, b2
  std::vector<double> k;
};

struct GeometryConfig {
  std::vector<SystemSpec> systems{{"rank1", {1.0}}, {"product", {1.0, 1.0}}, {"a2", {1.0}}};
  int chamber_pairs = 1000;
  int samples = 200;
  double tolerance = 1e-12;
};

struct MeasureConfig {
  std::vector<SystemSpec> systems{{"rank1", {0.5}}, {"rank1", {1.0}}, {"product", {1.0, 1.0}}, {"product", {0.5, 1.0}},
                                  {"a2", {1.0}}};
  int scaling_samples = 20;
  int growth_samples = 500;
  int resolution = 64;
  double scaling_tolerance = 1e-6;
  double closed_form_tolerance = 1e-8;
};

struct SpectralConfig {
  std::vector<double> rank1_k{0.0, 0.5, 1.0};
  std::vector<double> product_k{1.0, 1.0};
  int test_functions = 10;
  double space_radius = 4.5, freq_radius = 96.0;
  double product_space_radius = 2.75;
  double tolerance = 1e-6;
  double residual_tolerance = 1e-5;
};

struct KernelConfig {
  std::string kernel = "riesz";
  std::vector<SystemSpec> systems{{"rank1", {0.5}}, {"rank1", {1.0}}, {"product", {1.0, 1.0}}};
  int level_min = -8, level_max = 8;
  int samples = 100;  // per level in rank one; planar systems use 60 percent of it
  int resolution = 24;
  double stability = 10.0;
  double telescoping_tolerance = 1e-14;
};

struct BmoConfig {
  double k = 1.0;
  std::vector<std::string> functions{"log-abs", "atan", "tent", "plateau", "bump"};
  double domain = 2.0, pitch = 0.25, r0 = 0.25;
  int jmin = -3, jmax = 3;
  int rounds = 2;
  int jn_samples = 60;
  double refinement_tolerance = 0.05;
  double ratio_bound = 10.0;
};

struct CommutatorConfig {
  std::string kernel = "riesz";
  std::vector<double> k{0.5, 1.0};
  std::vector<double> p{1.5, 2.0, 3.0};
  std::string b_family = "standard";  // standard, constant
  std::string f_family = "standard";
  int b_count = 14, f_count = 8;
  int pairs = 20;  // the doubled family has twice as many
  int max_level = 44;
  double input_radius = 2.0;
  double tolerance = 1e-4;
  double growth_limit = 0.2;
  double degenerate_tolerance = 1e-10;
  int sharp_samples = 50;
  int sharp_m = 4;
  double sharp_p = 2.0;
  double partition_tolerance = 1e-12;
};

struct TailConfig {
  std::string kernel = "riesz";
  std::vector<double> k{0.5, 1.0};
  double p = 2.0;
  int m_min = 3, m_max = 7;
  int points = 50;
  int witnesses = 3;
  int max_level = 24;
  double slope_factor = 0.8;
  double constant_spread = 2.0;
};

struct CompactnessConfig {
  std::string kernel = "riesz";
  double k = 1.0;
  int m = 1;
  double p = 2.0;
  std::vector<int> basis{40, 60};
  int dictionary = 6;
  double radius = 2.0;
  double delta = 0.05;
  double leakage = 1e-8;
  double holder_spread = 10.0;
  int max_level = 10;
};

struct ExperimentConfig {
  std::string schema = kConfigSchema;
  uint64_t seed = 20240611;
  std::string output_dir = "dunkl-lab-out";
  GeometryConfig geometry;
  MeasureConfig measure;
  SpectralConfig spectral;
  KernelConfig kernel;
  BmoConfig bmo;
  CommutatorConfig commutator;
  TailConfig tail;
  CompactnessConfig compactness;
};

// Strict parsing: missing keys keep their defaults, unknown keys and wrong types are config errors, names that do
// not resolve (systems, kernels, families, functions) are unresolved_name errors.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

RootSystem make_system(const SystemSpec& s);

struct Gate {
  std::string name;
  bool pass = false;
  double value = 0.0, threshold = 0.0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<Gate> gates;
  nlohmann::json measured = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> files;  // file name, CSV text
  double seconds = 0.0;
  bool pass() const;
};

const std::vector<std::string>& suite_names();  // the eight suites, in the order `all` runs them
SuiteReport run_suite(const std::string& name, const ExperimentConfig& cfg, int jobs, uint64_t seed);

nlohmann::json report_to_json(const SuiteReport& r);

}  // namespace dunkl

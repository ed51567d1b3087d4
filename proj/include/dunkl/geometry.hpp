#pragma once

#include <json.hpp>

#include "dunkl/common.hpp"

namespace dunkl {

struct RootSystem {
  int dimension = 0;
  std::vector<Vec> roots;
  std::vector<double> multiplicity;  // one per entry of roots

  // indices of the roots with positive orientation (one per ± pair)
  std::vector<int> positive() const;
  double k_sum() const;
};

struct CoxeterGroup {
  std::vector<Mat> elements;             // identity first
  std::vector<std::vector<int>> words;   // root indices whose reflections compose each element
  int size() const { return static_cast<int>(elements.size()); }
  int find(const Mat& m, double tol = 1e-9) const;
};

struct Ball {
  Vec center;
  double radius = 0.0;
};

struct WeylChamber {
  std::vector<int> positive_roots;
  std::vector<int> signs;  // +1 / -1 per positive root
  bool on_wall = false;
  bool contains(const RootSystem& rs, const Vec& x, double tol = 0.0) const;
};

RootSystem build_root_system(const std::vector<Vec>& raw_roots, const std::vector<double>& multiplicities);

RootSystem rank1_system(double k);
RootSystem product_system(const std::vector<double>& ks);
RootSystem a2_system(double k);
RootSystem b2_system(double k_short, double k_long);

Vec reflect(const Vec& alpha, const Vec& x);
Mat reflection_matrix(const Vec& alpha);

CoxeterGroup generate_group(const RootSystem& rs, int cap = 1024);

std::vector<Vec> orbit(const CoxeterGroup& g, const Vec& x);
std::vector<Ball> orbit(const CoxeterGroup& g, const Ball& b);

double orbit_distance(const CoxeterGroup& g, const Vec& x, const Vec& y);

WeylChamber chamber_of(const RootSystem& rs, const Vec& x);

nlohmann::json root_system_to_json(const RootSystem& rs);
RootSystem root_system_from_json(const nlohmann::json& j);

}  // namespace dunkl

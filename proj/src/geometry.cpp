#include "dunkl/geometry.hpp"

#include <cmath>
#include <deque>

namespace dunkl {

namespace {

constexpr double kRootTol = 1e-10;

int find_root(const std::vector<Vec>& roots, const Vec& a) {
  for (size_t i = 0; i < roots.size(); ++i)
    if ((roots[i] - a).norm() < kRootTol) return static_cast<int>(i);
  return -1;
}

bool is_positive(const Vec& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] > 1e-12) return true;
    if (a[i] < -1e-12) return false;
  }
  return false;
}

}  // namespace

std::vector<int> RootSystem::positive() const {
  std::vector<int> out;
  for (size_t i = 0; i < roots.size(); ++i)
    if (is_positive(roots[i])) out.push_back(static_cast<int>(i));
  return out;
}

double RootSystem::k_sum() const {
  double s = 0.0;
  for (double k : multiplicity) s += k;
  return s;
}

Vec reflect(const Vec& alpha, const Vec& x) {
  return x - 2.0 * x.dot(alpha) / alpha.squaredNorm() * alpha;
}

Mat reflection_matrix(const Vec& alpha) {
  const Eigen::Index n = alpha.size();
  return Mat::Identity(n, n) - 2.0 / alpha.squaredNorm() * alpha * alpha.transpose();
}

RootSystem build_root_system(const std::vector<Vec>& raw_roots, const std::vector<double>& multiplicities) {
  if (raw_roots.empty()) fail(ErrorCode::invalid_argument, "root system needs at least one root");
  if (multiplicities.size() != raw_roots.size())
    fail(ErrorCode::invalid_argument, "expected one multiplicity per raw root");
  const auto dim = raw_roots.front().size();
  if (dim < 1) fail(ErrorCode::invalid_argument, "roots must have positive dimension");

  RootSystem rs;
  rs.dimension = static_cast<int>(dim);
  for (size_t i = 0; i < raw_roots.size(); ++i) {
    const Vec& r = raw_roots[i];
    const double k = multiplicities[i];
    if (r.size() != dim) fail(ErrorCode::invalid_argument, "roots have inconsistent dimension");
    if (!(k >= 0.0) || !std::isfinite(k)) fail(ErrorCode::invalid_argument, "multiplicities must be finite and nonnegative");
    const double n = r.norm();
    if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorCode::invalid_argument, "roots must be nonzero and finite");
    Vec a = r * (std::sqrt(2.0) / n);
    if (find_root(rs.roots, a) >= 0) {
      // already present, either listed twice or as the negative of an earlier root
      const int j = find_root(rs.roots, a);
      bool from_negation = false;
      for (size_t q = 0; q < i; ++q) {
        Vec prev = raw_roots[q] * (std::sqrt(2.0) / raw_roots[q].norm());
        if ((prev + a).norm() < kRootTol) from_negation = true;
      }
      if (!from_negation) fail(ErrorCode::invalid_argument, "parallel duplicate root");
      if (std::abs(rs.multiplicity[j] - k) > 1e-12)
        fail(ErrorCode::invalid_argument, "multiplicity is not invariant under the reflection group");
      continue;
    }
    for (const Vec& b : rs.roots) {
      if (std::abs(std::abs(a.dot(b)) - 2.0) < 1e-9 && (a + b).norm() > kRootTol)
        fail(ErrorCode::invalid_argument, "parallel duplicate root");
    }
    rs.roots.push_back(a);
    rs.multiplicity.push_back(k);
    rs.roots.push_back(-a);
    rs.multiplicity.push_back(k);
  }

  // close under the reflections, propagating multiplicities
  bool grew = true;
  while (grew) {
    grew = false;
    const size_t n = rs.roots.size();
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        Vec img = reflect(rs.roots[j], rs.roots[i]);
        const int at = find_root(rs.roots, img);
        if (at < 0) {
          if (rs.roots.size() >= 1024) fail(ErrorCode::cap_exceeded, "root closure does not terminate");
          rs.roots.push_back(img);
          rs.multiplicity.push_back(rs.multiplicity[i]);
          grew = true;
        } else if (std::abs(rs.multiplicity[at] - rs.multiplicity[i]) > 1e-12) {
          fail(ErrorCode::invalid_argument, "multiplicity is not invariant under the reflection group");
        }
      }
    }
  }
  return rs;
}

RootSystem rank1_system(double k) { return build_root_system({vec({1.0})}, {k}); }

RootSystem product_system(const std::vector<double>& ks) {
  const int n = static_cast<int>(ks.size());
  if (n < 1 || n > 3) fail(ErrorCode::invalid_argument, "product systems are built for 1 <= N <= 3");
  std::vector<Vec> raw;
  for (int i = 0; i < n; ++i) raw.push_back(Vec::Unit(n, i));
  return build_root_system(raw, ks);
}

RootSystem a2_system(double k) {
  const double s = std::sqrt(3.0) / 2.0;
  return build_root_system({vec({1.0, 0.0}), vec({0.5, s}), vec({-0.5, s})}, {k, k, k});
}

RootSystem b2_system(double k_short, double k_long) {
  return build_root_system({vec({1.0, 0.0}), vec({0.0, 1.0}), vec({1.0, 1.0}), vec({1.0, -1.0})},
                           {k_short, k_short, k_long, k_long});
}

int CoxeterGroup::find(const Mat& m, double tol) const {
  for (size_t i = 0; i < elements.size(); ++i)
    if ((elements[i] - m).norm() < tol) return static_cast<int>(i);
  return -1;
}

CoxeterGroup generate_group(const RootSystem& rs, int cap) {
  const int n = rs.dimension;
  std::vector<int> gens = rs.positive();
  std::vector<Mat> refl;
  for (int g : gens) refl.push_back(reflection_matrix(rs.roots[g]));

  CoxeterGroup g;
  g.elements.push_back(Mat::Identity(n, n));
  g.words.push_back({});
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    for (size_t r = 0; r < refl.size(); ++r) {
      Mat next = refl[r] * g.elements[cur];
      if (g.find(next) >= 0) continue;
      if (g.size() >= cap) fail(ErrorCode::cap_exceeded, "group generation exceeded the element cap");
      g.elements.push_back(next);
      auto w = g.words[cur];
      w.insert(w.begin(), gens[r]);
      g.words.push_back(std::move(w));
      queue.push_back(g.size() - 1);
    }
  }
  return g;
}

std::vector<Vec> orbit(const CoxeterGroup& g, const Vec& x) {
  std::vector<Vec> out;
  for (const Mat& s : g.elements) {
    Vec y = s * x;
    bool seen = false;
    for (const Vec& z : out)
      if ((z - y).norm() < 1e-12) seen = true;
    if (!seen) out.push_back(y);
  }
  return out;
}

std::vector<Ball> orbit(const CoxeterGroup& g, const Ball& b) {
  std::vector<Ball> out;
  for (const Vec& c : orbit(g, b.center)) out.push_back({c, b.radius});
  return out;
}

double orbit_distance(const CoxeterGroup& g, const Vec& x, const Vec& y) {
  double d = (x - y).norm();
  for (const Mat& s : g.elements) d = std::min(d, (x - s * y).norm());
  return d;
}

bool WeylChamber::contains(const RootSystem& rs, const Vec& x, double tol) const {
  for (size_t i = 0; i < positive_roots.size(); ++i)
    if (signs[i] * x.dot(rs.roots[positive_roots[i]]) < -tol) return false;
  return true;
}

WeylChamber chamber_of(const RootSystem& rs, const Vec& x) {
  WeylChamber c;
  c.positive_roots = rs.positive();
  const double scale = std::max(1.0, x.norm());
  for (int i : c.positive_roots) {
    const double v = x.dot(rs.roots[i]);
    if (std::abs(v) <= 1e-14 * scale) {
      c.on_wall = true;
      c.signs.push_back(1);
    } else {
      c.signs.push_back(v > 0 ? 1 : -1);
    }
  }
  return c;
}

nlohmann::json root_system_to_json(const RootSystem& rs) {
  nlohmann::json j;
  j["dimension"] = rs.dimension;
  auto roots = nlohmann::json::array();
  for (const Vec& r : rs.roots) roots.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  j["roots"] = roots;
  j["multiplicity"] = rs.multiplicity;
  return j;
}

RootSystem root_system_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dimension").get<int>();
    std::vector<Vec> raw;
    for (const auto& r : j.at("roots")) {
      auto v = r.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != dim) fail(ErrorCode::invalid_argument, "root length differs from dimension");
      raw.push_back(Eigen::Map<Vec>(v.data(), dim));
    }
    auto k = j.at("multiplicity").get<std::vector<double>>();
    return build_root_system(raw, k);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("malformed root system document: ") + e.what());
  }
}

}  // namespace dunkl

#include "dunkl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace dunkl {

void Rule1D::append(const Rule1D& o) {
  x.insert(x.end(), o.x.begin(), o.x.end());
  w.insert(w.end(), o.w.begin(), o.w.end());
}

const Rule1D& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

Rule1D gauss_on(double a, double b, int n) {
  const Rule1D& g = gauss_legendre(n);
  Rule1D r;
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.x.push_back(c + h * g.x[i]);
    r.w.push_back(h * g.w[i]);
  }
  return r;
}

Rule1D midpoint_on(double a, double b, int n) {
  Rule1D r;
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) {
    r.x.push_back(a + (i + 0.5) * h);
    r.w.push_back(h);
  }
  return r;
}

Rule1D graded_gauss(double a, double b, int n, bool grade_a, bool grade_b, int levels, double sigma) {
  if (grade_a && grade_b) {
    const double m = 0.5 * (a + b);
    Rule1D r = graded_gauss(a, m, n, true, false, levels, sigma);
    r.append(graded_gauss(m, b, n, false, true, levels, sigma));
    return r;
  }
  if (!grade_a && !grade_b) return gauss_on(a, b, n);
  // breakpoints a + (b-a) sigma^j (or mirrored), finest panel touching the singular end
  std::vector<double> t{0.0};
  for (int j = levels - 1; j >= 1; --j) t.push_back(std::pow(sigma, j));
  t.push_back(1.0);
  Rule1D r;
  for (size_t i = 0; i + 1 < t.size(); ++i) {
    double lo = t[i], hi = t[i + 1];
    if (grade_b) {
      lo = 1.0 - t[t.size() - 1 - i];
      hi = 1.0 - t[t.size() - 2 - i];
    }
    r.append(gauss_on(a + (b - a) * lo, a + (b - a) * hi, n));
  }
  return r;
}

Rule1D composite_gauss(double a, double b, const std::vector<double>& breaks, int n, int panels) {
  std::vector<double> pts{a};
  for (double p : breaks)
    if (p > a && p < b) pts.push_back(p);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  Rule1D r;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const double h = (pts[i + 1] - pts[i]) / panels;
    for (int p = 0; p < panels; ++p) r.append(gauss_on(pts[i] + p * h, pts[i] + (p + 1) * h, n));
  }
  return r;
}

}  // namespace dunkl

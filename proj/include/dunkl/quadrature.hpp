#pragma once

#include <vector>

namespace dunkl {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  size_t size() const { return x.size(); }
  void append(const Rule1D& o);
};

// n-point Gauss-Legendre on [-1, 1]; cached per n
const Rule1D& gauss_legendre(int n);

Rule1D gauss_on(double a, double b, int n);
Rule1D midpoint_on(double a, double b, int n);

// Gauss panels on [a, b] geometrically graded towards the end(s) flagged; ratio sigma, `levels` panels per graded end
Rule1D graded_gauss(double a, double b, int n, bool grade_a, bool grade_b, int levels, double sigma = 0.15);

// composite Gauss on [a, b] split at the given breakpoints, `panels` equal panels per piece
Rule1D composite_gauss(double a, double b, const std::vector<double>& breaks, int n, int panels);

}  // namespace dunkl

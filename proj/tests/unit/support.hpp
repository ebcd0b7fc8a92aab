// Oracles shared by the unit tests. Nothing here calls into the code under
// test except to evaluate the objects being checked.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "piag/linalg.hpp"
#include "piag/problem.hpp"
#include "piag/prox.hpp"

namespace piag::test {

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

// argmin over a uniform grid of 1/2 (z - y)^2 + step * phi(y). The minimizer
// of every regularizer here lies between 0 and z, so the grid covers
// [min(0, z) - 1, max(0, z) + 1].
inline double brute_force_prox(const std::function<double(double)>& phi, double z, double step,
                               double h = 1e-4) {
  const double lo = std::min(0.0, z) - 1.0;
  const double hi = std::max(0.0, z) + 1.0;
  const auto count = static_cast<long>(std::ceil((hi - lo) / h));
  double best_y = lo;
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= count; ++i) {
    const double y = lo + static_cast<double>(i) * h;
    const double v = 0.5 * (z - y) * (z - y) + step * phi(y);
    if (v < best) {
      best = v;
      best_y = y;
    }
  }
  // 0 is where the kinks sit; make sure it is on the grid.
  const double v0 = 0.5 * z * z + step * phi(0.0);
  if (v0 <= best) best_y = 0.0;
  return best_y;
}

// Central differences of a scalar function of a vector.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  std::vector<double> p(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double keep = p[j];
    p[j] = keep + h;
    const double up = f(p);
    p[j] = keep - h;
    const double down = f(p);
    p[j] = keep;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += (a[j] - b[j]) * (a[j] - b[j]);
    den += b[j] * b[j];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
}

// Plain MCP formula, written independently of the library.
inline double mcp_value(double t, double w, double theta) {
  const double a = std::abs(t);
  return a <= theta * w ? w * a - a * a / (2.0 * theta) : 0.5 * theta * w * w;
}

// sum_{i >= k} i^-s by direct summation plus an integral tail bound midpoint.
inline double slow_zeta_tail(double s, std::size_t k, std::size_t terms = 200000) {
  long double sum = 0.0L;
  const std::size_t end = k + terms;
  for (std::size_t i = end; i-- > k;) sum += std::pow(static_cast<long double>(i), -s);
  // remainder sum_{i >= end} ~ integral from end - 1/2
  const long double a = static_cast<long double>(end) - 0.5L;
  sum += std::pow(a, 1.0L - s) / (s - 1.0L);
  return static_cast<double>(sum);
}

}  // namespace piag::test

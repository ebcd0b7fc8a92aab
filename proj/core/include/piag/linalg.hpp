#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace piag {

using Vector = std::vector<double>;

/// Sparse vector stored as strictly increasing (index, value) pairs.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }

  double dot(std::span<const double> x) const noexcept {
    double s = 0.0;
    for (std::size_t p = 0; p < index.size(); ++p) s += value[p] * x[index[p]];
    return s;
  }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (double v : value) s += v * v;
    return s;
  }

  // y += alpha * this
  void axpy(double alpha, std::span<double> y) const noexcept {
    for (std::size_t p = 0; p < index.size(); ++p) y[index[p]] += alpha * value[p];
  }

  // Throws std::invalid_argument unless indices are strictly increasing and < n.
  void validate(std::size_t n) const;

  static SparseVector from_dense(std::span<const double> dense);
  Vector to_dense(std::size_t n) const;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double squared_norm(std::span<const double> a) noexcept { return dot(a, a); }

inline double norm(std::span<const double> a) noexcept { return std::sqrt(squared_norm(a)); }

inline double distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

inline void require_dimension(std::span<const double> x, std::size_t n, const char* what) {
  if (x.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(n) +
                                ", got " + std::to_string(x.size()));
  }
}

}  // namespace piag

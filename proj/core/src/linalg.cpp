#include "piag/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace piag {

void SparseVector::validate(std::size_t n) const {
  if (index.size() != value.size()) throw std::invalid_argument("sparse vector size mismatch");
  for (std::size_t p = 0; p < index.size(); ++p) {
    if (index[p] >= n) {
      throw std::invalid_argument("sparse index " + std::to_string(index[p]) +
                                  " out of range for dimension " + std::to_string(n));
    }
    if (p > 0 && index[p] <= index[p - 1]) {
      throw std::invalid_argument("sparse indices must be strictly increasing");
    }
    if (!std::isfinite(value[p])) throw std::invalid_argument("sparse value must be finite");
  }
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  SparseVector s;
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) {
      s.index.push_back(static_cast<std::uint32_t>(j));
      s.value.push_back(dense[j]);
    }
  }
  return s;
}

Vector SparseVector::to_dense(std::size_t n) const {
  Vector d(n, 0.0);
  for (std::size_t p = 0; p < index.size(); ++p) d[index[p]] = value[p];
  return d;
}

}  // namespace piag

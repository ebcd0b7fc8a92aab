#pragma once

#include <cstddef>

#include "piag/linalg.hpp"
#include "piag/problem.hpp"

namespace piag {

/// One binary-classification row: sparse features a_i and a label b_i in {-1, +1}.
struct LabeledSample {
  SparseVector features;
  double label = 1.0;
};

// sup_t |d^2/dt^2 (sigma(t) - 1)^2|, attained where sigma(-t) = (15 - sqrt(33)) / 24.
// Derivation: with s = sigma(-t) the second derivative is 2 s^2 (1 - s)(2 - 3 s);
// its critical points solve 12 s^2 - 15 s + 4 = 0 and the smaller root gives the
// maximum modulus 0.15405857012135050... (the other root gives 0.1202...).
// Rounded up in the last digit.
inline constexpr double kSquaredLogisticCurvature = 0.1540585701213506;

/// f(x) = ln(1 + exp(-b <a, x>)),  L = ||a||^2 / 4.
ComponentPtr logistic_component(const LabeledSample& sample, std::size_t dimension);

/// f(x) = (sigma(b <a, x>) - 1)^2,  L = kSquaredLogisticCurvature * ||a||^2. Nonconvex.
ComponentPtr squared_logistic_component(const LabeledSample& sample, std::size_t dimension);

/// f(x) = (<a, x> - b)^2,  L = 2 ||a||^2.
ComponentPtr quadratic_component(const SparseVector& row, double target, std::size_t dimension);

/// f(x) = (curvature / 2) ||x||^2,  L = curvature. Used for analytic toys.
ComponentPtr isotropic_quadratic_component(double curvature, std::size_t dimension);

// Numerically stable pieces shared with tests.
double log1p_exp(double t) noexcept;   // ln(1 + e^t)
double sigmoid(double t) noexcept;     // 1 / (1 + e^-t)

}  // namespace piag

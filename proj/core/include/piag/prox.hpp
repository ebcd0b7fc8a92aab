#pragma once

#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "piag/linalg.hpp"

namespace piag {

enum class RegularizerKind { zero, l1, l1_box, mcp };

std::string_view to_string(RegularizerKind kind);
RegularizerKind regularizer_kind_from_string(std::string_view name);

/// Separable regularizer g with a closed-form proximal map.
///
///   zero    g(y) = 0
///   l1      g(y) = w * ||y||_1
///   l1_box  g(y) = w * ||y||_1 + indicator of [-R, R]^n
///   mcp     g(y) = sum_j rho(y_j),  rho(t) = w|t| - t^2/(2 theta)  for |t| <= theta w
///                                         = theta w^2 / 2           otherwise
///
/// MCP is nonconvex; its prox is single valued only for step < theta, which
/// prox() enforces.
class Regularizer {
 public:
  Regularizer() = default;

  static Regularizer zero();
  static Regularizer l1(double weight);
  static Regularizer l1_box(double weight, double radius);
  static Regularizer mcp(double weight, double theta);

  RegularizerKind kind() const noexcept { return kind_; }
  double weight() const noexcept { return weight_; }
  double radius() const noexcept { return radius_; }
  double theta() const noexcept { return theta_; }
  bool convex() const noexcept { return kind_ != RegularizerKind::mcp; }

  // Largest admissible prox step (exclusive). Infinite for the convex kinds.
  double max_step() const noexcept {
    return kind_ == RegularizerKind::mcp ? theta_ : std::numeric_limits<double>::infinity();
  }

  // g(y); +inf outside the box for l1_box.
  double value(std::span<const double> y) const;
  double scalar_value(double t) const;

  // out = argmin_y 1/2 ||z - y||^2 + step * g(y). `out` may alias `z`.
  void prox(std::span<const double> z, double step, std::span<double> out) const;
  double scalar_prox(double z, double step) const;

 private:
  RegularizerKind kind_ = RegularizerKind::zero;
  double weight_ = 0.0;
  double radius_ = std::numeric_limits<double>::infinity();
  double theta_ = std::numeric_limits<double>::infinity();
};

Vector prox(const Regularizer& reg, std::span<const double> z, double step);

inline double soft_threshold(double z, double t) noexcept {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline double clip(double z, double lo, double hi) noexcept {
  return z < lo ? lo : (z > hi ? hi : z);
}

// Compares the l1_box prox against the composition clip(soft_threshold(z_i)).
// True iff both code paths agree exactly on every coordinate.
bool prox_l1_box_decomposition_check(std::span<const double> z, double weight, double radius,
                                     double step);

}  // namespace piag

#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "piag/linalg.hpp"
#include "piag/prox.hpp"

namespace piag {

/// One smooth summand f_i of F = sum_i f_i + g, with an L_i-Lipschitz gradient.
class SmoothComponent {
 public:
  virtual ~SmoothComponent() = default;

  virtual std::size_t dimension() const noexcept = 0;
  virtual double value(std::span<const double> x) const = 0;
  // out += grad f_i(x)
  virtual void add_gradient(std::span<const double> x, std::span<double> out) const = 0;
  virtual double lipschitz() const noexcept = 0;
  virtual bool convex() const noexcept = 0;

  // out = grad f_i(x)
  void gradient(std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    add_gradient(x, out);
  }
};

using ComponentPtr = std::shared_ptr<const SmoothComponent>;

/// F(x) = sum_i f_i(x) + g(x) over R^n. Immutable after construction.
class CompositeProblem {
 public:
  CompositeProblem(std::size_t dimension, std::vector<ComponentPtr> components,
                   Regularizer regularizer);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return components_.size(); }
  const SmoothComponent& component(std::size_t i) const { return *components_[i]; }
  const Regularizer& regularizer() const noexcept { return regularizer_; }

  double lipschitz(std::size_t i) const { return lipschitz_[i]; }
  std::span<const double> lipschitz_per_component() const noexcept { return lipschitz_; }
  // Sum of the per-component constants, accumulated in index order.
  double lipschitz_total() const noexcept { return lipschitz_total_; }
  bool smooth_part_convex() const noexcept { return smooth_convex_; }

  // Same problem with a different regularizer; components are shared.
  CompositeProblem with_regularizer(Regularizer regularizer) const;

  double smooth_value(std::span<const double> x) const;
  void full_gradient(std::span<const double> x, std::span<double> out) const;

 private:
  std::size_t dimension_;
  std::vector<ComponentPtr> components_;
  Regularizer regularizer_;
  std::vector<double> lipschitz_;
  double lipschitz_total_ = 0.0;
  bool smooth_convex_ = true;
};

// F(x) = sum_i f_i(x) + g(x). Throws std::invalid_argument on dimension mismatch.
double full_objective(const CompositeProblem& problem, std::span<const double> x);

// sum_i grad f_i(x), accumulated in ascending component order.
Vector full_gradient(const CompositeProblem& problem, std::span<const double> x);

/// Iterate x^k together with the last tau step lengths ||x^{d+1} - x^d||.
class IterateState {
 public:
  IterateState(Vector x0, std::size_t tau);

  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> x_prev() const noexcept { return x_prev_; }
  bool has_prev() const noexcept { return k_ > 0; }
  std::size_t k() const noexcept { return k_; }
  std::size_t tau() const noexcept { return tau_; }

  // Number of stored step lengths, min(k, tau).
  std::size_t history_size() const noexcept { return std::min(k_, tau_); }
  // Step length ||Delta^{k-1-back}||; zero for steps before the start.
  double delta(std::size_t back) const noexcept;
  // Oldest-first window of the last tau step lengths, zero padded.
  void window(std::span<double> out) const noexcept;

  // Moves to x^{k+1}; returns ||x^{k+1} - x^k||.
  double advance(Vector next);

 private:
  Vector x_;
  Vector x_prev_;
  std::size_t k_ = 0;
  std::size_t tau_;
  std::vector<double> ring_;
  std::size_t head_ = 0;
};

}  // namespace piag

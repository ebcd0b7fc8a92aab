#include "piag/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace piag {

CompositeProblem::CompositeProblem(std::size_t dimension, std::vector<ComponentPtr> components,
                                   Regularizer regularizer)
    : dimension_(dimension), components_(std::move(components)), regularizer_(regularizer) {
  if (dimension_ == 0) throw std::invalid_argument("problem dimension must be >= 1");
  if (components_.empty()) throw std::invalid_argument("problem needs at least one component");
  lipschitz_.reserve(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    if (!c) throw std::invalid_argument("null component");
    if (c->dimension() != dimension_) {
      throw std::invalid_argument("component " + std::to_string(i) + " has dimension " +
                                  std::to_string(c->dimension()) + ", problem has " +
                                  std::to_string(dimension_));
    }
    const double li = c->lipschitz();
    if (!(li > 0.0) || !std::isfinite(li)) {
      throw std::invalid_argument("component " + std::to_string(i) +
                                  " has a non-positive Lipschitz constant");
    }
    lipschitz_.push_back(li);
    lipschitz_total_ += li;
    smooth_convex_ = smooth_convex_ && c->convex();
  }
}

CompositeProblem CompositeProblem::with_regularizer(Regularizer regularizer) const {
  return CompositeProblem(dimension_, components_, regularizer);
}

double CompositeProblem::smooth_value(std::span<const double> x) const {
  require_dimension(x, dimension_, "smooth_value");
  // Neumaier-compensated sum in index order.
  double sum = 0.0;
  double comp = 0.0;
  for (const auto& c : components_) {
    const double v = c->value(x);
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

void CompositeProblem::full_gradient(std::span<const double> x, std::span<double> out) const {
  require_dimension(x, dimension_, "full_gradient");
  require_dimension(out, dimension_, "full_gradient output");
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& c : components_) c->add_gradient(x, out);
}

double full_objective(const CompositeProblem& problem, std::span<const double> x) {
  return problem.smooth_value(x) + problem.regularizer().value(x);
}

Vector full_gradient(const CompositeProblem& problem, std::span<const double> x) {
  Vector out(problem.dimension());
  problem.full_gradient(x, out);
  return out;
}

IterateState::IterateState(Vector x0, std::size_t tau)
    : x_(std::move(x0)), x_prev_(x_.size(), 0.0), tau_(tau), ring_(tau, 0.0) {}

double IterateState::delta(std::size_t back) const noexcept {
  if (back >= history_size()) return 0.0;
  // head_ is the slot the next step length goes into.
  const std::size_t slot = (head_ + tau_ - 1 - back) % tau_;
  return ring_[slot];
}

void IterateState::window(std::span<double> out) const noexcept {
  // out[0] is Delta^{k-tau}, out[tau-1] is Delta^{k-1}.
  for (std::size_t j = 0; j < tau_ && j < out.size(); ++j) out[j] = delta(tau_ - 1 - j);
}

double IterateState::advance(Vector next) {
  const double step = distance(next, x_);
  x_prev_.swap(x_);
  x_ = std::move(next);
  if (tau_ > 0) {
    ring_[head_] = step;
    head_ = (head_ + 1) % tau_;
  }
  ++k_;
  return step;
}

}  // namespace piag

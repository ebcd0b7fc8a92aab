#include "piag/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace piag {

double log1p_exp(double t) noexcept {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

void validate_sample(const LabeledSample& s, std::size_t n) {
  s.features.validate(n);
  if (s.label != 1.0 && s.label != -1.0) throw std::invalid_argument("label must be +1 or -1");
}

// Shared shape of the row-based losses: f(x) = phi(<a, x>).
class RowComponent : public SmoothComponent {
 public:
  RowComponent(SparseVector row, std::size_t n, double lipschitz)
      : row_(std::move(row)), n_(n), lipschitz_(lipschitz) {}

  std::size_t dimension() const noexcept override { return n_; }
  double lipschitz() const noexcept override { return lipschitz_; }

 protected:
  SparseVector row_;
  std::size_t n_;
  double lipschitz_;
};

class Logistic final : public RowComponent {
 public:
  Logistic(const LabeledSample& s, std::size_t n)
      : RowComponent(s.features, n, s.features.squared_norm() / 4.0), label_(s.label) {}

  double value(std::span<const double> x) const override {
    return log1p_exp(-label_ * row_.dot(x));
  }
  void add_gradient(std::span<const double> x, std::span<double> out) const override {
    const double t = label_ * row_.dot(x);
    row_.axpy(-label_ * sigmoid(-t), out);
  }
  bool convex() const noexcept override { return true; }

 private:
  double label_;
};

class SquaredLogistic final : public RowComponent {
 public:
  SquaredLogistic(const LabeledSample& s, std::size_t n)
      : RowComponent(s.features, n, kSquaredLogisticCurvature * s.features.squared_norm()),
        label_(s.label) {}

  double value(std::span<const double> x) const override {
    // sigma(t) - 1 = -sigma(-t)
    const double s = sigmoid(-label_ * row_.dot(x));
    return s * s;
  }
  void add_gradient(std::span<const double> x, std::span<double> out) const override {
    const double s = sigmoid(-label_ * row_.dot(x));
    row_.axpy(-2.0 * label_ * s * s * (1.0 - s), out);
  }
  bool convex() const noexcept override { return false; }

 private:
  double label_;
};

class Quadratic final : public RowComponent {
 public:
  Quadratic(const SparseVector& row, double target, std::size_t n)
      : RowComponent(row, n, 2.0 * row.squared_norm()), target_(target) {}

  double value(std::span<const double> x) const override {
    const double r = row_.dot(x) - target_;
    return r * r;
  }
  void add_gradient(std::span<const double> x, std::span<double> out) const override {
    row_.axpy(2.0 * (row_.dot(x) - target_), out);
  }
  bool convex() const noexcept override { return true; }

 private:
  double target_;
};

class IsotropicQuadratic final : public SmoothComponent {
 public:
  IsotropicQuadratic(double curvature, std::size_t n) : curvature_(curvature), n_(n) {}

  std::size_t dimension() const noexcept override { return n_; }
  double lipschitz() const noexcept override { return curvature_; }
  bool convex() const noexcept override { return true; }
  double value(std::span<const double> x) const override {
    return 0.5 * curvature_ * squared_norm(x);
  }
  void add_gradient(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t j = 0; j < n_; ++j) out[j] += curvature_ * x[j];
  }

 private:
  double curvature_;
  std::size_t n_;
};

}  // namespace

ComponentPtr logistic_component(const LabeledSample& sample, std::size_t dimension) {
  validate_sample(sample, dimension);
  return std::make_shared<Logistic>(sample, dimension);
}

ComponentPtr squared_logistic_component(const LabeledSample& sample, std::size_t dimension) {
  validate_sample(sample, dimension);
  return std::make_shared<SquaredLogistic>(sample, dimension);
}

ComponentPtr quadratic_component(const SparseVector& row, double target, std::size_t dimension) {
  row.validate(dimension);
  if (!std::isfinite(target)) throw std::invalid_argument("quadratic target must be finite");
  return std::make_shared<Quadratic>(row, target, dimension);
}

ComponentPtr isotropic_quadratic_component(double curvature, std::size_t dimension) {
  if (!(curvature > 0.0)) throw std::invalid_argument("curvature must be > 0");
  if (dimension == 0) throw std::invalid_argument("dimension must be >= 1");
  return std::make_shared<IsotropicQuadratic>(curvature, dimension);
}

}  // namespace piag

#include <doctest.h>

#include <cmath>
#include <random>

#include "piag/losses.hpp"
#include "support.hpp"

using namespace piag;

namespace {

SparseVector dense(std::vector<double> v) { return SparseVector::from_dense(v); }

double value_at(const ComponentPtr& f, std::vector<double> x) { return f->value(x); }

Vector grad_at(const ComponentPtr& f, std::vector<double> x) {
  Vector g(x.size());
  f->gradient(x, g);
  return g;
}

// t -> (sigma(t) - 1)^2 with its second derivative written out by hand.
double squared_logistic_second(double t) {
  const double s = 1.0 / (1.0 + std::exp(t));  // sigma(-t)
  return 2.0 * s * s * (1.0 - s) * (2.0 - 3.0 * s);
}

}  // namespace

TEST_CASE("logistic examples") {
  auto f = logistic_component({dense({1.0, 0.0}), 1.0}, 2);
  CHECK(value_at(f, {0.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const auto g = grad_at(f, {0.0, 0.0});
  CHECK(g[0] == doctest::Approx(-0.5));
  CHECK(g[1] == 0.0);

  auto h = logistic_component({dense({2.0}), -1.0}, 1);
  // ln(1 + e^20) = 20 + ln(1 + e^-20)
  CHECK(value_at(h, {10.0}) == doctest::Approx(20.0 + std::log1p(std::exp(-20.0))).epsilon(1e-15));

  CHECK(logistic_component({dense({3.0, 4.0}), 1.0}, 2)->lipschitz() == 6.25);
}

TEST_CASE("logistic stays finite for huge margins") {
  auto f = logistic_component({dense({1.0}), 1.0}, 1);
  for (double t : {-1e4, -700.0, 0.0, 700.0, 1e4}) {
    const double v = value_at(f, {t});
    CHECK(std::isfinite(v));
    CHECK(std::isfinite(grad_at(f, {t})[0]));
  }
  CHECK(value_at(f, {-1e4}) == doctest::Approx(1e4));
  CHECK(value_at(f, {1e4}) == 0.0);
}

TEST_CASE("squared logistic examples") {
  auto f = squared_logistic_component({dense({1.0}), 1.0}, 1);
  CHECK(value_at(f, {0.0}) == 0.25);
  CHECK(value_at(f, {50.0}) < 1e-20);
  CHECK_FALSE(f->convex());
}

TEST_CASE("quadratic examples") {
  auto f = quadratic_component(dense({1.0, 0.0}), 0.0, 2);
  CHECK(value_at(f, {0.0, 0.0}) == 0.0);
  const auto g0 = grad_at(f, {0.0, 0.0});
  CHECK(g0[0] == 0.0);
  CHECK(g0[1] == 0.0);

  auto h = quadratic_component(dense({1.0, 1.0}), 1.0, 2);
  CHECK(value_at(h, {1.0, 1.0}) == 1.0);
  const auto g = grad_at(h, {1.0, 1.0});
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 2.0);

  CHECK(quadratic_component(dense({3.0, 4.0}), 0.0, 2)->lipschitz() == 50.0);
}

TEST_CASE("curvature constant of the squared logistic") {
  // dense grid search for sup |h''|; the maximum sits near t = -1.3
  double best = 0.0;
  for (double t = -20.0; t <= 20.0; t += 1e-5) best = std::max(best, std::abs(squared_logistic_second(t)));
  CHECK(kSquaredLogisticCurvature >= best);
  CHECK(kSquaredLogisticCurvature - best < 1e-9);

  // the second derivative itself, against finite differences of the value
  for (double t : {-3.0, -1.3, 0.0, 0.7, 2.0}) {
    const auto h = [](double u) { return std::pow(sigmoid(u) - 1.0, 2); };
    const double e = 1e-4;
    const double fd = (h(t + e) - 2.0 * h(t) + h(t - e)) / (e * e);
    CHECK(squared_logistic_second(t) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("every loss matches finite differences") {
  std::mt19937_64 gen(21);
  const std::size_t n = 5;
  for (int kind = 0; kind < 3; ++kind) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      auto a = test::random_vector(gen, n);
      const double b = t % 2 ? 1.0 : -1.0;
      ComponentPtr f = kind == 0   ? logistic_component({dense(a), b}, n)
                       : kind == 1 ? squared_logistic_component({dense(a), b}, n)
                                   : quadratic_component(dense(a), 0.4 * b, n);
      const auto x = test::random_vector(gen, n);
      Vector g(n);
      f->gradient(x, g);
      const auto fd = test::fd_gradient([&](std::span<const double> y) { return f->value(y); }, x);
      worst = std::max(worst, test::relative_error(g, fd));
    }
    CAPTURE(kind);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("declared constants bound sampled gradient ratios") {
  std::mt19937_64 gen(22);
  const std::size_t n = 3;
  for (int kind = 0; kind < 3; ++kind) {
    auto a = test::random_vector(gen, n);
    ComponentPtr f = kind == 0   ? logistic_component({dense(a), 1.0}, n)
                     : kind == 1 ? squared_logistic_component({dense(a), -1.0}, n)
                                 : quadratic_component(dense(a), 1.0, n);
    double worst = 0.0;
    Vector gx(n), gy(n);
    for (int t = 0; t < 1000; ++t) {
      const auto x = test::random_vector(gen, n, 2.0);
      auto y = x;
      // short steps probe the Hessian bound, long ones the global behaviour
      const auto d = test::random_vector(gen, n, t % 2 ? 1e-3 : 2.0);
      for (std::size_t j = 0; j < n; ++j) y[j] += d[j];
      f->gradient(x, gx);
      f->gradient(y, gy);
      worst = std::max(worst, distance(gx, gy) / distance(x, y));
    }
    CAPTURE(kind);
    CHECK(worst <= f->lipschitz() * (1.0 + 1e-9));
  }
}

TEST_CASE("stable helpers") {
  CHECK(log1p_exp(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(log1p_exp(800.0) == 800.0);
  CHECK(log1p_exp(-800.0) == 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

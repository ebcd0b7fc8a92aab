#include <doctest.h>

#include <cmath>
#include <random>

#include "piag/data.hpp"
#include "piag/losses.hpp"
#include "piag/solver.hpp"
#include "support.hpp"

using namespace piag;

namespace {

CompositeProblem two_quadratics() {
  return CompositeProblem(1, {isotropic_quadratic_component(1.0, 1), isotropic_quadratic_component(2.0, 1)},
                          Regularizer::zero());
}

CompositeProblem logistic_problem(std::uint64_t seed, std::size_t n, std::size_t m, Regularizer reg) {
  std::mt19937_64 gen(seed);
  std::vector<ComponentPtr> parts;
  for (std::size_t i = 0; i < m; ++i) {
    auto a = test::random_vector(gen, n);
    parts.push_back(logistic_component({SparseVector::from_dense(a), i % 3 ? 1.0 : -1.0}, n));
  }
  return CompositeProblem(n, std::move(parts), reg);
}

AggregationConfig full_gradient_scheme() {
  AggregationConfig a;
  a.scheme = Scheme::prox_grad;
  return a;
}

// Plain proximal gradient written from scratch.
std::vector<Vector> ista(const CompositeProblem& p, Vector x, double gamma, std::size_t steps) {
  std::vector<Vector> out{x};
  for (std::size_t k = 0; k < steps; ++k) {
    const auto g = full_gradient(p, x);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = x[j] - gamma * g[j];
    x = prox(p.regularizer(), x, gamma);
    out.push_back(x);
  }
  return out;
}

// Independent epsilon: larger root of e + 1/e = S.
double epsilon_root(double gamma_e, double L, std::size_t tau) {
  const double S = 1.0 + (1.0 / tau) * (1.0 / (gamma_e * L) - 0.5);
  return 0.5 * (S + std::sqrt(S * S - 4.0));
}

// Counts steps where xi_k - xi_{k+1} < coeff ||Delta^k||^2 beyond tolerance.
// xi_k = F_k + (L / 2eps) sum_{d=k-tau}^{k-1} (d - k + tau + 1) ||Delta^d||^2
std::size_t descent_violations(const RunResult& r, double gamma_e) {
  const std::size_t tau = r.tau;
  const double L = r.lipschitz;
  const double eps = epsilon_root(gamma_e, L, tau);
  const double coeff = 0.25 * (1.0 / gamma_e - 0.5 * L - tau * L);
  REQUIRE(coeff > 0.0);
  // delta[d] = ||x^{d+1} - x^d||
  std::vector<double> delta;
  for (std::size_t k = 1; k < r.trace.size(); ++k) delta.push_back(*r.trace[k].delta_norm);
  const auto xi = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t w = 1; w <= tau; ++w) {
      if (k < w) break;
      const double d = delta[k - w];
      s += static_cast<double>(tau - w + 1) * d * d;
    }
    return r.trace[k].objective + L / (2.0 * eps) * s;
  };
  std::size_t bad = 0;
  for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
    const double a = xi(k), b = xi(k + 1);
    if (a - b < coeff * delta[k] * delta[k] - 1e-9 * (1.0 + std::abs(a))) ++bad;
  }
  return bad;
}

}  // namespace

TEST_CASE("fixed step sizes") {
  StepSizePolicy p;
  p.c = 0.99;
  CHECK(step_size(p, 4.0, 3, true) == doctest::Approx(1.98 / 28.0).epsilon(1e-15));
  CHECK(step_size(p, 4.0, 3, true) == doctest::Approx(0.0707142857));
  p.mode = StepMode::fixed_nonconvex;
  CHECK(step_size(p, 4.0, 3, true) == doctest::Approx(0.99 / 28.0).epsilon(1e-15));
  CHECK(step_size(p, 4.0, 3, false) == doctest::Approx(0.0353571).epsilon(1e-6));
  p.mode = StepMode::fixed_convex;
  p.c = 0.5;
  CHECK(step_size(p, 1.0, 0, true) == 1.0);

  p.mode = StepMode::line_search;
  p.c = 0.99;
  CHECK(step_size(p, 4.0, 3, false) == doctest::Approx(0.99 / 28.0).epsilon(1e-15));
  CHECK(step_size(p, 4.0, 3, true) == doctest::Approx(1.98 / 28.0).epsilon(1e-15));
}

TEST_CASE("step size errors") {
  StepSizePolicy p;
  for (double c : {0.0, 1.0, -0.5, 1.5}) {
    p.c = c;
    CHECK_THROWS_AS(step_size(p, 1.0, 1, true), std::invalid_argument);
  }
  p.c = 0.5;
  CHECK_THROWS_AS(step_size(p, 1.0, 1, false), std::invalid_argument);
  CHECK(step_mode_from_string(to_string(StepMode::fixed_nonconvex)) == StepMode::fixed_nonconvex);
  CHECK_THROWS_AS(step_mode_from_string("armijo"), std::invalid_argument);
}

TEST_CASE("line search c2 lower bound") {
  StepSizePolicy p;
  p.mode = StepMode::line_search;
  p.c = 0.5;
  // convex g: (2 tau + 1) L / (2c) = 3 * 2 / 1 = 6
  p.c2 = 6.0;
  CHECK(resolve_line_search(p, 2.0, 1, true).c2 == 6.0);
  p.c2 = 5.9;
  CHECK_THROWS_AS(resolve_line_search(p, 2.0, 1, true), std::invalid_argument);
  // nonconvex g doubles the bound
  p.c2 = 11.9;
  CHECK_THROWS_AS(resolve_line_search(p, 2.0, 1, false), std::invalid_argument);
  p.c2 = 12.0;
  CHECK_NOTHROW(resolve_line_search(p, 2.0, 1, false));

  p.c2.reset();
  const auto d = resolve_line_search(p, 2.0, 1, false);
  CHECK(d.gamma == doctest::Approx(0.5 / 6.0));
  CHECK(d.c2 == doctest::Approx(1.0 / d.gamma));
  CHECK(d.c1 == doctest::Approx(100.0 * d.gamma));
}

TEST_CASE("one exact step on a scalar quadratic") {
  CompositeProblem p(1, {isotropic_quadratic_component(1.0, 1)}, Regularizer::zero());
  const std::vector<double> x{5.0};
  AggregatedGradient oracle(p, full_gradient_scheme(), NoiseSchedule::none(), x);
  CHECK(oracle.tau() == 0);
  const auto s = piag_step(p, oracle, x, 1.0);
  CHECK(s.x_next[0] == 0.0);
}

TEST_CASE("two-component incremental steps, hand simulation") {
  const auto p = two_quadratics();
  std::vector<double> x{1.0};
  AggregatedGradient oracle(p, {}, NoiseSchedule::none(), x);
  const double g = 0.1;
  // k=0 refresh f_1 at 1: v = 1 + 2
  // k=1 refresh f_2 at 0.7: v = 1 + 1.4
  // k=2 refresh f_1 at 0.46: v = 0.46 + 1.4
  const double x1 = 1.0 - g * 3.0;
  const double x2 = x1 - g * (1.0 + 2.0 * x1);
  const double x3 = x2 - g * (x2 + 2.0 * x1);
  for (double expect : {x1, x2, x3}) {
    auto s = piag_step(p, oracle, x, g);
    CHECK(s.x_next[0] == doctest::Approx(expect).epsilon(1e-15));
    x = s.x_next;
  }
}

TEST_CASE("without delays the iterates are proximal gradient, bitwise") {
  const Regularizer regs[] = {Regularizer::l1(0.05), Regularizer::zero(), Regularizer::l1_box(0.05, 0.4)};
  for (const auto& reg : regs) {
    const auto p = logistic_problem(5, 6, 9, reg);
    SolverConfig cfg;
    cfg.aggregation = full_gradient_scheme();
    cfg.budget = 1000;
    cfg.tol = 0.0;
    cfg.x0 = Vector(6, 0.3);
    const auto r = run(p, cfg);
    REQUIRE(r.tau == 0);
    const auto ref = ista(p, cfg.x0, r.gamma, 1000);
    CHECK(r.x == ref.back());
    CHECK(r.trace[500].objective == full_objective(p, ref[500]));
  }

  // and the gamma rule itself reduces to 2c / L
  const auto p = logistic_problem(6, 3, 4, Regularizer::l1(0.1));
  SolverConfig cfg;
  cfg.aggregation = full_gradient_scheme();
  cfg.budget = 1;
  CHECK(run(p, cfg).gamma == 2.0 * 0.99 / p.lipschitz_total());
}

TEST_CASE("line search on a scalar quadratic") {
  CompositeProblem p(1, {isotropic_quadratic_component(1.0, 1)}, Regularizer::zero());
  const std::vector<double> x{1.0};
  // acceptance reads -s v^2 <= -(c2/2) s^2 v^2, i.e. s <= 2 / c2 = 0.4;
  // 100 * 0.5^j <= 0.4 first at j = 8
  LineSearchParams lp;
  lp.shrink = 0.5;
  lp.c1 = 100.0;
  lp.c2 = 5.0;
  lp.gamma = 0.2;
  AggregatedGradient oracle(p, full_gradient_scheme(), NoiseSchedule::none(), x);
  const auto s = line_search_step(p, oracle, x, lp);
  REQUIRE(s.line_search_j);
  CHECK(*s.line_search_j == 8);
  CHECK(s.step == 100.0 / 256.0);
  CHECK_FALSE(s.fallback);
  CHECK(s.x_next[0] == 1.0 - 100.0 / 256.0);
  CHECK(s.accept_lhs <= s.accept_rhs);

  // accepted trial shorter than gamma: fall back to gamma
  lp.gamma = 0.5;
  AggregatedGradient o2(p, full_gradient_scheme(), NoiseSchedule::none(), x);
  const auto f = line_search_step(p, o2, x, lp);
  CHECK(f.fallback);
  CHECK(f.step == 0.5);
  CHECK(f.x_next[0] == 0.5);

  // nothing accepted within j_max
  lp.j_max = 3;
  lp.gamma = 0.2;
  AggregatedGradient o3(p, full_gradient_scheme(), NoiseSchedule::none(), x);
  const auto e = line_search_step(p, o3, x, lp);
  CHECK(e.fallback);
  CHECK_FALSE(e.line_search_j);
  CHECK(e.step == 0.2);
}

TEST_CASE("line search at a stationary point") {
  CompositeProblem p(2, {isotropic_quadratic_component(1.0, 2)}, Regularizer::zero());
  const std::vector<double> x{0.0, 0.0};
  LineSearchParams lp;
  lp.c1 = 7.0;
  lp.c2 = 1.0;
  lp.gamma = 0.1;
  AggregatedGradient oracle(p, full_gradient_scheme(), NoiseSchedule::none(), x);
  const auto s = line_search_step(p, oracle, x, lp);
  CHECK(*s.line_search_j == 0);
  CHECK(s.accept_lhs == 0.0);
  CHECK(s.accept_rhs == 0.0);
  CHECK(s.step == 7.0);
  CHECK(s.x_next == x);
}

TEST_CASE("line search skips trial steps beyond the mcp bound") {
  CompositeProblem p(1, {isotropic_quadratic_component(1.0, 1)}, Regularizer::mcp(0.1, 2.0));
  const std::vector<double> x{3.0};
  LineSearchParams lp;
  lp.c1 = 8.0;  // trials 8, 4, 2 are not admissible
  lp.c2 = 0.5;
  lp.gamma = 0.1;
  AggregatedGradient oracle(p, full_gradient_scheme(), NoiseSchedule::none(), x);
  const auto s = line_search_step(p, oracle, x, lp);
  REQUIRE(s.line_search_j);
  CHECK(*s.line_search_j >= 3);
  CHECK(s.step < 2.0);
}

TEST_CASE("line search accepted steps satisfy the test as recomputed") {
  for (const auto& reg : {Regularizer::l1(0.05), Regularizer::mcp(0.05, 3.0)}) {
    const auto p = logistic_problem(9, 5, 7, reg);
    StepSizePolicy pol;
    pol.mode = StepMode::line_search;
    const auto lp = resolve_line_search(pol, p.lipschitz_total(), 7, reg.convex());
    std::vector<double> x(5, 1.0);
    AggregatedGradient oracle(p, {}, NoiseSchedule::none(), x);
    std::size_t accepted = 0;
    for (int k = 0; k < 300; ++k) {
      const auto s = line_search_step(p, oracle, x, lp);
      if (!s.fallback) {
        ++accepted;
        double inner = 0.0;
        for (std::size_t j = 0; j < 5; ++j) inner += s.direction[j] * (s.x_next[j] - x[j]);
        const double d = distance(s.x_next, x);
        CHECK(inner + reg.value(s.x_next) - reg.value(x) <= -0.5 * lp.c2 * d * d);
        CHECK(s.step >= lp.gamma);
      } else {
        CHECK(s.step == lp.gamma);
      }
      x = s.x_next;
    }
    CHECK(accepted > 0);
  }
}

TEST_CASE("run with zero budget has only the first row") {
  const auto p = two_quadratics();
  SolverConfig cfg;
  cfg.budget = 0;
  cfg.x0 = {1.0};
  const auto r = run(p, cfg);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].k == 0);
  CHECK(r.trace[0].objective == 1.5);
  CHECK_FALSE(r.trace[0].delta_norm);
  CHECK(r.iterations() == 0);
  CHECK(r.termination == Termination::budget);
}

TEST_CASE("small lasso reaches a tight residual") {
  const auto p = make_synthetic(parse_synthetic_spec("lasso:2,3,0"), Regularizer::l1(0.1));
  SolverConfig cfg;
  cfg.budget = 10000;
  cfg.tol = 1e-8;
  const auto r = run(p, cfg);
  CHECK(r.termination == Termination::residual_below);
  CHECK(*r.trace.back().residual < 1e-8);
  CHECK(r.trace.size() == r.iterations() + 1);

  // long plain proximal-gradient run as the reference point
  const auto ref = ista(p, Vector(2, 0.0), 1.0 / p.lipschitz_total(), 200000).back();
  CHECK(distance(r.x, ref) < 1e-6);
}

TEST_CASE("runs are deterministic") {
  const auto p = logistic_problem(12, 4, 6, Regularizer::l1(0.02));
  SolverConfig cfg;
  cfg.aggregation.scheduler = SchedulerKind::shuffled_cyclic;
  cfg.aggregation.seed = 42;
  cfg.noise = NoiseSchedule::geometric(0.5, 0.9, 3);
  cfg.budget = 400;
  const auto a = run(p, cfg);
  const auto b = run(p, cfg);
  CHECK(a.x == b.x);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].objective == b.trace[k].objective);
    CHECK(a.trace[k].residual == b.trace[k].residual);
  }
}

TEST_CASE("configuration problems are reported together") {
  const auto p = logistic_problem(1, 2, 3, Regularizer::mcp(0.1, 2.0));
  SolverConfig cfg;
  cfg.policy.mode = StepMode::line_search;
  cfg.policy.shrink = 1.5;
  cfg.noise = NoiseSchedule::geometric(1.0, 0.5);
  try {
    run(p, cfg);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("shrink") != std::string::npos);
    CHECK(msg.find("noise") != std::string::npos);
  }
  SolverConfig fixed;
  CHECK_THROWS_AS(run(p, fixed), std::invalid_argument);  // fixed_convex with mcp
}

TEST_CASE("mcp step bound is enforced for fixed steps") {
  // one component with L = 1, tau = 0: gamma = c / L = 0.99, theta must exceed it
  CompositeProblem p(1, {isotropic_quadratic_component(1.0, 1)}, Regularizer::mcp(0.1, 1.01));
  SolverConfig cfg;
  cfg.aggregation = full_gradient_scheme();
  cfg.policy.mode = StepMode::fixed_nonconvex;
  cfg.budget = 5;
  CHECK_NOTHROW(run(p, cfg));
  CompositeProblem q(1, {isotropic_quadratic_component(0.5, 1)}, Regularizer::mcp(0.1, 1.5));
  CHECK_THROWS_AS(run(q, cfg), std::invalid_argument);  // gamma = 1.98 > 1.5
}

TEST_CASE("delayed descent inequality holds along runs") {
  SUBCASE("cyclic logistic with l1") {
    const auto p = logistic_problem(20, 5, 12, Regularizer::l1(0.01));
    SolverConfig cfg;
    cfg.budget = 3000;
    cfg.tol = 0.0;
    cfg.x0 = Vector(5, 2.0);
    const auto r = run(p, cfg);
    CHECK(descent_violations(r, r.gamma) == 0);
  }
  SUBCASE("synthetic delays on lasso with box") {
    const auto p = make_synthetic(parse_synthetic_spec("lasso:8,10,3"), Regularizer::l1_box(0.1, 2.0));
    SolverConfig cfg;
    cfg.aggregation.scheduler = SchedulerKind::synthetic_delay;
    cfg.aggregation.delays = {0, 1, 2, 3, 4, 3, 2, 1, 0, 4};
    cfg.budget = 3000;
    cfg.tol = 0.0;
    const auto r = run(p, cfg);
    CHECK(r.tau == 4);
    CHECK(descent_violations(r, r.gamma) == 0);
  }
  SUBCASE("mcp with the halved step") {
    const auto p = logistic_problem(21, 4, 10, Regularizer::mcp(0.05, 3.0));
    SolverConfig cfg;
    cfg.policy.mode = StepMode::fixed_nonconvex;
    cfg.budget = 3000;
    cfg.tol = 0.0;
    cfg.x0 = Vector(4, 1.0);
    const auto r = run(p, cfg);
    // the nonconvex analysis runs the convex one at twice the step
    CHECK(descent_violations(r, 2.0 * r.gamma) == 0);
  }
}

TEST_CASE("step lengths vanish on the toy problems") {
  const CompositeProblem problems[] = {
      make_synthetic(parse_synthetic_spec("lasso:2,3,0"), Regularizer::l1(0.1)),
      two_quadratics(),
      logistic_problem(30, 3, 5, Regularizer::l1(0.2)),
  };
  for (const auto& p : problems) {
    SolverConfig cfg;
    cfg.budget = 10000;
    cfg.tol = 0.0;
    cfg.x0 = Vector(p.dimension(), 1.0);
    const auto r = run(p, cfg);
    double tail = 0.0;
    for (std::size_t k = 9001; k < r.trace.size(); ++k) tail = std::max(tail, *r.trace[k].delta_norm);
    CHECK(tail < 1e-6);
  }
}

#include "piag/solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "piag/diagnostics.hpp"

namespace piag {

std::string_view to_string(StepMode mode) {
  switch (mode) {
    case StepMode::fixed_convex: return "fixed_convex";
    case StepMode::fixed_nonconvex: return "fixed_nonconvex";
    case StepMode::line_search: return "line_search";
  }
  return "fixed_convex";
}

StepMode step_mode_from_string(std::string_view name) {
  if (name == "fixed_convex") return StepMode::fixed_convex;
  if (name == "fixed_nonconvex") return StepMode::fixed_nonconvex;
  if (name == "line_search") return StepMode::line_search;
  throw std::invalid_argument("unknown step mode '" + std::string(name) + "'");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::budget: return "budget";
    case Termination::residual_below: return "residual_below";
    case Termination::objective_stagnation: return "objective_stagnation";
  }
  return "budget";
}

double step_size(const StepSizePolicy& policy, double lipschitz, std::size_t tau, bool g_convex) {
  if (!(policy.c > 0.0 && policy.c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw std::invalid_argument("Lipschitz constant must be positive and finite");
  }
  const double denom = (2.0 * static_cast<double>(tau) + 1.0) * lipschitz;
  switch (policy.mode) {
    case StepMode::fixed_convex:
      if (!g_convex) throw std::invalid_argument("fixed_convex step requires a convex regularizer");
      return 2.0 * policy.c / denom;
    case StepMode::fixed_nonconvex:
      return policy.c / denom;
    case StepMode::line_search:
      // fallback step
      return (g_convex ? 2.0 * policy.c : policy.c) / denom;
  }
  return policy.c / denom;
}

LineSearchParams resolve_line_search(const StepSizePolicy& policy, double lipschitz,
                                     std::size_t tau, bool g_convex) {
  if (policy.mode != StepMode::line_search) {
    throw std::invalid_argument("policy is not line_search");
  }
  LineSearchParams p;
  p.gamma = step_size(policy, lipschitz, tau, g_convex);
  if (!(policy.shrink > 0.0 && policy.shrink < 1.0)) {
    throw std::invalid_argument("line-search shrink factor must lie in (0, 1)");
  }
  p.shrink = policy.shrink;
  p.c1 = policy.c1.value_or(100.0 * p.gamma);
  p.c2 = policy.c2.value_or(1.0 / p.gamma);
  p.j_max = policy.j_max;
  if (!(p.c1 > 0.0) || !std::isfinite(p.c1)) throw std::invalid_argument("c1 must be positive");
  if (!(p.c2 > 0.0) || !std::isfinite(p.c2)) throw std::invalid_argument("c2 must be positive");
  const double bound = (2.0 * static_cast<double>(tau) + 1.0) * lipschitz /
                       (g_convex ? 2.0 * policy.c : policy.c);
  if (p.c2 < bound * (1.0 - 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "c2 = " << p.c2 << " is below the required lower bound " << bound;
    throw std::invalid_argument(os.str());
  }
  return p;
}

namespace {

void forward_point(std::span<const double> x, std::span<const double> v, double step,
                   std::span<double> out) {
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] - step * v[j];
}

StepResult start(AggregatedGradient& oracle, std::span<const double> x_k) {
  const AggregatedGradient::Output& o = oracle.next(x_k);
  StepResult r;
  r.direction = o.noisy;
  r.exact_direction = o.exact;
  r.sigma = o.sigma;
  r.refreshed = o.refreshed;
  r.max_age = o.max_age;
  r.x_next.assign(x_k.size(), 0.0);
  return r;
}

}  // namespace

StepResult piag_step(const CompositeProblem& problem, AggregatedGradient& oracle,
                     std::span<const double> x_k, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("step size must be positive");
  require_dimension(x_k, problem.dimension(), "iterate");
  StepResult r = start(oracle, x_k);
  forward_point(x_k, r.direction, gamma, r.x_next);
  problem.regularizer().prox(r.x_next, gamma, r.x_next);
  r.step = gamma;
  return r;
}

StepResult line_search_step(const CompositeProblem& problem, AggregatedGradient& oracle,
                            std::span<const double> x_k, const LineSearchParams& params) {
  if (!(params.shrink > 0.0 && params.shrink < 1.0)) {
    throw std::invalid_argument("line-search shrink factor must lie in (0, 1)");
  }
  if (!(params.c1 > 0.0)) throw std::invalid_argument("c1 must be positive");
  if (!(params.gamma > 0.0)) throw std::invalid_argument("fallback step must be positive");
  require_dimension(x_k, problem.dimension(), "iterate");

  const Regularizer& reg = problem.regularizer();
  StepResult r = start(oracle, x_k);
  const std::span<const double> v = r.direction;
  const double g_x = reg.value(x_k);
  Vector y(x_k.size());

  for (std::size_t j = 0; j <= params.j_max; ++j) {
    const double s = params.c1 * std::pow(params.shrink, static_cast<double>(j));
    // MCP prox is undefined for s >= theta; such trials count as rejected.
    if (!(s < reg.max_step())) continue;
    forward_point(x_k, v, s, y);
    reg.prox(y, s, y);
    double inner = 0.0;
    double sq = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
      const double d = y[t] - x_k[t];
      inner += v[t] * d;
      sq += d * d;
    }
    const double lhs = inner + reg.value(y) - g_x;
    const double rhs = -0.5 * params.c2 * sq;
    if (lhs <= rhs) {
      r.line_search_j = j;
      r.accept_lhs = lhs;
      r.accept_rhs = rhs;
      if (s >= params.gamma) {
        r.step = s;
        r.x_next = std::move(y);
        return r;
      }
      break;
    }
  }
  r.fallback = true;
  r.step = params.gamma;
  forward_point(x_k, v, params.gamma, r.x_next);
  reg.prox(r.x_next, params.gamma, r.x_next);
  return r;
}

void validate_config(const CompositeProblem& problem, const SolverConfig& config) {
  std::vector<std::string> issues;
  const auto check = [&](bool ok, std::string msg) {
    if (!ok) issues.push_back(std::move(msg));
  };
  const StepSizePolicy& p = config.policy;
  check(p.c > 0.0 && p.c < 1.0, "c must lie in (0, 1)");
  if (p.mode == StepMode::fixed_convex) {
    check(problem.regularizer().convex(), "fixed_convex step requires a convex regularizer");
  }
  if (p.mode == StepMode::line_search) {
    check(p.shrink > 0.0 && p.shrink < 1.0, "line-search shrink factor must lie in (0, 1)");
    check(!p.c1 || *p.c1 > 0.0, "c1 must be positive");
    check(!p.c2 || *p.c2 > 0.0, "c2 must be positive");
    check(!config.noise.active(), "line search is defined for noise-free runs only");
  }
  check(config.x0.empty() || config.x0.size() == problem.dimension(),
        "x0 has the wrong dimension");
  check(!config.reference_point || config.reference_point->size() == problem.dimension(),
        "reference point has the wrong dimension");
  check(config.tol >= 0.0, "tol must be >= 0");
  check(config.stagnation_tol >= 0.0, "stagnation_tol must be >= 0");
  try {
    config.noise.validate();
  } catch (const std::invalid_argument& e) {
    issues.emplace_back(e.what());
  }
  if (config.aggregation.scheme == Scheme::lag) {
    const std::size_t bound = config.aggregation.tau_bound.value_or(config.aggregation.lag.hard_cap);
    check(config.aggregation.lag.hard_cap <= bound, "lag hard_cap exceeds tau_bound");
    check(config.aggregation.lag.hard_cap >= 1, "lag hard_cap must be >= 1");
    check(config.aggregation.lag.theta >= 0.0, "lag theta must be >= 0");
  }
  if (!issues.empty()) {
    std::string msg = "invalid solver configuration:";
    for (const auto& s : issues) msg += "\n  - " + s;
    throw std::invalid_argument(msg);
  }
}

RunResult run(const CompositeProblem& problem, const SolverConfig& config) {
  validate_config(problem, config);
  const std::size_t n = problem.dimension();
  Vector x = config.x0.empty() ? Vector(n, 0.0) : config.x0;

  AggregatedGradient oracle(problem, config.aggregation, config.noise, x);
  const Regularizer& reg = problem.regularizer();

  RunResult result;
  result.tau = oracle.tau();
  result.lipschitz = problem.lipschitz_total();
  result.g_convex = reg.convex();
  result.f_convex = problem.smooth_part_convex();
  result.policy = config.policy;
  result.noise = config.noise;
  result.scheme = config.aggregation.scheme;
  result.gamma = step_size(config.policy, result.lipschitz, result.tau, result.g_convex);
  if (config.policy.mode == StepMode::line_search) {
    result.line_search =
        resolve_line_search(config.policy, result.lipschitz, result.tau, result.g_convex);
  } else if (!(result.gamma < reg.max_step())) {
    throw std::invalid_argument("step size " + std::to_string(result.gamma) +
                                " violates the MCP bound step < theta");
  }

  const auto distance_to_reference = [&](std::span<const double> point) -> std::optional<double> {
    if (!config.reference_point) return std::nullopt;
    return distance(point, *config.reference_point);
  };

  result.trace.reserve(config.budget + 1);
  IterateRecord first;
  first.objective = full_objective(problem, x);
  first.distance_to_reference = distance_to_reference(x);
  result.trace.push_back(first);

  Vector grad(n);
  for (std::size_t k = 0; k < config.budget; ++k) {
    StepResult s = config.policy.mode == StepMode::line_search
                       ? line_search_step(problem, oracle, x, *result.line_search)
                       : piag_step(problem, oracle, x, result.gamma);

    problem.full_gradient(s.x_next, grad);
    const double res = norm(residual(x, s.x_next, s.direction, s.step, grad));

    IterateRecord row;
    row.k = k + 1;
    row.objective = full_objective(problem, s.x_next);
    row.delta_norm = distance(s.x_next, x);
    row.sigma = s.sigma;
    row.step = s.step;
    row.residual = res;
    row.line_search_j = s.line_search_j;
    row.fallback = s.fallback;
    row.acceptance_ok = s.fallback || s.accept_lhs <= s.accept_rhs;
    row.refreshed = s.refreshed;
    row.max_age = s.max_age;
    row.distance_to_reference = distance_to_reference(s.x_next);

    const double previous = result.trace.back().objective;
    result.trace.push_back(row);
    x = std::move(s.x_next);

    if (config.tol > 0.0 && res < config.tol) {
      result.termination = Termination::residual_below;
      break;
    }
    if (config.stagnation_tol > 0.0 &&
        std::abs(previous - row.objective) <= config.stagnation_tol * (1.0 + std::abs(previous))) {
      result.termination = Termination::objective_stagnation;
      break;
    }
  }
  result.x = std::move(x);
  return result;
}

}  // namespace piag

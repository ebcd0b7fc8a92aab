#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "piag/aggregation.hpp"
#include "piag/linalg.hpp"
#include "piag/problem.hpp"

namespace piag {

enum class StepMode { fixed_convex, fixed_nonconvex, line_search };

std::string_view to_string(StepMode mode);
StepMode step_mode_from_string(std::string_view name);

/// Step-size policy.
///   fixed_convex     gamma = 2c / ((2 tau + 1) L)   (requires convex g)
///   fixed_nonconvex  gamma =  c / ((2 tau + 1) L)
///   line_search      trial steps c1 * shrink^j, falling back to the fixed
///                    gamma matching the convexity of g.
struct StepSizePolicy {
  StepMode mode = StepMode::fixed_convex;
  double c = 0.99;
  double shrink = 0.5;
  std::optional<double> c1;  // default 100 * gamma
  std::optional<double> c2;  // default 1 / gamma
  std::size_t j_max = 60;
};

double step_size(const StepSizePolicy& policy, double lipschitz, std::size_t tau, bool g_convex);

struct LineSearchParams {
  double shrink = 0.5;
  double c1 = 0.0;
  double c2 = 0.0;
  std::size_t j_max = 60;
  double gamma = 0.0;  // fallback step
};

// Fills in defaults and checks c2 >= (2 tau + 1) L / c (nonconvex g) or
// (2 tau + 1) L / (2c) (convex g), up to a relative 1e-12.
LineSearchParams resolve_line_search(const StepSizePolicy& policy, double lipschitz,
                                     std::size_t tau, bool g_convex);

struct StepResult {
  Vector x_next;
  Vector direction;        // v^k actually used (noise included)
  Vector exact_direction;  // v^k before noise
  double sigma = 0.0;
  double step = 0.0;
  std::optional<std::size_t> line_search_j;
  bool fallback = false;
  // Accepted line-search step: the tested inequality, as evaluated.
  double accept_lhs = 0.0;
  double accept_rhs = 0.0;
  std::size_t refreshed = 0;
  std::size_t max_age = 0;
};

// x^{k+1} = prox_{gamma g}(x^k - gamma v^k).
StepResult piag_step(const CompositeProblem& problem, AggregatedGradient& oracle,
                     std::span<const double> x_k, double gamma);

// One aggregation, then backtracking over j = 0..j_max on the trial point
// y = prox_{s g}(x - s v), s = c1 shrink^j, accepting the first j with
//   <v, y - x> + g(y) - g(x) <= -(c2 / 2) ||y - x||^2.
// The step is s if accepted and s >= gamma, else gamma.
StepResult line_search_step(const CompositeProblem& problem, AggregatedGradient& oracle,
                            std::span<const double> x_k, const LineSearchParams& params);

struct SolverConfig {
  AggregationConfig aggregation;
  NoiseSchedule noise;
  StepSizePolicy policy;
  std::size_t budget = 1000;
  double tol = 1e-10;            // residual stop; 0 disables
  double stagnation_tol = 0.0;   // |F_{k+1} - F_k| <= tol (1 + |F_k|); 0 disables
  Vector x0;                     // empty means zeros
  std::optional<Vector> reference_point;
};

enum class Termination { budget, residual_below, objective_stagnation };

std::string_view to_string(Termination t);

/// Row k of a run: the state at x^k and the step k-1 -> k that produced it.
struct IterateRecord {
  std::size_t k = 0;
  double objective = 0.0;
  std::optional<double> delta_norm;  // ||x^k - x^{k-1}||
  std::optional<double> sigma;       // ||e^{k-1}||
  std::optional<double> step;        // step size used for x^k
  std::optional<double> residual;    // ||r^k||, r^k in dF(x^k)
  std::optional<std::size_t> line_search_j;
  bool fallback = false;
  bool acceptance_ok = true;
  std::size_t refreshed = 0;
  std::size_t max_age = 0;
  std::optional<double> distance_to_reference;
};

struct RunResult {
  Vector x;
  std::vector<IterateRecord> trace;
  Termination termination = Termination::budget;

  std::size_t tau = 0;
  double gamma = 0.0;
  double lipschitz = 0.0;
  bool g_convex = true;
  bool f_convex = true;
  StepSizePolicy policy;
  std::optional<LineSearchParams> line_search;
  NoiseSchedule noise;
  Scheme scheme = Scheme::iag;

  std::size_t iterations() const noexcept { return trace.empty() ? 0 : trace.size() - 1; }
};

// Throws std::invalid_argument describing every configuration problem found.
void validate_config(const CompositeProblem& problem, const SolverConfig& config);

RunResult run(const CompositeProblem& problem, const SolverConfig& config);

}  // namespace piag

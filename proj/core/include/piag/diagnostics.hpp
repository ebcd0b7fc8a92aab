#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "piag/aggregation.hpp"
#include "piag/linalg.hpp"
#include "piag/problem.hpp"
#include "piag/solver.hpp"

namespace piag {

// ---------------------------------------------------------------------------
// Constants

enum class Regime { convex, nonconvex };

std::string_view to_string(Regime regime);

/// Constants of the delayed descent analysis for a fixed step gamma.
///
/// The nonconvex-regularizer analysis is the convex one evaluated at the
/// effective step 2 gamma, so every field below uses `effective_step`.
///   S       = 1 + (1/tau)(1/(gamma_e L) - 1/2)
///   epsilon = root >= 1 of eps + 1/eps = S
///   delta_basic = 1/2 (1/gamma_e - L/2 - tau L)
///   delta_rate   = 1/(4 tau) (1/gamma_e - L/2 - tau L)
///   kappa        = L/(2 epsilon) + delta_rate
/// With tau = 0 there are no delay sums: epsilon, delta_rate and kappa are empty.
struct LyapunovConstants {
  double gamma = 0.0;
  double lipschitz = 0.0;
  std::size_t tau = 0;
  Regime regime = Regime::convex;
  double effective_step = 0.0;

  double rhs = 0.0;
  std::optional<double> epsilon;
  std::optional<double> epsilon_other;
  bool larger_root = true;

  double delta_basic = 0.0;
  std::optional<double> delta_rate;
  std::optional<double> kappa;

  // 1/4 (1/gamma_e - L/2 - tau L): guaranteed per-step decrease of xi per ||Delta||^2.
  double descent_coefficient = 0.0;
};

// Throws std::invalid_argument unless gamma_e < 2 / ((2 tau + 1) L).
LyapunovConstants solve_constants(double gamma, double lipschitz, std::size_t tau,
                                  Regime regime = Regime::convex);

/// Constants for line-search runs with parameter c:
///   eps + 1/eps = 1 + (1/tau)((2 tau + 1)/(2c) - 1/2)
///   descent     = (1 - c)/(4c) (L + 2 tau L)
///   kappa       = L/(2 eps) + (1 - c)/(8 c tau) (L + 2 tau L)
struct LineSearchConstants {
  double c = 0.0;
  double lipschitz = 0.0;
  std::size_t tau = 0;
  double rhs = 0.0;
  std::optional<double> epsilon;
  double descent_coefficient = 0.0;
  std::optional<double> kappa;
};

LineSearchConstants solve_line_search_constants(double c, double lipschitz, std::size_t tau);

// ---------------------------------------------------------------------------
// Lyapunov values. `window` holds ||Delta^d|| for d = k - tau .. k - 1, oldest
// first; a shorter window is aligned to the newest end (missing steps are 0).

// F - F* + (L/2eps) sum_j (j+1) w_j^2 + tail / (2 delta_basic)
double lyapunov_basic(double objective, double f_star, std::span<const double> window,
                      const LyapunovConstants& constants, double noise_tail_squared);

/// Auxiliary sequence phi_k bounding the noise in the rate analysis:
/// phi_k = scale * zeta^k (or identically zero).
struct PhiSchedule {
  double scale = 0.0;
  double zeta = 0.5;

  static PhiSchedule zero() { return {}; }
  static PhiSchedule geometric(double scale, double zeta);

  bool is_zero() const noexcept { return scale == 0.0; }
  double value(std::size_t k) const;
  double tail_squared(std::size_t k) const;
  // D with sum_{i >= k} phi_i^2 <= D phi_k^2; 0 for the zero schedule.
  double domination_constant() const;
};

// Requires sigma_k / sqrt(2) <= phi_k for every k. Throws std::invalid_argument.
void validate_phi(const PhiSchedule& phi, const NoiseSchedule& noise);

// Smallest geometric phi dominating the noise; throws for power-law noise.
PhiSchedule canonical_phi(const NoiseSchedule& noise);

// F - F* + kappa sum_j (j+1) w_j^2 + lambda_k,
// lambda_k = tail / (2 delta_rate) + phi tail. Needs tau >= 1.
double lyapunov_kappa(double objective, double f_star, std::span<const double> window,
                      const LyapunovConstants& constants, double noise_tail_squared,
                      double phi_tail_squared);

struct LineSearchLyapunov {
  double xi = 0.0;
  double kappa_value = 0.0;
};

LineSearchLyapunov lyapunov_linesearch(double objective, double f_star,
                                       std::span<const double> window,
                                       const LineSearchConstants& constants);

// ---------------------------------------------------------------------------
// Residual

// r = (x_k - x_k1)/step + grad f(x_k1) - v_k, an element of dF(x_k1).
Vector residual(std::span<const double> x_k, std::span<const double> x_k1,
                std::span<const double> v_k, double step, std::span<const double> grad_at_x_k1);
Vector residual(std::span<const double> x_k, std::span<const double> x_k1,
                std::span<const double> v_k, double step, const CompositeProblem& problem);

// ||Delta^k||/step + L sum_{d=k-tau}^{k} ||Delta^d|| + sigma_k; `recent` holds
// ||Delta^d|| for d = k - tau .. k (any order).
double residual_bound(double delta_k, std::span<const double> recent, double lipschitz,
                      double step, double sigma_k);

// ---------------------------------------------------------------------------
// Rates

struct LinearFit {
  double omega = 0.0;
  double r_squared = 0.0;
  std::size_t first_k = 0;
  std::size_t last_k = 0;
  std::size_t points = 0;
};

struct RateReport {
  double f_star = 0.0;
  // max over the last half of k (F_k - F*), and the least-squares slope of
  // that statistic against k.
  double sublinear_statistic = 0.0;
  double sublinear_slope = 0.0;
  std::size_t tail_start = 0;
  std::optional<LinearFit> linear;
};

// objective[k] = F(x^k). The linear fit uses the contiguous stretch that
// starts at the first k with gap <= window_hi and stops before the first
// later k with gap < window_lo. Throws InconsistentReferenceError when some
// F(x^k) < F* - 1e-12 (1 + |F*|).
RateReport fit_rates(std::span<const double> objective, double f_star, double window_lo = 1e-12,
                     double window_hi = 1e-2);

// ---------------------------------------------------------------------------
// Reference minimum

struct ReferenceOptions {
  std::size_t max_iterations = 1000000;
  double tol = 1e-13;
  Vector x0;  // empty means zeros
  bool use_cache = true;
};

struct ReferenceSolution {
  Vector x;
  double f_star = 0.0;  // F(x) at the returned point
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Proximal gradient with step 1/L (convex g) or 1/(2L) (nonconvex g) until
// the residual drops below tol, the iterate stops moving, or max_iterations.
// Results are cached per problem fingerprint and options.
ReferenceSolution reference_minimum(const CompositeProblem& problem,
                                    const ReferenceOptions& options = {});

// Structural hash of a problem: sizes, constants, regularizer and the values
// of F and grad f at fixed probe points.
std::uint64_t problem_fingerprint(const CompositeProblem& problem);

void clear_reference_cache();

// ---------------------------------------------------------------------------
// Per-run evaluation

enum class LyapunovRule { none, basic, nonconvex, line_search };

std::string_view to_string(LyapunovRule rule);

struct CheckCount {
  std::size_t checked = 0;
  std::size_t violations = 0;
  // Largest shortfall divided by the tolerance scale (0 when none).
  double worst = 0.0;
};

struct DiagnosticOptions {
  std::optional<double> f_star;
  std::optional<PhiSchedule> phi;
  double tolerance = 1e-9;
};

struct DiagnosticReport {
  LyapunovRule rule = LyapunovRule::none;
  std::optional<LyapunovConstants> constants;
  std::optional<LineSearchConstants> line_search_constants;
  std::optional<PhiSchedule> phi;
  bool f_star_known = false;

  // Per trace row; empty entries where the value is undefined.
  std::vector<std::optional<double>> xi;
  std::vector<std::optional<double>> kappa_value;

  CheckCount lyapunov;       // xi descent (rule above)
  CheckCount kappa_descent;  // F_k - F_{k+1} >= min(delta_rate/2, 1)(sum Delta^2 + phi_k^2)
  CheckCount chain;          // F_{k+1}^2 <= alpha (F_k - F_{k+1}) (...)
  CheckCount residual;       // residual bound
  CheckCount acceptance;     // accepted line-search steps
  std::size_t fallback_steps = 0;
};

// Recomputes every diagnostic from the trace. Without F* the Lyapunov values
// are shifted by F* (descent checks are unaffected) and the chain check is
// skipped.
DiagnosticReport evaluate(const RunResult& run, const DiagnosticOptions& options = {});

}  // namespace piag

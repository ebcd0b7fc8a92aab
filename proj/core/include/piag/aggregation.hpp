#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "piag/linalg.hpp"
#include "piag/problem.hpp"

namespace piag {

// ---------------------------------------------------------------------------
// Noise e^k injected into the aggregated gradient.

enum class NoiseKind { none, geometric, power };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

/// Deterministic perturbation schedule. ||e^k|| = C zeta^k (geometric) or
/// C k^-eta with ||e^0|| = C (power); the direction is a unit vector drawn
/// from a generator seeded by (seed, k).
struct NoiseSchedule {
  NoiseKind kind = NoiseKind::none;
  double scale = 0.0;
  double zeta = 0.5;
  double eta = 1.5;
  std::uint64_t seed = 0;

  static NoiseSchedule none() { return {}; }
  static NoiseSchedule geometric(double scale, double zeta, std::uint64_t seed = 0);
  static NoiseSchedule power(double scale, double eta, std::uint64_t seed = 0);

  void validate() const;
  bool active() const noexcept { return kind != NoiseKind::none && scale != 0.0; }

  // sigma_k = ||e^k||
  double sigma(std::size_t k) const;
  // sum_{i >= k} sigma_i^2
  double tail_squared(std::size_t k) const;
};

// e^k written into `out` (length n).
void noise_vector(const NoiseSchedule& schedule, std::size_t k, std::span<double> out);

struct NoisyVector {
  Vector value;
  double sigma = 0.0;
};

// (v + e^k, ||e^k||)
NoisyVector apply_noise(std::span<const double> v, const NoiseSchedule& schedule, std::size_t k);

// sum_{i >= k} i^-s for s > 1 and k >= 1 (Hurwitz zeta).
double hurwitz_zeta(double s, double k);

// ---------------------------------------------------------------------------
// Gradient table.

/// Stored gradients w_i = grad f_i(x^{k - tau_{i,k}}) and their ages, with an
/// incrementally maintained sum. The sum is recomputed exactly (ascending
/// index order) whenever every component was refreshed in a step and at least
/// once every m steps.
class GradientTable {
 public:
  // w_i = grad f_i(x0), ages 0, snapshot (x0, sum_i w_i).
  static GradientTable warm_start(const CompositeProblem& problem, std::span<const double> x0);

  std::size_t size() const noexcept { return last_.size(); }
  std::size_t dimension() const noexcept { return n_; }
  bool warm() const noexcept { return !last_.empty(); }

  std::span<const double> stored(std::size_t i) const { return {stored_.data() + i * n_, n_}; }
  std::span<const double> aggregate() const noexcept { return aggregate_; }

  // Index of the step being processed; 0 right after warm start.
  std::size_t step() const noexcept { return step_; }
  std::size_t age(std::size_t i) const { return step_ - last_[i]; }
  std::size_t max_age() const noexcept;
  std::span<const std::size_t> last_refresh() const noexcept { return last_; }

  bool has_snapshot() const noexcept { return !snapshot_x_.empty(); }
  std::span<const double> snapshot_point() const noexcept { return snapshot_x_; }
  std::span<const double> snapshot_gradient() const noexcept { return snapshot_sum_; }
  std::span<const double> snapshot_component(std::size_t i) const {
    return {snapshot_parts_.data() + i * n_, n_};
  }
  std::size_t snapshot_step() const noexcept { return snapshot_step_; }

  // Number of exact recomputations performed so far.
  std::size_t recompute_count() const noexcept { return recomputes_; }

  // Opens step k: the first call after warm start opens step 0.
  std::size_t begin_step();
  // w_i <- gradient, age_i <- 0, aggregate += gradient - old w_i.
  void commit(std::size_t i, std::span<const double> gradient);
  // Closes the step; performs the periodic exact recomputation.
  void end_step(bool all_refreshed);
  void recompute_aggregate();

  // Snapshot for variance-reduced directions.
  void refresh_snapshot(const CompositeProblem& problem, std::span<const double> x);
  // Marks every component as last evaluated at the snapshot step.
  void reset_ages_to_snapshot() noexcept;
  void mark_refreshed(std::size_t i) { last_[i] = step_; }

  // Iterate at which component i was last refreshed (lazy-trigger bookkeeping).
  std::span<const double> anchor(std::size_t i) const { return {anchors_.data() + i * n_, n_}; }
  void set_anchor(std::size_t i, std::span<const double> x);
  bool has_anchors() const noexcept { return !anchors_.empty(); }
  void enable_anchors(std::span<const double> x0);

 private:
  std::size_t n_ = 0;
  std::vector<double> stored_;
  std::vector<std::size_t> last_;
  Vector aggregate_;
  std::size_t step_ = 0;
  bool started_ = false;
  std::size_t steps_since_recompute_ = 0;
  std::size_t recomputes_ = 0;

  Vector snapshot_x_;
  Vector snapshot_sum_;
  std::vector<double> snapshot_parts_;
  std::size_t snapshot_step_ = 0;

  std::vector<double> anchors_;
};

// Scheme I / IAG / deterministic SAG: refresh component i_k at x_k and return
// sum_i w_i.
Vector aggregate_iag(GradientTable& table, const CompositeProblem& problem, std::size_t i_k,
                     std::span<const double> x_k);

// Same for an arbitrary refresh set (cyclic, shuffled, fixed-delay, full).
Vector aggregate_refresh(GradientTable& table, const CompositeProblem& problem,
                         std::span<const std::size_t> indices, std::span<const double> x_k);

// Scheme II / deterministic SVRG: i_k must equal k mod m. Refreshes the
// snapshot at x_k whenever k mod m == 0 and returns
// grad f_{i_k}(x_k) - grad f_{i_k}(x~) + grad f(x~).
Vector aggregate_svrg(GradientTable& table, const CompositeProblem& problem, std::size_t i_k,
                      std::span<const double> x_k);

// ---------------------------------------------------------------------------
// Index selection.

enum class SchedulerKind { full, cyclic, shuffled_cyclic, synthetic_delay };

std::string_view to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(std::string_view name);

/// Chooses the components refreshed at step k. Every index is refreshed at
/// least once in any window of tau_bound() + 1 consecutive steps.
class IndexScheduler {
 public:
  static IndexScheduler full(std::size_t m);
  static IndexScheduler cyclic(std::size_t m);
  static IndexScheduler shuffled_cyclic(std::size_t m, std::uint64_t seed);
  // Component i is refreshed at steps k with (k + i) mod (delay_i + 1) == 0.
  static IndexScheduler synthetic_delay(std::vector<std::size_t> delays, std::size_t tau_bound);

  SchedulerKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return m_; }
  // Delay bound used by the step-size rules. Cyclic reports m (one more than
  // the largest age it produces, matching the usual convention).
  std::size_t tau_bound() const noexcept { return tau_bound_; }

  void select(std::size_t k, std::vector<std::size_t>& out);

 private:
  SchedulerKind kind_ = SchedulerKind::cyclic;
  std::size_t m_ = 0;
  std::size_t tau_bound_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> delays_;
  std::vector<std::size_t> perm_;
  std::size_t perm_sweep_ = static_cast<std::size_t>(-1);
};

/// Lazy aggregation trigger. Component i is refreshed when
/// ||grad f_i(x_k) - w_i|| > threshold_i, when threshold_i == 0, or when its
/// age reached hard_cap. threshold_i is `constant_threshold` if set, else
/// theta * ||x_k - x_last(i)|| * L_i.
struct LagRule {
  double theta = 0.5;
  std::optional<double> constant_threshold;
  std::size_t hard_cap = 1;
};

struct LagSelection {
  std::vector<std::size_t> indices;
  std::vector<double> gradients;  // |indices| x n, row-major
};

// Decides which components to refresh at x_k. Throws if hard_cap > tau_bound.
LagSelection lag_select(const GradientTable& table, const CompositeProblem& problem,
                        std::span<const double> x_k, const LagRule& rule, std::size_t tau_bound);

// Runs lag_select and commits the selection; returns sum_i w_i.
Vector aggregate_lag(GradientTable& table, const CompositeProblem& problem,
                     std::span<const double> x_k, const LagRule& rule, std::size_t tau_bound,
                     std::size_t* refreshed = nullptr);

// ---------------------------------------------------------------------------
// Scheme driver.

enum class Scheme { prox_grad, iag, svrg, lag };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

struct AggregationConfig {
  Scheme scheme = Scheme::iag;
  SchedulerKind scheduler = SchedulerKind::cyclic;
  std::uint64_t seed = 0;
  std::vector<std::size_t> delays;      // synthetic_delay
  std::optional<std::size_t> tau_bound; // synthetic_delay / lag
  LagRule lag;
};

/// Produces v^k (before and after noise) for each step of the configured scheme.
class AggregatedGradient {
 public:
  AggregatedGradient(const CompositeProblem& problem, const AggregationConfig& config,
                     NoiseSchedule noise, std::span<const double> x0);

  // Delay bound tau for the step-size and Lyapunov formulas.
  std::size_t tau() const noexcept { return tau_; }
  const GradientTable& table() const noexcept { return table_; }
  const NoiseSchedule& noise() const noexcept { return noise_; }

  struct Output {
    Vector exact;          // sum_i grad f_i(x^{k - tau_{i,k}})
    Vector noisy;          // exact + e^k
    double sigma = 0.0;    // ||e^k||
    std::size_t refreshed = 0;
    std::size_t max_age = 0;
  };

  // Direction for the next step; steps are numbered from 0.
  const Output& next(std::span<const double> x_k);

 private:
  const CompositeProblem* problem_;
  AggregationConfig config_;
  NoiseSchedule noise_;
  GradientTable table_;
  std::optional<IndexScheduler> scheduler_;
  std::size_t tau_ = 0;
  std::size_t step_ = 0;
  std::vector<std::size_t> selection_;
  Output out_;
};

}  // namespace piag

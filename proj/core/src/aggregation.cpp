#include "piag/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace piag {

// ---------------------------------------------------------------------------
// Noise

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::geometric: return "geometric";
    case NoiseKind::power: return "power";
  }
  return "none";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  if (name == "none") return NoiseKind::none;
  if (name == "geometric") return NoiseKind::geometric;
  if (name == "power") return NoiseKind::power;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

NoiseSchedule NoiseSchedule::geometric(double scale, double zeta, std::uint64_t seed) {
  NoiseSchedule s;
  s.kind = NoiseKind::geometric;
  s.scale = scale;
  s.zeta = zeta;
  s.seed = seed;
  s.validate();
  return s;
}

NoiseSchedule NoiseSchedule::power(double scale, double eta, std::uint64_t seed) {
  NoiseSchedule s;
  s.kind = NoiseKind::power;
  s.scale = scale;
  s.eta = eta;
  s.seed = seed;
  s.validate();
  return s;
}

void NoiseSchedule::validate() const {
  if (kind == NoiseKind::none) return;
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw std::invalid_argument("noise scale must be >= 0");
  if (kind == NoiseKind::geometric && !(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("geometric noise needs 0 < zeta < 1");
  }
  if (kind == NoiseKind::power && !(eta > 1.0) ) {
    throw std::invalid_argument("power noise needs eta > 1");
  }
}

double NoiseSchedule::sigma(std::size_t k) const {
  switch (kind) {
    case NoiseKind::none: return 0.0;
    case NoiseKind::geometric: return scale * std::pow(zeta, static_cast<double>(k));
    case NoiseKind::power:
      return k == 0 ? scale : scale * std::pow(static_cast<double>(k), -eta);
  }
  return 0.0;
}

double hurwitz_zeta(double s, double k) {
  if (!(s > 1.0)) throw std::invalid_argument("hurwitz_zeta needs s > 1");
  if (!(k >= 1.0)) throw std::invalid_argument("hurwitz_zeta needs k >= 1");
  // Direct terms up to a >= 32, then Euler-Maclaurin with four Bernoulli corrections.
  double head = 0.0;
  double a = k;
  while (a < 32.0) {
    head += std::pow(a, -s);
    a += 1.0;
  }
  const double fa = std::pow(a, -s);
  const double inv = 1.0 / a;
  const double inv2 = inv * inv;
  double tail = a * fa / (s - 1.0) + 0.5 * fa;
  double coeff = s * inv * fa;  // -f'(a)
  tail += coeff / 12.0;
  coeff *= (s + 1.0) * (s + 2.0) * inv2;
  tail -= coeff / 720.0;
  coeff *= (s + 3.0) * (s + 4.0) * inv2;
  tail += coeff / 30240.0;
  coeff *= (s + 5.0) * (s + 6.0) * inv2;
  tail -= coeff / 1209600.0;
  return head + tail;
}

double NoiseSchedule::tail_squared(std::size_t k) const {
  const double c2 = scale * scale;
  switch (kind) {
    case NoiseKind::none: return 0.0;
    case NoiseKind::geometric:
      return c2 * std::pow(zeta, 2.0 * static_cast<double>(k)) / (1.0 - zeta * zeta);
    case NoiseKind::power: {
      const double rest = hurwitz_zeta(2.0 * eta, static_cast<double>(std::max<std::size_t>(k, 1)));
      return k == 0 ? c2 + c2 * rest : c2 * rest;
    }
  }
  return 0.0;
}

void noise_vector(const NoiseSchedule& schedule, std::size_t k, std::span<double> out) {
  const double sigma = schedule.sigma(k);
  if (sigma == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const auto s = schedule.seed;
  const auto kk = static_cast<std::uint64_t>(k);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(kk), static_cast<std::uint32_t>(kk >> 32)};
  std::mt19937_64 gen(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  double nrm2 = 0.0;
  do {
    nrm2 = 0.0;
    for (double& v : out) {
      v = normal(gen);
      nrm2 += v * v;
    }
  } while (nrm2 == 0.0);
  const double scale = sigma / std::sqrt(nrm2);
  for (double& v : out) v *= scale;
}

NoisyVector apply_noise(std::span<const double> v, const NoiseSchedule& schedule, std::size_t k) {
  NoisyVector r;
  r.value.assign(v.begin(), v.end());
  if (!schedule.active()) return r;
  Vector e(v.size());
  noise_vector(schedule, k, e);
  for (std::size_t j = 0; j < v.size(); ++j) r.value[j] += e[j];
  r.sigma = schedule.sigma(k);
  return r;
}

// ---------------------------------------------------------------------------
// Gradient table

GradientTable GradientTable::warm_start(const CompositeProblem& problem,
                                        std::span<const double> x0) {
  require_dimension(x0, problem.dimension(), "warm_start");
  GradientTable t;
  const std::size_t m = problem.size();
  const std::size_t n = problem.dimension();
  t.n_ = n;
  t.stored_.assign(m * n, 0.0);
  t.last_.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    problem.component(i).gradient(x0, {t.stored_.data() + i * n, n});
  }
  t.aggregate_.assign(n, 0.0);
  t.recompute_aggregate();
  t.recomputes_ = 0;
  t.snapshot_x_.assign(x0.begin(), x0.end());
  t.snapshot_sum_ = t.aggregate_;
  t.snapshot_parts_ = t.stored_;
  t.snapshot_step_ = 0;
  return t;
}

std::size_t GradientTable::max_age() const noexcept {
  std::size_t a = 0;
  for (std::size_t l : last_) a = std::max(a, step_ - l);
  return a;
}

std::size_t GradientTable::begin_step() {
  if (!warm()) throw std::logic_error("gradient table used before warm_start");
  if (started_) {
    ++step_;
  } else {
    started_ = true;
  }
  return step_;
}

void GradientTable::commit(std::size_t i, std::span<const double> gradient) {
  double* w = stored_.data() + i * n_;
  for (std::size_t j = 0; j < n_; ++j) {
    aggregate_[j] += gradient[j] - w[j];
    w[j] = gradient[j];
  }
  last_[i] = step_;
}

void GradientTable::end_step(bool all_refreshed) {
  ++steps_since_recompute_;
  if (all_refreshed || steps_since_recompute_ >= size()) recompute_aggregate();
}

void GradientTable::recompute_aggregate() {
  std::fill(aggregate_.begin(), aggregate_.end(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const double* w = stored_.data() + i * n_;
    for (std::size_t j = 0; j < n_; ++j) aggregate_[j] += w[j];
  }
  steps_since_recompute_ = 0;
  ++recomputes_;
}

void GradientTable::refresh_snapshot(const CompositeProblem& problem, std::span<const double> x) {
  snapshot_x_.assign(x.begin(), x.end());
  std::fill(snapshot_sum_.begin(), snapshot_sum_.end(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    std::span<double> part{snapshot_parts_.data() + i * n_, n_};
    problem.component(i).gradient(x, part);
    for (std::size_t j = 0; j < n_; ++j) snapshot_sum_[j] += part[j];
  }
  snapshot_step_ = step_;
}

void GradientTable::reset_ages_to_snapshot() noexcept {
  std::fill(last_.begin(), last_.end(), snapshot_step_);
}

void GradientTable::enable_anchors(std::span<const double> x0) {
  anchors_.resize(size() * n_);
  for (std::size_t i = 0; i < size(); ++i) std::copy(x0.begin(), x0.end(), anchors_.begin() + i * n_);
}

void GradientTable::set_anchor(std::size_t i, std::span<const double> x) {
  std::copy(x.begin(), x.end(), anchors_.begin() + i * n_);
}

Vector aggregate_refresh(GradientTable& table, const CompositeProblem& problem,
                         std::span<const std::size_t> indices, std::span<const double> x_k) {
  require_dimension(x_k, problem.dimension(), "aggregate");
  table.begin_step();
  Vector fresh(problem.dimension());
  for (std::size_t i : indices) {
    if (i >= problem.size()) throw std::invalid_argument("component index out of range");
    problem.component(i).gradient(x_k, fresh);
    table.commit(i, fresh);
  }
  table.end_step(indices.size() == problem.size());
  const auto agg = table.aggregate();
  return Vector(agg.begin(), agg.end());
}

Vector aggregate_iag(GradientTable& table, const CompositeProblem& problem, std::size_t i_k,
                     std::span<const double> x_k) {
  const std::size_t idx[1] = {i_k};
  return aggregate_refresh(table, problem, idx, x_k);
}

Vector aggregate_svrg(GradientTable& table, const CompositeProblem& problem, std::size_t i_k,
                      std::span<const double> x_k) {
  require_dimension(x_k, problem.dimension(), "aggregate_svrg");
  if (!table.has_snapshot()) throw std::logic_error("svrg direction needs a snapshot");
  const std::size_t m = problem.size();
  const std::size_t k = table.begin_step();
  if (i_k != k % m) {
    throw std::invalid_argument("svrg index must equal k mod m (k = " + std::to_string(k) + ")");
  }
  if (k % m == 0) table.refresh_snapshot(problem, x_k);
  table.reset_ages_to_snapshot();
  table.mark_refreshed(i_k);

  const std::size_t n = problem.dimension();
  Vector v(n);
  problem.component(i_k).gradient(x_k, v);
  const auto snap_i = table.snapshot_component(i_k);
  const auto full = table.snapshot_gradient();
  for (std::size_t j = 0; j < n; ++j) v[j] = v[j] - snap_i[j] + full[j];
  return v;
}

// ---------------------------------------------------------------------------
// Schedulers

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::full: return "full";
    case SchedulerKind::cyclic: return "cyclic";
    case SchedulerKind::shuffled_cyclic: return "shuffled_cyclic";
    case SchedulerKind::synthetic_delay: return "synthetic_delay";
  }
  return "cyclic";
}

SchedulerKind scheduler_kind_from_string(std::string_view name) {
  if (name == "full") return SchedulerKind::full;
  if (name == "cyclic") return SchedulerKind::cyclic;
  if (name == "shuffled_cyclic") return SchedulerKind::shuffled_cyclic;
  if (name == "synthetic_delay") return SchedulerKind::synthetic_delay;
  throw std::invalid_argument("unknown scheduler '" + std::string(name) + "'");
}

IndexScheduler IndexScheduler::full(std::size_t m) {
  if (m == 0) throw std::invalid_argument("scheduler needs m >= 1");
  IndexScheduler s;
  s.kind_ = SchedulerKind::full;
  s.m_ = m;
  s.tau_bound_ = 0;
  return s;
}

IndexScheduler IndexScheduler::cyclic(std::size_t m) {
  if (m == 0) throw std::invalid_argument("scheduler needs m >= 1");
  IndexScheduler s;
  s.kind_ = SchedulerKind::cyclic;
  s.m_ = m;
  s.tau_bound_ = m;
  return s;
}

IndexScheduler IndexScheduler::shuffled_cyclic(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("scheduler needs m >= 1");
  IndexScheduler s;
  s.kind_ = SchedulerKind::shuffled_cyclic;
  s.m_ = m;
  s.tau_bound_ = 2 * m - 1;
  s.seed_ = seed;
  return s;
}

IndexScheduler IndexScheduler::synthetic_delay(std::vector<std::size_t> delays,
                                               std::size_t tau_bound) {
  if (delays.empty()) throw std::invalid_argument("scheduler needs m >= 1");
  for (std::size_t d : delays) {
    if (d > tau_bound) {
      throw std::invalid_argument("synthetic delay " + std::to_string(d) + " exceeds tau_bound " +
                                  std::to_string(tau_bound));
    }
  }
  IndexScheduler s;
  s.kind_ = SchedulerKind::synthetic_delay;
  s.m_ = delays.size();
  s.tau_bound_ = tau_bound;
  s.delays_ = std::move(delays);
  return s;
}

void IndexScheduler::select(std::size_t k, std::vector<std::size_t>& out) {
  out.clear();
  switch (kind_) {
    case SchedulerKind::full:
      out.resize(m_);
      std::iota(out.begin(), out.end(), std::size_t{0});
      return;
    case SchedulerKind::cyclic:
      out.push_back(k % m_);
      return;
    case SchedulerKind::shuffled_cyclic: {
      const std::size_t sweep = k / m_;
      if (sweep != perm_sweep_) {
        perm_.resize(m_);
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                          static_cast<std::uint32_t>(sweep),
                          static_cast<std::uint32_t>(static_cast<std::uint64_t>(sweep) >> 32)};
        std::mt19937_64 gen(seq);
        // Fisher-Yates with a fixed reduction so the order is library independent.
        for (std::size_t i = m_; i > 1; --i) {
          const std::size_t j = static_cast<std::size_t>(gen() % i);
          std::swap(perm_[i - 1], perm_[j]);
        }
        perm_sweep_ = sweep;
      }
      out.push_back(perm_[k % m_]);
      return;
    }
    case SchedulerKind::synthetic_delay:
      for (std::size_t i = 0; i < m_; ++i) {
        if ((k + i) % (delays_[i] + 1) == 0) out.push_back(i);
      }
      return;
  }
}

// ---------------------------------------------------------------------------
// Lazy trigger

LagSelection lag_select(const GradientTable& table, const CompositeProblem& problem,
                        std::span<const double> x_k, const LagRule& rule, std::size_t tau_bound) {
  if (!table.warm()) throw std::logic_error("lag_select needs a warm-started table");
  if (rule.hard_cap == 0) throw std::invalid_argument("lag hard_cap must be >= 1");
  if (rule.hard_cap > tau_bound) {
    throw std::invalid_argument("lag hard_cap " + std::to_string(rule.hard_cap) +
                                " exceeds tau_bound " + std::to_string(tau_bound));
  }
  if (!rule.constant_threshold && !table.has_anchors()) {
    throw std::logic_error("lag rule needs refresh anchors on the table");
  }
  require_dimension(x_k, problem.dimension(), "lag_select");
  const std::size_t n = problem.dimension();
  LagSelection sel;
  Vector g(n);
  // Ages are relative to the step currently open in the table.
  for (std::size_t i = 0; i < problem.size(); ++i) {
    problem.component(i).gradient(x_k, g);
    const double change = distance(g, table.stored(i));
    const double threshold =
        rule.constant_threshold
            ? *rule.constant_threshold
            : rule.theta * distance(x_k, table.anchor(i)) * problem.lipschitz(i);
    if (change > threshold || threshold == 0.0 || table.age(i) >= rule.hard_cap) {
      sel.indices.push_back(i);
      sel.gradients.insert(sel.gradients.end(), g.begin(), g.end());
    }
  }
  return sel;
}

Vector aggregate_lag(GradientTable& table, const CompositeProblem& problem,
                     std::span<const double> x_k, const LagRule& rule, std::size_t tau_bound,
                     std::size_t* refreshed) {
  table.begin_step();
  const LagSelection sel = lag_select(table, problem, x_k, rule, tau_bound);
  const std::size_t n = problem.dimension();
  for (std::size_t p = 0; p < sel.indices.size(); ++p) {
    table.commit(sel.indices[p], {sel.gradients.data() + p * n, n});
    if (table.has_anchors()) table.set_anchor(sel.indices[p], x_k);
  }
  table.end_step(sel.indices.size() == problem.size());
  if (refreshed) *refreshed = sel.indices.size();
  const auto agg = table.aggregate();
  return Vector(agg.begin(), agg.end());
}

// ---------------------------------------------------------------------------
// Scheme driver

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::prox_grad: return "prox_grad";
    case Scheme::iag: return "iag";
    case Scheme::svrg: return "svrg";
    case Scheme::lag: return "lag";
  }
  return "iag";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "prox_grad") return Scheme::prox_grad;
  if (name == "iag") return Scheme::iag;
  if (name == "svrg") return Scheme::svrg;
  if (name == "lag") return Scheme::lag;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

AggregatedGradient::AggregatedGradient(const CompositeProblem& problem,
                                       const AggregationConfig& config, NoiseSchedule noise,
                                       std::span<const double> x0)
    : problem_(&problem),
      config_(config),
      noise_(noise),
      table_(GradientTable::warm_start(problem, x0)) {
  noise_.validate();
  const std::size_t m = problem.size();
  switch (config_.scheme) {
    case Scheme::prox_grad:
      scheduler_ = IndexScheduler::full(m);
      break;
    case Scheme::iag:
      switch (config_.scheduler) {
        case SchedulerKind::full: scheduler_ = IndexScheduler::full(m); break;
        case SchedulerKind::cyclic: scheduler_ = IndexScheduler::cyclic(m); break;
        case SchedulerKind::shuffled_cyclic:
          scheduler_ = IndexScheduler::shuffled_cyclic(m, config_.seed);
          break;
        case SchedulerKind::synthetic_delay: {
          if (config_.delays.size() != m) {
            throw std::invalid_argument("synthetic_delay needs one delay per component");
          }
          const std::size_t largest = *std::max_element(config_.delays.begin(), config_.delays.end());
          scheduler_ = IndexScheduler::synthetic_delay(config_.delays,
                                                       config_.tau_bound.value_or(largest));
          break;
        }
      }
      break;
    case Scheme::svrg:
      break;
    case Scheme::lag:
      if (!config_.lag.constant_threshold) table_.enable_anchors(x0);
      break;
  }
  if (scheduler_) {
    tau_ = scheduler_->tau_bound();
  } else if (config_.scheme == Scheme::svrg) {
    tau_ = m;
  } else {
    tau_ = config_.tau_bound.value_or(config_.lag.hard_cap);
    if (config_.lag.hard_cap > tau_) {
      throw std::invalid_argument("lag hard_cap exceeds tau_bound");
    }
  }
}

const AggregatedGradient::Output& AggregatedGradient::next(std::span<const double> x_k) {
  const CompositeProblem& problem = *problem_;
  const std::size_t k = step_;
  switch (config_.scheme) {
    case Scheme::prox_grad:
    case Scheme::iag:
      scheduler_->select(k, selection_);
      out_.exact = aggregate_refresh(table_, problem, selection_, x_k);
      out_.refreshed = selection_.size();
      break;
    case Scheme::svrg:
      out_.exact = aggregate_svrg(table_, problem, k % problem.size(), x_k);
      out_.refreshed = 1;
      break;
    case Scheme::lag:
      out_.exact = aggregate_lag(table_, problem, x_k, config_.lag, tau_, &out_.refreshed);
      break;
  }
  out_.max_age = table_.max_age();
  if (out_.max_age > tau_) {
    throw std::logic_error("delay bound violated: age " + std::to_string(out_.max_age) +
                           " > tau " + std::to_string(tau_));
  }
  if (noise_.active()) {
    NoisyVector nv = apply_noise(out_.exact, noise_, k);
    out_.noisy = std::move(nv.value);
    out_.sigma = nv.sigma;
  } else {
    out_.noisy = out_.exact;
    out_.sigma = 0.0;
  }
  ++step_;
  return out_;
}

}  // namespace piag

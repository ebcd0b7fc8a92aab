#include "piag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <limits>

#include "piag/errors.hpp"

namespace piag {

std::string_view to_string(Regime regime) {
  return regime == Regime::convex ? "convex" : "nonconvex";
}

std::string_view to_string(LyapunovRule rule) {
  switch (rule) {
    case LyapunovRule::none: return "none";
    case LyapunovRule::basic: return "basic";
    case LyapunovRule::nonconvex: return "nonconvex";
    case LyapunovRule::line_search: return "line_search";
  }
  return "none";
}

namespace {

// Root >= 1 of eps + 1/eps = s (s >= 2); the other root is its reciprocal.
double larger_root(double s) {
  const double disc = std::max(0.0, s * s - 4.0);
  return 0.5 * (s + std::sqrt(disc));
}

double weighted_window(std::span<const double> window, std::size_t tau) {
  if (window.size() > tau) throw std::invalid_argument("Lyapunov window longer than tau");
  // Newest entry carries weight tau.
  const std::size_t offset = tau - window.size();
  double s = 0.0;
  for (std::size_t j = 0; j < window.size(); ++j) {
    s += static_cast<double>(offset + j + 1) * window[j] * window[j];
  }
  return s;
}

}  // namespace

LyapunovConstants solve_constants(double gamma, double lipschitz, std::size_t tau, Regime regime) {
  if (!(gamma > 0.0) || !(lipschitz > 0.0)) {
    throw std::invalid_argument("solve_constants needs gamma > 0 and L > 0");
  }
  LyapunovConstants c;
  c.gamma = gamma;
  c.lipschitz = lipschitz;
  c.tau = tau;
  c.regime = regime;
  c.effective_step = regime == Regime::convex ? gamma : 2.0 * gamma;

  const double t = static_cast<double>(tau);
  const double L = lipschitz;
  const double ge = c.effective_step;
  if (!(ge * (2.0 * t + 1.0) * L < 2.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "step " << ge << " is not below 2/((2 tau + 1) L) = " << 2.0 / ((2.0 * t + 1.0) * L);
    throw std::invalid_argument(os.str());
  }
  const double a = 1.0 / ge - 0.5 * L - t * L;
  c.delta_basic = 0.5 * a;
  c.descent_coefficient = 0.25 * a;
  if (tau == 0) return c;

  c.rhs = 1.0 + (1.0 / t) * (1.0 / (ge * L) - 0.5);
  const double eps = larger_root(c.rhs);
  c.epsilon = eps;
  c.epsilon_other = 1.0 / eps;
  c.larger_root = true;
  c.delta_rate = a / (4.0 * t);
  c.kappa = L / (2.0 * eps) + *c.delta_rate;
  return c;
}

LineSearchConstants solve_line_search_constants(double c, double lipschitz, std::size_t tau) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  if (!(lipschitz > 0.0)) throw std::invalid_argument("L must be positive");
  LineSearchConstants k;
  k.c = c;
  k.lipschitz = lipschitz;
  k.tau = tau;
  const double t = static_cast<double>(tau);
  const double L = lipschitz;
  k.descent_coefficient = (1.0 - c) / (4.0 * c) * (L + 2.0 * t * L);
  if (tau == 0) return k;
  k.rhs = 1.0 + (1.0 / t) * ((2.0 * t + 1.0) / (2.0 * c) - 0.5);
  k.epsilon = larger_root(k.rhs);
  k.kappa = L / (2.0 * *k.epsilon) + (1.0 - c) / (8.0 * c * t) * (L + 2.0 * t * L);
  return k;
}

double lyapunov_basic(double objective, double f_star, std::span<const double> window,
                      const LyapunovConstants& constants, double noise_tail_squared) {
  double xi = objective - f_star;
  if (constants.tau > 0) {
    xi += constants.lipschitz / (2.0 * *constants.epsilon) * weighted_window(window, constants.tau);
  } else if (!window.empty()) {
    throw std::invalid_argument("Lyapunov window must be empty when tau = 0");
  }
  if (noise_tail_squared != 0.0) xi += noise_tail_squared / (2.0 * constants.delta_basic);
  return xi;
}

PhiSchedule PhiSchedule::geometric(double scale, double zeta) {
  if (!(scale >= 0.0)) throw std::invalid_argument("phi scale must be >= 0");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("phi ratio must lie in (0, 1)");
  return PhiSchedule{scale, zeta};
}

double PhiSchedule::value(std::size_t k) const {
  return is_zero() ? 0.0 : scale * std::pow(zeta, static_cast<double>(k));
}

double PhiSchedule::tail_squared(std::size_t k) const {
  if (is_zero()) return 0.0;
  const double v = value(k);
  return v * v * domination_constant();
}

double PhiSchedule::domination_constant() const {
  return is_zero() ? 0.0 : 1.0 / (1.0 - zeta * zeta);
}

void validate_phi(const PhiSchedule& phi, const NoiseSchedule& noise) {
  if (!phi.is_zero() && !(phi.zeta > 0.0 && phi.zeta < 1.0)) {
    throw std::invalid_argument("phi ratio must lie in (0, 1)");
  }
  if (!noise.active()) return;
  if (noise.kind == NoiseKind::power) {
    throw std::invalid_argument(
        "no geometric phi dominates power-law noise (sigma_k / sqrt(2) <= phi_k fails for large k)");
  }
  // geometric noise: need C_phi >= C / sqrt(2) and zeta_phi >= zeta
  const double need = noise.scale / std::sqrt(2.0);
  if (phi.is_zero() || phi.scale < need * (1.0 - 1e-15) || phi.zeta < noise.zeta) {
    throw std::invalid_argument("phi schedule does not dominate sigma_k / sqrt(2)");
  }
}

PhiSchedule canonical_phi(const NoiseSchedule& noise) {
  if (!noise.active()) return PhiSchedule::zero();
  if (noise.kind == NoiseKind::power) {
    throw std::invalid_argument("no geometric phi dominates power-law noise");
  }
  return PhiSchedule::geometric(noise.scale / std::sqrt(2.0), noise.zeta);
}

double lyapunov_kappa(double objective, double f_star, std::span<const double> window,
                      const LyapunovConstants& constants, double noise_tail_squared,
                      double phi_tail_squared) {
  if (constants.tau == 0 || !constants.kappa) {
    throw std::invalid_argument("the kappa Lyapunov function needs tau >= 1");
  }
  double v = objective - f_star + *constants.kappa * weighted_window(window, constants.tau);
  if (noise_tail_squared != 0.0) v += noise_tail_squared / (2.0 * *constants.delta_rate);
  return v + phi_tail_squared;
}

LineSearchLyapunov lyapunov_linesearch(double objective, double f_star,
                                       std::span<const double> window,
                                       const LineSearchConstants& constants) {
  LineSearchLyapunov out;
  out.xi = objective - f_star;
  out.kappa_value = out.xi;
  if (constants.tau == 0) {
    if (!window.empty()) throw std::invalid_argument("Lyapunov window must be empty when tau = 0");
    return out;
  }
  const double w = weighted_window(window, constants.tau);
  out.xi += constants.lipschitz / (2.0 * *constants.epsilon) * w;
  out.kappa_value += *constants.kappa * w;
  return out;
}

// ---------------------------------------------------------------------------

Vector residual(std::span<const double> x_k, std::span<const double> x_k1,
                std::span<const double> v_k, double step, std::span<const double> grad_at_x_k1) {
  const std::size_t n = x_k.size();
  if (x_k1.size() != n || v_k.size() != n || grad_at_x_k1.size() != n) {
    throw std::invalid_argument("residual: dimension mismatch");
  }
  Vector r(n);
  for (std::size_t j = 0; j < n; ++j) {
    r[j] = (x_k[j] - x_k1[j]) / step + grad_at_x_k1[j] - v_k[j];
  }
  return r;
}

Vector residual(std::span<const double> x_k, std::span<const double> x_k1,
                std::span<const double> v_k, double step, const CompositeProblem& problem) {
  return residual(x_k, x_k1, v_k, step, full_gradient(problem, x_k1));
}

double residual_bound(double delta_k, std::span<const double> recent, double lipschitz,
                      double step, double sigma_k) {
  double s = 0.0;
  for (double d : recent) s += d;
  return delta_k / step + lipschitz * s + sigma_k;
}

// ---------------------------------------------------------------------------

RateReport fit_rates(std::span<const double> objective, double f_star, double window_lo,
                     double window_hi) {
  if (objective.empty()) throw std::invalid_argument("fit_rates needs a nonempty trace");
  const double slack = 1e-12 * (1.0 + std::abs(f_star));
  const double lowest = *std::min_element(objective.begin(), objective.end());
  if (lowest < f_star - slack) {
    std::ostringstream os;
    os.precision(17);
    os << "reference minimum " << f_star << " exceeds an observed objective value " << lowest;
    throw InconsistentReferenceError(os.str());
  }

  RateReport rep;
  rep.f_star = f_star;
  const std::size_t K = objective.size() - 1;
  rep.tail_start = K / 2;
  {
    double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
    std::size_t cnt = 0;
    rep.sublinear_statistic = -std::numeric_limits<double>::infinity();
    for (std::size_t k = rep.tail_start; k <= K; ++k) {
      const double y = static_cast<double>(k) * (objective[k] - f_star);
      const double x = static_cast<double>(k);
      rep.sublinear_statistic = std::max(rep.sublinear_statistic, y);
      sk += x;
      sy += y;
      skk += x * x;
      sky += x * y;
      ++cnt;
    }
    const double c = static_cast<double>(cnt);
    const double den = c * skk - sk * sk;
    rep.sublinear_slope = den > 0.0 ? (c * sky - sk * sy) / den : 0.0;
  }

  std::size_t first = objective.size();
  for (std::size_t k = 0; k <= K; ++k) {
    if (objective[k] - f_star <= window_hi) {
      first = k;
      break;
    }
  }
  if (first <= K) {
    std::vector<double> ks, ys;
    std::size_t last = first;
    for (std::size_t k = first; k <= K; ++k) {
      const double gap = objective[k] - f_star;
      if (gap < window_lo) break;
      if (gap > window_hi) continue;
      ks.push_back(static_cast<double>(k));
      ys.push_back(std::log(gap));
      last = k;
    }
    if (ks.size() >= 3) {
      // center first for a stable slope
      const double c = static_cast<double>(ks.size());
      double mk = 0.0, my = 0.0;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        mk += ks[i];
        my += ys[i];
      }
      mk /= c;
      my /= c;
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        const double dx = ks[i] - mk;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
      }
      LinearFit fit;
      const double slope = sxy / sxx;
      fit.omega = std::exp(slope);
      const double ss_res = std::max(0.0, syy - slope * sxy);
      fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
      fit.first_k = first;
      fit.last_k = last;
      fit.points = ks.size();
      rep.linear = fit;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

class Fnv {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) { bytes(&v, sizeof v); }
  void add(std::uint64_t v) { bytes(&v, sizeof v); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

struct CacheKey {
  std::uint64_t problem;
  std::uint64_t options;
  auto operator<=>(const CacheKey&) const = default;
};

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<CacheKey, ReferenceSolution>& cache() {
  static std::map<CacheKey, ReferenceSolution> c;
  return c;
}

}  // namespace

std::uint64_t problem_fingerprint(const CompositeProblem& problem) {
  Fnv h;
  const std::size_t n = problem.dimension();
  h.add(static_cast<std::uint64_t>(n));
  h.add(static_cast<std::uint64_t>(problem.size()));
  for (double l : problem.lipschitz_per_component()) h.add(l);
  const Regularizer& reg = problem.regularizer();
  h.add(static_cast<std::uint64_t>(reg.kind()));
  h.add(reg.weight());
  h.add(reg.radius());
  h.add(reg.theta());
  Vector probe(n);
  Vector g(n);
  for (int p = 0; p < 3; ++p) {
    for (std::size_t j = 0; j < n; ++j) {
      probe[j] = p == 0 ? 0.0 : std::sin(static_cast<double>((j + 1) * (p + 1))) * 0.5 * p;
    }
    for (std::size_t i = 0; i < problem.size(); ++i) {
      h.add(problem.component(i).value(probe));
    }
    problem.full_gradient(probe, g);
    for (double v : g) h.add(v);
  }
  return h.value();
}

void clear_reference_cache() {
  std::lock_guard lock(cache_mutex());
  cache().clear();
}

ReferenceSolution reference_minimum(const CompositeProblem& problem,
                                    const ReferenceOptions& options) {
  const std::size_t n = problem.dimension();
  if (!options.x0.empty()) require_dimension(options.x0, n, "reference x0");

  CacheKey key{};
  if (options.use_cache) {
    Fnv h;
    h.add(static_cast<std::uint64_t>(options.max_iterations));
    h.add(options.tol);
    for (double v : options.x0) h.add(v);
    key = {problem_fingerprint(problem), h.value()};
    std::lock_guard lock(cache_mutex());
    auto it = cache().find(key);
    if (it != cache().end()) return it->second;
  }

  const Regularizer& reg = problem.regularizer();
  const double L = problem.lipschitz_total();
  const double step = reg.convex() ? 1.0 / L : 0.5 / L;
  if (!(step < reg.max_step())) {
    throw std::invalid_argument("reference step violates the MCP bound step < theta");
  }

  ReferenceSolution sol;
  Vector x = options.x0.empty() ? Vector(n, 0.0) : options.x0;
  Vector grad = full_gradient(problem, x);
  Vector next(n);
  Vector grad_next(n);
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  sol.residual = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    for (std::size_t j = 0; j < n; ++j) next[j] = x[j] - step * grad[j];
    reg.prox(next, step, next);
    problem.full_gradient(next, grad_next);
    double r2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double r = (x[j] - next[j]) / step + grad_next[j] - grad[j];
      r2 += r * r;
    }
    const double r = std::sqrt(r2);
    const bool moved = next != x;
    x.swap(next);
    grad.swap(grad_next);
    sol.iterations = it + 1;
    sol.residual = r;
    if (r < options.tol || !moved) {
      sol.converged = true;
      break;
    }
    // Rounding floor: give up once the residual has not improved for a long stretch.
    if (r < best) {
      best = r;
      since_best = 0;
    } else if (++since_best > 20000) {
      break;
    }
  }
  sol.x = std::move(x);
  sol.f_star = full_objective(problem, sol.x);

  if (options.use_cache) {
    std::lock_guard lock(cache_mutex());
    cache().emplace(key, sol);
  }
  return sol;
}

// ---------------------------------------------------------------------------

namespace {

void record(CheckCount& c, double shortfall, double scale) {
  ++c.checked;
  if (shortfall > scale) {
    ++c.violations;
    c.worst = std::max(c.worst, shortfall / scale);
  }
}

}  // namespace

DiagnosticReport evaluate(const RunResult& run, const DiagnosticOptions& options) {
  DiagnosticReport rep;
  const auto& rows = run.trace;
  const std::size_t count = rows.size();
  const std::size_t tau = run.tau;
  const double L = run.lipschitz;
  const double tol = options.tolerance;
  const NoiseSchedule& noise = run.noise;
  rep.f_star_known = options.f_star.has_value();
  const double f_star = options.f_star.value_or(0.0);
  rep.xi.assign(count, std::nullopt);
  rep.kappa_value.assign(count, std::nullopt);
  if (count == 0) return rep;

  // ||Delta^d||; zero before the start
  const auto delta = [&](long long d) -> double {
    if (d < 0 || static_cast<std::size_t>(d + 1) >= count) return 0.0;
    return rows[static_cast<std::size_t>(d + 1)].delta_norm.value_or(0.0);
  };
  std::vector<double> window(tau);
  const auto fill_window = [&](std::size_t k) {
    for (std::size_t j = 0; j < tau; ++j) {
      window[j] = delta(static_cast<long long>(k) - static_cast<long long>(tau) +
                        static_cast<long long>(j));
    }
  };

  const bool line_search = run.policy.mode == StepMode::line_search;
  for (const auto& row : rows) {
    if (row.fallback) ++rep.fallback_steps;
  }

  // Lyapunov rule
  if (!line_search) {
    const Regime regime = run.g_convex ? Regime::convex : Regime::nonconvex;
    rep.constants = solve_constants(run.gamma, L, tau, regime);
    rep.rule = regime == Regime::convex ? LyapunovRule::basic : LyapunovRule::nonconvex;
  } else if (!noise.active() && run.line_search) {
    const double bound = (2.0 * static_cast<double>(tau) + 1.0) * L / run.policy.c;
    if (run.line_search->c2 >= bound * (1.0 - 1e-12)) {
      rep.line_search_constants = solve_line_search_constants(run.policy.c, L, tau);
      rep.rule = LyapunovRule::line_search;
    }
  }

  if (rep.rule == LyapunovRule::basic || rep.rule == LyapunovRule::nonconvex) {
    const LyapunovConstants& c = *rep.constants;
    for (std::size_t k = 0; k < count; ++k) {
      fill_window(k);
      rep.xi[k] = lyapunov_basic(rows[k].objective, f_star, window, c, noise.tail_squared(k));
    }
  } else if (rep.rule == LyapunovRule::line_search) {
    for (std::size_t k = 0; k < count; ++k) {
      fill_window(k);
      rep.xi[k] = lyapunov_linesearch(rows[k].objective, f_star, window, *rep.line_search_constants).xi;
    }
  }
  if (rep.rule != LyapunovRule::none) {
    const double coef = rep.rule == LyapunovRule::line_search
                            ? rep.line_search_constants->descent_coefficient
                            : rep.constants->descent_coefficient;
    for (std::size_t k = 0; k + 1 < count; ++k) {
      const double xk = *rep.xi[k];
      const double d = delta(static_cast<long long>(k));
      record(rep.lyapunov, coef * d * d - (xk - *rep.xi[k + 1]), tol * (1.0 + std::abs(xk)));
    }
  }

  // Rate-analysis function F_k: fixed step, convex g, tau >= 1.
  const bool kappa_ok = !line_search && run.g_convex && tau >= 1;
  if (kappa_ok) {
    std::optional<PhiSchedule> phi = options.phi;
    if (!phi && noise.kind != NoiseKind::power) phi = canonical_phi(noise);
    if (phi) {
      validate_phi(*phi, noise);
      rep.phi = phi;
      const LyapunovConstants& c = *rep.constants;
      for (std::size_t k = 0; k < count; ++k) {
        fill_window(k);
        rep.kappa_value[k] = lyapunov_kappa(rows[k].objective, f_star, window, c,
                                            noise.tail_squared(k), phi->tail_squared(k));
      }
      const double mu = std::min(0.5 * *c.delta_rate, 1.0);
      const double alpha =
          std::max(1.0 / run.gamma + L + *c.kappa * static_cast<double>(tau),
                   2.0 * phi->domination_constant()) / mu;
      const double beta = (static_cast<double>(tau) + 1.0) * (1.0 / run.gamma + L) + 1.0;
      for (std::size_t k = 0; k + 1 < count; ++k) {
        double recent = 0.0;
        for (long long d = static_cast<long long>(k) - static_cast<long long>(tau);
             d <= static_cast<long long>(k); ++d) {
          recent += delta(d) * delta(d);
        }
        const double fk = *rep.kappa_value[k];
        const double fk1 = *rep.kappa_value[k + 1];
        const double phik = phi->value(k);
        const double drop = fk - fk1;
        const double scale = tol * (1.0 + std::abs(rows[k].objective));
        record(rep.kappa_descent, mu * (recent + phik * phik) - drop, scale);

        // chained inequality: exact minimum known, noise-free, convex f
        if (rep.f_star_known && run.f_convex && !noise.active() &&
            rows[k + 1].distance_to_reference && fk1 > 0.0) {
          const double dist = *rows[k + 1].distance_to_reference;
          const double bracket = *c.kappa * static_cast<double>(tau) * recent + beta * dist * dist;
          const double rhs = alpha * (drop + scale) * bracket;
          const double lhs = fk1 * fk1;
          ++rep.chain.checked;
          if (lhs > rhs) {
            ++rep.chain.violations;
            rep.chain.worst = std::max(rep.chain.worst, lhs / std::max(rhs, 1e-300));
          }
        }
      }
    }
  }

  // Residual bound on every row that carries a residual.
  std::vector<double> recent;
  for (std::size_t k = 1; k < count; ++k) {
    const IterateRecord& row = rows[k];
    if (!row.residual || !row.step) continue;
    recent.clear();
    const long long last = static_cast<long long>(k) - 1;
    for (long long d = last - static_cast<long long>(tau); d <= last; ++d) recent.push_back(delta(d));
    const double rhs = residual_bound(delta(last), recent, L, *row.step, row.sigma.value_or(0.0));
    record(rep.residual, *row.residual - rhs, tol * (1.0 + rhs));
  }

  if (line_search) {
    for (std::size_t k = 1; k < count; ++k) {
      if (!rows[k].line_search_j || rows[k].fallback) continue;
      ++rep.acceptance.checked;
      if (!rows[k].acceptance_ok) ++rep.acceptance.violations;
    }
  }
  return rep;
}

}  // namespace piag

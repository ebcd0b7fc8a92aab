// Acceptance gate. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "piag/config.hpp"
#include "piag/data.hpp"
#include "piag/diagnostics.hpp"
#include "piag/experiment.hpp"
#include "piag/losses.hpp"
#include "piag/solver.hpp"
#include "support.hpp"

using namespace piag;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// residual-bound tallies across every run of A1-A7
CheckCount a9;
std::size_t a9_runs = 0;

void tally(const DiagnosticReport& r) {
  a9.checked += r.residual.checked;
  a9.violations += r.residual.violations;
  a9.worst = std::max(a9.worst, r.residual.worst);
  ++a9_runs;
}

RunConfig least_squares(const std::string& data, RegularizerKind reg, double weight,
                        std::size_t budget) {
  RunConfig c;
  c.data = data;
  c.loss = LossKind::quadratic;
  c.regularizer = reg;
  c.weight = weight;
  c.budget = budget;
  c.tol = 0.0;
  return c;
}

// xi_k - xi_{k+1} >= coeff ||Delta^k||^2 recomputed from the trace alone.
std::size_t independent_descent_violations(const RunResult& r, double gamma_e) {
  const std::size_t tau = r.tau;
  const double L = r.lipschitz;
  const double S = 1.0 + (1.0 / tau) * (1.0 / (gamma_e * L) - 0.5);
  const double eps = 0.5 * (S + std::sqrt(S * S - 4.0));
  const double coeff = 0.25 * (1.0 / gamma_e - 0.5 * L - tau * L);
  std::vector<double> d;
  for (std::size_t k = 1; k < r.trace.size(); ++k) d.push_back(*r.trace[k].delta_norm);
  std::vector<double> xi(r.trace.size());
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    double s = 0.0;
    for (std::size_t w = 1; w <= tau && w <= k; ++w) s += static_cast<double>(tau - w + 1) * d[k - w] * d[k - w];
    xi[k] = r.trace[k].objective + L / (2.0 * eps) * s;
  }
  std::size_t bad = 0;
  for (std::size_t k = 0; k + 1 < xi.size(); ++k) {
    if (xi[k] - xi[k + 1] < coeff * d[k] * d[k] - 1e-9 * (1.0 + std::abs(xi[k]))) ++bad;
  }
  return bad;
}

void a1() {
  auto cfg = least_squares("lasso:50,100,1", RegularizerKind::l1, 0.1, 10000);
  const auto problem = build_problem(cfg);
  const auto t0 = Clock::now();
  const auto e = run_experiment(cfg, problem);
  const double secs = seconds_since(t0);
  tally(e.report);
  const auto& l = e.report.lyapunov;
  const std::size_t indep = independent_descent_violations(e.result, e.result.gamma);
  verdict("A1", e.report.rule == LyapunovRule::basic && l.violations == 0 && indep == 0 &&
                    l.checked == 10000 && secs < 10.0,
          fmt("descent violations %zu/%zu (independent recheck %zu), tau %zu, %.2f s incl. reference (limit 10 s)",
              l.violations, l.checked, indep, e.result.tau, secs));
}

void a2() {
  const auto cls = make_synthetic_data(parse_synthetic_spec("classification:5,20,3")).data;
  auto reg_rows = make_synthetic_data(parse_synthetic_spec("lasso:5,20,3")).data;
  const Regularizer regs[] = {Regularizer::zero(), Regularizer::l1(0.1), Regularizer::l1_box(0.1, 1.0),
                              Regularizer::mcp(0.1, 3.0)};
  const LossKind losses[] = {LossKind::logistic, LossKind::squared_logistic, LossKind::quadratic};
  std::size_t combos = 0, identical = 0;
  for (LossKind loss : losses) {
    for (const auto& reg : regs) {
      const auto p = build_problem(loss == LossKind::quadratic ? reg_rows : cls, loss, reg);
      SolverConfig cfg;
      cfg.aggregation.scheme = Scheme::prox_grad;
      cfg.policy.mode = reg.convex() ? StepMode::fixed_convex : StepMode::fixed_nonconvex;
      cfg.budget = 1000;
      cfg.tol = 0.0;
      cfg.x0 = Vector(p.dimension(), 0.5);
      const auto r = run(p, cfg);

      // reference proximal gradient from scratch
      Vector x = cfg.x0;
      bool same = r.tau == 0;
      for (std::size_t k = 0; k < 1000; ++k) {
        const auto g = full_gradient(p, x);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = x[j] - r.gamma * g[j];
        x = prox(reg, x, r.gamma);
        same = same && full_objective(p, x) == r.trace[k + 1].objective;
      }
      same = same && x == r.x;
      ++combos;
      if (same) ++identical;
    }
  }
  verdict("A2", identical == combos,
          fmt("%zu/%zu loss/regularizer combinations bitwise identical over 1000 steps", identical, combos));
}

void a3() {
  auto cfg = least_squares("lasso:50,100,1", RegularizerKind::l1_box, 1.0, 100000);
  const auto problem = build_problem(cfg);
  const auto b2 = squared_target_norm(load_dataset(cfg));
  const auto t0 = Clock::now();
  const auto e = run_experiment(cfg, problem);
  const double secs = seconds_since(t0);
  tally(e.report);
  const bool have = e.rates.has_value();
  const double stat = have ? e.rates->sublinear_statistic : NAN;
  const double slope = have ? e.rates->sublinear_slope : NAN;
  const double radius = problem.regularizer().radius();
  verdict("A3", have && std::isfinite(stat) && slope <= 1e-6 && secs < 60.0 &&
                    std::abs(radius - b2) <= 1e-12 * b2,
          fmt("max k*(F-F*) over last half %.4g, trend slope %.3g (limit 1e-6), radius %.6g = ||b||^2, %.1f s (limit 60 s)",
              stat, slope, radius, secs));
}

void linear_rate(const char* id, NoiseKind noise, double r2_min) {
  auto cfg = least_squares("restricted_sc:20,10,5,1", RegularizerKind::l1, 0.1, 20000);
  cfg.noise = noise;
  cfg.noise_scale = noise == NoiseKind::none ? 0.0 : 1.0;
  cfg.noise_zeta = 0.5;
  const auto e = run_experiment(cfg);
  tally(e.report);
  if (!e.rates || !e.rates->linear) {
    verdict(id, false, "no linear-rate window: " + e.rate_error);
    return;
  }
  const auto& f = *e.rates->linear;
  verdict(id, f.omega > 0.0 && f.omega < 1.0 && f.r_squared > r2_min,
          fmt("omega %.6f, R^2 %.6f (need > %.2f), window k=%zu..%zu (%zu points)", f.omega,
              f.r_squared, r2_min, f.first_k, f.last_k, f.points));
}

void a5b() {
  auto cfg = least_squares("restricted_sc:20,10,5,1", RegularizerKind::l1, 0.1, 100000);
  cfg.noise = NoiseKind::power;
  cfg.noise_scale = 1.0;
  cfg.noise_eta = 1.5;
  cfg.reference = false;
  const auto e = run_experiment(cfg);
  tally(e.report);
  const double last = *e.result.trace.back().residual;
  std::size_t first_below = 0;
  for (const auto& row : e.result.trace) {
    if (row.residual && *row.residual < 1e-5) {
      first_below = row.k;
      break;
    }
  }
  verdict("A5b", last < 1e-5 && first_below > 0,
          fmt("power noise eta 1.5: final residual %.3g (limit 1e-5), first below at k=%zu",
              last, first_below));
}

void a6() {
  std::size_t pairs = 0, wins = 0, violations = 0;
  std::string detail;
  for (const char* name : {"conv_l1_I", "conv_l1_II", "conv_mcp_I", "conv_mcp_II", "nonconv_l1_I",
                           "nonconv_l1_II", "nonconv_mcp_I", "nonconv_mcp_II"}) {
    const auto runs = preset_configs({.name = name, .subsample = 500, .budget = 2000});
    const auto fixed = run_experiment(runs[0].config);
    const auto ls = run_experiment(runs[1].config);
    for (const auto* e : {&fixed, &ls}) {
      tally(e->report);
      violations += e->report.lyapunov.violations + e->report.acceptance.violations;
    }
    const double ff = fixed.rows.back().F, fl = ls.rows.back().F;
    ++pairs;
    if (fl <= ff) ++wins;
    detail += fmt(" %s:%+.2e", name, fl - ff);
  }
  verdict("A6", wins == pairs && violations == 0,
          fmt("line search <= fixed final F in %zu/%zu presets, descent/acceptance violations %zu; (ls - fixed):",
              wins, pairs, violations) + detail);
}

void a7() {
  auto runs = preset_configs({.name = "nonconv_mcp_I_fixed", .subsample = 500, .budget = 100000});
  auto cfg = runs[0].config;
  const auto t0 = Clock::now();
  const auto e = run_experiment(cfg);
  const double secs = seconds_since(t0);
  tally(e.report);
  std::size_t first_below = 0;
  for (const auto& row : e.result.trace) {
    if (row.residual && *row.residual < 1e-4) {
      first_below = row.k;
      break;
    }
  }
  const std::size_t indep = independent_descent_violations(e.result, 2.0 * e.result.gamma);
  const auto& l = e.report.lyapunov;
  verdict("A7", first_below > 0 && e.report.rule == LyapunovRule::nonconvex && l.violations == 0 &&
                    indep == 0,
          fmt("squared logistic + mcp, gamma = c/((2tau+1)L) = %.4g: residual < 1e-4 first at k=%zu, "
              "final %.3g; descent violations %zu/%zu (independent recheck %zu), %.1f s",
              e.result.gamma, first_below, *e.result.trace.back().residual, l.violations, l.checked,
              indep, secs));
}

void a8() {
  std::mt19937_64 gen(2024);
  std::string detail;
  bool ok = true;

  // prox against a 1e-4 grid
  std::uniform_real_distribution<double> zd(-4.0, 4.0), sd(0.05, 1.5);
  double prox_err = 0.0;
  const Regularizer kinds[] = {Regularizer::zero(), Regularizer::l1(0.8), Regularizer::l1_box(0.6, 1.3),
                               Regularizer::mcp(0.9, 2.5)};
  for (const auto& r : kinds) {
    for (int t = 0; t < 1000; ++t) {
      const double z = zd(gen);
      const double step = std::min(sd(gen), 0.95 * r.max_step());
      const double ref = test::brute_force_prox(
          [&](double y) {
            switch (r.kind()) {
              case RegularizerKind::zero: return 0.0;
              case RegularizerKind::l1: return 0.8 * std::abs(y);
              case RegularizerKind::l1_box: return std::abs(y) <= 1.3 ? 0.6 * std::abs(y) : INFINITY;
              case RegularizerKind::mcp: return test::mcp_value(y, 0.9, 2.5);
            }
            return 0.0;
          },
          z, step);
      prox_err = std::max(prox_err, std::abs(r.scalar_prox(z, step) - ref));
    }
  }
  ok = ok && prox_err < 1e-3;
  detail += fmt("prox grid max err %.2e (limit 1e-3)", prox_err);

  // gradients against central differences
  double fd_err = 0.0;
  const std::size_t n = 5;
  for (int kind = 0; kind < 3; ++kind) {
    for (int t = 0; t < 100; ++t) {
      const auto a = test::random_vector(gen, n);
      const double b = t % 2 ? 1.0 : -1.0;
      const auto f = kind == 0   ? logistic_component({SparseVector::from_dense(a), b}, n)
                     : kind == 1 ? squared_logistic_component({SparseVector::from_dense(a), b}, n)
                                 : quadratic_component(SparseVector::from_dense(a), 0.3 * b, n);
      const auto x = test::random_vector(gen, n);
      Vector g(n);
      f->gradient(x, g);
      const auto fd = test::fd_gradient([&](std::span<const double> y) { return f->value(y); }, x);
      fd_err = std::max(fd_err, test::relative_error(g, fd));
    }
  }
  ok = ok && fd_err < 1e-5;
  detail += fmt(", gradient fd rel err %.2e (limit 1e-5)", fd_err);

  // aggregate against the recompute oracle; exact at every full recomputation
  std::vector<ComponentPtr> parts;
  for (int i = 0; i < 6; ++i) {
    const auto a = test::random_vector(gen, 4);
    parts.push_back(i % 2 ? quadratic_component(SparseVector::from_dense(a), 0.2, 4)
                          : logistic_component({SparseVector::from_dense(a), 1.0}, 4));
  }
  const CompositeProblem p(4, parts, Regularizer::l1(0.1));
  std::size_t checkpoints = 0, exact = 0;
  double drift = 0.0;
  AggregationConfig cyc, shuf, delay, lag;
  shuf.scheduler = SchedulerKind::shuffled_cyclic;
  delay.scheduler = SchedulerKind::synthetic_delay;
  delay.delays = {0, 1, 2, 3, 4, 5};
  lag.scheme = Scheme::lag;
  lag.lag.hard_cap = 3;
  lag.tau_bound = 3;
  for (const auto& cfg : {cyc, shuf, delay, lag}) {
    Vector x = test::random_vector(gen, 4);
    AggregatedGradient agg(p, cfg, NoiseSchedule::none(), x);
    std::vector<Vector> log;
    for (int k = 0; k < 500; ++k) {
      log.push_back(x);
      const std::size_t before = agg.table().recompute_count();
      const auto v = agg.next(x).exact;
      Vector ref(4, 0.0), g(4);
      for (std::size_t i = 0; i < p.size(); ++i) {
        p.component(i).gradient(log[agg.table().last_refresh()[i]], g);
        for (std::size_t j = 0; j < 4; ++j) ref[j] += g[j];
      }
      drift = std::max(drift, distance(v, ref) / (1.0 + norm(v)));
      if (agg.table().recompute_count() > before) {
        ++checkpoints;
        if (v == ref) ++exact;
      }
      const auto d = test::random_vector(gen, 4, 0.1);
      for (std::size_t j = 0; j < 4; ++j) x[j] += d[j];
    }
  }
  ok = ok && checkpoints > 0 && exact == checkpoints && drift <= 1e-9;
  detail += fmt(", aggregate oracle exact at %zu/%zu checkpoints, drift %.1e", exact, checkpoints, drift);

  // epsilon equation
  double eps_err = 0.0;
  for (std::size_t tau : {1, 2, 3, 10, 100, 1000}) {
    for (double c : {0.01, 0.25, 0.5, 0.9, 0.99}) {
      const double L = 2.7;
      const auto k = solve_constants(2.0 * c / ((2.0 * tau + 1.0) * L), L, tau);
      eps_err = std::max(eps_err, std::abs(*k.epsilon + 1.0 / *k.epsilon - k.rhs) / k.rhs);
    }
  }
  ok = ok && eps_err < 1e-12;
  detail += fmt(", epsilon equation rel residual %.1e (limit 1e-12)", eps_err);
  verdict("A8", ok, detail);
}

void a9_verdict() {
  verdict("A9", a9.violations == 0 && a9.checked > 0,
          fmt("residual bound violations %zu/%zu over %zu runs (tolerance 1e-9 relative)", a9.violations,
              a9.checked, a9_runs));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  a1();
  a2();
  a3();
  linear_rate("A4", NoiseKind::none, 0.99);
  linear_rate("A5a", NoiseKind::geometric, 0.98);
  a5b();
  a6();
  a7();
  a8();
  a9_verdict();
  std::printf("%d criteria failed, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}

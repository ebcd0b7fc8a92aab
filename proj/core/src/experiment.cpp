#include "piag/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "piag/errors.hpp"

namespace piag {

using json = nlohmann::ordered_json;

std::vector<TraceRow> trace_rows(const RunResult& run, const DiagnosticReport& report,
                                 std::optional<double> f_star) {
  std::vector<TraceRow> rows;
  rows.reserve(run.trace.size());
  for (std::size_t k = 0; k < run.trace.size(); ++k) {
    const IterateRecord& r = run.trace[k];
    TraceRow row;
    row.k = r.k;
    row.F = r.objective;
    if (f_star) {
      row.Fgap = r.objective - *f_star;
      if (k < report.xi.size()) row.xi = report.xi[k];
      if (k < report.kappa_value.size()) row.Fk = report.kappa_value[k];
    }
    row.delta_norm = r.delta_norm;
    row.sigma = r.sigma;
    row.step = r.step;
    row.residual = r.residual;
    row.j_ls = r.line_search_j;
    rows.push_back(row);
  }
  return rows;
}

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    out << buf;
  }
}

std::optional<double> cell_double(std::string_view s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::optional<std::size_t> cell_index(std::string_view s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, std::size_t cadence) {
  if (cadence == 0) throw std::invalid_argument("cadence must be >= 1");
  out << kTraceHeader << '\n';
  char buf[40];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TraceRow& r = rows[i];
    if (r.k % cadence != 0 && i + 1 != rows.size()) continue;
    out << r.k << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.F);
    out << buf;
    put(out, r.Fgap);
    put(out, r.delta_norm);
    put(out, r.sigma);
    put(out, r.step);
    put(out, r.residual);
    put(out, r.xi);
    put(out, r.Fk);
    out << ',';
    if (r.j_ls) out << *r.j_ls;
    out << '\n';
  }
}

void emit_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows,
                std::size_t cadence) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_trace_csv(out, rows, cadence);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::vector<TraceRow> parse_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError(1, "unexpected header '" + line + "'");
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 10) {
      throw ParseError(lineno, "expected 10 cells, got " + std::to_string(cells.size()));
    }
    TraceRow r;
    const auto k = cell_index(cells[0], lineno);
    const auto F = cell_double(cells[1], lineno);
    if (!k || !F) throw ParseError(lineno, "k and F are required");
    r.k = *k;
    r.F = *F;
    r.Fgap = cell_double(cells[2], lineno);
    r.delta_norm = cell_double(cells[3], lineno);
    r.sigma = cell_double(cells[4], lineno);
    r.step = cell_double(cells[5], lineno);
    r.residual = cell_double(cells[6], lineno);
    r.xi = cell_double(cells[7], lineno);
    r.Fk = cell_double(cells[8], lineno);
    r.j_ls = cell_index(cells[9], lineno);
    if (!rows.empty() && r.k <= rows.back().k) throw ParseError(lineno, "k must increase");
    rows.push_back(r);
  }
  return rows;
}

std::vector<TraceRow> load_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_trace_csv(in);
}

// ---------------------------------------------------------------------------

Experiment run_experiment(const RunConfig& config) {
  const CompositeProblem problem = build_problem(config);
  return run_experiment(config, problem);
}

Experiment run_experiment(const RunConfig& config, const CompositeProblem& problem) {
  Experiment e;
  e.config = config;
  SolverConfig sc = solver_config(config);
  if (config.reference) {
    e.reference = reference_minimum(problem);
    sc.reference_point = e.reference->x;
  }
  e.result = run(problem, sc);

  DiagnosticOptions opts;
  if (e.reference) opts.f_star = e.reference->f_star;
  e.report = evaluate(e.result, opts);

  if (e.reference) {
    std::vector<double> objective;
    objective.reserve(e.result.trace.size());
    for (const auto& r : e.result.trace) objective.push_back(r.objective);
    try {
      e.rates = fit_rates(objective, e.reference->f_star);
    } catch (const InconsistentReferenceError& err) {
      e.rate_error = err.what();
    }
  } else {
    e.rate_error = "no reference minimum";
  }
  e.rows = trace_rows(e.result, e.report, opts.f_star);

  if (!config.trace.empty()) emit_trace(config.trace, e.rows, config.cadence);
  if (!config.summary.empty()) write_summary(config.summary, e);
  return e;
}

namespace {

json count_json(const CheckCount& c) {
  return json{{"checked", c.checked}, {"violations", c.violations}, {"worst", c.worst}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string summary_json(const Experiment& e) {
  const RunResult& r = e.result;
  const DiagnosticReport& d = e.report;
  json j;
  j["final_F"] = r.trace.empty() ? 0.0 : r.trace.back().objective;
  j["F_star"] = e.reference ? json(e.reference->f_star) : json(nullptr);
  j["final_residual"] = r.trace.empty() ? json(nullptr) : opt_json(r.trace.back().residual);
  j["iterations"] = r.iterations();
  j["termination"] = std::string(to_string(r.termination));
  j["scheme"] = std::string(to_string(r.scheme));
  j["step_mode"] = std::string(to_string(r.policy.mode));
  j["gamma"] = r.gamma;
  j["tau"] = r.tau;
  j["L"] = r.lipschitz;
  j["c"] = r.policy.c;
  j["g_convex"] = r.g_convex;
  j["f_convex"] = r.f_convex;
  if (r.line_search) {
    j["c1"] = r.line_search->c1;
    j["c2"] = r.line_search->c2;
    j["shrink"] = r.line_search->shrink;
    j["j_max"] = r.line_search->j_max;
  } else {
    j["c1"] = nullptr;
    j["c2"] = nullptr;
  }
  j["regime"] = std::string(to_string(d.rule));
  if (d.constants) {
    j["epsilon"] = opt_json(d.constants->epsilon);
    j["delta"] = d.constants->delta_basic;
    j["delta_rate"] = opt_json(d.constants->delta_rate);
    j["kappa"] = opt_json(d.constants->kappa);
  } else if (d.line_search_constants) {
    j["epsilon"] = opt_json(d.line_search_constants->epsilon);
    j["delta"] = nullptr;
    j["delta_rate"] = nullptr;
    j["kappa"] = opt_json(d.line_search_constants->kappa);
  } else {
    j["epsilon"] = nullptr;
    j["delta"] = nullptr;
    j["delta_rate"] = nullptr;
    j["kappa"] = nullptr;
  }
  j["noise"] = json{{"kind", std::string(to_string(r.noise.kind))},
                    {"scale", r.noise.scale},
                    {"zeta", r.noise.zeta},
                    {"eta", r.noise.eta},
                    {"seed", r.noise.seed}};
  j["cadence"] = e.config.cadence;
  j["lyapunov_violations"] = d.lyapunov.violations;
  j["residual_violations"] = d.residual.violations;
  j["kappa_violations"] = d.kappa_descent.violations;
  j["chain_violations"] = d.chain.violations;
  j["acceptance_violations"] = d.acceptance.violations;
  j["fallback_steps"] = d.fallback_steps;
  j["checks"] = json{{"lyapunov", count_json(d.lyapunov)},
                     {"residual", count_json(d.residual)},
                     {"kappa_descent", count_json(d.kappa_descent)},
                     {"chain", count_json(d.chain)},
                     {"acceptance", count_json(d.acceptance)}};
  if (e.rates) {
    json rates{{"sublinear_statistic", e.rates->sublinear_statistic},
               {"sublinear_slope", e.rates->sublinear_slope}};
    if (e.rates->linear) {
      rates["omega"] = e.rates->linear->omega;
      rates["r_squared"] = e.rates->linear->r_squared;
      rates["fit_points"] = e.rates->linear->points;
    } else {
      rates["omega"] = nullptr;
      rates["r_squared"] = nullptr;
      rates["fit_points"] = 0;
    }
    j["rates"] = rates;
  } else {
    j["rates"] = json{{"error", e.rate_error}};
  }
  if (e.reference) {
    j["reference"] = json{{"iterations", e.reference->iterations},
                          {"residual", e.reference->residual},
                          {"converged", e.reference->converged}};
  }
  return j.dump(2) + "\n";
}

void write_summary(const std::filesystem::path& path, const Experiment& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << summary_json(e);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

VerifyResult verify_trace(const std::vector<TraceRow>& rows, std::string_view summary_text) {
  const json j = json::parse(summary_text);
  if (j.value("cadence", std::size_t{1}) != 1) {
    throw std::invalid_argument("verify needs a trace written with cadence 1");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].k != i) throw std::invalid_argument("trace rows are not contiguous from k = 0");
  }
  RunResult run;
  run.tau = j.at("tau").get<std::size_t>();
  run.gamma = j.at("gamma").get<double>();
  run.lipschitz = j.at("L").get<double>();
  run.g_convex = j.at("g_convex").get<bool>();
  run.f_convex = j.at("f_convex").get<bool>();
  run.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  run.policy.mode = step_mode_from_string(j.at("step_mode").get<std::string>());
  run.policy.c = j.at("c").get<double>();
  if (run.policy.mode == StepMode::line_search) {
    LineSearchParams p;
    p.gamma = run.gamma;
    p.c1 = j.at("c1").get<double>();
    p.c2 = j.at("c2").get<double>();
    p.shrink = j.at("shrink").get<double>();
    p.j_max = j.at("j_max").get<std::size_t>();
    run.line_search = p;
  }
  const json& nz = j.at("noise");
  run.noise.kind = noise_kind_from_string(nz.at("kind").get<std::string>());
  run.noise.scale = nz.at("scale").get<double>();
  run.noise.zeta = nz.at("zeta").get<double>();
  run.noise.eta = nz.at("eta").get<double>();
  run.noise.seed = nz.at("seed").get<std::uint64_t>();

  for (const TraceRow& r : rows) {
    IterateRecord rec;
    rec.k = r.k;
    rec.objective = r.F;
    rec.delta_norm = r.delta_norm;
    rec.sigma = r.sigma;
    rec.step = r.step;
    rec.residual = r.residual;
    rec.line_search_j = r.j_ls;
    rec.fallback = run.line_search && r.step && *r.step == run.gamma;
    run.trace.push_back(rec);
  }
  DiagnosticOptions opts;
  if (!j.at("F_star").is_null()) opts.f_star = j.at("F_star").get<double>();
  VerifyResult v;
  v.rows = rows.size();
  v.report = evaluate(run, opts);
  return v;
}

// ---------------------------------------------------------------------------

std::vector<PresetRun> preset_configs(const PresetRequest& request) {
  std::vector<std::string_view> parts;
  std::string_view rest = request.name;
  for (;;) {
    const auto us = rest.find('_');
    parts.push_back(rest.substr(0, us));
    if (us == std::string_view::npos) break;
    rest.remove_prefix(us + 1);
  }
  const auto unknown = [&] {
    return std::invalid_argument(
        "unknown preset '" + request.name +
        "': expected {conv,nonconv}_{l1,mcp}_{I,II} with optional _fixed or _linesearch");
  };
  if (parts.size() < 3 || parts.size() > 4) throw unknown();
  const bool convex_loss = parts[0] == "conv";
  if (!convex_loss && parts[0] != "nonconv") throw unknown();
  const bool mcp = parts[1] == "mcp";
  if (!mcp && parts[1] != "l1") throw unknown();
  const bool scheme_two = parts[2] == "II";
  if (!scheme_two && parts[2] != "I") throw unknown();
  bool fixed = true;
  bool linesearch = true;
  if (parts.size() == 4) {
    if (parts[3] == "fixed") {
      linesearch = false;
    } else if (parts[3] == "linesearch") {
      fixed = false;
    } else {
      throw unknown();
    }
  }

  RunConfig base;
  base.data = request.data == "synthetic" ? std::string(kPresetSyntheticData) : request.data;
  const bool regression = base.data.starts_with("lasso:") || base.data.starts_with("restricted_sc:");
  if (regression) {
    if (!convex_loss) {
      throw std::invalid_argument("nonconvex presets need classification data, got '" +
                                  request.data + "'");
    }
    base.loss = LossKind::quadratic;
  } else {
    base.loss = convex_loss ? LossKind::logistic : LossKind::squared_logistic;
  }
  base.subsample = request.subsample;
  base.regularizer = mcp ? RegularizerKind::mcp : RegularizerKind::l1;
  base.weight = regression ? 0.1 : 10.0;
  base.theta = 3.0;
  base.scheme = scheme_two ? Scheme::svrg : Scheme::iag;
  base.scheduler = SchedulerKind::cyclic;
  base.c = 0.99;
  base.budget = request.budget;
  base.tol = 0.0;  // equal budgets for the paired variants
  base.seed = 0;

  std::vector<PresetRun> runs;
  // files are named after the preset without the variant suffix
  const std::string stem = std::string(parts[0]) + "_" + std::string(parts[1]) + "_" + std::string(parts[2]);
  const auto out_path = [&](const std::string& variant, const char* ext) {
    if (request.out_dir.empty()) return std::string();
    return (std::filesystem::path(request.out_dir) / (stem + "_" + variant + ext)).string();
  };
  if (fixed) {
    PresetRun r{"fixed", base};
    r.config.step = mcp ? StepMode::fixed_nonconvex : StepMode::fixed_convex;
    r.config.trace = out_path("fixed", ".csv");
    r.config.summary = out_path("fixed", ".json");
    runs.push_back(r);
  }
  if (linesearch) {
    PresetRun r{"linesearch", base};
    r.config.step = StepMode::line_search;
    r.config.trace = out_path("linesearch", ".csv");
    r.config.summary = out_path("linesearch", ".json");
    runs.push_back(r);
  }
  for (auto& r : runs) validate(r.config);
  return runs;
}

}  // namespace piag

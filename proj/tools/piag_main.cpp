// piag command-line driver.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "piag/config.hpp"
#include "piag/diagnostics.hpp"
#include "piag/errors.hpp"
#include "piag/experiment.hpp"

namespace {

void print_report(const piag::Experiment& e, std::ostream& out) {
  const auto& r = e.result;
  const auto& d = e.report;
  char buf[256];
  std::snprintf(buf, sizeof buf, "iterations %zu (%s)  final F %.12g", r.iterations(),
                std::string(piag::to_string(r.termination)).c_str(), r.trace.back().objective);
  out << buf;
  if (e.reference) {
    std::snprintf(buf, sizeof buf, "  F* %.15g", e.reference->f_star);
    out << buf;
  }
  if (r.trace.back().residual) {
    std::snprintf(buf, sizeof buf, "  residual %.3g", *r.trace.back().residual);
    out << buf;
  }
  out << '\n';
  std::snprintf(buf, sizeof buf, "gamma %.6g  tau %zu  L %.6g  rule %s", r.gamma, r.tau,
                r.lipschitz, std::string(piag::to_string(d.rule)).c_str());
  out << buf << '\n';
  out << "violations: lyapunov " << d.lyapunov.violations << "/" << d.lyapunov.checked
      << "  residual " << d.residual.violations << "/" << d.residual.checked << "  kappa "
      << d.kappa_descent.violations << "/" << d.kappa_descent.checked << "  chain "
      << d.chain.violations << "/" << d.chain.checked;
  if (r.line_search) {
    out << "  acceptance " << d.acceptance.violations << "/" << d.acceptance.checked
        << "  fallbacks " << d.fallback_steps;
  }
  out << '\n';
  if (e.rates) {
    std::snprintf(buf, sizeof buf, "rates: k*gap max %.6g slope %.3g", e.rates->sublinear_statistic,
                  e.rates->sublinear_slope);
    out << buf;
    if (e.rates->linear) {
      std::snprintf(buf, sizeof buf, "  omega %.9f R2 %.6f (%zu pts)", e.rates->linear->omega,
                    e.rates->linear->r_squared, e.rates->linear->points);
      out << buf;
    }
    out << '\n';
  } else if (!e.rate_error.empty()) {
    out << "rates: " << e.rate_error << '\n';
  }
}

bool clean(const piag::DiagnosticReport& d) {
  return d.lyapunov.violations == 0 && d.residual.violations == 0 &&
         d.kappa_descent.violations == 0 && d.chain.violations == 0 &&
         d.acceptance.violations == 0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal incremental aggregated gradient solver and diagnostics"};
  app.require_subcommand(1);

  std::string config_path, trace_out, summary_out;
  auto* run_cmd = app.add_subcommand("run", "Run one configuration");
  run_cmd->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--trace", trace_out, "Override [output] trace");
  run_cmd->add_option("--summary", summary_out, "Override [output] summary");

  piag::PresetRequest preset;
  auto* preset_cmd = app.add_subcommand("preset", "Run a named experiment preset");
  preset_cmd->add_option("name", preset.name, "conv_l1_I, nonconv_mcp_II_linesearch, ...")->required();
  preset_cmd->add_option("--data", preset.data, "synthetic | LIBSVM path | lasso:n,m[,seed]")
      ->capture_default_str();
  preset_cmd->add_option("--subsample", preset.subsample, "First N rows (0 = all)")
      ->capture_default_str();
  preset_cmd->add_option("--budget", preset.budget, "Iterations per variant")->capture_default_str();
  preset_cmd->add_option("--out", preset.out_dir, "Directory for traces and summaries");

  std::string ref_config;
  auto* ref_cmd = app.add_subcommand("reference", "Compute min F by a long proximal-gradient run");
  ref_cmd->add_option("--config", ref_config, "Config file")->required()->check(CLI::ExistingFile);

  std::string verify_trace_path, verify_summary_path;
  auto* verify_cmd = app.add_subcommand("verify", "Re-check Lyapunov and residual bounds offline");
  verify_cmd->add_option("--trace", verify_trace_path, "CSV trace")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--summary", verify_summary_path,
                         "Summary JSON (default: trace path with .json)");

  auto* config_cmd = app.add_subcommand("config", "Print the default configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      piag::RunConfig cfg = piag::load_config(config_path);
      if (!trace_out.empty()) cfg.trace = trace_out;
      if (!summary_out.empty()) cfg.summary = summary_out;
      const piag::Experiment e = piag::run_experiment(cfg);
      print_report(e, std::cout);
      return clean(e.report) ? 0 : 1;
    }
    if (*preset_cmd) {
      if (!preset.out_dir.empty()) std::filesystem::create_directories(preset.out_dir);
      bool ok = true;
      std::optional<double> fixed_final;
      for (const auto& pr : piag::preset_configs(preset)) {
        std::cout << "== " << preset.name << " [" << pr.variant << "]\n";
        const piag::Experiment e = piag::run_experiment(pr.config);
        print_report(e, std::cout);
        ok = ok && clean(e.report);
        const double final_f = e.result.trace.back().objective;
        if (pr.variant == "fixed") {
          fixed_final = final_f;
        } else if (fixed_final) {
          char buf[128];
          std::snprintf(buf, sizeof buf, "line search minus fixed final F: %.6g\n",
                        final_f - *fixed_final);
          std::cout << buf;
        }
      }
      return ok ? 0 : 1;
    }
    if (*ref_cmd) {
      const piag::RunConfig cfg = piag::load_config(ref_config);
      const piag::CompositeProblem problem = piag::build_problem(cfg);
      const piag::ReferenceSolution ref = piag::reference_minimum(problem);
      std::printf("F* %.17g\niterations %zu\nresidual %.3g\nconverged %s\n", ref.f_star,
                  ref.iterations, ref.residual, ref.converged ? "true" : "false");
      return 0;
    }
    if (*verify_cmd) {
      std::string summary = verify_summary_path;
      if (summary.empty()) {
        summary = std::filesystem::path(verify_trace_path).replace_extension(".json").string();
      }
      const auto rows = piag::load_trace_csv(verify_trace_path);
      const piag::VerifyResult v = piag::verify_trace(rows, slurp(summary));
      const auto& d = v.report;
      std::printf("rows %zu  rule %s\n", v.rows, std::string(piag::to_string(d.rule)).c_str());
      std::printf("lyapunov violations %zu/%zu\nresidual violations %zu/%zu\nkappa violations %zu/%zu\n",
                  d.lyapunov.violations, d.lyapunov.checked, d.residual.violations,
                  d.residual.checked, d.kappa_descent.violations, d.kappa_descent.checked);
      std::printf("%s\n", v.ok() ? "OK" : "FAILED");
      return v.ok() ? 0 : 1;
    }
    if (*config_cmd) {
      std::cout << piag::serialize_config(piag::RunConfig{});
      return 0;
    }
  } catch (const piag::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

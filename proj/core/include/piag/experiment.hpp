#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "piag/config.hpp"
#include "piag/diagnostics.hpp"
#include "piag/solver.hpp"

namespace piag {

/// One CSV line. Optional fields print as empty cells.
struct TraceRow {
  std::size_t k = 0;
  double F = 0.0;
  std::optional<double> Fgap;
  std::optional<double> delta_norm;
  std::optional<double> sigma;
  std::optional<double> step;
  std::optional<double> residual;
  std::optional<double> xi;
  std::optional<double> Fk;
  std::optional<std::size_t> j_ls;

  bool operator==(const TraceRow&) const = default;
};

inline constexpr std::string_view kTraceHeader = "k,F,Fgap,delta_norm,sigma,step,residual,xi,Fk,j_ls";

std::vector<TraceRow> trace_rows(const RunResult& run, const DiagnosticReport& report,
                                 std::optional<double> f_star);

// Rows with k % cadence == 0 plus the final row; %.17g, LF line endings.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows, std::size_t cadence = 1);
void emit_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows,
                std::size_t cadence = 1);
// Throws ParseError on a wrong header or malformed row.
std::vector<TraceRow> parse_trace_csv(std::istream& in);
std::vector<TraceRow> load_trace_csv(const std::filesystem::path& path);

struct Experiment {
  RunConfig config;
  RunResult result;
  DiagnosticReport report;
  std::optional<ReferenceSolution> reference;
  std::optional<RateReport> rates;
  std::string rate_error;  // why rates are missing, if they are
  std::vector<TraceRow> rows;
};

// Builds the problem, optionally computes min F with a reference run, runs the
// solver, evaluates diagnostics and writes the configured trace and summary.
Experiment run_experiment(const RunConfig& config);
Experiment run_experiment(const RunConfig& config, const CompositeProblem& problem);

// JSON summary: final objective, constants, violation counts, rates.
std::string summary_json(const Experiment& e);
void write_summary(const std::filesystem::path& path, const Experiment& e);

/// Offline re-check of a written trace against the run constants stored in
/// its summary. Needs an unthinned trace (cadence 1).
struct VerifyResult {
  DiagnosticReport report;
  std::size_t rows = 0;
  bool ok() const noexcept {
    return report.lyapunov.violations == 0 && report.residual.violations == 0 &&
           report.kappa_descent.violations == 0;
  }
};

VerifyResult verify_trace(const std::vector<TraceRow>& rows, std::string_view summary_json_text);

// ---------------------------------------------------------------------------
// Presets: {conv,nonconv}_{l1,mcp}_{I,II}[_fixed|_linesearch]

struct PresetRequest {
  std::string name;
  std::string data = "synthetic";
  std::size_t subsample = 500;
  std::size_t budget = 2000;
  std::string out_dir;  // empty = no files
};

struct PresetRun {
  std::string variant;  // "fixed" or "linesearch"
  RunConfig config;
};

// Throws std::invalid_argument for an unknown preset name.
std::vector<PresetRun> preset_configs(const PresetRequest& request);

// Data used for the "synthetic" keyword.
inline constexpr std::string_view kPresetSyntheticData = "classification:4,500,1";

}  // namespace piag

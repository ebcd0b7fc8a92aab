#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "piag/aggregation.hpp"
#include "piag/data.hpp"
#include "piag/prox.hpp"
#include "piag/solver.hpp"

namespace piag {

/// Everything needed to reproduce one run. Text form:
///
///   [problem]
///   data = lasso:50,100,7        # or a LIBSVM path
///   loss = quadratic
///   ...
///
/// Keys are written in a fixed order; empty values mean "unset".
struct RunConfig {
  // [problem]
  std::string data = "lasso:2,3,0";
  LossKind loss = LossKind::quadratic;
  std::size_t subsample = 0;  // first N rows, 0 = all
  bool scale = false;         // per-feature max-abs scaling
  std::optional<std::size_t> dimension;

  // [regularizer]
  RegularizerKind regularizer = RegularizerKind::l1;
  double weight = 0.1;
  std::optional<double> radius;  // l1_box; unset = ||b||^2 / weight
  double theta = 3.0;            // mcp

  // [solver]
  Scheme scheme = Scheme::iag;
  SchedulerKind scheduler = SchedulerKind::cyclic;
  StepMode step = StepMode::fixed_convex;
  double c = 0.99;
  double shrink = 0.5;
  std::optional<double> c1;
  std::optional<double> c2;
  std::size_t j_max = 60;
  std::size_t budget = 1000;
  double tol = 1e-10;
  double stagnation_tol = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> delays;
  std::optional<std::size_t> tau_bound;
  double lag_theta = 0.5;
  std::optional<double> lag_threshold;
  std::size_t lag_hard_cap = 1;

  // [noise]
  NoiseKind noise = NoiseKind::none;
  double noise_scale = 0.0;
  double noise_zeta = 0.5;
  double noise_eta = 1.5;
  std::uint64_t noise_seed = 0;

  // [output]
  std::string trace;    // CSV path, empty = none
  std::string summary;  // JSON path, empty = none
  std::size_t cadence = 1;
  bool reference = true;  // compute min F by a reference run

  bool operator==(const RunConfig&) const = default;
};

// Throws ParseError (with line number) on syntax errors, unknown sections or
// keys and bad values; then re-validates every parameter bound.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

// Parameter bounds that can be checked without building the problem.
// Throws std::invalid_argument listing every problem found.
void validate(const RunConfig& config);

Dataset load_dataset(const RunConfig& config);
CompositeProblem build_problem(const RunConfig& config);
SolverConfig solver_config(const RunConfig& config);

}  // namespace piag

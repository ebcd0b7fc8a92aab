#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "piag/losses.hpp"
#include "piag/problem.hpp"
#include "piag/prox.hpp"

namespace piag {

struct Dataset {
  std::vector<LabeledSample> samples;
  std::size_t dimension = 0;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

enum class LabelMode {
  binary,  // labels in {-1, +1} or {0, 1}; 0 maps to -1
  real,    // any finite target (least-squares rows)
};

// One sample per nonempty line "label idx:val idx:val ..." with 1-based,
// strictly increasing indices. '#' starts a comment. Throws ParseError on
// malformed lines and UnsupportedLabelError on a non-binary label set.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> n_override = std::nullopt,
                     LabelMode mode = LabelMode::binary);
Dataset load_libsvm(const std::filesystem::path& path,
                    std::optional<std::size_t> n_override = std::nullopt,
                    LabelMode mode = LabelMode::binary);

// First `count` rows (all rows when count is 0 or exceeds the size).
Dataset first_rows(const Dataset& data, std::size_t count);

// Divides each feature by its largest magnitude (features that are all zero
// are left alone).
void scale_max_abs(Dataset& data);

// ---------------------------------------------------------------------------

enum class SyntheticKind { lasso, restricted_sc, classification };

std::string_view to_string(SyntheticKind kind);

/// Reproducible synthetic instances. n is the number of features, m the
/// number of rows.
///   lasso           A_ij ~ N(0, 1/m), sparse x_true, b = A x_true + noise
///   restricted_sc   A = U diag(s) V^T of the given rank, s_i in [1, 2]
///   classification  a_i ~ N(0, I/n), b_i = sign(<a_i, w>) flipped w.p. noise
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::lasso;
  std::size_t n = 2;
  std::size_t m = 3;
  std::size_t rank = 0;  // restricted_sc only
  std::uint64_t seed = 0;
  double sparsity = 0.2;
  double noise = 0.01;   // observation noise, or label flip rate
};

// "lasso:n,m[,seed]", "restricted_sc:n,m,rank[,seed]", "classification:n,m[,seed]"
SyntheticSpec parse_synthetic_spec(std::string_view text);
bool is_synthetic_spec(std::string_view text);
std::string to_string(const SyntheticSpec& spec);

struct SyntheticData {
  Dataset data;            // rows with targets (least squares) or labels
  std::vector<double> A;   // m x n, row-major
  Vector b;
  Vector x_true;
};

SyntheticData make_synthetic_data(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------

enum class LossKind { logistic, squared_logistic, quadratic };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

// One component per row. Throws std::invalid_argument for an empty dataset.
CompositeProblem build_problem(const Dataset& data, LossKind loss, Regularizer regularizer);

// Least squares ||A x - b||^2 + g for synthetic lasso / restricted_sc data,
// logistic loss + g for classification data.
CompositeProblem make_synthetic(const SyntheticSpec& spec, Regularizer regularizer);

// sum_i b_i^2. For ||b - Ax||^2 + w ||x||_1, F(x*) <= F(0) gives w ||x*||_1 <= this.
double squared_target_norm(const Dataset& data);

}  // namespace piag

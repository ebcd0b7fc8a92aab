#include "piag/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "piag/errors.hpp"

namespace piag {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_index(std::string_view s, std::uint64_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> n_override, LabelMode mode) {
  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_index = 0;
  std::set<double> labels;
  std::vector<std::size_t> label_lines;

  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;

    LabeledSample sample;
    std::size_t pos = 0;
    bool first = true;
    std::uint64_t previous = 0;
    while (pos < text.size()) {
      const std::size_t end = std::min(text.find_first_of(" \t", pos), text.size());
      const std::string_view tok = text.substr(pos, end - pos);
      pos = text.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = text.size();

      if (first) {
        if (!parse_double(tok, sample.label)) {
          throw ParseError(lineno, "bad label '" + std::string(tok) + "'");
        }
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(lineno, "expected idx:val, got '" + std::string(tok) + "'");
      }
      std::uint64_t idx = 0;
      double val = 0.0;
      if (!parse_index(tok.substr(0, colon), idx) || idx == 0) {
        throw ParseError(lineno, "bad feature index in '" + std::string(tok) + "'");
      }
      if (!parse_double(tok.substr(colon + 1), val)) {
        throw ParseError(lineno, "bad feature value in '" + std::string(tok) + "'");
      }
      if (idx <= previous) throw ParseError(lineno, "feature indices must increase");
      if (idx > std::numeric_limits<std::uint32_t>::max()) {
        throw ParseError(lineno, "feature index too large");
      }
      if (n_override && idx > *n_override) {
        throw ParseError(lineno, "feature index " + std::to_string(idx) + " exceeds dimension " +
                                     std::to_string(*n_override));
      }
      previous = idx;
      sample.features.index.push_back(static_cast<std::uint32_t>(idx - 1));
      sample.features.value.push_back(val);
      max_index = std::max<std::size_t>(max_index, idx);
    }
    if (mode == LabelMode::binary && labels.insert(sample.label).second) label_lines.push_back(lineno);
    out.samples.push_back(std::move(sample));
  }
  if (in.bad()) throw std::runtime_error("read error while parsing LIBSVM data");

  if (mode == LabelMode::binary) {
    const bool pm = std::all_of(labels.begin(), labels.end(),
                                [](double l) { return l == 1.0 || l == -1.0; });
    const bool zo = std::all_of(labels.begin(), labels.end(),
                                [](double l) { return l == 0.0 || l == 1.0; });
    if (!pm && !zo) {
      std::ostringstream os;
      os << "unsupported label set {";
      bool sep = false;
      for (double l : labels) {
        os << (sep ? ", " : "") << l;
        sep = true;
      }
      os << "}: expected {-1, +1} or {0, 1}";
      throw UnsupportedLabelError(os.str());
    }
    for (auto& s : out.samples) {
      if (s.label == 0.0) s.label = -1.0;
    }
  }
  out.dimension = n_override.value_or(max_index);
  return out;
}

Dataset load_libsvm(const std::filesystem::path& path, std::optional<std::size_t> n_override,
                    LabelMode mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_libsvm(in, n_override, mode);
}

Dataset first_rows(const Dataset& data, std::size_t count) {
  Dataset out;
  out.dimension = data.dimension;
  const std::size_t take = count == 0 ? data.size() : std::min(count, data.size());
  out.samples.assign(data.samples.begin(), data.samples.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

void scale_max_abs(Dataset& data) {
  std::vector<double> peak(data.dimension, 0.0);
  for (const auto& s : data.samples) {
    for (std::size_t p = 0; p < s.features.nnz(); ++p) {
      double& m = peak[s.features.index[p]];
      m = std::max(m, std::abs(s.features.value[p]));
    }
  }
  for (auto& s : data.samples) {
    for (std::size_t p = 0; p < s.features.nnz(); ++p) {
      const double m = peak[s.features.index[p]];
      if (m > 0.0) s.features.value[p] /= m;
    }
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::lasso: return "lasso";
    case SyntheticKind::restricted_sc: return "restricted_sc";
    case SyntheticKind::classification: return "classification";
  }
  return "lasso";
}

bool is_synthetic_spec(std::string_view text) {
  return text.starts_with("lasso:") || text.starts_with("restricted_sc:") ||
         text.starts_with("classification:");
}

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("synthetic spec needs 'kind:args', got '" + std::string(text) + "'");
  }
  SyntheticSpec spec;
  const std::string_view kind = text.substr(0, colon);
  if (kind == "lasso") {
    spec.kind = SyntheticKind::lasso;
  } else if (kind == "restricted_sc") {
    spec.kind = SyntheticKind::restricted_sc;
  } else if (kind == "classification") {
    spec.kind = SyntheticKind::classification;
    spec.noise = 0.1;
  } else {
    throw std::invalid_argument("unknown synthetic kind '" + std::string(kind) + "'");
  }
  std::vector<std::uint64_t> args;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view tok = trim(rest.substr(0, comma));
    std::uint64_t v = 0;
    if (!parse_index(tok, v)) {
      throw std::invalid_argument("bad integer '" + std::string(tok) + "' in synthetic spec");
    }
    args.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  const std::size_t required = spec.kind == SyntheticKind::restricted_sc ? 3 : 2;
  if (args.size() < required || args.size() > required + 1) {
    throw std::invalid_argument("synthetic spec '" + std::string(text) + "' needs " +
                                std::to_string(required) + " or " + std::to_string(required + 1) +
                                " integers");
  }
  spec.n = args[0];
  spec.m = args[1];
  if (spec.kind == SyntheticKind::restricted_sc) spec.rank = args[2];
  if (args.size() > required) spec.seed = args[required];
  if (spec.n == 0 || spec.m == 0) throw std::invalid_argument("synthetic spec needs n, m >= 1");
  if (spec.kind == SyntheticKind::restricted_sc &&
      (spec.rank == 0 || spec.rank > std::min(spec.n, spec.m))) {
    throw std::invalid_argument("restricted_sc rank must lie in [1, min(n, m)]");
  }
  return spec;
}

std::string to_string(const SyntheticSpec& spec) {
  std::string s(to_string(spec.kind));
  s += ":" + std::to_string(spec.n) + "," + std::to_string(spec.m);
  if (spec.kind == SyntheticKind::restricted_sc) s += "," + std::to_string(spec.rank);
  s += "," + std::to_string(spec.seed);
  return s;
}

namespace {

// Orthonormal columns (rows x cols, column-major) by modified Gram-Schmidt.
std::vector<double> orthonormal_columns(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  std::vector<double> q(rows * cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double* col = q.data() + c * rows;
    for (;;) {
      for (std::size_t r = 0; r < rows; ++r) col[r] = normal(gen);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          const double* prev = q.data() + p * rows;
          double d = 0.0;
          for (std::size_t r = 0; r < rows; ++r) d += prev[r] * col[r];
          for (std::size_t r = 0; r < rows; ++r) col[r] -= d * prev[r];
        }
      }
      double nn = 0.0;
      for (std::size_t r = 0; r < rows; ++r) nn += col[r] * col[r];
      nn = std::sqrt(nn);
      if (nn > 1e-8) {
        for (std::size_t r = 0; r < rows; ++r) col[r] /= nn;
        break;
      }
    }
  }
  return q;
}

}  // namespace

SyntheticData make_synthetic_data(const SyntheticSpec& spec) {
  if (spec.n == 0 || spec.m == 0) throw std::invalid_argument("synthetic spec needs n, m >= 1");
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const std::size_t n = spec.n;
  const std::size_t m = spec.m;

  SyntheticData out;
  out.A.assign(m * n, 0.0);
  out.x_true.assign(n, 0.0);
  out.b.assign(m, 0.0);

  switch (spec.kind) {
    case SyntheticKind::lasso: {
      const double s = 1.0 / std::sqrt(static_cast<double>(m));
      for (double& a : out.A) a = s * normal(gen);
      const std::size_t support =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(spec.sparsity * n)));
      for (std::size_t j = 0; j < support; ++j) out.x_true[(j * n) / support] = normal(gen);
      break;
    }
    case SyntheticKind::restricted_sc: {
      const std::size_t r = spec.rank;
      if (r == 0 || r > std::min(n, m)) {
        throw std::invalid_argument("restricted_sc rank must lie in [1, min(n, m)]");
      }
      const std::vector<double> U = orthonormal_columns(m, r, gen);
      const std::vector<double> V = orthonormal_columns(n, r, gen);
      std::vector<double> sv(r);
      for (double& v : sv) v = 1.0 + unit(gen);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double a = 0.0;
          for (std::size_t p = 0; p < r; ++p) a += U[p * m + i] * sv[p] * V[p * n + j];
          out.A[i * n + j] = a;
        }
      }
      const std::size_t support =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(spec.sparsity * n)));
      for (std::size_t j = 0; j < support; ++j) out.x_true[(j * n) / support] = normal(gen);
      break;
    }
    case SyntheticKind::classification: {
      const double s = 1.0 / std::sqrt(static_cast<double>(n));
      for (double& a : out.A) a = s * normal(gen);
      for (double& w : out.x_true) w = 2.0 * normal(gen);
      break;
    }
  }

  out.data.dimension = n;
  out.data.samples.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const double> row(out.A.data() + i * n, n);
    const double z = dot(row, out.x_true);
    double target = 0.0;
    if (spec.kind == SyntheticKind::classification) {
      target = z >= 0.0 ? 1.0 : -1.0;
      if (unit(gen) < spec.noise) target = -target;
    } else {
      target = z + spec.noise * normal(gen);
    }
    out.b[i] = target;
    out.data.samples[i].features = SparseVector::from_dense(row);
    out.data.samples[i].label = target;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::logistic: return "logistic";
    case LossKind::squared_logistic: return "squared_logistic";
    case LossKind::quadratic: return "quadratic";
  }
  return "logistic";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "squared_logistic") return LossKind::squared_logistic;
  if (name == "quadratic") return LossKind::quadratic;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

CompositeProblem build_problem(const Dataset& data, LossKind loss, Regularizer regularizer) {
  if (data.empty()) throw std::invalid_argument("dataset is empty; a run needs at least one row");
  if (data.dimension == 0) throw std::invalid_argument("dataset has dimension 0");
  std::vector<ComponentPtr> comps;
  comps.reserve(data.size());
  for (const auto& s : data.samples) {
    switch (loss) {
      case LossKind::logistic: comps.push_back(logistic_component(s, data.dimension)); break;
      case LossKind::squared_logistic:
        comps.push_back(squared_logistic_component(s, data.dimension));
        break;
      case LossKind::quadratic:
        comps.push_back(quadratic_component(s.features, s.label, data.dimension));
        break;
    }
  }
  return CompositeProblem(data.dimension, std::move(comps), std::move(regularizer));
}

CompositeProblem make_synthetic(const SyntheticSpec& spec, Regularizer regularizer) {
  const SyntheticData d = make_synthetic_data(spec);
  const LossKind loss =
      spec.kind == SyntheticKind::classification ? LossKind::logistic : LossKind::quadratic;
  return build_problem(d.data, loss, std::move(regularizer));
}

double squared_target_norm(const Dataset& data) {
  double s = 0.0;
  for (const auto& r : data.samples) s += r.label * r.label;
  return s;
}

}  // namespace piag

#include "piag/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "piag/errors.hpp"

namespace piag {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t to_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a nonnegative integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <class T>
std::string opt(const std::optional<T>& v) {
  return v ? fmt(*v) : std::string();
}

const std::vector<Field>& fields() {
  using C = RunConfig;
  using S = std::string_view;
  static const std::vector<Field> table = {
      {"problem", "data", [](const C& c) { return c.data; },
       [](C& c, S v) { c.data = std::string(v); }},
      {"problem", "loss", [](const C& c) { return std::string(to_string(c.loss)); },
       [](C& c, S v) { c.loss = loss_kind_from_string(v); }},
      {"problem", "subsample", [](const C& c) { return fmt(std::uint64_t{c.subsample}); },
       [](C& c, S v) { c.subsample = to_uint(v); }},
      {"problem", "scale", [](const C& c) { return std::string(c.scale ? "true" : "false"); },
       [](C& c, S v) { c.scale = to_bool(v); }},
      {"problem", "dimension",
       [](const C& c) { return c.dimension ? fmt(std::uint64_t{*c.dimension}) : std::string(); },
       [](C& c, S v) {
         if (v.empty()) c.dimension.reset(); else c.dimension = to_uint(v);
       }},

      {"regularizer", "kind", [](const C& c) { return std::string(to_string(c.regularizer)); },
       [](C& c, S v) { c.regularizer = regularizer_kind_from_string(v); }},
      {"regularizer", "weight", [](const C& c) { return fmt(c.weight); },
       [](C& c, S v) { c.weight = to_double(v); }},
      {"regularizer", "radius", [](const C& c) { return opt(c.radius); },
       [](C& c, S v) {
         if (v.empty()) c.radius.reset(); else c.radius = to_double(v);
       }},
      {"regularizer", "theta", [](const C& c) { return fmt(c.theta); },
       [](C& c, S v) { c.theta = to_double(v); }},

      {"solver", "scheme", [](const C& c) { return std::string(to_string(c.scheme)); },
       [](C& c, S v) { c.scheme = scheme_from_string(v); }},
      {"solver", "scheduler", [](const C& c) { return std::string(to_string(c.scheduler)); },
       [](C& c, S v) { c.scheduler = scheduler_kind_from_string(v); }},
      {"solver", "step", [](const C& c) { return std::string(to_string(c.step)); },
       [](C& c, S v) { c.step = step_mode_from_string(v); }},
      {"solver", "c", [](const C& c) { return fmt(c.c); }, [](C& c, S v) { c.c = to_double(v); }},
      {"solver", "shrink", [](const C& c) { return fmt(c.shrink); },
       [](C& c, S v) { c.shrink = to_double(v); }},
      {"solver", "c1", [](const C& c) { return opt(c.c1); },
       [](C& c, S v) {
         if (v.empty()) c.c1.reset(); else c.c1 = to_double(v);
       }},
      {"solver", "c2", [](const C& c) { return opt(c.c2); },
       [](C& c, S v) {
         if (v.empty()) c.c2.reset(); else c.c2 = to_double(v);
       }},
      {"solver", "j_max", [](const C& c) { return fmt(std::uint64_t{c.j_max}); },
       [](C& c, S v) { c.j_max = to_uint(v); }},
      {"solver", "budget", [](const C& c) { return fmt(std::uint64_t{c.budget}); },
       [](C& c, S v) { c.budget = to_uint(v); }},
      {"solver", "tol", [](const C& c) { return fmt(c.tol); },
       [](C& c, S v) { c.tol = to_double(v); }},
      {"solver", "stagnation_tol", [](const C& c) { return fmt(c.stagnation_tol); },
       [](C& c, S v) { c.stagnation_tol = to_double(v); }},
      {"solver", "seed", [](const C& c) { return fmt(c.seed); },
       [](C& c, S v) { c.seed = to_uint(v); }},
      {"solver", "delays",
       [](const C& c) {
         std::string s;
         for (std::size_t i = 0; i < c.delays.size(); ++i) {
           if (i) s += ",";
           s += std::to_string(c.delays[i]);
         }
         return s;
       },
       [](C& c, S v) {
         c.delays.clear();
         while (!v.empty()) {
           const auto comma = v.find(',');
           c.delays.push_back(to_uint(trim(v.substr(0, comma))));
           if (comma == S::npos) break;
           v.remove_prefix(comma + 1);
         }
       }},
      {"solver", "tau_bound",
       [](const C& c) { return c.tau_bound ? fmt(std::uint64_t{*c.tau_bound}) : std::string(); },
       [](C& c, S v) {
         if (v.empty()) c.tau_bound.reset(); else c.tau_bound = to_uint(v);
       }},
      {"solver", "lag_theta", [](const C& c) { return fmt(c.lag_theta); },
       [](C& c, S v) { c.lag_theta = to_double(v); }},
      {"solver", "lag_threshold", [](const C& c) { return opt(c.lag_threshold); },
       [](C& c, S v) {
         if (v.empty()) c.lag_threshold.reset(); else c.lag_threshold = to_double(v);
       }},
      {"solver", "lag_hard_cap", [](const C& c) { return fmt(std::uint64_t{c.lag_hard_cap}); },
       [](C& c, S v) { c.lag_hard_cap = to_uint(v); }},

      {"noise", "kind", [](const C& c) { return std::string(to_string(c.noise)); },
       [](C& c, S v) { c.noise = noise_kind_from_string(v); }},
      {"noise", "scale", [](const C& c) { return fmt(c.noise_scale); },
       [](C& c, S v) { c.noise_scale = to_double(v); }},
      {"noise", "zeta", [](const C& c) { return fmt(c.noise_zeta); },
       [](C& c, S v) { c.noise_zeta = to_double(v); }},
      {"noise", "eta", [](const C& c) { return fmt(c.noise_eta); },
       [](C& c, S v) { c.noise_eta = to_double(v); }},
      {"noise", "seed", [](const C& c) { return fmt(c.noise_seed); },
       [](C& c, S v) { c.noise_seed = to_uint(v); }},

      {"output", "trace", [](const C& c) { return c.trace; },
       [](C& c, S v) { c.trace = std::string(v); }},
      {"output", "summary", [](const C& c) { return c.summary; },
       [](C& c, S v) { c.summary = std::string(v); }},
      {"output", "cadence", [](const C& c) { return fmt(std::uint64_t{c.cadence}); },
       [](C& c, S v) { c.cadence = to_uint(v); }},
      {"output", "reference",
       [](const C& c) { return std::string(c.reference ? "true" : "false"); },
       [](C& c, S v) { c.reference = to_bool(v); }},
  };
  return table;
}

}  // namespace

std::string serialize_config(const RunConfig& config) {
  std::string out;
  std::string_view section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + std::string(section) + "]\n";
    }
    const std::string value = f.get(config);
    out += std::string(f.key) + " =";
    if (!value.empty()) out += " " + value;
    out += "\n";
  }
  return out;
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  std::size_t lineno = 0;
  std::string section;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(lineno, "unterminated section header");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      bool known = false;
      for (const Field& f : fields()) known = known || section == f.section;
      if (!known) throw ParseError(lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected 'key = value'");
    if (section.empty()) throw ParseError(lineno, "key outside of any section");
    const std::string key(trim(text.substr(0, eq)));
    const std::string_view value = trim(text.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : fields()) {
      if (section == f.section && key == f.key) field = &f;
    }
    if (!field) throw ParseError(lineno, "unknown key '" + key + "' in [" + section + "]");
    const std::string qualified = section + "." + key;
    for (const auto& s : seen) {
      if (s == qualified) throw ParseError(lineno, "duplicate key '" + key + "'");
    }
    seen.push_back(qualified);
    try {
      field->set(config, value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, key + ": " + e.what());
    }
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

void validate(const RunConfig& c) {
  std::vector<std::string> issues;
  const auto check = [&](bool ok, const char* msg) {
    if (!ok) issues.emplace_back(msg);
  };
  check(!c.data.empty(), "problem.data must name a file or a synthetic spec");
  if (is_synthetic_spec(c.data)) {
    try {
      (void)parse_synthetic_spec(c.data);
    } catch (const std::invalid_argument& e) {
      issues.emplace_back(e.what());
    }
  }
  check(!c.dimension || *c.dimension >= 1, "problem.dimension must be >= 1");
  check(c.weight >= 0.0, "regularizer.weight must be >= 0");
  if (c.regularizer == RegularizerKind::l1_box) {
    check(!c.radius || *c.radius > 0.0, "regularizer.radius must be > 0");
    check(c.radius || c.weight > 0.0, "l1_box without a radius needs weight > 0");
  }
  if (c.regularizer == RegularizerKind::mcp) {
    check(c.theta > 1.0, "regularizer.theta must be > 1");
    check(c.step != StepMode::fixed_convex, "fixed_convex step requires a convex regularizer");
  }
  check(c.c > 0.0 && c.c < 1.0, "solver.c must lie in (0, 1)");
  if (c.step == StepMode::line_search) {
    check(c.shrink > 0.0 && c.shrink < 1.0, "solver.shrink must lie in (0, 1)");
    check(!c.c1 || *c.c1 > 0.0, "solver.c1 must be > 0");
    check(!c.c2 || *c.c2 > 0.0, "solver.c2 must be > 0");
    check(c.noise == NoiseKind::none || c.noise_scale == 0.0,
          "line search is defined for noise-free runs only");
  }
  check(c.tol >= 0.0, "solver.tol must be >= 0");
  check(c.stagnation_tol >= 0.0, "solver.stagnation_tol must be >= 0");
  if (c.scheduler == SchedulerKind::synthetic_delay && c.scheme == Scheme::iag) {
    check(!c.delays.empty(), "synthetic_delay needs solver.delays");
  }
  if (c.scheme == Scheme::lag) {
    check(c.lag_hard_cap >= 1, "solver.lag_hard_cap must be >= 1");
    check(c.lag_hard_cap <= c.tau_bound.value_or(c.lag_hard_cap),
          "solver.lag_hard_cap exceeds solver.tau_bound");
    check(c.lag_theta >= 0.0, "solver.lag_theta must be >= 0");
    check(!c.lag_threshold || *c.lag_threshold >= 0.0, "solver.lag_threshold must be >= 0");
  }
  if (c.noise != NoiseKind::none) {
    check(c.noise_scale >= 0.0, "noise.scale must be >= 0");
    if (c.noise == NoiseKind::geometric) {
      check(c.noise_zeta > 0.0 && c.noise_zeta < 1.0, "noise.zeta must lie in (0, 1)");
    }
    if (c.noise == NoiseKind::power) check(c.noise_eta > 1.0, "noise.eta must be > 1");
  }
  check(c.cadence >= 1, "output.cadence must be >= 1");
  if (!issues.empty()) {
    std::string msg = "invalid run configuration:";
    for (const auto& s : issues) msg += "\n  - " + s;
    throw std::invalid_argument(msg);
  }
}

Dataset load_dataset(const RunConfig& config) {
  Dataset data;
  if (is_synthetic_spec(config.data)) {
    data = make_synthetic_data(parse_synthetic_spec(config.data)).data;
    if (config.dimension && *config.dimension != data.dimension) {
      throw std::invalid_argument("problem.dimension conflicts with the synthetic spec");
    }
  } else {
    const LabelMode mode = config.loss == LossKind::quadratic ? LabelMode::real : LabelMode::binary;
    data = load_libsvm(config.data, config.dimension, mode);
  }
  data = first_rows(data, config.subsample);
  if (config.scale) scale_max_abs(data);
  return data;
}

CompositeProblem build_problem(const RunConfig& config) {
  validate(config);
  const Dataset data = load_dataset(config);
  Regularizer reg;
  switch (config.regularizer) {
    case RegularizerKind::zero: reg = Regularizer::zero(); break;
    case RegularizerKind::l1: reg = Regularizer::l1(config.weight); break;
    case RegularizerKind::mcp: reg = Regularizer::mcp(config.weight, config.theta); break;
    case RegularizerKind::l1_box: {
      double radius = 0.0;
      if (config.radius) {
        radius = *config.radius;
      } else {
        // Losses are nonnegative, so w ||x*||_1 <= F(x*) <= F(0) = f(0).
        const CompositeProblem probe = build_problem(data, config.loss, Regularizer::zero());
        const Vector zero(data.dimension, 0.0);
        radius = probe.smooth_value(zero) / config.weight;
      }
      reg = Regularizer::l1_box(config.weight, radius);
      break;
    }
  }
  return build_problem(data, config.loss, reg);
}

SolverConfig solver_config(const RunConfig& c) {
  validate(c);
  SolverConfig s;
  s.aggregation.scheme = c.scheme;
  s.aggregation.scheduler = c.scheduler;
  s.aggregation.seed = c.seed;
  s.aggregation.delays = c.delays;
  s.aggregation.tau_bound = c.tau_bound;
  s.aggregation.lag.theta = c.lag_theta;
  s.aggregation.lag.constant_threshold = c.lag_threshold;
  s.aggregation.lag.hard_cap = c.lag_hard_cap;
  switch (c.noise) {
    case NoiseKind::none: s.noise = NoiseSchedule::none(); break;
    case NoiseKind::geometric:
      s.noise = NoiseSchedule::geometric(c.noise_scale, c.noise_zeta, c.noise_seed);
      break;
    case NoiseKind::power:
      s.noise = NoiseSchedule::power(c.noise_scale, c.noise_eta, c.noise_seed);
      break;
  }
  s.policy.mode = c.step;
  s.policy.c = c.c;
  s.policy.shrink = c.shrink;
  s.policy.c1 = c.c1;
  s.policy.c2 = c.c2;
  s.policy.j_max = c.j_max;
  s.budget = c.budget;
  s.tol = c.tol;
  s.stagnation_tol = c.stagnation_tol;
  return s;
}

}  // namespace piag

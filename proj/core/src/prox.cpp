#include "piag/prox.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace piag {

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::zero: return "zero";
    case RegularizerKind::l1: return "l1";
    case RegularizerKind::l1_box: return "l1_box";
    case RegularizerKind::mcp: return "mcp";
  }
  return "zero";
}

RegularizerKind regularizer_kind_from_string(std::string_view name) {
  if (name == "zero") return RegularizerKind::zero;
  if (name == "l1") return RegularizerKind::l1;
  if (name == "l1_box") return RegularizerKind::l1_box;
  if (name == "mcp") return RegularizerKind::mcp;
  throw std::invalid_argument("unknown regularizer kind '" + std::string(name) + "'");
}

Regularizer Regularizer::zero() { return Regularizer{}; }

Regularizer Regularizer::l1(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw std::invalid_argument("l1 weight must be finite and >= 0");
  }
  Regularizer r;
  r.kind_ = RegularizerKind::l1;
  r.weight_ = weight;
  return r;
}

Regularizer Regularizer::l1_box(double weight, double radius) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw std::invalid_argument("l1_box weight must be finite and >= 0");
  }
  if (!(radius > 0.0)) throw std::invalid_argument("l1_box radius must be > 0");
  Regularizer r;
  r.kind_ = RegularizerKind::l1_box;
  r.weight_ = weight;
  r.radius_ = radius;
  return r;
}

Regularizer Regularizer::mcp(double weight, double theta) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw std::invalid_argument("mcp weight must be finite and >= 0");
  }
  if (!(theta > 1.0) || !std::isfinite(theta)) throw std::invalid_argument("mcp theta must be > 1");
  Regularizer r;
  r.kind_ = RegularizerKind::mcp;
  r.weight_ = weight;
  r.theta_ = theta;
  return r;
}

double Regularizer::scalar_value(double t) const {
  const double a = std::fabs(t);
  switch (kind_) {
    case RegularizerKind::zero: return 0.0;
    case RegularizerKind::l1: return weight_ * a;
    case RegularizerKind::l1_box:
      return a > radius_ ? std::numeric_limits<double>::infinity() : weight_ * a;
    case RegularizerKind::mcp:
      if (a <= theta_ * weight_) return weight_ * a - t * t / (2.0 * theta_);
      return 0.5 * theta_ * weight_ * weight_;
  }
  return 0.0;
}

double Regularizer::value(std::span<const double> y) const {
  if (kind_ == RegularizerKind::zero) return 0.0;
  double s = 0.0;
  for (double t : y) s += scalar_value(t);
  return s;
}

namespace {

// Candidate stationary points of 1/2 (z - y)^2 + step * rho(y) for MCP, one
// per smooth piece, each clamped into its piece. The minimizer over the
// candidates is the global minimizer; ties go to the smaller |y|.
double mcp_prox(double z, double step, double w, double theta) {
  const double a = std::fabs(z);
  const double sign = z < 0.0 ? -1.0 : 1.0;
  const double knot = theta * w;
  const double shrink = 1.0 - step / theta;

  std::array<double, 3> cand{};
  std::size_t count = 0;
  cand[count++] = 0.0;
  // Inner piece, 0 < |y| <= theta w.
  const double inner = std::fmin((a - step * w) / shrink, knot);
  if (inner > 0.0) cand[count++] = sign * inner;
  // Outer piece, |y| >= theta w, where rho is constant.
  cand[count++] = sign * std::fmax(a, knot);

  auto objective = [&](double y) {
    const double d = z - y;
    const double ay = std::fabs(y);
    const double rho = ay <= knot ? w * ay - y * y / (2.0 * theta) : 0.5 * theta * w * w;
    return 0.5 * d * d + step * rho;
  };

  double best = cand[0];
  double best_val = objective(best);
  for (std::size_t c = 1; c < count; ++c) {
    const double val = objective(cand[c]);
    if (val < best_val || (val == best_val && std::fabs(cand[c]) < std::fabs(best))) {
      best = cand[c];
      best_val = val;
    }
  }
  return best;
}

}  // namespace

double Regularizer::scalar_prox(double z, double step) const {
  switch (kind_) {
    case RegularizerKind::zero: return z;
    case RegularizerKind::l1: return soft_threshold(z, step * weight_);
    case RegularizerKind::l1_box: {
      const double t = step * weight_;
      const double a = std::fabs(z);
      if (a <= t) return 0.0;
      const double m = std::fmin(a - t, radius_);
      return z < 0.0 ? -m : m;
    }
    case RegularizerKind::mcp: return mcp_prox(z, step, weight_, theta_);
  }
  return z;
}

void Regularizer::prox(std::span<const double> z, double step, std::span<double> out) const {
  if (!(step > 0.0)) throw std::invalid_argument("prox step must be > 0");
  if (out.size() != z.size()) throw std::invalid_argument("prox output has wrong dimension");
  if (kind_ == RegularizerKind::mcp && !(step < theta_)) {
    throw std::invalid_argument("mcp prox requires step < theta");
  }
  if (kind_ == RegularizerKind::zero || weight_ * step == 0.0) {
    if (kind_ != RegularizerKind::l1_box) {
      if (out.data() != z.data()) std::copy(z.begin(), z.end(), out.begin());
      return;
    }
  }
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = scalar_prox(z[j], step);
}

Vector prox(const Regularizer& reg, std::span<const double> z, double step) {
  Vector out(z.size());
  reg.prox(z, step, out);
  return out;
}

bool prox_l1_box_decomposition_check(std::span<const double> z, double weight, double radius,
                                     double step) {
  const Regularizer reg = Regularizer::l1_box(weight, radius);
  const Vector direct = prox(reg, z, step);
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double composed = clip(soft_threshold(z[j], step * weight), -radius, radius);
    if (!(composed == direct[j])) return false;
  }
  return true;
}

}  // namespace piag

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdca_admm {

enum class LossKind { SmoothedHinge, Logistic };

inline std::string_view to_string(LossKind k) {
  return k == LossKind::SmoothedHinge ? "smoothed_hinge" : "logistic";
}

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "smoothed_hinge" || s == "hinge") return LossKind::SmoothedHinge;
  if (s == "logistic") return LossKind::Logistic;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

class ProxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// s log s with 0 log 0 = 0
inline double xlogx(double s) { return s > 0.0 ? s * std::log(s) : 0.0; }

}  // namespace detail

/// f(u) for a sample with label +-1.
inline double loss_value(LossKind kind, double u, double label) {
  const double m = label * u;
  switch (kind) {
    case LossKind::SmoothedHinge:
      if (m >= 1.0) return 0.0;
      if (m < 0.0) return 0.5 - m;
      return 0.5 * (1.0 - m) * (1.0 - m);
    case LossKind::Logistic:
      // log(1 + exp(-m)) without overflow
      return std::log1p(std::exp(-std::abs(m))) + std::max(-m, 0.0);
  }
  return detail::kInf;
}

/// df/du. At the smoothed hinge kinks the middle-piece value is returned.
inline double loss_gradient(LossKind kind, double u, double label) {
  const double m = label * u;
  switch (kind) {
    case LossKind::SmoothedHinge:
      if (m > 1.0) return 0.0;
      if (m < 0.0) return -label;
      return -label * (1.0 - m);
    case LossKind::Logistic:
      return -label / (1.0 + std::exp(m));
  }
  return 0.0;
}

/// Convex conjugate f*(a). Both families live on a*label in [-1, 0];
/// +infinity is returned outside.
inline double loss_conjugate(LossKind kind, double a, double label) {
  const double s = a * label;
  if (!(s >= -1.0 && s <= 0.0)) return detail::kInf;
  switch (kind) {
    case LossKind::SmoothedHinge:
      return s + 0.5 * s * s;
    case LossKind::Logistic: {
      const double t = -s;
      return detail::xlogx(t) + detail::xlogx(1.0 - t);
    }
  }
  return detail::kInf;
}

namespace detail {

// argmin_x (C/2)(x - u)^2 + f*(x) for the logistic conjugate. With x = -label*s,
// s in (0,1) solves C(s + label*u) + log(s/(1-s)) = 0, which is strictly
// increasing in s and spans the reals, so a bracketed Newton iteration is safe.
inline double logistic_dual_prox(double u, double label, double c) {
  const double shift = label * u;
  if (!std::isfinite(shift)) throw ProxError("logistic prox: non-finite argument");
  double lo = 0.0;
  double hi = 1.0;
  double s = 0.5;
  for (int it = 0; it < 300; ++it) {
    const double phi = c * (s + shift) + std::log(s) - std::log1p(-s);
    if (phi > 0.0) hi = s; else lo = s;
    if (phi == 0.0 || hi - lo <= 1e-15) return -label * s;
    const double dphi = c + 1.0 / (s * (1.0 - s));
    const double step = phi / dphi;
    double next = s - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-13 * std::max(s, 1e-300)) return -label * next;
    s = next;
  }
  throw ProxError("logistic prox: no convergence for u=" + std::to_string(u) +
                  " C=" + std::to_string(c));
}

}  // namespace detail

/// prox(u | f* / C) = argmin_x (C/2)(x - u)^2 + f*(x), C > 0.
inline double prox_dual_loss(LossKind kind, double u, double label, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("prox_dual_loss: C must be positive");
  switch (kind) {
    case LossKind::SmoothedHinge: {
      const double t = (c * u * label - 1.0) / (1.0 + c);
      if (t >= -1.0 && t <= 0.0) return (c * u - label) / (1.0 + c);
      if (t < -1.0) return -label;
      if (std::isnan(t)) throw ProxError("smoothed hinge prox: NaN argument");
      return 0.0;
    }
    case LossKind::Logistic:
      return detail::logistic_dual_prox(u, label, c);
  }
  return 0.0;
}

/// Interval [lo, hi] forming the subdifferential of f* at a, for optimality
/// diagnostics. Empty domain points give an empty interval (lo > hi).
struct Interval {
  double lo;
  double hi;
  double distance(double v) const {
    if (lo > hi) return detail::kInf;
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  }
};

inline Interval loss_conjugate_subdifferential(LossKind kind, double a, double label) {
  const double s = a * label;
  if (!(s >= -1.0 && s <= 0.0)) return {1.0, -1.0};
  // domain in a: between -label and 0
  const double left = std::min(0.0, -label);
  const double right = std::max(0.0, -label);
  switch (kind) {
    case LossKind::SmoothedHinge: {
      const double g = label + a;
      return {a <= left ? -detail::kInf : g, a >= right ? detail::kInf : g};
    }
    case LossKind::Logistic: {
      const double t = -s;
      if (t <= 0.0 || t >= 1.0) return {1.0, -1.0};  // gradient unbounded at the ends
      const double g = -label * (std::log(t) - std::log1p(-t));
      return {g, g};
    }
  }
  return {1.0, -1.0};
}

}  // namespace sdca_admm

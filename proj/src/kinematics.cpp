#include "modalkin/kinematics.hpp"

#include "modalkin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace modalkin {

namespace {

Eigen::Vector2d tangent(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

Shape shape(const ModalModel& model, double q, int n) {
  if (n < 2) throw std::invalid_argument("shape: need at least 2 stations");
  const PressureSlice field(model, q);
  const int intervals = n - 1;
  const int panels = std::max(1, (quadrature::kDefaultPanels + intervals - 1) / intervals);
  const double ds = model.length / intervals;

  Shape out;
  out.extrapolated = !model.in_calibrated_range(q);
  out.stations.reserve(static_cast<std::size_t>(n));
  out.poses.reserve(static_cast<std::size_t>(n));

  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int k = 0; k < n; ++k) {
    const double s = (k == intervals) ? model.length : k * ds;
    if (k > 0) {
      const double a = (k - 1) * ds;
      p += quadrature::integrate(
          a, s, panels, [&](double u) -> Eigen::Vector2d { return tangent(field.theta(u)); },
          Eigen::Vector2d::Zero().eval());
    }
    out.stations.push_back(s);
    out.poses.push_back({p.x(), p.y(), wrap_angle(field.theta(s))});
  }
  return out;
}

PlanarPose tip_pose(const ModalModel& model, double q, int panels) {
  const PressureSlice field(model, q);
  const Eigen::Vector2d p = quadrature::integrate(
      0.0, model.length, panels,
      [&](double u) -> Eigen::Vector2d { return tangent(field.theta(u)); },
      Eigen::Vector2d::Zero().eval());
  return {p.x(), p.y(), wrap_angle(field.theta(model.length))};
}

PlanarPose pose_at(const ModalModel& model, double q, double s, int panels) {
  if (!(s >= 0.0 && s <= model.length)) {
    throw std::out_of_range("pose_at: arc length outside [0, L]");
  }
  const PressureSlice field(model, q);
  const Eigen::Vector2d p = quadrature::integrate(
      0.0, s, panels, [&](double u) -> Eigen::Vector2d { return tangent(field.theta(u)); },
      Eigen::Vector2d::Zero().eval());
  return {p.x(), p.y(), wrap_angle(field.theta(s))};
}

PlanarPose cc_pose(double kappa, double s) {
  if (s < 0.0) throw std::invalid_argument("cc_pose: arc length must be non-negative");
  const double angle = kappa * s;
  if (std::abs(angle) < 1e-8) {
    // series limit of the closed form; next terms are O(k^2 s^3)
    return {0.5 * kappa * s * s, s, angle};
  }
  // 1 - cos a written as 2 sin^2(a/2) to avoid cancellation for small a
  const double half = std::sin(0.5 * angle);
  return {2.0 * half * half / kappa, std::sin(angle) / kappa, angle};
}

ActuationJacobian jacobian(const ModalModel& model, double q, int panels) {
  const PressureSlice field(model, q);
  const Eigen::Vector2d d = quadrature::integrate(
      0.0, model.length, panels,
      [&](double u) -> Eigen::Vector2d {
        const double th = field.theta(u);
        return Eigen::Vector2d(-std::sin(th), std::cos(th)) * field.dtheta_dq(u);
      },
      Eigen::Vector2d::Zero().eval());
  return {d.x(), d.y(), field.dtheta_dq(model.length)};
}

PlanarTwist tip_twist(const ModalModel& model, double q, double qdot, int panels) {
  const ActuationJacobian j = jacobian(model, q, panels);
  return {j.dx * qdot, j.dz * qdot, j.dtheta * qdot};
}

ResolvedRatesResult resolved_rates(const ModalModel& model, const Eigen::Vector2d& target,
                                   double q0, const ResolvedRatesOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha <= 1.0)) {
    throw std::invalid_argument("resolved_rates: alpha must lie in (0, 1]");
  }
  if (!(options.tol > 0.0)) throw std::invalid_argument("resolved_rates: tol must be > 0");

  ResolvedRatesResult result;
  double q = q0;
  double best_err = std::numeric_limits<double>::infinity();
  std::vector<double> history;

  for (int i = 0;; ++i) {
    const PlanarPose tip = tip_pose(model, q);
    const Eigen::Vector2d e = target - tip.position();
    const double err = e.norm();
    result.trace.push_back({i, q, tip.x, tip.z, err});
    if (!model.in_calibrated_range(q)) result.extrapolated = true;
    if (!std::isfinite(err)) {
      result.status = ResolvedRatesStatus::Singular;
      break;
    }
    if (err < best_err) {
      best_err = err;
      result.q = q;
      result.error = err;
    }
    if (err <= options.tol) {
      result.status = ResolvedRatesStatus::Converged;
      break;
    }
    history.push_back(err);
    const auto n = static_cast<int>(history.size());
    if (n > options.stall_window) {
      const double before = history[static_cast<std::size_t>(n - 1 - options.stall_window)];
      if (before - err < options.stall_rel * before) {
        result.status = ResolvedRatesStatus::Stalled;
        break;
      }
    }
    if (i >= options.max_iter) {
      result.status = ResolvedRatesStatus::MaxIterations;
      break;
    }

    const Eigen::Vector2d J = jacobian(model, q).position();
    const double jj = J.squaredNorm();
    if (!(jj > 0.0) || !std::isfinite(jj)) {
      result.status = ResolvedRatesStatus::Singular;
      break;
    }
    const double damping = 1e-6 * std::sqrt(jj);
    q += J.dot(options.alpha * e) / (jj + damping * damping);
  }
  return result;
}

const char* to_string(ResolvedRatesStatus status) {
  switch (status) {
    case ResolvedRatesStatus::Converged: return "converged";
    case ResolvedRatesStatus::MaxIterations: return "max_iterations";
    case ResolvedRatesStatus::Stalled: return "stalled";
    case ResolvedRatesStatus::Singular: return "singular";
  }
  return "unknown";
}

}  // namespace modalkin

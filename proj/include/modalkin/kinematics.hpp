#pragma once

#include "modalkin/modal_basis.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace modalkin {

/// Position in the bending plane plus the backbone tangent angle there.
/// theta is measured from the base x-axis toward +z and wrapped to (-pi, pi].
struct PlanarPose {
  double x = 0.0;
  double z = 0.0;
  double theta = 0.0;

  Eigen::Vector2d position() const { return {x, z}; }
};

/// Tip velocity per step. omega is the in-plane rate d(theta)/dt, positive
/// when the tangent turns from +x toward +z. As a 3-D angular velocity in a
/// right-handed (x, y, z) frame this is (0, -omega, 0).
struct PlanarTwist {
  double vx = 0.0;
  double vz = 0.0;
  double omega = 0.0;

  Eigen::Vector2d velocity() const { return {vx, vz}; }
};

/// d(tip)/dq: position rows and the tip tangent rate.
struct ActuationJacobian {
  double dx = 0.0;
  double dz = 0.0;
  double dtheta = 0.0;

  Eigen::Vector2d position() const { return {dx, dz}; }
  double norm() const { return std::sqrt(dx * dx + dz * dz + dtheta * dtheta); }
};

double wrap_angle(double a);

struct Shape {
  std::vector<double> stations;  // arc lengths, LU
  std::vector<PlanarPose> poses;
  bool extrapolated = false;  // q outside the calibrated pressure span
};

/// Backbone poses at n equally spaced stations, integrating the tangent field
/// with composite Gauss-Legendre panels between stations.
Shape shape(const ModalModel& model, double q, int n);

/// Tip pose integrated over [0, L] with `panels` 5-point panels.
PlanarPose tip_pose(const ModalModel& model, double q, int panels = 20);

/// Pose at arc length s, integrating [0, s] with `panels` panels.
PlanarPose pose_at(const ModalModel& model, double q, double s, int panels = 20);

/// Closed-form constant-curvature pose at arc length s:
/// ((1 - cos ks)/k, sin(ks)/k, ks). This frame has the straight configuration
/// along +z, so compare against tangent-integrated shapes with x and z swapped.
/// The k -> 0 singularity is replaced by its series limit.
PlanarPose cc_pose(double kappa, double s);

ActuationJacobian jacobian(const ModalModel& model, double q, int panels = 20);

PlanarTwist tip_twist(const ModalModel& model, double q, double qdot, int panels = 20);

struct ResolvedRatesOptions {
  double alpha = 0.5;
  double tol = 1e-3;  // LU
  int max_iter = 500;
  int stall_window = 20;
  double stall_rel = 1e-12;
};

enum class ResolvedRatesStatus { Converged, MaxIterations, Stalled, Singular };

struct ResolvedRatesStep {
  int iter = 0;
  double q = 0.0;
  double x = 0.0;
  double z = 0.0;
  double err = 0.0;
};

struct ResolvedRatesResult {
  double q = 0.0;  // best iterate
  double error = 0.0;
  ResolvedRatesStatus status = ResolvedRatesStatus::MaxIterations;
  bool extrapolated = false;
  std::vector<ResolvedRatesStep> trace;

  bool converged() const { return status == ResolvedRatesStatus::Converged; }
};

/// Position-only resolved-rate inverse kinematics with the damped
/// pseudo-inverse of the 2x1 position Jacobian.
ResolvedRatesResult resolved_rates(const ModalModel& model, const Eigen::Vector2d& target,
                                   double q0, const ResolvedRatesOptions& options = {});

const char* to_string(ResolvedRatesStatus status);

}  // namespace modalkin

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <optional>

namespace modalkin {

/// Millimetres per pixel of the reference camera setup.
inline constexpr double kDefaultUnitScale = 0.2959;

/// Calibrated map from (arc length, pressure) to backbone tangent angle:
/// theta(s, q) = psi(s)^T A eta(q), monomial bases in s and q.
///
/// When `normalized` is set, A is expressed in the normalized arc coordinate
/// s / length, so psi is evaluated at s / length. Callers always pass s in
/// length units (LU).
struct ModalModel {
  Eigen::MatrixXd A;  // v x w, radians per basis product
  double length = 1.0;
  double unit_scale = kDefaultUnitScale;  // mm per LU
  bool normalized = true;
  // Pressure span seen during calibration; evaluation outside it is
  // extrapolation.
  std::optional<double> q_min;
  std::optional<double> q_max;

  ModalModel() = default;
  ModalModel(Eigen::MatrixXd coefficients, double arc_length, bool normalized_arc = true,
             double mm_per_lu = kDefaultUnitScale);

  int v() const { return static_cast<int>(A.rows()); }
  int w() const { return static_cast<int>(A.cols()); }

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;

  /// Argument handed to psi for a physical arc length.
  double arc_coordinate(double s) const { return normalized ? s / length : s; }
  /// d(arc_coordinate)/ds.
  double arc_scale() const { return normalized ? 1.0 / length : 1.0; }

  bool in_calibrated_range(double q) const;
};

Eigen::VectorXd psi(double s, int v);
Eigen::VectorXd eta(double q, int w);
Eigen::VectorXd deta_dq(double q, int w);

/// Tangent angle at arc length s (LU) and pressure q (Psi). Rejects s outside
/// [0, L].
double theta(const ModalModel& model, double s, double q);
double dtheta_dq(const ModalModel& model, double s, double q);
double dtheta_ds(const ModalModel& model, double s, double q);

/// The modal field collapsed at one pressure: polynomials in the arc
/// coordinate for theta and for d theta / dq. Hot loops (quadrature, ramp
/// sweeps) evaluate through this to avoid rebuilding eta at every node.
///
/// Arguments are arc offsets u in LU measured from wherever the polynomial is
/// anchored; no range check is applied.
class PressureSlice {
 public:
  PressureSlice(const ModalModel& model, double q);

  double q() const { return q_; }
  double theta(double u) const { return horner(angle_, u); }
  double dtheta_dq(double u) const { return horner(rate_, u); }
  double dtheta_ds(double u) const { return horner_derivative(angle_, u) * scale_; }
  double d2theta_ds_dq(double u) const { return horner_derivative(rate_, u) * scale_; }

 private:
  double horner(const Eigen::VectorXd& c, double u) const;
  double horner_derivative(const Eigen::VectorXd& c, double u) const;

  Eigen::VectorXd angle_;  // A * eta(q)
  Eigen::VectorXd rate_;   // A * deta_dq(q)
  double scale_;
  double q_;
};

void to_json(nlohmann::json& j, const ModalModel& model);
void from_json(const nlohmann::json& j, ModalModel& model);

}  // namespace modalkin

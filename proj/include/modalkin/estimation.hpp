#pragma once

#include "modalkin/centrode.hpp"
#include "modalkin/contact.hpp"
#include "modalkin/kernels.hpp"
#include "modalkin/modal_basis.hpp"
#include "modalkin/simulation.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <optional>
#include <span>
#include <vector>

namespace modalkin {

/// Contact-location estimation problem. The ramp starts at the contact onset
/// pressure; `sensed` holds one centrode sample per ramp pressure.
struct EstimationProblem {
  ModalModel model;
  Ramp ramp;
  CentrodeTrace sensed;
  Eigen::Matrix2d W = Eigen::Matrix2d::Identity();
  double s0 = 0.0;
  double s_min = 0.0;
  double s_max = 0.0;
  // Measured tip at the end of the ramp, for the task-space error report.
  std::optional<Eigen::Vector2d> sensed_end_tip;
  // Down-weight samples whose sensed centrode moves fast between steps.
  bool speed_weighting = false;
  DistalBlend blend = DistalBlend::OnsetPreserving;

  /// Bounds default to [0.01 L, 0.99 L] when left at zero.
  void validate() const;
  double lower() const;
  double upper() const;
};

/// Model centrode along the ramp for a hypothesized contact location, onset
/// at ramp.start. Sample k carries t = k.
CentrodeTrace predicted_centrode(const ModalModel& model, double s_c, const Ramp& ramp,
                                 DistalBlend blend = DistalBlend::OnsetPreserving,
                                 Exec exec = Exec::Serial);

enum class GradientMethod { FiniteDifference, Analytic };

struct CentrodeGradient {
  std::vector<Eigen::Vector2d> d;  // d c_m / d s_c per sample
  std::vector<bool> valid;
  bool one_sided = false;  // finite differences fell back to a one-sided stencil
};

/// Finite differences use step max(1e-3 L, 0.01 LU), one-sided when a
/// central stencil would leave [lo, hi]. The analytic path chains
/// dc/dP, dc/dPdot and dc/domega through the contact sensitivities.
CentrodeGradient centrode_gradient(const ModalModel& model, double s_c, const Ramp& ramp,
                                   GradientMethod method = GradientMethod::FiniteDifference,
                                   DistalBlend blend = DistalBlend::OnsetPreserving,
                                   double lo = 0.0, double hi = 0.0, Exec exec = Exec::Serial);

struct EstimationOptions {
  int max_iter = 100;
  double lambda0 = 1e-3;
  double step_tol = 1e-3;  // LU
  double rel_tol = 1e-10;
  GradientMethod gradient = GradientMethod::FiniteDifference;
  Exec exec = Exec::Serial;
};

struct EstimationIterate {
  int iter = 0;
  double s_c = 0.0;
  double objective = 0.0;
};

struct EstimationReport {
  double s_c = 0.0;
  int iterations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::optional<double> end_tip_error;  // LU
  bool converged = false;
  std::size_t samples_used = 0;
  std::vector<EstimationIterate> trace;  // accepted iterates, starting with s0
};

/// 1/2 sum_k (c_s - c_m)^T W_k (c_s - c_m) over samples valid on both sides.
double objective(const EstimationProblem& problem, double s_c, Exec exec = Exec::Serial);

/// Levenberg-Marquardt on the scalar s_c, projected onto the bounds.
EstimationReport estimate_contact(const EstimationProblem& problem,
                                  const EstimationOptions& options = {});

/// Objective at every grid point.
std::vector<double> objective_grid(const EstimationProblem& problem, std::span<const double> grid,
                                   Exec exec = Exec::Serial);

/// Grid point with the smallest objective; ties go to the smaller s_c.
double grid_oracle(const EstimationProblem& problem, std::span<const double> grid,
                   Exec exec = Exec::Serial);

void to_json(nlohmann::json& j, const EstimationReport& report);

}  // namespace modalkin

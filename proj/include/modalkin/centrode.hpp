#pragma once

#include "modalkin/kinematics.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace modalkin {

/// Angular rate below which the instant center is reported invalid.
inline constexpr double kOmegaEpsilon = 1e-9;

/// Instant center of rotation of the tip in the fixed frame.
struct CentrodePoint {
  double x = 0.0;
  double z = 0.0;
  bool valid = false;
  std::int64_t t = 0;

  Eigen::Vector2d position() const { return {x, z}; }
};

using CentrodeTrace = std::vector<CentrodePoint>;

struct PoseSample {
  std::int64_t t = 0;
  double q = 0.0;
  PlanarPose pose;
};

/// c = P + rot90(Pdot) / omega, rot90 turning +x toward +z. Identical to
/// Omega (Pdot - Omega P) / (w^T w) for the 3-D angular velocity
/// w = (0, -omega, 0) of a motion in the x-z plane.
CentrodePoint fixed_centrode(const Eigen::Vector2d& position, const PlanarTwist& twist,
                             std::int64_t t = 0, double omega_eps = kOmegaEpsilon);

/// Centrode from a uniformly stepped pose stream: central differences inside,
/// four-point one-sided differences at both ends (three-point for a
/// three-sample stream), angular rate from the unwrapped tangent angle.
CentrodeTrace centrode_from_stream(std::span<const PoseSample> samples,
                                   double omega_eps = kOmegaEpsilon);

struct Detection {
  bool detected = false;
  std::size_t onset_index = 0;
  std::int64_t onset_t = -1;
  double max_deviation = 0.0;
  std::vector<double> deviation;  // per sample, NaN where either side is invalid
};

/// Contact is declared at the first run of `window` consecutive samples whose
/// sensed/model centrode distance exceeds xi; an invalid sample breaks a run.
Detection fcd_detect(const CentrodeTrace& sensed, const CentrodeTrace& model, double xi,
                     int window = 3);

struct IsaDifference {
  std::vector<double> series;  // NaN where either side is invalid
  double max = 0.0;
  std::size_t argmax = 0;
};

IsaDifference isa_difference(const CentrodeTrace& contact, const CentrodeTrace& free);

/// Detection threshold from a contact-free run: `factor` times the 95th
/// percentile of sensed/model centrode distances.
double noise_floor_threshold(const CentrodeTrace& sensed_free, const CentrodeTrace& model_free,
                             double factor = 3.0);

void to_json(nlohmann::json& j, const Detection& d);

}  // namespace modalkin

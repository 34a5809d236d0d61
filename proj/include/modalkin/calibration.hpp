#pragma once

#include "modalkin/modal_basis.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace modalkin {

/// One annotated backbone: ordered base -> tip points (x, z) in LU.
struct AnnotatedBackbone {
  double pressure = 0.0;
  std::vector<Eigen::Vector2d> points;
};

struct TangentSamples {
  std::vector<double> s;      // cumulative chord length, starts at 0
  std::vector<double> theta;  // unwrapped tangent angle, radians
};

/// Arc-length stations and tangent angles for an ordered point list.
///
/// Each tangent comes from the circular arc through the station and its two
/// neighbours (the first and last station use the arc through the two
/// nearest points on one side), so points taken from a circle reproduce its
/// tangents exactly. Angles are unwrapped along the backbone.
TangentSamples tangents_from_points(std::span<const Eigen::Vector2d> points);

struct DesignMatrices {
  Eigen::MatrixXd omega;  // g x v, row i = psi(s_i)^T
  Eigen::MatrixXd gamma;  // w x z, column j = eta(q_j)
};

DesignMatrices build_design_matrices(std::span<const double> s, std::span<const double> q,
                                     int v, int w);

/// Tangent-angle samples on a grid shared by all pressures, plus the raw
/// annotations they were derived from (when they exist).
struct CalibrationDataset {
  std::vector<double> pressures;  // z values, ascending
  std::vector<double> stations;   // g values, 0 = s_0 < ... < s_{g-1} = L
  Eigen::MatrixXd angles;         // g x z, angles(i, j) = theta(s_i, q_j)

  // Present when built from annotations; per-pressure arc positions are
  // rescaled to the common length.
  std::vector<AnnotatedBackbone> backbones;
  std::vector<std::vector<double>> backbone_stations;

  double length() const { return stations.empty() ? 0.0 : stations.back(); }
  bool has_backbones() const { return !backbones.empty(); }

  /// Throws std::invalid_argument on any broken invariant.
  void validate() const;

  /// Derives tangents per backbone, rescales each backbone's chord length to
  /// the mean length (the backbone is inextensible), and interpolates every
  /// pressure onto `g` equally spaced stations (default: the smallest point
  /// count among the backbones).
  static CalibrationDataset from_backbones(std::vector<AnnotatedBackbone> backbones, int g = 0);

  /// angles(i, j) belongs to stations[i] and pressures[j]; columns are
  /// reordered by ascending pressure.
  static CalibrationDataset from_samples(std::vector<double> stations,
                                         std::vector<double> pressures, Eigen::MatrixXd angles);
};

/// Parse error carrying the offending 1-based line number (0 when the error
/// is not tied to a line).
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& message, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads `pressure_psi,point_index,x,z` rows into backbones sorted by
/// pressure and point index.
std::vector<AnnotatedBackbone> read_calibration_csv(std::istream& in);
std::vector<AnnotatedBackbone> load_calibration_csv(const std::string& path);

struct PressureResidual {
  double q = 0.0;
  double max_theta_err_rad = 0.0;
  std::optional<double> max_tip_err_mm;
  std::optional<double> max_backbone_err_mm;
};

struct FitReport {
  std::vector<PressureResidual> per_pressure;
  double conditioning = 0.0;  // 2-norm condition number of the stacked system
  double max_base_angle_rad = 0.0;
  bool base_angle_flag = false;  // |theta(0, q_j)| above 0.01 rad somewhere

  /// Largest backbone-point error over all pressures, mm (0 without
  /// annotations).
  double max_backbone_err_mm() const;
  /// Pressure at which the largest backbone-point error occurs.
  double worst_pressure() const;
};

struct FitResult {
  ModalModel model;
  FitReport report;
};

/// Thrown when the stacked Kronecker system cannot determine every
/// coefficient. `directions` lists the undetermined (psi power, eta power)
/// pairs.
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(const std::string& message, std::vector<std::pair<int, int>> directions);
  const std::vector<std::pair<int, int>>& directions() const { return directions_; }

 private:
  std::vector<std::pair<int, int>> directions_;
};

inline constexpr double kBaseAngleTolerance = 0.01;

/// Least-squares modal coefficients for the dataset, solving
/// (Gamma^T kron Omega) vec(A) = vec(Phi) with column-pivoted QR. The fit is
/// carried out in the normalized arc coordinate s / L.
FitResult fit_modal(const CalibrationDataset& dataset, int v = 3, int w = 3,
                    double unit_scale = kDefaultUnitScale);

void to_json(nlohmann::json& j, const FitReport& report);

}  // namespace modalkin

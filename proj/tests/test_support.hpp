#pragma once

#include "modalkin/calibration.hpp"
#include "modalkin/modal_basis.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

namespace modalkin::testing {

inline std::string data_path(const std::string& name) {
  return std::string(MODALKIN_DATA_DIR) + "/" + name;
}

/// Model fitted to the bundled 5-pressure annotation set (cached).
inline const FitResult& bellow_fit() {
  static const FitResult fit =
      fit_modal(CalibrationDataset::from_backbones(load_calibration_csv(
          data_path("bellow_calibration.csv"))));
  return fit;
}

inline const ModalModel& bellow_model() { return bellow_fit().model; }

/// theta = kappa * s, written in the unnormalized coefficient layout.
inline ModalModel constant_curvature_model(double kappa, double length) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 1);
  A(1, 0) = kappa;
  return ModalModel(A, length, false);
}

/// theta = kappa0 * s * q (the single s.q basis product).
inline ModalModel bilinear_model(double kappa0, double length) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(1, 1) = kappa0;
  return ModalModel(A, length, false);
}

/// A model calibrated from a randomly drawn bending law, sampled on 10
/// stations x 5 pressures with small angle noise.
inline ModalModel random_calibrated_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> length_dist(150.0, 500.0);
  std::uniform_real_distribution<double> gain(0.03, 0.09);
  std::uniform_real_distribution<double> curve(-0.0015, 0.0025);
  std::uniform_real_distribution<double> bias(-0.4, 0.4);
  std::normal_distribution<double> noise(0.0, 2e-3);

  const double L = length_dist(rng);
  const double a = gain(rng), b = curve(rng), c = bias(rng);
  std::vector<double> stations, pressures{0.0, 6.0, 10.0, 15.0, 21.0};
  for (int i = 0; i < 10; ++i) stations.push_back(L * i / 9.0);
  Eigen::MatrixXd angles(10, 5);
  for (int i = 0; i < 10; ++i) {
    const double u = stations[i] / L;
    for (int j = 0; j < 5; ++j) {
      const double q = pressures[j];
      const double tip = a * q + b * q * q;
      angles(i, j) = tip * (u + c * u * (1.0 - u)) + noise(rng);
    }
  }
  return fit_modal(CalibrationDataset::from_samples(stations, pressures, angles)).model;
}

inline double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double scale = want.norm();
  return scale == 0.0 ? got.norm() : (got - want).norm() / scale;
}

}  // namespace modalkin::testing

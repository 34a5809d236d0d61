#include "modalkin/calibration.hpp"

#include "modalkin/io.hpp"
#include "modalkin/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace modalkin {

namespace {

double angle_of(const Eigen::Vector2d& d) { return std::atan2(d.y(), d.x()); }

struct ArcTangents {
  double first;
  double middle;
  double last;
};

// Tangent angles at a, b, c of the circle through the three points; the
// straight line when they are collinear.
ArcTangents arc_tangents(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                         const Eigen::Vector2d& c) {
  const Eigen::Vector2d d1 = b - a;
  const Eigen::Vector2d d2 = c - b;
  const double l1 = d1.norm();
  const double l2 = d2.norm();
  const double l13 = (c - a).norm();
  const double cross = d1.x() * d2.y() - d1.y() * d2.x();
  const double curvature = l13 > 0.0 ? 2.0 * cross / (l1 * l2 * l13) : 0.0;
  const double half1 = std::asin(std::clamp(0.5 * curvature * l1, -1.0, 1.0));
  const double half2 = std::asin(std::clamp(0.5 * curvature * l2, -1.0, 1.0));
  const double a1 = angle_of(d1);
  const double a2 = angle_of(d2);
  const double from_first = a1 + half1;
  const double from_second = a2 - half2;
  return {a1 - half1, from_first + 0.5 * wrap_angle(from_second - from_first), a2 + half2};
}

// Quadratic Lagrange interpolation through the three samples nearest x.
double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const std::size_t n = xs.size();
  if (n == 1) return ys[0];
  if (n == 2) {
    const double t = (x - xs[0]) / (xs[1] - xs[0]);
    return ys[0] + t * (ys[1] - ys[0]);
  }
  auto it = std::lower_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(std::distance(xs.begin(), it));
  std::size_t lo = hi == 0 ? 0 : hi - 1;
  if (hi >= n) lo = n - 2;
  // widen [lo, lo+1] to three points, toward the nearer side
  std::size_t start = lo;
  if (lo + 2 >= n) {
    start = n - 3;
  } else if (lo > 0 && (x - xs[lo]) < (xs[lo + 1] - x)) {
    start = lo - 1;
  }
  const double x0 = xs[start], x1 = xs[start + 1], x2 = xs[start + 2];
  const double l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
  const double l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
  const double l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
  return l0 * ys[start] + l1 * ys[start + 1] + l2 * ys[start + 2];
}

Eigen::Vector2d position_at(const ModalModel& model, double q, double s) {
  if (s <= 0.0) return Eigen::Vector2d::Zero();
  return pose_at(model, q, std::min(s, model.length)).position();
}

}  // namespace

TangentSamples tangents_from_points(std::span<const Eigen::Vector2d> points) {
  const std::size_t n = points.size();
  if (n < 3) {
    throw std::invalid_argument("tangents_from_points: need at least 3 points, got " +
                                std::to_string(n));
  }
  TangentSamples out;
  out.s.resize(n);
  out.theta.resize(n);
  out.s[0] = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double seg = (points[k] - points[k - 1]).norm();
    if (!(seg > 0.0)) {
      throw std::invalid_argument("tangents_from_points: duplicate consecutive points at index " +
                                  std::to_string(k));
    }
    out.s[k] = out.s[k - 1] + seg;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 0) {
      out.theta[k] = arc_tangents(points[0], points[1], points[2]).first;
    } else if (k == n - 1) {
      out.theta[k] = arc_tangents(points[n - 3], points[n - 2], points[n - 1]).last;
    } else {
      out.theta[k] = arc_tangents(points[k - 1], points[k], points[k + 1]).middle;
    }
  }
  for (std::size_t k = 1; k < n; ++k) {
    out.theta[k] = out.theta[k - 1] + wrap_angle(out.theta[k] - out.theta[k - 1]);
  }
  return out;
}

DesignMatrices build_design_matrices(std::span<const double> s, std::span<const double> q,
                                     int v, int w) {
  if (v < 1 || w < 1) throw std::invalid_argument("build_design_matrices: orders must be >= 1");
  if (s.empty() || q.empty()) {
    throw std::invalid_argument("build_design_matrices: sample lists must be nonempty");
  }
  DesignMatrices out;
  out.omega.resize(static_cast<Eigen::Index>(s.size()), v);
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.omega.row(static_cast<Eigen::Index>(i)) = psi(s[i], v).transpose();
  }
  out.gamma.resize(w, static_cast<Eigen::Index>(q.size()));
  for (std::size_t j = 0; j < q.size(); ++j) {
    out.gamma.col(static_cast<Eigen::Index>(j)) = eta(q[j], w);
  }
  return out;
}

void CalibrationDataset::validate() const {
  if (pressures.size() < 2) throw std::invalid_argument("dataset: need at least 2 pressures");
  if (stations.size() < 2) throw std::invalid_argument("dataset: need at least 2 stations");
  if (angles.rows() != static_cast<Eigen::Index>(stations.size()) ||
      angles.cols() != static_cast<Eigen::Index>(pressures.size())) {
    throw std::invalid_argument("dataset: angle matrix is " + std::to_string(angles.rows()) + "x" +
                                std::to_string(angles.cols()) + ", expected " +
                                std::to_string(stations.size()) + "x" +
                                std::to_string(pressures.size()));
  }
  if (stations.front() != 0.0) throw std::invalid_argument("dataset: first station must be 0");
  for (std::size_t i = 1; i < stations.size(); ++i) {
    if (!(stations[i] > stations[i - 1])) {
      throw std::invalid_argument("dataset: stations must strictly increase");
    }
  }
  for (std::size_t j = 1; j < pressures.size(); ++j) {
    if (!(pressures[j] > pressures[j - 1])) {
      throw std::invalid_argument("dataset: pressures must strictly increase");
    }
  }
  if (!angles.allFinite()) throw std::invalid_argument("dataset: non-finite angle");
  if (!backbones.empty() && backbones.size() != pressures.size()) {
    throw std::invalid_argument("dataset: backbone count does not match pressure count");
  }
}

CalibrationDataset CalibrationDataset::from_backbones(std::vector<AnnotatedBackbone> backbones,
                                                      int g) {
  if (backbones.size() < 2) throw std::invalid_argument("dataset: need at least 2 pressures");
  std::sort(backbones.begin(), backbones.end(),
            [](const auto& a, const auto& b) { return a.pressure < b.pressure; });

  std::vector<TangentSamples> samples;
  samples.reserve(backbones.size());
  std::size_t min_points = backbones.front().points.size();
  double total = 0.0;
  for (const auto& b : backbones) {
    samples.push_back(tangents_from_points(b.points));
    total += samples.back().s.back();
    min_points = std::min(min_points, b.points.size());
  }
  const double length = total / static_cast<double>(backbones.size());
  const int stations = g > 0 ? g : static_cast<int>(min_points);
  if (stations < 2) throw std::invalid_argument("dataset: need at least 2 stations");

  CalibrationDataset out;
  out.stations.resize(static_cast<std::size_t>(stations));
  for (int i = 0; i < stations; ++i) {
    out.stations[static_cast<std::size_t>(i)] =
        (i == stations - 1) ? length : length * i / (stations - 1);
  }
  out.angles.resize(stations, static_cast<Eigen::Index>(backbones.size()));
  for (std::size_t j = 0; j < backbones.size(); ++j) {
    auto& ts = samples[j];
    const double scale = length / ts.s.back();
    for (double& s : ts.s) s *= scale;
    for (int i = 0; i < stations; ++i) {
      out.angles(i, static_cast<Eigen::Index>(j)) =
          interpolate(ts.s, ts.theta, out.stations[static_cast<std::size_t>(i)]);
    }
    out.pressures.push_back(backbones[j].pressure);
    out.backbone_stations.push_back(ts.s);
  }
  out.backbones = std::move(backbones);
  out.validate();
  return out;
}

CalibrationDataset CalibrationDataset::from_samples(std::vector<double> stations,
                                                    std::vector<double> pressures,
                                                    Eigen::MatrixXd angles) {
  CalibrationDataset out;
  out.stations = std::move(stations);
  if (angles.cols() != static_cast<Eigen::Index>(pressures.size())) {
    out.pressures = std::move(pressures);
    out.angles = std::move(angles);
    out.validate();  // reports the shape mismatch
  }
  std::vector<std::size_t> order(pressures.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pressures[a] < pressures[b]; });
  out.angles.resize(angles.rows(), angles.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    out.pressures.push_back(pressures[order[j]]);
    out.angles.col(static_cast<Eigen::Index>(j)) = angles.col(static_cast<Eigen::Index>(order[j]));
  }
  out.validate();
  return out;
}

CsvError::CsvError(const std::string& message, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

std::vector<AnnotatedBackbone> read_calibration_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw CsvError("empty calibration CSV", 0);
  ++line_no;
  const auto header = csv::split(csv::trim(line));
  const std::vector<std::string> expected = {"pressure_psi", "point_index", "x", "z"};
  if (header != expected) {
    throw CsvError("expected header pressure_psi,point_index,x,z", line_no);
  }

  std::map<double, std::map<long, Eigen::Vector2d>> grouped;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = csv::trim(line);
    if (row.empty()) continue;
    const auto fields = csv::split(row);
    if (fields.size() != 4) {
      throw CsvError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
    }
    double q = 0.0, x = 0.0, z = 0.0;
    long index = 0;
    if (!csv::parse(fields[0], q) || !csv::parse(fields[1], index) || !csv::parse(fields[2], x) ||
        !csv::parse(fields[3], z)) {
      throw CsvError("malformed number", line_no);
    }
    auto& points = grouped[q];
    if (!points.emplace(index, Eigen::Vector2d(x, z)).second) {
      throw CsvError("duplicate point_index " + std::to_string(index), line_no);
    }
  }
  if (grouped.empty()) throw CsvError("calibration CSV has no data rows", line_no);

  std::vector<AnnotatedBackbone> out;
  for (const auto& [q, points] : grouped) {
    AnnotatedBackbone b;
    b.pressure = q;
    for (const auto& [index, p] : points) b.points.push_back(p);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<AnnotatedBackbone> load_calibration_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_calibration_csv(in);
}

RankDeficientError::RankDeficientError(const std::string& message,
                                       std::vector<std::pair<int, int>> directions)
    : std::runtime_error(message), directions_(std::move(directions)) {}

double FitReport::max_backbone_err_mm() const {
  double worst = 0.0;
  for (const auto& r : per_pressure) worst = std::max(worst, r.max_backbone_err_mm.value_or(0.0));
  return worst;
}

double FitReport::worst_pressure() const {
  double worst = -1.0;
  double q = per_pressure.empty() ? 0.0 : per_pressure.front().q;
  for (const auto& r : per_pressure) {
    const double e = r.max_backbone_err_mm.value_or(r.max_theta_err_rad);
    if (e > worst) {
      worst = e;
      q = r.q;
    }
  }
  return q;
}

FitResult fit_modal(const CalibrationDataset& dataset, int v, int w, double unit_scale) {
  dataset.validate();
  if (v < 1 || w < 1) throw std::invalid_argument("fit_modal: orders must be >= 1");
  const auto g = static_cast<Eigen::Index>(dataset.stations.size());
  const auto z = static_cast<Eigen::Index>(dataset.pressures.size());
  const double length = dataset.length();

  auto all_directions = [&] {
    std::vector<std::pair<int, int>> d;
    for (int j = 0; j < w; ++j)
      for (int i = 0; i < v; ++i) d.emplace_back(i, j);
    return d;
  };
  if (g * z < static_cast<Eigen::Index>(v) * w) {
    throw RankDeficientError("fit_modal: " + std::to_string(g * z) + " samples cannot determine " +
                                 std::to_string(v * w) + " coefficients",
                             all_directions());
  }

  std::vector<double> unit_s(dataset.stations.size());
  std::transform(dataset.stations.begin(), dataset.stations.end(), unit_s.begin(),
                 [&](double s) { return s / length; });
  const DesignMatrices dm = build_design_matrices(unit_s, dataset.pressures, v, w);

  // vec(Omega A Gamma) = (Gamma^T kron Omega) vec(A), column-major vec
  Eigen::MatrixXd system(g * z, static_cast<Eigen::Index>(v) * w);
  for (Eigen::Index j = 0; j < z; ++j)
    for (Eigen::Index c = 0; c < w; ++c)
      system.block(j * g, c * v, g, v) = dm.gamma(c, j) * dm.omega;
  const Eigen::VectorXd rhs = dataset.angles.reshaped();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
  qr.setThreshold(1e-12);
  if (qr.rank() < system.cols()) {
    std::vector<std::pair<int, int>> missing;
    std::ostringstream names;
    for (Eigen::Index k = qr.rank(); k < system.cols(); ++k) {
      const auto col = static_cast<int>(qr.colsPermutation().indices()[k]);
      missing.emplace_back(col % v, col / v);
      names << (missing.size() > 1 ? ", " : "") << "s^" << col % v << "*q^" << col / v;
    }
    throw RankDeficientError("fit_modal: rank " + std::to_string(qr.rank()) + " < " +
                                 std::to_string(system.cols()) +
                                 "; undetermined basis directions: " + names.str(),
                             std::move(missing));
  }
  const Eigen::VectorXd solution = qr.solve(rhs);

  FitResult result;
  result.model = ModalModel(solution.reshaped(v, w), length, true, unit_scale);
  result.model.q_min = dataset.pressures.front();
  result.model.q_max = dataset.pressures.back();

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(system);
  const auto& sv = svd.singularValues();
  result.report.conditioning = sv(0) / sv(sv.size() - 1);

  const ModalModel& model = result.model;
  for (Eigen::Index j = 0; j < z; ++j) {
    const double q = dataset.pressures[static_cast<std::size_t>(j)];
    PressureResidual r;
    r.q = q;
    for (Eigen::Index i = 0; i < g; ++i) {
      const double predicted = theta(model, dataset.stations[static_cast<std::size_t>(i)], q);
      r.max_theta_err_rad = std::max(r.max_theta_err_rad, std::abs(predicted - dataset.angles(i, j)));
    }
    if (dataset.has_backbones()) {
      const auto& pts = dataset.backbones[static_cast<std::size_t>(j)].points;
      const auto& st = dataset.backbone_stations[static_cast<std::size_t>(j)];
      double worst = 0.0;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        worst = std::max(worst, (position_at(model, q, st[k]) - pts[k]).norm());
      }
      r.max_backbone_err_mm = worst * unit_scale;
      r.max_tip_err_mm = (tip_pose(model, q).position() - pts.back()).norm() * unit_scale;
    }
    const double base = std::abs(theta(model, 0.0, q));
    result.report.max_base_angle_rad = std::max(result.report.max_base_angle_rad, base);
    result.report.per_pressure.push_back(r);
  }
  result.report.base_angle_flag = result.report.max_base_angle_rad > kBaseAngleTolerance;
  return result;
}

void to_json(nlohmann::json& j, const FitReport& report) {
  auto rows = nlohmann::json::array();
  for (const auto& r : report.per_pressure) {
    nlohmann::json row{{"q", r.q}, {"max_theta_err_rad", r.max_theta_err_rad}};
    row["max_tip_err_mm"] = r.max_tip_err_mm ? nlohmann::json(*r.max_tip_err_mm) : nullptr;
    row["max_backbone_err_mm"] =
        r.max_backbone_err_mm ? nlohmann::json(*r.max_backbone_err_mm) : nullptr;
    rows.push_back(std::move(row));
  }
  j = nlohmann::json{{"per_pressure", std::move(rows)},
                     {"conditioning", report.conditioning},
                     {"max_base_angle_rad", report.max_base_angle_rad},
                     {"base_angle_flag", report.base_angle_flag}};
}

}  // namespace modalkin

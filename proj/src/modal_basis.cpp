#include "modalkin/modal_basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace modalkin {

namespace {

void require_order(int order, const char* what) {
  if (order < 1) {
    throw std::invalid_argument(std::string(what) + ": basis order must be >= 1, got " +
                                std::to_string(order));
  }
}

void require_station(const ModalModel& model, double s) {
  if (!(s >= 0.0 && s <= model.length)) {
    throw std::out_of_range("arc length " + std::to_string(s) + " outside [0, " +
                            std::to_string(model.length) + "]");
  }
}

}  // namespace

ModalModel::ModalModel(Eigen::MatrixXd coefficients, double arc_length, bool normalized_arc,
                       double mm_per_lu)
    : A(std::move(coefficients)),
      length(arc_length),
      unit_scale(mm_per_lu),
      normalized(normalized_arc) {
  validate();
}

void ModalModel::validate() const {
  if (A.rows() < 1 || A.cols() < 1) {
    throw std::invalid_argument("ModalModel: coefficient matrix must be at least 1x1");
  }
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw std::invalid_argument("ModalModel: arc length must be positive and finite");
  }
  if (!(unit_scale > 0.0)) {
    throw std::invalid_argument("ModalModel: unit scale must be positive");
  }
  if (!A.allFinite()) {
    throw std::invalid_argument("ModalModel: non-finite coefficient");
  }
}

bool ModalModel::in_calibrated_range(double q) const {
  if (q_min && q < *q_min) return false;
  if (q_max && q > *q_max) return false;
  return true;
}

Eigen::VectorXd psi(double s, int v) {
  require_order(v, "psi");
  Eigen::VectorXd out(v);
  double p = 1.0;
  for (int k = 0; k < v; ++k) {
    out[k] = p;
    p *= s;
  }
  return out;
}

Eigen::VectorXd eta(double q, int w) {
  require_order(w, "eta");
  Eigen::VectorXd out(w);
  double p = 1.0;
  for (int k = 0; k < w; ++k) {
    out[k] = p;
    p *= q;
  }
  return out;
}

Eigen::VectorXd deta_dq(double q, int w) {
  require_order(w, "deta_dq");
  Eigen::VectorXd out(w);
  out[0] = 0.0;
  double p = 1.0;  // q^(k-1)
  for (int k = 1; k < w; ++k) {
    out[k] = static_cast<double>(k) * p;
    p *= q;
  }
  return out;
}

double theta(const ModalModel& model, double s, double q) {
  require_station(model, s);
  return psi(model.arc_coordinate(s), model.v()).dot(model.A * eta(q, model.w()));
}

double dtheta_dq(const ModalModel& model, double s, double q) {
  require_station(model, s);
  return psi(model.arc_coordinate(s), model.v()).dot(model.A * deta_dq(q, model.w()));
}

double dtheta_ds(const ModalModel& model, double s, double q) {
  require_station(model, s);
  return PressureSlice(model, q).dtheta_ds(s);
}

PressureSlice::PressureSlice(const ModalModel& model, double q)
    : angle_(model.A * eta(q, model.w())),
      rate_(model.A * deta_dq(q, model.w())),
      scale_(model.arc_scale()),
      q_(q) {}

double PressureSlice::horner(const Eigen::VectorXd& c, double u) const {
  const double x = u * scale_;
  double acc = 0.0;
  for (Eigen::Index k = c.size() - 1; k >= 0; --k) acc = acc * x + c[k];
  return acc;
}

double PressureSlice::horner_derivative(const Eigen::VectorXd& c, double u) const {
  const double x = u * scale_;
  double acc = 0.0;
  for (Eigen::Index k = c.size() - 1; k >= 1; --k) acc = acc * x + static_cast<double>(k) * c[k];
  return acc;
}

void to_json(nlohmann::json& j, const ModalModel& model) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(model.A.size()));
  for (Eigen::Index r = 0; r < model.A.rows(); ++r)
    for (Eigen::Index c = 0; c < model.A.cols(); ++c) flat.push_back(model.A(r, c));
  j = nlohmann::json{{"v", model.v()},
                     {"w", model.w()},
                     {"L", model.length},
                     {"unit_scale", model.unit_scale},
                     {"A", flat},
                     {"normalized", model.normalized}};
  if (model.q_min) j["q_min"] = *model.q_min;
  if (model.q_max) j["q_max"] = *model.q_max;
}

void from_json(const nlohmann::json& j, ModalModel& model) {
  const int v = j.at("v").get<int>();
  const int w = j.at("w").get<int>();
  if (v < 1 || w < 1) throw std::invalid_argument("model JSON: v and w must be >= 1");
  const auto flat = j.at("A").get<std::vector<double>>();
  if (flat.size() != static_cast<std::size_t>(v) * static_cast<std::size_t>(w)) {
    throw std::invalid_argument("model JSON: A has " + std::to_string(flat.size()) +
                                " entries, expected v*w = " + std::to_string(v * w));
  }
  model.A.resize(v, w);
  for (int r = 0; r < v; ++r)
    for (int c = 0; c < w; ++c) model.A(r, c) = flat[static_cast<std::size_t>(r * w + c)];
  model.length = j.at("L").get<double>();
  model.unit_scale = j.value("unit_scale", kDefaultUnitScale);
  model.normalized = j.value("normalized", true);
  model.q_min.reset();
  model.q_max.reset();
  if (j.contains("q_min")) model.q_min = j.at("q_min").get<double>();
  if (j.contains("q_max")) model.q_max = j.at("q_max").get<double>();
  model.validate();
}

}  // namespace modalkin

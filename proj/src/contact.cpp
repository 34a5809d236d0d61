#include "modalkin/contact.hpp"

#include "modalkin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace modalkin {

namespace {

Eigen::Vector2d tangent(double a) { return {std::cos(a), std::sin(a)}; }
Eigen::Vector2d normal(double a) { return {-std::sin(a), std::cos(a)}; }

void require_pressure(const ContactState& contact, double q) {
  if (q < contact.q_c - 1e-12 * std::max(1.0, std::abs(contact.q_c))) {
    throw std::invalid_argument("contact: pressure " + std::to_string(q) +
                                " below the onset pressure " + std::to_string(contact.q_c));
  }
}

// The contacted tangent field and its derivatives at one pressure. Distal
// quantities take absolute arc length s > s_c.
class ContactField {
 public:
  ContactField(const ModalModel& model, const ContactState& contact, double q)
      : c_(contact), now_(model, q), onset_(model, contact.q_c) {}

  double theta(double s) const {
    if (s <= c_.s_c) return onset_.theta(s);
    const double u = s - c_.s_c;
    switch (c_.blend) {
      case DistalBlend::OnsetPreserving:
        return onset_.theta(s) + (now_.theta(u) - now_.theta(0.0)) -
               (onset_.theta(u) - onset_.theta(0.0));
      case DistalBlend::Rebased:
        return onset_.theta(c_.s_c) + now_.theta(u) - now_.theta(0.0);
      case DistalBlend::Literal:
        return now_.theta(u);
    }
    return 0.0;
  }

  // right limit at s_c
  double theta_distal_start() const {
    return c_.blend == DistalBlend::Literal ? now_.theta(0.0) : onset_.theta(c_.s_c);
  }

  double dtheta_dq(double s) const {
    if (s <= c_.s_c) return 0.0;
    return distal_dtheta_dq(s);
  }

  double distal_dtheta_dq(double s) const {
    const double u = s - c_.s_c;
    const double anchor = c_.blend == DistalBlend::Literal ? 0.0 : now_.dtheta_dq(0.0);
    return now_.dtheta_dq(u) - anchor;
  }

  // d theta / d s_c for s > s_c
  double dtheta_dsc(double s) const {
    const double u = s - c_.s_c;
    switch (c_.blend) {
      case DistalBlend::OnsetPreserving:
        return onset_.dtheta_ds(u) - now_.dtheta_ds(u);
      case DistalBlend::Rebased:
        return onset_.dtheta_ds(c_.s_c) - now_.dtheta_ds(u);
      case DistalBlend::Literal:
        return -now_.dtheta_ds(u);
    }
    return 0.0;
  }

  // d^2 theta / (dq ds_c) for s > s_c
  double d2theta_dq_dsc(double s) const { return -now_.d2theta_ds_dq(s - c_.s_c); }

  double onset_theta(double s) const { return onset_.theta(s); }

 private:
  const ContactState& c_;
  PressureSlice now_;
  PressureSlice onset_;
};

Eigen::Vector2d integrate_tangent(const ContactField& field, double a, double b, int panels) {
  if (!(b > a)) return Eigen::Vector2d::Zero();
  return quadrature::integrate(
      a, b, panels, [&](double s) -> Eigen::Vector2d { return tangent(field.theta(s)); },
      Eigen::Vector2d::Zero().eval());
}

}  // namespace

const char* to_string(DistalBlend blend) {
  switch (blend) {
    case DistalBlend::OnsetPreserving: return "onset_preserving";
    case DistalBlend::Rebased: return "rebased";
    case DistalBlend::Literal: return "literal";
  }
  return "unknown";
}

DistalBlend distal_blend_from_string(const std::string& name) {
  if (name == "onset_preserving") return DistalBlend::OnsetPreserving;
  if (name == "rebased") return DistalBlend::Rebased;
  if (name == "literal") return DistalBlend::Literal;
  throw std::invalid_argument("unknown distal blend '" + name + "'");
}

ContactState freeze(const ModalModel& model, double q_c, double s_c, DistalBlend blend,
                    int table_stations) {
  if (!(s_c > 0.0 && s_c < model.length)) {
    throw std::out_of_range("freeze: contact location " + std::to_string(s_c) + " outside (0, " +
                            std::to_string(model.length) + ")");
  }
  table_stations = std::max(table_stations, 2);
  ContactState c;
  c.s_c = s_c;
  c.q_c = q_c;
  c.blend = blend;
  const PressureSlice onset(model, q_c);
  c.theta_c.reserve(static_cast<std::size_t>(table_stations));
  for (int k = 0; k < table_stations; ++k) {
    const double s = (k == table_stations - 1) ? s_c : s_c * k / (table_stations - 1);
    c.theta_c.emplace_back(s, onset.theta(s));
  }
  c.base_pose_c = pose_at(model, q_c, s_c);
  return c;
}

double contact_theta(const ModalModel& model, const ContactState& contact, double s, double q) {
  require_pressure(contact, q);
  if (!(s >= 0.0 && s <= model.length)) {
    throw std::out_of_range("contact_theta: arc length outside [0, L]");
  }
  return ContactField(model, contact, q).theta(s);
}

PlanarPose contact_tip_pose(const ModalModel& model, const ContactState& contact, double q,
                            int panels) {
  require_pressure(contact, q);
  const ContactField field(model, contact, q);
  const Eigen::Vector2d p =
      contact.base_pose_c.position() + integrate_tangent(field, contact.s_c, model.length, panels);
  return {p.x(), p.y(), wrap_angle(field.theta(model.length))};
}

Shape contact_shape(const ModalModel& model, const ContactState& contact, double q, int n) {
  if (n < 2) throw std::invalid_argument("contact_shape: need at least 2 stations");
  require_pressure(contact, q);
  const ContactField field(model, contact, q);
  const int intervals = n - 1;
  const int panels = std::max(1, (quadrature::kDefaultPanels + intervals - 1) / intervals);
  const double ds = model.length / intervals;

  Shape out;
  out.extrapolated = !model.in_calibrated_range(q);
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int k = 0; k < n; ++k) {
    const double s = (k == intervals) ? model.length : k * ds;
    if (k > 0) {
      const double a = (k - 1) * ds;
      if (a < contact.s_c && s > contact.s_c) {
        p += integrate_tangent(field, a, contact.s_c, panels);
        p += integrate_tangent(field, contact.s_c, s, panels);
      } else {
        p += integrate_tangent(field, a, s, panels);
      }
    }
    out.stations.push_back(s);
    out.poses.push_back({p.x(), p.y(), wrap_angle(field.theta(s))});
  }
  return out;
}

ActuationJacobian contact_jacobian(const ModalModel& model, const ContactState& contact, double q,
                                   int panels) {
  require_pressure(contact, q);
  const ContactField field(model, contact, q);
  const Eigen::Vector2d d = quadrature::integrate(
      contact.s_c, model.length, panels,
      [&](double s) -> Eigen::Vector2d {
        return normal(field.theta(s)) * field.distal_dtheta_dq(s);
      },
      Eigen::Vector2d::Zero().eval());
  return {d.x(), d.y(), field.dtheta_dq(model.length)};
}

PlanarTwist contact_twist(const ModalModel& model, const ContactState& contact, double q,
                          double qdot, int panels) {
  const ActuationJacobian j = contact_jacobian(model, contact, q, panels);
  return {j.dx * qdot, j.dz * qdot, j.dtheta * qdot};
}

ContactSensitivity contact_sensitivity(const ModalModel& model, const ContactState& contact,
                                       double q, int panels) {
  require_pressure(contact, q);
  const ContactField field(model, contact, q);
  const double sc = contact.s_c;
  const double start = field.theta_distal_start();

  // Leibniz boundary terms at the moving lower limit s_c, plus the onset
  // base position which moves along the frozen tangent.
  Eigen::Vector2d dpos = tangent(field.onset_theta(sc)) - tangent(start);
  Eigen::Vector2d dvel = -normal(start) * field.distal_dtheta_dq(sc);

  const Eigen::Matrix<double, 4, 1> interior = quadrature::integrate(
      sc, model.length, panels,
      [&](double s) -> Eigen::Matrix<double, 4, 1> {
        const double th = field.theta(s);
        const double dsc = field.dtheta_dsc(s);
        const double dq = field.distal_dtheta_dq(s);
        const double dq_dsc = field.d2theta_dq_dsc(s);
        const Eigen::Vector2d n = normal(th);
        const Eigen::Vector2d t = tangent(th);
        Eigen::Matrix<double, 4, 1> out;
        out.head<2>() = n * dsc;
        out.tail<2>() = -t * (dsc * dq) + n * dq_dsc;
        return out;
      },
      Eigen::Matrix<double, 4, 1>::Zero().eval());

  ContactSensitivity out;
  out.position = dpos + interior.head<2>();
  out.velocity = dvel + interior.tail<2>();
  out.rate = field.d2theta_dq_dsc(model.length);
  return out;
}

void to_json(nlohmann::json& j, const ContactState& contact) {
  auto table = nlohmann::json::array();
  for (const auto& [s, th] : contact.theta_c) table.push_back({s, th});
  j = nlohmann::json{{"s_c", contact.s_c},
                     {"q_c", contact.q_c},
                     {"theta_c", std::move(table)},
                     {"base_pose_c",
                      {{"x", contact.base_pose_c.x},
                       {"z", contact.base_pose_c.z},
                       {"theta", contact.base_pose_c.theta}}},
                     {"blend", to_string(contact.blend)}};
}

void from_json(const nlohmann::json& j, ContactState& contact) {
  contact.s_c = j.at("s_c").get<double>();
  contact.q_c = j.at("q_c").get<double>();
  contact.theta_c.clear();
  for (const auto& row : j.at("theta_c")) {
    contact.theta_c.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
  }
  const auto& base = j.at("base_pose_c");
  contact.base_pose_c = {base.at("x").get<double>(), base.at("z").get<double>(),
                         base.at("theta").get<double>()};
  contact.blend = distal_blend_from_string(j.value("blend", std::string("onset_preserving")));
  if (contact.theta_c.size() < 2) {
    throw std::invalid_argument("contact JSON: theta_c needs at least 2 stations");
  }
}

}  // namespace modalkin

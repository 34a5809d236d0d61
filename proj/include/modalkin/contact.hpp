#pragma once

#include "modalkin/kinematics.hpp"
#include "modalkin/modal_basis.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace modalkin {

/// How the free distal field is attached to the frozen proximal shape.
///
/// With u = s - s_c and f(u, q) = psi(u)^T A eta(q):
///   OnsetPreserving  theta(s, q_c) + [f(u, q) - f(0, q)] - [f(u, q_c) - f(0, q_c)]
///   Rebased          theta(s_c, q_c) + f(u, q) - f(0, q)
///   Literal          f(u, q)
/// All three bend the distal part like a bellow of length L - s_c. The first
/// also keeps the whole shape unchanged at the onset pressure; the second
/// restarts the distal tangent profile at s_c; the third drops the tangent
/// offset entirely and kinks at s_c.
enum class DistalBlend { OnsetPreserving, Rebased, Literal };

const char* to_string(DistalBlend blend);
DistalBlend distal_blend_from_string(const std::string& name);

/// Backbone pinned at s_c once pressure reached q_c: the proximal part keeps
/// the onset shape, the distal part continues to bend.
struct ContactState {
  double s_c = 0.0;
  double q_c = 0.0;
  std::vector<std::pair<double, double>> theta_c;  // (s, theta(s, q_c)) for s in [0, s_c]
  PlanarPose base_pose_c;                          // pose of station s_c at onset
  DistalBlend blend = DistalBlend::OnsetPreserving;
};

/// Freezes the proximal segment [0, s_c] at pressure q_c. Requires
/// 0 < s_c < L.
ContactState freeze(const ModalModel& model, double q_c, double s_c,
                    DistalBlend blend = DistalBlend::OnsetPreserving, int table_stations = 33);

/// Tangent angle of the contacted backbone. Requires q >= q_c and s in [0, L].
double contact_theta(const ModalModel& model, const ContactState& contact, double s, double q);

PlanarPose contact_tip_pose(const ModalModel& model, const ContactState& contact, double q,
                            int panels = 20);

/// Poses at n equally spaced stations of the contacted backbone.
Shape contact_shape(const ModalModel& model, const ContactState& contact, double q, int n);

ActuationJacobian contact_jacobian(const ModalModel& model, const ContactState& contact, double q,
                                   int panels = 20);

PlanarTwist contact_twist(const ModalModel& model, const ContactState& contact, double q,
                          double qdot, int panels = 20);

/// Derivatives of the contacted tip quantities with respect to s_c at fixed
/// q and q_c, by differentiation under the integral.
struct ContactSensitivity {
  Eigen::Vector2d position;      // dP/ds_c
  Eigen::Vector2d velocity;      // d(dP/dq)/ds_c
  double rate = 0.0;             // d(dtheta_L/dq)/ds_c
};

ContactSensitivity contact_sensitivity(const ModalModel& model, const ContactState& contact,
                                       double q, int panels = 20);

void to_json(nlohmann::json& j, const ContactState& contact);
void from_json(const nlohmann::json& j, ContactState& contact);

}  // namespace modalkin

#include "modalkin/contact.hpp"
#include "modalkin/kinematics.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace modalkin;
using modalkin::testing::bellow_model;
using modalkin::testing::rel_err;

namespace {

Eigen::Vector3d as_vec(const ActuationJacobian& j) { return {j.dx, j.dz, j.dtheta}; }

// theta = 0.8 u^2 + 0.05 u q + 0.0015 u q^2 in u = s / L: no base rotation
ModalModel clamped_model(double L) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(1, 1) = 0.05;
  A(1, 2) = 0.0015;
  A(2, 0) = 0.8;
  A(2, 1) = 0.02;
  return ModalModel(A, L);
}

// composite Simpson over the frozen tangent table
Eigen::Vector2d integrate_table(const ContactState& c) {
  const auto& t = c.theta_c;
  const std::size_t n = t.size() - 1;
  REQUIRE(n % 2 == 0);
  const double h = (t.back().first - t.front().first) / static_cast<double>(n);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * Eigen::Vector2d(std::cos(t[k].second), std::sin(t[k].second));
  }
  return sum * h / 3.0;
}

constexpr DistalBlend kBlends[] = {DistalBlend::OnsetPreserving, DistalBlend::Rebased,
                                   DistalBlend::Literal};

}  // namespace

TEST_SUITE("contact") {

TEST_CASE("freeze records the onset shape") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 100.0);
  CHECK(c.s_c == 100.0);
  CHECK(c.q_c == 5.0);
  REQUIRE(c.theta_c.size() >= 2);
  CHECK(c.theta_c.front().first == 0.0);
  CHECK(c.theta_c.back().first == 100.0);
  for (const auto& [s, th] : c.theta_c) CHECK(th == doctest::Approx(theta(m, s, 5.0)));

  const PlanarPose free_station = pose_at(m, 5.0, 100.0);
  CHECK((c.base_pose_c.position() - free_station.position()).norm() <= 1e-12);
  CHECK(c.base_pose_c.theta == free_station.theta);
  CHECK((integrate_table(c) - c.base_pose_c.position()).norm() <= 1e-6);

  // the 100 LU station of a shape whose spacing lands on it
  ModalModel m400 = m;
  m400.length = 400.0;
  const ContactState c400 = freeze(m400, 5.0, 100.0);
  const Shape sh = shape(m400, 5.0, 5);
  CHECK((sh.poses[1].position() - c400.base_pose_c.position()).norm() <= 1e-9);
}

TEST_CASE("freeze limits and errors") {
  const ModalModel zero(Eigen::MatrixXd::Zero(3, 3), 300.0);
  const ContactState c = freeze(zero, 5.0, 120.0);
  CHECK(c.base_pose_c.x == doctest::Approx(120.0));
  CHECK(c.base_pose_c.z == 0.0);
  CHECK(c.base_pose_c.theta == 0.0);

  const ModalModel& m = bellow_model();
  const ContactState tiny = freeze(m, 5.0, 1e-9);
  CHECK(tiny.base_pose_c.position().norm() <= 2e-9);
  CHECK(tiny.base_pose_c.theta == doctest::Approx(theta(m, 0.0, 5.0)).epsilon(1e-9));

  CHECK_THROWS_AS(freeze(m, 5.0, 0.0), std::out_of_range);
  CHECK_THROWS_AS(freeze(m, 5.0, m.length), std::out_of_range);
  CHECK_THROWS_AS(freeze(m, 5.0, -3.0), std::out_of_range);
}

TEST_CASE("onset pressure reproduces the free shape") {
  const ModalModel& m = bellow_model();
  for (double s_c : {30.0, 100.0, 333.0}) {
    const ContactState c = freeze(m, 5.0, s_c);
    for (double s = 0.0; s <= m.length; s += m.length / 37) {
      CHECK(std::abs(contact_theta(m, c, s, 5.0) - theta(m, s, 5.0)) <= 1e-12);
    }
    const Shape free_shape = shape(m, 5.0, 41);
    const Shape contacted = contact_shape(m, c, 5.0, 41);
    for (std::size_t k = 0; k < free_shape.poses.size(); ++k) {
      CHECK((free_shape.poses[k].position() - contacted.poses[k].position()).norm() <= 1e-9);
    }
    CHECK((contact_tip_pose(m, c, 5.0).position() - tip_pose(m, 5.0).position()).norm() <= 1e-9);
  }
}

TEST_CASE("tangent is continuous at the contact point") {
  const ModalModel& m = bellow_model();
  for (DistalBlend blend : {DistalBlend::OnsetPreserving, DistalBlend::Rebased}) {
    for (double s_c : {50.0, 100.0, 400.0}) {
      const ContactState c = freeze(m, 5.0, s_c, blend);
      for (double q : {5.0, 9.0, 20.0}) {
        const double left = contact_theta(m, c, s_c, q);
        const double right = contact_theta(m, c, s_c + 1e-12, q);
        CHECK(std::abs(right - left) <= 1e-12);
        CHECK(std::abs(left - theta(m, s_c, 5.0)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("proximal segment stays frozen") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 150.0);
  for (double s : {0.0, 70.0, 150.0}) {
    CHECK(contact_theta(m, c, s, 20.0) == PressureSlice(m, 5.0).theta(s));
    CHECK(std::abs(contact_theta(m, c, s, 20.0) - theta(m, s, 5.0)) <= 1e-12);
  }
}

TEST_CASE("rebased distal field is a fresh bellow offset by the frozen tangent") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 100.0, DistalBlend::Rebased);
  for (double u : {0.0, 25.0, 180.0, m.length - 100.0}) {
    const double fresh = theta(m, u, 20.0) - theta(m, 0.0, 20.0);
    CHECK(contact_theta(m, c, 100.0 + u, 20.0) ==
          doctest::Approx(theta(m, 100.0, 5.0) + fresh).epsilon(1e-12));
  }
}

TEST_CASE("literal distal field restarts the tangent") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 100.0, DistalBlend::Literal);
  CHECK(contact_theta(m, c, 150.0, 12.0) == doctest::Approx(theta(m, 50.0, 12.0)));
  // kink at s_c whenever the frozen tangent differs from the base angle
  CHECK(std::abs(contact_theta(m, c, 100.0 + 1e-9, 12.0) - contact_theta(m, c, 100.0, 12.0)) > 1e-3);
}

TEST_CASE("pressure below onset is rejected") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 100.0);
  CHECK_THROWS_AS(contact_theta(m, c, 200.0, 4.9), std::invalid_argument);
  CHECK_THROWS_AS(contact_tip_pose(m, c, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(contact_jacobian(m, c, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(contact_theta(m, c, m.length + 1.0, 6.0), std::out_of_range);
  CHECK_THROWS_AS(contact_shape(m, c, 6.0, 1), std::invalid_argument);
}

TEST_CASE("zero field tip is unaffected by contact") {
  const ModalModel zero(Eigen::MatrixXd::Zero(3, 3), 300.0);
  const ContactState c = freeze(zero, 2.0, 90.0);
  const PlanarPose tip = contact_tip_pose(zero, c, 14.0);
  CHECK(tip.x == doctest::Approx(300.0));
  CHECK(tip.z == 0.0);
  CHECK(tip.theta == 0.0);
}

TEST_CASE("contacted tip diverges steadily from free motion") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 100.0);
  double prev = 0.0;
  for (double q = 5.5; q <= 20.0; q += 0.5) {
    const double gap = (contact_tip_pose(m, c, q).position() - tip_pose(m, q).position()).norm();
    CHECK(gap > prev);
    prev = gap;
  }
  CHECK(prev > 1.0);
}

TEST_CASE("contact jacobian matches finite differences") {
  const ModalModel& m = bellow_model();
  const double h = 1e-4;
  for (DistalBlend blend : kBlends) {
    for (double s_c : {60.0, 100.0, 310.0}) {
      const ContactState c = freeze(m, 5.0, s_c, blend);
      for (double q : {8.0, 14.0, 20.0}) {
        const PlanarPose a = contact_tip_pose(m, c, q - h), b = contact_tip_pose(m, c, q + h);
        const Eigen::Vector3d fd((b.x - a.x) / (2 * h), (b.z - a.z) / (2 * h),
                                 (contact_theta(m, c, m.length, q + h) -
                                  contact_theta(m, c, m.length, q - h)) /
                                     (2 * h));
        CHECK(rel_err(as_vec(contact_jacobian(m, c, q)), fd) <= 1e-6);
      }
    }
  }
}

TEST_CASE("contact jacobian limits") {
  const ModalModel m = clamped_model(420.0);
  const ContactState near_base = freeze(m, 3.0, 1e-9);
  CHECK(rel_err(as_vec(contact_jacobian(m, near_base, 12.0)), as_vec(jacobian(m, 12.0))) <= 1e-8);

  const ContactState near_tip = freeze(m, 3.0, 420.0 - 1e-9);
  CHECK(contact_jacobian(m, near_tip, 12.0).norm() <= 1e-9);

  const ModalModel& b = bellow_model();
  CHECK(contact_jacobian(b, freeze(b, 5.0, b.length - 1e-9), 18.0).norm() <= 1e-9);
}

TEST_CASE("contact jacobian norm shrinks as the contact moves distally") {
  const ModalModel& m = bellow_model();
  for (double q : {6.0, 12.0, 20.0}) {
    double prev = jacobian(m, q).norm();
    for (double s_c = 10.0; s_c < m.length; s_c += 10.0) {
      const double n = contact_jacobian(m, freeze(m, 5.0, s_c), q).norm();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("contact twist is the jacobian times the rate") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 100.0);
  const ActuationJacobian j = contact_jacobian(m, c, 11.0);
  const PlanarTwist t = contact_twist(m, c, 11.0, 0.05);
  CHECK(t.vx == j.dx * 0.05);
  CHECK(t.vz == j.dz * 0.05);
  CHECK(t.omega == j.dtheta * 0.05);
}

TEST_CASE("sensitivities to the contact location match finite differences") {
  const ModalModel& m = bellow_model();
  const double h = 1e-3;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> loc(20.0, 420.0), pressure(5.0, 20.0);
  for (DistalBlend blend : kBlends) {
    for (int trial = 0; trial < 8; ++trial) {
      const double s_c = loc(rng), q = pressure(rng);
      const ContactState c = freeze(m, 5.0, s_c, blend);
      const ContactState lo = freeze(m, 5.0, s_c - h, blend), hi = freeze(m, 5.0, s_c + h, blend);
      const ContactSensitivity sens = contact_sensitivity(m, c, q);
      const Eigen::Vector2d dpos =
          (contact_tip_pose(m, hi, q).position() - contact_tip_pose(m, lo, q).position()) / (2 * h);
      const ActuationJacobian jl = contact_jacobian(m, lo, q), jh = contact_jacobian(m, hi, q);
      const Eigen::Vector2d dvel = (jh.position() - jl.position()) / (2 * h);
      const double drate = (jh.dtheta - jl.dtheta) / (2 * h);
      CHECK(rel_err(sens.position, dpos) <= 1e-6);
      CHECK(rel_err(sens.velocity, dvel) <= 1e-6);
      CHECK(sens.rate == doctest::Approx(drate).epsilon(1e-6));
    }
  }
}

TEST_CASE("contact state JSON round trip") {
  const ModalModel& m = bellow_model();
  const ContactState c = freeze(m, 5.0, 100.0, DistalBlend::Rebased);
  const nlohmann::json j = c;
  CHECK(j["theta_c"].size() == c.theta_c.size());
  CHECK(j["blend"] == "rebased");
  const ContactState back = nlohmann::json::parse(j.dump()).get<ContactState>();
  CHECK(back.s_c == c.s_c);
  CHECK(back.q_c == c.q_c);
  CHECK(back.theta_c == c.theta_c);
  CHECK(back.base_pose_c.x == c.base_pose_c.x);
  CHECK(back.base_pose_c.theta == c.base_pose_c.theta);
  CHECK(back.blend == c.blend);
  CHECK(contact_tip_pose(m, back, 15.0).x == contact_tip_pose(m, c, 15.0).x);

  nlohmann::json short_table = j;
  short_table["theta_c"] = nlohmann::json::array({{0.0, 0.0}});
  CHECK_THROWS_AS(short_table.get<ContactState>(), std::invalid_argument);
  CHECK_THROWS_AS(distal_blend_from_string("kinked"), std::invalid_argument);
}

}  // TEST_SUITE

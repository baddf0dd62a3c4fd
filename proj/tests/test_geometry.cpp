#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rotorspin/error.hpp"
#include "rotorspin/geometry.hpp"

using namespace rotorspin;
using std::numbers::pi;

namespace {
double deg(double rad) { return rad * 180.0 / pi; }
}

TEST_CASE("rotation phase is unwrapped and linear") {
  RotationConfig rot{1e-3, 2e-4};
  CHECK(rotation_phase(2e-4, rot) == doctest::Approx(0.0));
  CHECK(rotation_phase(2e-4 + 0.5e-3, rot) == doctest::Approx(pi));
  CHECK(rotation_phase(2e-4 + 2e-3, rot) == doctest::Approx(4 * pi));
  rot.period_s = 0.0;
  CHECK_THROWS_AS(rot.validate(), Error);
}

TEST_CASE("static field at key phases") {
  const FieldGeometry g;
  const Eigen::Vector3d b0 = static_field_nv_frame(0.0, g);
  CHECK(b0.x() == doctest::Approx(0.0));
  CHECK(b0.y() == doctest::Approx(0.0));
  CHECK(b0.z() == doctest::Approx(480.0));
  CHECK(deg(field_nv_angle(0.0, g)) == doctest::Approx(0.0));
  CHECK(deg(field_nv_angle(pi, g)) == doctest::Approx(109.4712206).epsilon(1e-9));
  CHECK(deg(field_nv_angle(pi / 2, g)) == doctest::Approx(70.5287794).epsilon(1e-9));
  CHECK(deg(2 * g.cone_angle_rad) == doctest::Approx(109.4712206).epsilon(1e-9));
}

TEST_CASE("field magnitude and angle consistency over a rotation") {
  const FieldGeometry g;
  double theta_max = 0.0;
  for (int k = 0; k <= 720; ++k) {
    const double phi = 2 * pi * k / 720.0;
    const Eigen::Vector3d b = static_field_nv_frame(phi, g);
    CHECK(std::abs(b.norm() / 480.0 - 1.0) <= 1e-12);
    const double from_vector = std::atan2(b.cross(Eigen::Vector3d::UnitZ()).norm(), b.z());
    CHECK(std::abs(from_vector - field_nv_angle(phi, g)) <= 1e-12);
    CHECK(field_nv_angle(phi, g) == doctest::Approx(field_nv_angle(2 * pi - phi, g)).epsilon(1e-12));
    theta_max = std::max(theta_max, field_nv_angle(phi, g));
  }
  CHECK(deg(theta_max) == doctest::Approx(109.4712206).epsilon(1e-9));
}

TEST_CASE("angle from vector agrees to 1e-12 away from the arccos endpoints") {
  const FieldGeometry g;
  for (double phi : {0.3, 1.0, 2.0, 2.9, 4.0, 5.5}) {
    const Eigen::Vector3d b = static_field_nv_frame(phi, g);
    const double c = b.z() / b.norm();
    const double cos_model = std::cos(field_nv_angle(phi, g));
    CHECK(std::abs(c - cos_model) <= 1e-12);
  }
}

TEST_CASE("rf axes") {
  FieldGeometry g;
  const Eigen::Vector3d n = rf_axis_nv_frame(g);
  CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(n.z() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(rf_drive_axis(g).isApprox(Eigen::Vector3d::UnitX()));
  g.rf_coupling = RfCoupling::rotation_axis;
  CHECK(rf_drive_axis(g).isApprox(n));
}

TEST_CASE("geometry validation names the offending field") {
  FieldGeometry g;
  g.b_magnitude_g = -1.0;
  try {
    g.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("b_gauss") != std::string::npos);
    CHECK(e.module() == "geometry");
  }
  g = {};
  g.rf_amplitude_g = -2.0;
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("rf axis is independent of the rotation phase and exact at alignment") {
  const FieldGeometry g;
  CHECK(field_nv_angle(0.0, g) == 0.0);
  CHECK(field_nv_angle(2 * pi, g) < 1e-15);
  CHECK(field_nv_angle(pi, g) == doctest::Approx(2 * g.cone_angle_rad).epsilon(1e-15));
  // the rotation axis is a fixed point of the rotation
  const Eigen::Vector3d n = rf_axis_nv_frame(g);
  FieldGeometry along = g;
  const double b_dot_n0 = static_field_nv_frame(0.0, along).dot(n);
  const double b_dot_npi = static_field_nv_frame(pi, along).dot(n);
  CHECK(b_dot_n0 == doctest::Approx(b_dot_npi).epsilon(1e-13));
}

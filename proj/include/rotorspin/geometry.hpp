#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

namespace rotorspin {

struct RotationConfig {
  double period_s = 1e-3;
  // Time at which the static field is parallel to the NV axis.
  double phase_origin_s = 0.0;

  void validate() const;
};

// Which body-frame direction the rf coupling operator uses.
//   transverse:    rotation axis projected onto the NV transverse plane
//                  (the S_x, I_x form of the standard rf coupling).
//   rotation_axis: the full rotation axis, including its component along NV z.
enum class RfCoupling { transverse, rotation_axis };

struct FieldGeometry {
  double b_magnitude_g = 480.0;
  // Angle between rotation axis and NV axis; arccos(1/sqrt(3)) for a (100) cut.
  double cone_angle_rad = std::acos(1.0 / std::sqrt(3.0));
  // Amplitude of the linear rf drive; unset means "calibrate from the
  // stationary pi time".
  std::optional<double> rf_amplitude_g;
  RfCoupling rf_coupling = RfCoupling::transverse;

  void validate() const;
};

// Unwrapped rotation phase, zero at phase_origin_s.
double rotation_phase(double t, const RotationConfig& rot);

// Static field in the NV body frame. The field starts along NV z and sweeps
// a cone of half-angle cone_angle about the rotation axis, which lies in the
// x-z plane of the body frame.
Eigen::Vector3d static_field_nv_frame(double phi, const FieldGeometry& geom);

// Angle between the static field and the NV axis.
double field_nv_angle(double phi, const FieldGeometry& geom);

// Rotation axis in the body frame. It is invariant under the rotation, so
// the rf coil axis is time-independent in this frame.
Eigen::Vector3d rf_axis_nv_frame(const FieldGeometry& geom);

// Unit vector used by the rf coupling operator, per geom.rf_coupling.
Eigen::Vector3d rf_drive_axis(const FieldGeometry& geom);

}  // namespace rotorspin

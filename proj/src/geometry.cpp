#include "rotorspin/geometry.hpp"

#include <algorithm>
#include <numbers>

#include "rotorspin/error.hpp"
#include "rotorspin/spincore.hpp"

namespace rotorspin {

void RotationConfig::validate() const {
  if (!(period_s > 0.0) || !std::isfinite(period_s)) throw Error("geometry", "period_s must be positive");
  if (!std::isfinite(phase_origin_s)) throw Error("geometry", "phase_origin_s must be finite");
}

void FieldGeometry::validate() const {
  if (!(b_magnitude_g >= 0.0) || !std::isfinite(b_magnitude_g))
    throw Error("geometry", "b_gauss must be non-negative");
  if (!(cone_angle_rad >= 0.0 && cone_angle_rad <= std::numbers::pi / 2 + 1e-15))
    throw Error("geometry", "cone_angle_deg must lie in [0, 90]");
  if (rf_amplitude_g && !(*rf_amplitude_g >= 0.0 && std::isfinite(*rf_amplitude_g)))
    throw Error("geometry", "rf_gauss must be non-negative");
}

double rotation_phase(double t, const RotationConfig& rot) {
  return two_pi * (t - rot.phase_origin_s) / rot.period_s;
}

Eigen::Vector3d rf_axis_nv_frame(const FieldGeometry& geom) {
  return {std::sin(geom.cone_angle_rad), 0.0, std::cos(geom.cone_angle_rad)};
}

Eigen::Vector3d rf_drive_axis(const FieldGeometry& geom) {
  if (geom.rf_coupling == RfCoupling::rotation_axis) return rf_axis_nv_frame(geom);
  // The transverse projection of the rotation axis is along body x for any
  // nonzero cone angle; keep x at zero cone angle too.
  return Eigen::Vector3d::UnitX();
}

Eigen::Vector3d static_field_nv_frame(double phi, const FieldGeometry& geom) {
  // Rodrigues rotation of B0 * z about the rotation axis n.
  const Eigen::Vector3d n = rf_axis_nv_frame(geom);
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const Eigen::Vector3d dir = z * c + n.cross(z) * s + n * (n.dot(z) * (1.0 - c));
  return geom.b_magnitude_g * dir.normalized();
}

double field_nv_angle(double phi, const FieldGeometry& geom) {
  // Half-angle form of cos(theta) = cos^2(a) + sin^2(a) cos(phi); exact at
  // phi = 0 and well conditioned near alignment where arccos is not.
  const double s = std::sin(geom.cone_angle_rad) * std::abs(std::sin(0.5 * phi));
  return 2.0 * std::asin(std::min(s, 1.0));
}

}  // namespace rotorspin

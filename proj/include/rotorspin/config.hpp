#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rotorspin/dynamics.hpp"
#include "rotorspin/protocols.hpp"

#include "json.hpp"

namespace rotorspin {

// Everything a CLI run needs, held in the units of the JSON file: Hz (not
// rad/s), seconds, Gauss, degrees. Serialized as one flat object.
struct RunConfig {
  // physical constants
  double d_zfs_hz = 2.870e9;
  double gamma_e_hz_per_g = -2.8e6;
  double gamma_n_hz_per_g = 307.7;
  double q_hz = -4.9457e6;
  double a_par_hz = -2.162e6;
  double a_perp_hz = -2.62e6;

  // geometry and rotation
  double b_gauss = 480.0;
  double cone_angle_deg = 54.735610317245346;
  std::optional<double> rf_gauss;  // unset: calibrated from pi_time_s
  RfCoupling rf_coupling = RfCoupling::transverse;
  double period_s = 1e-3;
  double phase_origin_s = 0.0;

  // drive and environment
  bool stationary = false;
  bool feedforward = true;
  double pi_time_s = 7e-6;
  std::optional<double> intrinsic_t2star_s;
  std::optional<double> intrinsic_t2_s;
  double jitter_sigma_s = 323e-9;
  JitterMode jitter_mode = JitterMode::per_shot;
  std::uint64_t seed = 0;
  std::size_t shots = 500;

  // readout
  double polarization = 1.0;
  std::optional<double> contrast_max;
  double readout_fwhm_s = 4e-6;
  double laser_on_offset_s = 0.0;
  double readout_noise_sigma = 0.0;
  int readout_periods = 1;

  // numerics and fitting
  int track_samples = 4096;
  std::optional<double> decay_exponent = 1.0;  // unset: fitted

  // protocol parameters
  double t_d_s = 0.0;
  std::vector<double> durations_s;
  std::vector<double> taus_s;
  std::vector<double> echo_taus_s;
  std::vector<int> n_periods;
  std::vector<double> lock_s;
  double lock_scale = 1.0;
  std::size_t phase_points = 12;
  std::vector<double> rabi_delays_s;

  // waveform export
  double sample_rate_hz = 100e6;

  // reduction check
  bool validate_rotating = false;
  bool validate_drive = true;
  double validate_start_s = 0.0;
  double validate_duration_s = 7e-6;
  double validate_detuning_hz = 0.0;
  double validate_full_dt_s = 1e-10;
  double validate_reduced_dt_s = 1e-9;
  std::size_t validate_checkpoints = 200;

  std::string out_dir = ".";

  RunConfig();

  void validate() const;
  PhysicalConstants constants() const;
  FieldGeometry geometry() const;
  RotationConfig rotation() const;
  ProtocolConfig protocol() const;
  ValidationSegment validation() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json save_config(const RunConfig& cfg);
// Defaults overlaid with the keys present in `raw`, in canonical key order.
nlohmann::ordered_json normalize_config(const nlohmann::json& raw);
// save_config without the output location: what determines the results.
nlohmann::ordered_json physics_config(const RunConfig& cfg);
// 64-bit FNV-1a of the canonical physics_config serialization, as 16 hex
// digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace rotorspin

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rotorspin/dynamics.hpp"
#include "rotorspin/fitting.hpp"

namespace rotorspin {

// per_shot: one period error per shot, shared by every revolution of that
// shot including the one that triggered the sequence. per_period: an
// independent draw for every revolution.
enum class JitterMode { per_shot, per_period };

struct JitterModel {
  double sigma_period_s = 323e-9;
  std::uint64_t seed = 0;
  JitterMode mode = JitterMode::per_shot;

  void validate() const;
};

struct ReadoutModel {
  double polarization_fraction = 1.0;
  std::optional<double> contrast_max;  // unset: 0.025 rotating, 0.06 stationary
  double window_fwhm_s = 4e-6;
  double laser_on_offset_s = 0.0;
  double noise_sigma = 0.0;            // Gaussian per shot and sample, signal units

  void validate() const;
};

// Gaussian factor exp(-4 ln2 offset^2 / fwhm^2).
double readout_window(double laser_on_offset_s, const ReadoutModel& model);

struct ProtocolConfig {
  PhysicalConstants constants;
  FieldGeometry geometry;
  RotationConfig rotation;
  bool stationary = false;   // diamond held still, field aligned
  bool feedforward = true;   // false: fixed carrier at the aligned frequency
  double pi_time_s = 7e-6;   // calibrates B_rf when geometry has none
  std::optional<double> intrinsic_t2star_s;
  std::optional<double> intrinsic_t2_s;
  JitterModel jitter;
  ReadoutModel readout;
  std::size_t shots = 1;
  int track_samples = 4096;
  int readout_periods = 1;                  // readout at this many nominal periods
  std::optional<double> decay_exponent = 1.0;  // unset: stretch exponent is fitted

  void validate() const;
};

struct Pulse {
  double start_s = 0.0;
  double duration_s = 0.0;
  double phase_rad = 0.0;
  double amplitude_scale = 1.0;
};

// The final pulse's phase is swept over `phases` on top of its own phase.
struct Sequence {
  std::vector<Pulse> pulses;
  double readout_s = 0.0;
  double envelope = 1.0;  // intrinsic coherence factor on (P - 1/2)
};

struct ProtocolResult {
  std::string protocol;
  std::string variable;           // name of x
  std::vector<double> x;
  std::vector<double> signal;
  std::vector<double> std_error;
  std::map<std::string, FitParameter> fit;
  bool t2_lower_bound = false;
  std::vector<ProtocolResult> fringes;  // per-x fringes of a sweep
};

class Simulator {
public:
  explicit Simulator(ProtocolConfig config);

  const ProtocolConfig& config() const { return config_; }
  const QubitCurves& curves() const { return curves_; }
  const FMProfile& profile() const { return profile_; }
  double b_rf_g() const { return b_rf_; }
  double contrast() const;

  // Rabi frequency the controller assumes at nominal time t.
  double nominal_rabi(double t) const;
  // Pulse of rotation angle `angle` centred as close to `centre` as the
  // previous pulse end allows; duration from the nominal Rabi frequency at
  // its start.
  Pulse place_pulse(double angle, double centre, double not_before, double phase = 0.0) const;

  // True rotation for one shot, covering at least [0, horizon_s].
  RotationTimeline timeline_for_shot(std::size_t shot, double horizon_s) const;

  // Monte-Carlo average of the readout signal over config().shots. Without
  // phases a single sample (final pulse as given) is returned.
  ProtocolResult run(const Sequence& seq, const std::vector<double>& phases) const;

  ProtocolResult rabi(double t_d, const std::vector<double>& durations) const;
  ProtocolResult ramsey(double t_d, double tau, const std::vector<double>& phases) const;
  ProtocolResult spin_echo(double t_d, double tau, const std::vector<double>& phases) const;
  ProtocolResult multi_period_echo(int n_periods, const std::vector<double>& phases) const;
  ProtocolResult spin_lock(double lock_s, const std::vector<double>& phases, double lock_scale = 1.0) const;

  // Fringe amplitude against the swept quantity with a decay fit (when at
  // least 4 points remain). Sweep values whose sequence would run past the
  // readout time are skipped.
  ProtocolResult ramsey_decay(double t_d, const std::vector<double>& taus, const std::vector<double>& phases) const;
  ProtocolResult echo_decay(double t_d, const std::vector<double>& taus, const std::vector<double>& phases) const;
  ProtocolResult multi_period_decay(const std::vector<int>& n_periods, const std::vector<double>& phases) const;
  ProtocolResult spin_lock_sweep(const std::vector<double>& locks, const std::vector<double>& phases,
                                 double lock_scale = 1.0) const;

  // Rabi frequency (Hz) the coupling model predicts for a duration scan at
  // t_d: the noise-free signal cos^2(theta/2), theta the integrated nominal
  // Rabi angle, run through the same sinusoid fit as rabi(). Needs >= 6
  // durations.
  FitParameter model_rabi_frequency(double t_d, const std::vector<double>& durations) const;

  // Mean over shots of the squared free-precession phase error accumulated
  // over [t0, t1] relative to the feedforward carrier, minus its mean.
  double phase_error_variance(double t0, double t1) const;

private:
  Sequence ramsey_sequence(double t_d, double tau) const;
  Sequence echo_sequence(double t_d, double tau) const;
  Sequence multi_period_sequence(int n_periods) const;
  Sequence lock_sequence(double lock_s, double lock_scale) const;
  void check_fits(const Sequence& seq) const;
  bool fits(const Sequence& seq) const;

  ProtocolConfig config_;
  AdiabaticTrack track_;
  QubitCurves curves_;
  FMProfile profile_;
  double b_rf_;
};

// Phase sweep 0 .. 2pi (exclusive) with n samples.
std::vector<double> phase_grid(std::size_t n);

// Seed for shot `index` of a run with `master` seed.
std::uint64_t shot_seed(std::uint64_t master, std::uint64_t index);

}  // namespace rotorspin

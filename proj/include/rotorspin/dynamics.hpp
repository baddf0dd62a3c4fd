#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rotorspin/feedforward.hpp"
#include "rotorspin/spectral.hpp"

namespace rotorspin {

// Maps nominal (AWG) time onto the true rotation phase. The rotation passes
// through alignment at each entry of `alignments`; between consecutive
// alignments the phase advances linearly by 2pi. Outside the listed span the
// first/last revolution is extrapolated.
class RotationTimeline {
public:
  static RotationTimeline nominal(const RotationConfig& rot);
  // Frozen at phi = 0 (diamond not spinning, field aligned).
  static RotationTimeline stationary();
  // alignments must be strictly increasing, at least two entries.
  static RotationTimeline from_alignments(std::vector<double> alignments);

  double phase(double t) const;
  bool is_stationary() const { return stationary_; }
  // Revolution containing t (index into alignments), clamped to the span.
  std::size_t revolution(double t) const;
  const std::vector<double>& alignments() const { return alignments_; }

private:
  std::vector<double> alignments_;
  bool stationary_ = false;
};

// Interpolated eta/zeta quantities along one rotation. Linear interpolation
// in phi, periodic with 2pi. The gap interpolant matches the one used by
// fm_from_track, so a nominal timeline with feedforward gives zero detuning.
class QubitCurves {
public:
  QubitCurves(const AdiabaticTrack& track, const Eigen::Vector3d& drive_axis);

  double gap(double phi) const;                 // rad/s
  double coupling_magnitude(double phi) const;  // |<zeta|V|eta>|, rad/s/G
  double coupling_phase(double phi) const;      // arg <zeta|V|eta>
  double alpha(double phi) const;               // augmentation factor
  // Integral of gap(phi') dphi' from 0 to phi (phi unwrapped).
  double gap_integral(double phi) const;
  // Integral of the gap over nominal time [t0, t1] following `timeline`.
  double accumulated_phase(const RotationTimeline& timeline, double t0, double t1) const;

  double bare_coupling() const { return bare_coupling_; }
  std::size_t samples() const { return gap_.size() - 1; }

private:
  struct Slot {
    std::size_t j;
    double frac;
    double turns;
  };
  Slot locate(double phi) const;
  double lerp(const std::vector<double>& v, const Slot& s) const;

  double step_;
  double bare_coupling_;
  std::vector<double> gap_, magnitude_, phase_, cumulative_;
};

// Reduced description of the eta <-> zeta qubit in the frame of the drive
// phase. Omega already includes the gate amplitude and is zero outside gates.
struct TwoLevelSchedule {
  std::vector<double> time_s;
  std::vector<double> gap;             // omega(t), rad/s
  std::vector<double> rabi;            // Omega(t), rad/s
  std::vector<double> relative_phase;  // phi_rel(t) = arg<zeta|V|eta> - gate offset
  std::vector<double> drive_phase;     // accumulated drive phase, rad
  std::vector<double> detuning;        // Delta(t) = omega - d(drive_phase)/dt, rad/s
};

struct State2 {
  complex eta{1.0, 0.0};
  complex zeta{0.0, 0.0};

  double population_eta() const { return std::norm(eta); }
  double population_zeta() const { return std::norm(zeta); }
  double norm() const { return std::sqrt(std::norm(eta) + std::norm(zeta)); }
};

// Instantaneous two-level parameters at one time.
struct TwoLevelPoint {
  double rabi;
  double relative_phase;
  double detuning;
};

// Rabi frequency per Gauss of drive: a linear drive B cos(.) V has
// rotating-frame off-diagonal |V| B / 2, i.e. Omega = |<zeta|V|eta>| * B.
double rabi_frequency(const QubitCurves& curves, double phi, double b_rf_g);

// B_rf,0 that gives a pi pulse of `pi_time_s` at the aligned field.
double calibrate_rf_amplitude(const QubitCurves& curves, double pi_time_s);

// Sample the reduced model on the profile grid over its full duration
// (ungated drive at amplitude b_rf_g, nominal timeline).
TwoLevelSchedule reduce(const AdiabaticTrack& track, const FMProfile& profile, double b_rf_g);

// Sample on a uniform grid of n points over [t0, t1] with an explicit
// timeline and gate list.
TwoLevelSchedule reduce(const QubitCurves& curves, const FMProfile& profile, double b_rf_g,
                        const RotationTimeline& timeline, const std::vector<GateWindow>& gates,
                        double t0, double t1, std::size_t n);

// Exact 2x2 propagator for constant parameters over dt.
State2 two_level_step(const State2& s, const TwoLevelPoint& p, double dt);

// Midpoint-exponential stepping over the schedule span; parameters are
// linearly interpolated. Throws when dt gives fewer than 50 steps per cycle
// of max(Omega, |Delta|).
State2 two_level_propagate(State2 state, const TwoLevelSchedule& schedule, double dt);

// Same stepping driven by a callable, over [t0, t1]. No step-size check.
State2 two_level_propagate(State2 state, const std::function<TwoLevelPoint(double)>& at,
                           double t0, double t1, double dt);

// Full 9-level problem: static field following `timeline`, optional gated
// linear rf drive b(t) = B_rf * scale * cos(phase_at(t) + offset) along axis.
struct RfDrive {
  FMProfile profile;
  std::vector<GateWindow> gates;
  double b_rf_g = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
};

struct FieldSchedule {
  FieldGeometry geometry;
  PhysicalConstants constants;
  RotationConfig rotation;
  RotationTimeline timeline = RotationTimeline::stationary();
  std::optional<RfDrive> drive;

  Operator9 hamiltonian_at(double t) const;
};

inline constexpr double max_full_steps = 5e7;

// psi(t+dt) = exp(-i H(t + dt/2) dt) psi(t) via eigendecomposition. Requires
// >= 50 steps per drive cycle and >= 1e4 steps per rotation; throws when the
// total step count exceeds max_full_steps. `observe(t, psi)` is called after
// every `observe_every` steps when given.
State9 full_propagate(State9 psi, const FieldSchedule& schedule, double t0, double t1, double dt,
                      const std::function<void(double, const State9&)>& observe = {},
                      std::size_t observe_every = 1);

// Eigenvector of H(phi) carrying track label `label` (matched by overlap with
// the nearest track sample, phase aligned to it).
State9 tracked_state(const AdiabaticTrack& track, int label, double phi);

struct ValidationSegment {
  FieldGeometry geometry;
  PhysicalConstants constants;
  RotationConfig rotation;
  bool rotating = false;        // false: field frozen at alignment
  double start_s = 0.0;
  double duration_s = 7e-6;
  bool drive_on = true;
  double detuning_hz = 0.0;     // drive frequency = transition - detuning
  double pi_time_s = 7e-6;      // sets B_rf at alignment
  double full_dt_s = 1e-10;
  double reduced_dt_s = 1e-9;
  std::size_t checkpoints = 200;
  int track_samples = 4096;
};

struct ReductionReport {
  double max_deviation = 0.0;       // max of the two below
  double max_deviation_eta = 0.0;
  double max_deviation_zeta = 0.0;
  double max_leakage = 0.0;         // 1 - p_eta - p_zeta in the full model
  double final_full_zeta = 0.0;
  double final_reduced_zeta = 0.0;
};

// Runs the full and reduced propagators on the same drive and compares the
// eta and zeta populations at evenly spaced checkpoints.
ReductionReport validate_reduction(const ValidationSegment& segment);

}  // namespace rotorspin

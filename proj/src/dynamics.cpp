#include "rotorspin/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rotorspin/error.hpp"

namespace rotorspin {

// ---------------------------------------------------------------------------
// Rotation timeline
// ---------------------------------------------------------------------------

RotationTimeline RotationTimeline::nominal(const RotationConfig& rot) {
  rot.validate();
  return from_alignments({rot.phase_origin_s, rot.phase_origin_s + rot.period_s});
}

RotationTimeline RotationTimeline::stationary() {
  RotationTimeline tl;
  tl.stationary_ = true;
  return tl;
}

RotationTimeline RotationTimeline::from_alignments(std::vector<double> alignments) {
  if (alignments.size() < 2) throw Error("dynamics", "timeline needs at least two alignments");
  for (std::size_t k = 1; k < alignments.size(); ++k)
    if (!(alignments[k] > alignments[k - 1])) throw Error("dynamics", "alignment times must increase");
  RotationTimeline tl;
  tl.alignments_ = std::move(alignments);
  return tl;
}

std::size_t RotationTimeline::revolution(double t) const {
  if (stationary_) return 0;
  const auto it = std::upper_bound(alignments_.begin(), alignments_.end(), t);
  if (it == alignments_.begin()) return 0;
  const auto k = static_cast<std::size_t>(it - alignments_.begin()) - 1;
  return std::min(k, alignments_.size() - 2);
}

double RotationTimeline::phase(double t) const {
  if (stationary_) return 0.0;
  const std::size_t k = revolution(t);
  const double period = alignments_[k + 1] - alignments_[k];
  return two_pi * (static_cast<double>(k) + (t - alignments_[k]) / period);
}

// ---------------------------------------------------------------------------
// Interpolated qubit curves
// ---------------------------------------------------------------------------

QubitCurves::QubitCurves(const AdiabaticTrack& track, const Eigen::Vector3d& drive_axis) {
  const std::size_t n = track.size();
  if (n < 3) throw Error("dynamics", "track too short");
  step_ = track.phi[1] - track.phi[0];
  bare_coupling_ = bare_nuclear_coupling(drive_axis, track.constants);
  const int eta = track.eta();
  const int zeta = track.zeta();
  const std::vector<complex> v = coupling_element(track, drive_axis, track.constants);
  gap_.resize(n);
  magnitude_.resize(n);
  phase_.resize(n);
  cumulative_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    gap_[j] = std::abs(track.energies[j](zeta) - track.energies[j](eta));
    magnitude_[j] = std::abs(v[j]);
    phase_[j] = std::arg(v[j]);
    if (j > 0) {
      double d = phase_[j] - phase_[j - 1];
      d -= two_pi * std::round(d / two_pi);
      phase_[j] = phase_[j - 1] + d;
    }
  }
  // Periodic gauge: spread the closing phase mismatch (holonomy) linearly so
  // the coupling phase is continuous across alignment. The connection term
  // this introduces is a geometric-phase effect, which the model omits.
  const double holonomy = phase_[n - 1] - phase_[0] - two_pi * std::round((phase_[n - 1] - phase_[0]) / two_pi);
  for (std::size_t j = 0; j < n; ++j)
    phase_[j] -= holonomy * static_cast<double>(j) / static_cast<double>(n - 1);
  cumulative_[0] = 0.0;
  for (std::size_t j = 1; j < n; ++j) cumulative_[j] = cumulative_[j - 1] + 0.5 * (gap_[j] + gap_[j - 1]) * step_;
}

QubitCurves::Slot QubitCurves::locate(double phi) const {
  const double turns = std::floor(phi / two_pi);
  const double local = phi - turns * two_pi;
  const std::size_t last = gap_.size() - 2;
  auto j = static_cast<std::size_t>(std::max(0.0, std::floor(local / step_)));
  if (j > last) j = last;
  return {j, (local - static_cast<double>(j) * step_) / step_, turns};
}

double QubitCurves::lerp(const std::vector<double>& v, const Slot& s) const {
  return v[s.j] + (v[s.j + 1] - v[s.j]) * s.frac;
}

double QubitCurves::gap(double phi) const { return lerp(gap_, locate(phi)); }
double QubitCurves::coupling_magnitude(double phi) const { return lerp(magnitude_, locate(phi)); }
double QubitCurves::coupling_phase(double phi) const { return lerp(phase_, locate(phi)); }
double QubitCurves::alpha(double phi) const { return coupling_magnitude(phi) / bare_coupling_; }

double QubitCurves::gap_integral(double phi) const {
  const Slot s = locate(phi);
  const double h = s.frac * step_;
  const double g0 = gap_[s.j];
  const double g1 = gap_[s.j + 1];
  return s.turns * cumulative_.back() + cumulative_[s.j] + g0 * h + 0.5 * (g1 - g0) * h * h / step_;
}

double QubitCurves::accumulated_phase(const RotationTimeline& timeline, double t0, double t1) const {
  if (t1 <= t0) return 0.0;
  if (timeline.is_stationary()) return gap(0.0) * (t1 - t0);
  double total = 0.0;
  double u = t0;
  const auto& a = timeline.alignments();
  while (u < t1) {
    const std::size_t k = timeline.revolution(u);
    double v = t1;
    // break at the next alignment inside the interior of the span
    if (k + 1 < a.size() - 1 && a[k + 1] > u) v = std::min(v, a[k + 1]);
    const double period = a[k + 1] - a[k];
    total += period / two_pi * (gap_integral(timeline.phase(v)) - gap_integral(timeline.phase(u)));
    if (v <= u) break;
    u = v;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Reduced model
// ---------------------------------------------------------------------------

double rabi_frequency(const QubitCurves& curves, double phi, double b_rf_g) {
  return curves.coupling_magnitude(phi) * b_rf_g;
}

double calibrate_rf_amplitude(const QubitCurves& curves, double pi_time_s) {
  if (!(pi_time_s > 0.0)) throw Error("dynamics", "pi time must be positive");
  return std::numbers::pi / (pi_time_s * curves.coupling_magnitude(0.0));
}

TwoLevelSchedule reduce(const QubitCurves& curves, const FMProfile& profile, double b_rf_g,
                        const RotationTimeline& timeline, const std::vector<GateWindow>& gates,
                        double t0, double t1, std::size_t n) {
  if (n < 2 || !(t1 > t0)) throw Error("dynamics", "schedule needs at least two samples over a positive span");
  validate_gates(gates);
  TwoLevelSchedule s;
  s.time_s.resize(n);
  s.gap.resize(n);
  s.rabi.resize(n);
  s.relative_phase.resize(n);
  s.drive_phase.resize(n);
  s.detuning.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(n - 1);
    const double phi = timeline.phase(t);
    s.time_s[j] = t;
    s.gap[j] = curves.gap(phi);
    s.drive_phase[j] = profile.phase_at(t);
    s.detuning[j] = s.gap[j] - two_pi * profile.frequency_at(t);
    double scale = 0.0, offset = 0.0;
    for (const GateWindow& g : gates) {
      if (g.contains(t)) {
        scale = g.amplitude_scale;
        offset = g.phase_offset;
        break;
      }
    }
    s.rabi[j] = scale * rabi_frequency(curves, phi, b_rf_g);
    s.relative_phase[j] = curves.coupling_phase(phi) - offset;
  }
  return s;
}

TwoLevelSchedule reduce(const AdiabaticTrack& track, const FMProfile& profile, double b_rf_g) {
  const QubitCurves curves(track, rf_drive_axis(track.geometry));
  const double t0 = profile.time_s.front();
  const double t1 = profile.time_s.back();
  const GateWindow always{t0, (t1 - t0) * (1.0 + 1e-12), 0.0, 1.0};
  return reduce(curves, profile, b_rf_g, RotationTimeline::nominal(track.rotation), {always}, t0, t1,
                profile.time_s.size());
}

State2 two_level_step(const State2& s, const TwoLevelPoint& p, double dt) {
  const complex i{0.0, 1.0};
  const complex c = 0.5 * p.rabi * std::exp(i * p.relative_phase);
  const double half = 0.5 * p.detuning;
  const double lambda = std::sqrt(half * half + std::norm(c));
  const double cs = std::cos(lambda * dt);
  const double sn = lambda > 0.0 ? std::sin(lambda * dt) / lambda : dt;
  const complex global = std::exp(-i * half * dt);
  State2 out;
  out.eta = global * ((cs + i * sn * half) * s.eta - i * sn * std::conj(c) * s.zeta);
  out.zeta = global * (-i * sn * c * s.eta + (cs - i * sn * half) * s.zeta);
  return out;
}

State2 two_level_propagate(State2 state, const std::function<TwoLevelPoint(double)>& at,
                           double t0, double t1, double dt) {
  if (!(t1 > t0)) return state;
  if (!(dt > 0.0)) throw Error("dynamics", "dt must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double mid = t0 + (static_cast<double>(k) + 0.5) * h;
    state = two_level_step(state, at(mid), h);
  }
  return state;
}

State2 two_level_propagate(State2 state, const TwoLevelSchedule& schedule, double dt) {
  const auto& t = schedule.time_s;
  if (t.size() < 2) throw Error("dynamics", "schedule has fewer than two samples");
  double fastest = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j)
    fastest = std::max({fastest, schedule.rabi[j], std::abs(schedule.detuning[j])});
  if (fastest * dt > two_pi / 50.0)
    throw Error("dynamics", "dt too large: need at least 50 steps per cycle of max(Omega, |Delta|)");
  auto at = [&](double time) {
    auto it = std::upper_bound(t.begin(), t.end(), time);
    std::size_t j = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    j = std::min(j, t.size() - 2);
    const double w = (time - t[j]) / (t[j + 1] - t[j]);
    auto mix = [&](const std::vector<double>& v) { return v[j] + (v[j + 1] - v[j]) * w; };
    return TwoLevelPoint{mix(schedule.rabi), mix(schedule.relative_phase), mix(schedule.detuning)};
  };
  return two_level_propagate(state, at, t.front(), t.back(), dt);
}

// ---------------------------------------------------------------------------
// Full 9-level propagation
// ---------------------------------------------------------------------------

Operator9 FieldSchedule::hamiltonian_at(double t) const {
  Operator9 h = hamiltonian(static_field_nv_frame(timeline.phase(t), geometry), constants);
  if (drive) {
    for (const GateWindow& g : drive->gates) {
      if (g.contains(t)) {
        const double b = drive->b_rf_g * g.amplitude_scale * std::cos(drive->profile.phase_at(t) + g.phase_offset);
        h += b * rf_operator(drive->axis, constants);
        break;
      }
    }
  }
  return h;
}

State9 full_propagate(State9 psi, const FieldSchedule& schedule, double t0, double t1, double dt,
                      const std::function<void(double, const State9&)>& observe,
                      std::size_t observe_every) {
  if (!(t1 > t0)) return psi;
  if (!(dt > 0.0)) throw Error("dynamics", "dt must be positive");
  const double steps_f = std::ceil((t1 - t0) / dt - 1e-9);
  if (steps_f > max_full_steps)
    throw Error("dynamics", "full propagation would take " + std::to_string(static_cast<long long>(steps_f)) +
                                " steps; use the reduced two-level propagator for long segments");
  if (schedule.drive && dt * schedule.drive->profile.max_frequency() > 1.0 / 50.0)
    throw Error("dynamics", "dt too large: need at least 50 steps per drive cycle");
  if (!schedule.timeline.is_stationary() && dt > schedule.rotation.period_s * 1e-4)
    throw Error("dynamics", "dt too large: need at least 1e4 steps per rotation");

  const auto steps = static_cast<std::size_t>(steps_f);
  const double h = (t1 - t0) / static_cast<double>(steps);
  const complex i{0.0, 1.0};
  const Operator9 v = schedule.drive ? rf_operator(schedule.drive->axis, schedule.constants) : Operator9::Zero();
  Eigen::SelfAdjointEigenSolver<Operator9> solver;
  Eigen::Matrix<complex, 9, 1> phases;
  for (std::size_t k = 0; k < steps; ++k) {
    const double mid = t0 + (static_cast<double>(k) + 0.5) * h;
    Operator9 hm = hamiltonian(static_field_nv_frame(schedule.timeline.phase(mid), schedule.geometry),
                               schedule.constants);
    if (schedule.drive) {
      for (const GateWindow& g : schedule.drive->gates) {
        if (g.contains(mid)) {
          hm += (schedule.drive->b_rf_g * g.amplitude_scale *
                 std::cos(schedule.drive->profile.phase_at(mid) + g.phase_offset)) * v;
          break;
        }
      }
    }
    solver.compute(hm);
    const auto& evals = solver.eigenvalues();
    for (int m = 0; m < 9; ++m) phases(m) = std::exp(-i * evals(m) * h);
    const auto& evecs = solver.eigenvectors();
    psi = evecs * phases.cwiseProduct(evecs.adjoint() * psi);
    if (observe && ((k + 1) % observe_every == 0 || k + 1 == steps))
      observe(t0 + static_cast<double>(k + 1) * h, psi);
  }
  return psi;
}

State9 tracked_state(const AdiabaticTrack& track, int label, double phi) {
  const std::size_t n = track.size() - 1;
  double local = std::fmod(phi, two_pi);
  if (local < 0) local += two_pi;
  const auto j = static_cast<std::size_t>(std::llround(local / two_pi * static_cast<double>(n))) % (n + 1);
  const State9 ref = track.vectors[j].col(label);
  const EigenDecomposition ed = diagonalize(hamiltonian(static_field_nv_frame(phi, track.geometry), track.constants));
  int best = 0;
  (ed.vectors.adjoint() * ref).cwiseAbs2().maxCoeff(&best);
  const complex o = ed.vectors.col(best).dot(ref);
  return ed.vectors.col(best) * (o / std::abs(o));
}

namespace {

FMProfile shifted(const FMProfile& p, double df) {
  FMProfile out = p;
  for (double& f : out.frequency_hz) f -= df;
  out.phase_rad[0] = 0.0;
  for (std::size_t j = 1; j < out.time_s.size(); ++j)
    out.phase_rad[j] = out.phase_rad[j - 1] +
                       two_pi * 0.5 * (out.frequency_hz[j] + out.frequency_hz[j - 1]) * (out.time_s[j] - out.time_s[j - 1]);
  return out;
}

}  // namespace

ReductionReport validate_reduction(const ValidationSegment& seg) {
  const AdiabaticTrack track = build_track(seg.geometry, seg.rotation, seg.constants, seg.track_samples);
  const Eigen::Vector3d axis = rf_drive_axis(seg.geometry);
  const QubitCurves curves(track, axis);
  const double b_rf = seg.geometry.rf_amplitude_g.value_or(calibrate_rf_amplitude(curves, seg.pi_time_s));
  const RotationTimeline timeline =
      seg.rotating ? RotationTimeline::nominal(seg.rotation) : RotationTimeline::stationary();
  const FMProfile profile = seg.rotating
      ? shifted(fm_from_track(track, seg.rotation), seg.detuning_hz)
      : FMProfile::constant(curves.gap(0.0) / two_pi - seg.detuning_hz, seg.rotation.period_s);

  std::vector<GateWindow> gates;
  if (seg.drive_on) gates.push_back({seg.start_s, seg.duration_s * (1.0 + 1e-12), 0.0, 1.0});

  FieldSchedule field;
  field.geometry = seg.geometry;
  field.constants = seg.constants;
  field.rotation = seg.rotation;
  field.timeline = timeline;
  field.drive = RfDrive{profile, gates, b_rf, axis};

  const int eta = track.eta();
  const int zeta = track.zeta();
  auto reduced_at = [&](double t) {
    const double phi = timeline.phase(t);
    double scale = 0.0, offset = 0.0;
    for (const GateWindow& g : gates)
      if (g.contains(t)) { scale = g.amplitude_scale; offset = g.phase_offset; }
    return TwoLevelPoint{scale * rabi_frequency(curves, phi, b_rf), curves.coupling_phase(phi) - offset,
                         curves.gap(phi) - two_pi * profile.frequency_at(t)};
  };

  ReductionReport report;
  State9 psi = tracked_state(track, eta, timeline.phase(seg.start_s));
  State2 reduced;
  double t = seg.start_s;
  const double span = seg.duration_s / static_cast<double>(seg.checkpoints);
  for (std::size_t c = 1; c <= seg.checkpoints; ++c) {
    const double next = seg.start_s + span * static_cast<double>(c);
    psi = full_propagate(psi, field, t, next, seg.full_dt_s);
    reduced = two_level_propagate(reduced, reduced_at, t, next, seg.reduced_dt_s);
    t = next;
    const double phi = timeline.phase(t);
    const double p_eta = std::norm(tracked_state(track, eta, phi).dot(psi));
    const double p_zeta = std::norm(tracked_state(track, zeta, phi).dot(psi));
    report.max_deviation_eta = std::max(report.max_deviation_eta, std::abs(p_eta - reduced.population_eta()));
    report.max_deviation_zeta = std::max(report.max_deviation_zeta, std::abs(p_zeta - reduced.population_zeta()));
    report.max_leakage = std::max(report.max_leakage, 1.0 - p_eta - p_zeta);
    report.final_full_zeta = p_zeta;
    report.final_reduced_zeta = reduced.population_zeta();
  }
  report.max_deviation = std::max(report.max_deviation_eta, report.max_deviation_zeta);
  return report;
}

}  // namespace rotorspin

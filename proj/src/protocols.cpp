#include "rotorspin/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rotorspin/error.hpp"
#include "rotorspin/parallel.hpp"

namespace rotorspin {

namespace {

constexpr double pi = std::numbers::pi;

// Two-column propagator of the eta/zeta pair, columns are images of eta and zeta.
struct Unitary2 {
  State2 of_eta{{1.0, 0.0}, {0.0, 0.0}};
  State2 of_zeta{{0.0, 0.0}, {1.0, 0.0}};

  State2 apply(const State2& s) const {
    return {of_eta.eta * s.eta + of_zeta.eta * s.zeta, of_eta.zeta * s.eta + of_zeta.zeta * s.zeta};
  }
};

}  // namespace

void JitterModel::validate() const {
  if (!(sigma_period_s >= 0.0) || !std::isfinite(sigma_period_s))
    throw Error("protocols", "jitter_sigma_s must be non-negative");
}

void ReadoutModel::validate() const {
  if (!(polarization_fraction >= 0.0 && polarization_fraction <= 1.0))
    throw Error("protocols", "polarization must lie in [0, 1]");
  if (contrast_max && !(*contrast_max >= 0.0 && *contrast_max <= 1.0))
    throw Error("protocols", "contrast_max must lie in [0, 1]");
  if (!(window_fwhm_s > 0.0) || !std::isfinite(window_fwhm_s))
    throw Error("protocols", "readout_fwhm_s must be positive");
  if (!std::isfinite(laser_on_offset_s)) throw Error("protocols", "laser_on_offset_s must be finite");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error("protocols", "readout_noise_sigma must be non-negative");
}

double readout_window(double laser_on_offset_s, const ReadoutModel& model) {
  const double r = laser_on_offset_s / model.window_fwhm_s;
  return std::exp(-4.0 * std::numbers::ln2 * r * r);
}

void ProtocolConfig::validate() const {
  constants.validate();
  geometry.validate();
  rotation.validate();
  jitter.validate();
  readout.validate();
  if (!(pi_time_s > 0.0) || !std::isfinite(pi_time_s)) throw Error("protocols", "pi_time_s must be positive");
  if (intrinsic_t2star_s && !(*intrinsic_t2star_s > 0.0))
    throw Error("protocols", "intrinsic_t2star_s must be positive");
  if (intrinsic_t2_s && !(*intrinsic_t2_s > 0.0)) throw Error("protocols", "intrinsic_t2_s must be positive");
  if (shots < 1) throw Error("protocols", "shots must be at least 1");
  if (readout_periods < 1) throw Error("protocols", "readout_periods must be at least 1");
  if (decay_exponent && !(*decay_exponent > 0.0)) throw Error("protocols", "decay_exponent must be positive");
}

std::uint64_t shot_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> phase_grid(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = 2.0 * pi * static_cast<double>(k) / static_cast<double>(n);
  return out;
}

Simulator::Simulator(ProtocolConfig config)
    : config_((config.validate(), std::move(config))),
      track_(build_track(config_.geometry, config_.rotation, config_.constants, config_.track_samples)),
      curves_(track_, rf_drive_axis(config_.geometry)),
      profile_(config_.stationary || !config_.feedforward
                   ? FMProfile::constant(curves_.gap(0.0) / two_pi, config_.rotation.period_s)
                   : fm_from_track(track_, config_.rotation)),
      b_rf_(config_.geometry.rf_amplitude_g.value_or(calibrate_rf_amplitude(curves_, config_.pi_time_s))) {}

double Simulator::contrast() const {
  return config_.readout.contrast_max.value_or(config_.stationary ? 0.06 : 0.025);
}

double Simulator::nominal_rabi(double t) const {
  const double phi = config_.stationary ? 0.0 : rotation_phase(t, config_.rotation);
  return rabi_frequency(curves_, phi, b_rf_);
}

Pulse Simulator::place_pulse(double angle, double centre, double not_before, double phase) const {
  Pulse p;
  p.phase_rad = phase;
  p.start_s = std::max(centre, not_before);
  for (int it = 0; it < 20; ++it) {
    const double omega = nominal_rabi(p.start_s);
    if (!(omega > 0.0)) throw Error("protocols", "drive has no coupling at the pulse time");
    p.duration_s = angle / omega;
    const double start = std::max(centre - 0.5 * p.duration_s, not_before);
    if (std::abs(start - p.start_s) < 1e-15) break;
    p.start_s = start;
  }
  return p;
}

RotationTimeline Simulator::timeline_for_shot(std::size_t shot, double horizon_s) const {
  if (config_.stationary) return RotationTimeline::stationary();
  const RotationConfig& rot = config_.rotation;
  if (config_.jitter.sigma_period_s == 0.0) return RotationTimeline::nominal(rot);
  std::mt19937_64 rng(shot_seed(config_.jitter.seed, shot));
  std::normal_distribution<double> normal(0.0, config_.jitter.sigma_period_s);
  const auto revolutions = static_cast<std::size_t>(std::ceil(horizon_s / rot.period_s)) + 2;
  std::vector<double> a(revolutions + 1);
  if (config_.jitter.mode == JitterMode::per_shot) {
    const double eps = normal(rng);
    for (std::size_t k = 0; k <= revolutions; ++k)
      a[k] = rot.phase_origin_s + eps + static_cast<double>(k) * (rot.period_s + eps);
  } else {
    // the triggering revolution ends late by its own error
    a[0] = rot.phase_origin_s + normal(rng);
    for (std::size_t k = 1; k <= revolutions; ++k) a[k] = a[k - 1] + rot.period_s + normal(rng);
  }
  return RotationTimeline::from_alignments(std::move(a));
}

void Simulator::check_fits(const Sequence& seq) const {
  if (seq.pulses.empty()) throw Error("protocols", "sequence has no pulses");
  double end = 0.0;
  for (const Pulse& p : seq.pulses) {
    if (!(p.duration_s >= 0.0)) throw Error("protocols", "pulse durations must be non-negative");
    if (p.start_s < end - 1e-15) throw Error("protocols", "pulses overlap or start before t = 0");
    end = p.start_s + p.duration_s;
  }
  if (end > seq.readout_s * (1.0 + 1e-12))
    throw Error("protocols", "sequence ends after the readout time; shorten it or raise readout_periods");
}

bool Simulator::fits(const Sequence& seq) const {
  try {
    check_fits(seq);
    return true;
  } catch (const Error&) {
    return false;
  }
}

ProtocolResult Simulator::run(const Sequence& seq, const std::vector<double>& phases) const {
  check_fits(seq);
  const std::size_t shots = config_.shots;
  const std::size_t samples = std::max<std::size_t>(1, phases.size());
  const double horizon = seq.readout_s + config_.rotation.period_s;
  const double scale = contrast() * config_.readout.polarization_fraction *
                       readout_window(config_.readout.laser_on_offset_s, config_.readout);

  std::vector<std::vector<double>> per_shot(shots);
  parallel_for(shots, [&](std::size_t shot) {
    const RotationTimeline tl = timeline_for_shot(shot, horizon);
    const complex i{0.0, 1.0};

    auto free = [&](State2& s, double t0, double t1) {
      if (t1 <= t0) return;
      const double lag = curves_.accumulated_phase(tl, t0, t1) - (profile_.phase_at(t1) - profile_.phase_at(t0));
      s.zeta *= std::exp(-i * lag);
    };
    auto pulse = [&](const State2& s, const Pulse& p) {
      if (p.duration_s <= 0.0 || p.amplitude_scale == 0.0) {
        State2 out = s;
        free(out, p.start_s, p.start_s + p.duration_s);
        return out;
      }
      auto at = [&](double t) {
        const double phi = tl.phase(t);
        return TwoLevelPoint{p.amplitude_scale * rabi_frequency(curves_, phi, b_rf_),
                             curves_.coupling_phase(phi) - p.phase_rad,
                             curves_.gap(phi) - two_pi * profile_.frequency_at(t)};
      };
      double fastest = 0.0;
      for (int k = 0; k <= 8; ++k) {
        const TwoLevelPoint q = at(p.start_s + p.duration_s * k / 8.0);
        fastest = std::max({fastest, q.rabi, std::abs(q.detuning)});
      }
      const double steps = std::max(16.0, std::ceil(1.5 * 50.0 * fastest * p.duration_s / two_pi));
      return two_level_propagate(s, at, p.start_s, p.start_s + p.duration_s, p.duration_s / steps);
    };

    State2 s;
    double t = 0.0;
    const std::size_t last = seq.pulses.size() - 1;
    for (std::size_t k = 0; k < last; ++k) {
      free(s, t, seq.pulses[k].start_s);
      s = pulse(s, seq.pulses[k]);
      t = seq.pulses[k].start_s + seq.pulses[k].duration_s;
    }
    const Pulse& fin = seq.pulses[last];
    free(s, t, fin.start_s);

    std::vector<double> p_eta(samples);
    if (phases.empty()) {
      p_eta[0] = pulse(s, fin).population_eta();
    } else {
      // U(phase) = R U(0) R^dagger with R = diag(1, e^{-i phase})
      Unitary2 u;
      u.of_eta = pulse(u.of_eta, fin);
      u.of_zeta = pulse(u.of_zeta, fin);
      for (std::size_t k = 0; k < samples; ++k) {
        const complex rz = std::exp(i * phases[k]) * s.zeta;
        p_eta[k] = std::norm(u.of_eta.eta * s.eta + u.of_zeta.eta * rz);
      }
    }

    std::mt19937_64 noise_rng(shot_seed(~config_.jitter.seed, shot));
    std::normal_distribution<double> noise(0.0, config_.readout.noise_sigma > 0 ? config_.readout.noise_sigma : 1.0);
    std::vector<double> out(samples);
    for (std::size_t k = 0; k < samples; ++k) {
      double v = scale * (0.5 + seq.envelope * (p_eta[k] - 0.5));
      if (config_.readout.noise_sigma > 0) v = std::clamp(v + noise(noise_rng), 0.0, contrast());
      out[k] = v;
    }
    per_shot[shot] = std::move(out);
  });

  ProtocolResult r;
  r.x = phases.empty() ? std::vector<double>{0.0} : phases;
  r.signal.assign(samples, 0.0);
  r.std_error.assign(samples, 0.0);
  for (std::size_t shot = 0; shot < shots; ++shot)
    for (std::size_t k = 0; k < samples; ++k) r.signal[k] += per_shot[shot][k];
  for (double& v : r.signal) v /= static_cast<double>(shots);
  if (shots > 1) {
    for (std::size_t k = 0; k < samples; ++k) {
      double ss = 0.0;
      for (std::size_t shot = 0; shot < shots; ++shot) {
        const double d = per_shot[shot][k] - r.signal[k];
        ss += d * d;
      }
      r.std_error[k] = std::sqrt(ss / static_cast<double>(shots - 1) / static_cast<double>(shots));
    }
  }
  return r;
}

namespace {

double envelope(const std::optional<double>& t2, double tau) { return t2 ? std::exp(-tau / *t2) : 1.0; }

void attach_fringe_fit(ProtocolResult& r) {
  const FringeFit f = fit_fringe(r.x, r.signal, r.std_error);
  r.fit["amplitude"] = f.amplitude;
  r.fit["phase"] = f.phase;
  r.fit["offset"] = f.offset;
}

void attach_decay_fit(ProtocolResult& r, const std::optional<double>& exponent) {
  if (r.x.size() < 4) return;
  const DecayFit d = fit_decay(r.x, r.signal, exponent);
  r.fit["t2_s"] = d.t2;
  r.fit["exponent"] = d.exponent;
  r.fit["amplitude0"] = d.amplitude0;
  r.t2_lower_bound = d.t2_is_lower_bound;
  if (d.t2_is_lower_bound) r.fit["t2_bound_s"] = {d.t2_bound, 0.0};
}

double centre(const Pulse& p) { return p.start_s + 0.5 * p.duration_s; }
double end(const Pulse& p) { return p.start_s + p.duration_s; }

}  // namespace

ProtocolResult Simulator::rabi(double t_d, const std::vector<double>& durations) const {
  if (durations.empty()) throw Error("protocols", "rabi needs at least one duration");
  if (t_d < 0.0) throw Error("protocols", "t_D must be non-negative");
  const double readout = config_.readout_periods * config_.rotation.period_s;
  for (double d : durations) {
    if (!(d >= 0.0)) throw Error("protocols", "rabi durations must be non-negative");
    if (t_d + d > readout) throw Error("protocols", "t_D plus the longest duration exceeds the readout time");
  }
  ProtocolResult r;
  r.protocol = "rabi";
  r.variable = "duration_s";
  for (double d : durations) {
    Sequence seq;
    seq.pulses.push_back({t_d, d, 0.0, 1.0});
    seq.readout_s = readout;
    const ProtocolResult one = run(seq, {});
    r.x.push_back(d);
    r.signal.push_back(one.signal[0]);
    r.std_error.push_back(one.std_error[0]);
  }
  if (durations.size() >= 6) {
    const SinusoidFit f = fit_sinusoid(r.x, r.signal);
    r.fit["f_rabi_hz"] = f.frequency;
    r.fit["amplitude"] = f.amplitude;
    r.fit["phase"] = f.phase;
    r.fit["offset"] = f.offset;
    r.fit["pi_time_s"] = {0.5 / f.frequency.value, 0.5 * f.frequency.error / (f.frequency.value * f.frequency.value)};
  }
  return r;
}

Sequence Simulator::ramsey_sequence(double t_d, double tau) const {
  Sequence seq;
  const Pulse a = place_pulse(pi / 2, t_d, t_d);
  const Pulse b = place_pulse(pi / 2, centre(a) + tau, end(a));
  seq.pulses = {a, b};
  seq.readout_s = config_.readout_periods * config_.rotation.period_s;
  seq.envelope = envelope(config_.intrinsic_t2star_s, centre(b) - centre(a));
  return seq;
}

Sequence Simulator::echo_sequence(double t_d, double tau) const {
  Sequence seq;
  const Pulse a = place_pulse(pi / 2, t_d, t_d);
  const Pulse b = place_pulse(pi, centre(a) + 0.5 * tau, end(a));
  const Pulse c = place_pulse(pi / 2, centre(a) + tau, end(b));
  seq.pulses = {a, b, c};
  seq.readout_s = config_.readout_periods * config_.rotation.period_s;
  seq.envelope = envelope(config_.intrinsic_t2_s, centre(c) - centre(a));
  return seq;
}

Sequence Simulator::multi_period_sequence(int n) const {
  if (n < 0 || n % 2 != 0) throw Error("protocols", "multi-period echo needs an even, non-negative period count");
  const double period = config_.rotation.period_s;
  Sequence seq;
  const Pulse a = place_pulse(pi / 2, 0.0, 0.0);
  const Pulse b = place_pulse(pi, centre(a) + 0.5 * n * period, end(a));
  const Pulse c = place_pulse(pi / 2, centre(a) + n * period, end(b));
  seq.pulses = {a, b, c};
  seq.readout_s = std::max(config_.readout_periods, n + 1) * period;
  seq.envelope = envelope(config_.intrinsic_t2_s, centre(c) - centre(a));
  return seq;
}

Sequence Simulator::lock_sequence(double lock_s, double lock_scale) const {
  if (!(lock_s >= 0.0)) throw Error("protocols", "lock duration must be non-negative");
  Sequence seq;
  const Pulse a = place_pulse(pi / 2, 0.0, 0.0);
  const Pulse lock{end(a), lock_s, pi / 2, lock_scale};
  const Pulse c = place_pulse(pi / 2, end(lock), end(lock));
  seq.pulses = {a, lock, c};
  seq.readout_s = config_.readout_periods * config_.rotation.period_s;
  seq.envelope = envelope(config_.intrinsic_t2_s, lock_s);
  return seq;
}

ProtocolResult Simulator::ramsey(double t_d, double tau, const std::vector<double>& phases) const {
  ProtocolResult r = run(ramsey_sequence(t_d, tau), phases);
  r.protocol = "ramsey";
  r.variable = "phase_rad";
  attach_fringe_fit(r);
  return r;
}

ProtocolResult Simulator::spin_echo(double t_d, double tau, const std::vector<double>& phases) const {
  ProtocolResult r = run(echo_sequence(t_d, tau), phases);
  r.protocol = "echo";
  r.variable = "phase_rad";
  attach_fringe_fit(r);
  return r;
}

ProtocolResult Simulator::multi_period_echo(int n_periods, const std::vector<double>& phases) const {
  ProtocolResult r = run(multi_period_sequence(n_periods), phases);
  r.protocol = "echo_multiperiod";
  r.variable = "phase_rad";
  attach_fringe_fit(r);
  return r;
}

ProtocolResult Simulator::spin_lock(double lock_s, const std::vector<double>& phases, double lock_scale) const {
  ProtocolResult r = run(lock_sequence(lock_s, lock_scale), phases);
  r.protocol = "spinlock";
  r.variable = "phase_rad";
  attach_fringe_fit(r);
  return r;
}

namespace {

template <typename Make>
ProtocolResult sweep(const std::string& name, const std::string& variable, std::size_t n, Make make) {
  ProtocolResult r;
  r.protocol = name;
  r.variable = variable;
  for (std::size_t k = 0; k < n; ++k) {
    auto made = make(k);
    if (!made) continue;
    auto& [x, fringe] = *made;
    r.x.push_back(x);
    r.signal.push_back(fringe.fit.at("amplitude").value);
    r.std_error.push_back(fringe.fit.at("amplitude").error);
    r.fringes.push_back(std::move(fringe));
  }
  return r;
}

}  // namespace

ProtocolResult Simulator::ramsey_decay(double t_d, const std::vector<double>& taus,
                                       const std::vector<double>& phases) const {
  ProtocolResult r = sweep("ramsey_decay", "tau_s", taus.size(), [&](std::size_t k) {
    const Sequence seq = ramsey_sequence(t_d, taus[k]);
    if (!fits(seq)) return std::optional<std::pair<double, ProtocolResult>>{};
    ProtocolResult f = run(seq, phases);
    f.protocol = "ramsey";
    f.variable = "phase_rad";
    attach_fringe_fit(f);
    return std::optional{std::pair{centre(seq.pulses[1]) - centre(seq.pulses[0]), std::move(f)}};
  });
  attach_decay_fit(r, config_.decay_exponent);
  return r;
}

ProtocolResult Simulator::echo_decay(double t_d, const std::vector<double>& taus,
                                     const std::vector<double>& phases) const {
  ProtocolResult r = sweep("echo_decay", "tau_s", taus.size(), [&](std::size_t k) {
    const Sequence seq = echo_sequence(t_d, taus[k]);
    if (!fits(seq)) return std::optional<std::pair<double, ProtocolResult>>{};
    ProtocolResult f = run(seq, phases);
    f.protocol = "echo";
    f.variable = "phase_rad";
    attach_fringe_fit(f);
    return std::optional{std::pair{centre(seq.pulses[2]) - centre(seq.pulses[0]), std::move(f)}};
  });
  attach_decay_fit(r, config_.decay_exponent);
  return r;
}

ProtocolResult Simulator::multi_period_decay(const std::vector<int>& n_periods,
                                             const std::vector<double>& phases) const {
  ProtocolResult r = sweep("echo_multiperiod_decay", "tau_s", n_periods.size(), [&](std::size_t k) {
    const Sequence seq = multi_period_sequence(n_periods[k]);
    if (!fits(seq)) return std::optional<std::pair<double, ProtocolResult>>{};
    ProtocolResult f = run(seq, phases);
    f.protocol = "echo_multiperiod";
    f.variable = "phase_rad";
    attach_fringe_fit(f);
    return std::optional{std::pair{centre(seq.pulses[2]) - centre(seq.pulses[0]), std::move(f)}};
  });
  attach_decay_fit(r, config_.decay_exponent);
  return r;
}

ProtocolResult Simulator::spin_lock_sweep(const std::vector<double>& locks, const std::vector<double>& phases,
                                          double lock_scale) const {
  return sweep("spinlock_sweep", "lock_s", locks.size(), [&](std::size_t k) {
    const Sequence seq = lock_sequence(locks[k], lock_scale);
    if (!fits(seq)) return std::optional<std::pair<double, ProtocolResult>>{};
    return std::optional{std::pair{locks[k], spin_lock(locks[k], phases, lock_scale)}};
  });
}

FitParameter Simulator::model_rabi_frequency(double t_d, const std::vector<double>& durations) const {
  if (durations.size() < 6) throw Error("protocols", "model Rabi frequency needs at least six durations");
  std::vector<double> d = durations;
  std::sort(d.begin(), d.end());
  // accumulated angle by midpoint quadrature between consecutive durations
  std::vector<double> y(d.size());
  double angle = 0.0, t = t_d;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double t1 = t_d + d[k];
    const int sub = 200;
    const double h = (t1 - t) / sub;
    for (int j = 0; j < sub; ++j) angle += nominal_rabi(t + (j + 0.5) * h) * h;
    t = t1;
    y[k] = 0.5 * (1.0 + std::cos(angle));
  }
  return fit_sinusoid(d, y).frequency;
}

double Simulator::phase_error_variance(double t0, double t1) const {
  const std::size_t shots = config_.shots;
  std::vector<double> err(shots);
  const double carrier = profile_.phase_at(t1) - profile_.phase_at(t0);
  parallel_for(shots, [&](std::size_t shot) {
    const RotationTimeline tl = timeline_for_shot(shot, t1 + config_.rotation.period_s);
    err[shot] = curves_.accumulated_phase(tl, t0, t1) - carrier;
  });
  double mean = 0.0;
  for (double e : err) mean += e;
  mean /= static_cast<double>(shots);
  double var = 0.0;
  for (double e : err) var += (e - mean) * (e - mean);
  return var / static_cast<double>(shots);
}

}  // namespace rotorspin

#include "rotorspin/feedforward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rotorspin/error.hpp"

namespace rotorspin {

namespace {

struct Located {
  std::size_t index;  // left grid point within the first period
  double offset;      // time past that grid point
  double turns;       // whole periods removed
};

Located locate(const FMProfile& p, double t) {
  const std::size_t per_period = (p.time_s.size() - 1) / static_cast<std::size_t>(p.periods);
  const double t0 = p.time_s.front();
  const double turns = std::floor((t - t0) / p.period_s);
  const double local = (t - t0) - turns * p.period_s;
  const double h = p.period_s / static_cast<double>(per_period);
  std::size_t j = static_cast<std::size_t>(std::floor(local / h));
  if (j >= per_period) j = per_period - 1;
  return {j, local - static_cast<double>(j) * h, turns};
}

}  // namespace

double FMProfile::frequency_at(double t) const {
  const Located at = locate(*this, t);
  const double h = time_s[1] - time_s[0];
  const double f0 = frequency_hz[at.index];
  const double f1 = frequency_hz[at.index + 1];
  return f0 + (f1 - f0) * at.offset / h;
}

double FMProfile::phase_at(double t) const {
  const Located at = locate(*this, t);
  const std::size_t per_period = (time_s.size() - 1) / static_cast<std::size_t>(periods);
  const double per_turn = phase_rad[per_period] - phase_rad[0];
  const double h = time_s[1] - time_s[0];
  const double f0 = frequency_hz[at.index];
  const double f1 = frequency_hz[at.index + 1];
  const double s = at.offset;
  return phase_rad[at.index] + at.turns * per_turn + two_pi * (f0 * s + 0.5 * (f1 - f0) * s * s / h);
}

double FMProfile::max_frequency() const {
  return *std::max_element(frequency_hz.begin(), frequency_hz.end());
}

double FMProfile::min_frequency() const {
  return *std::min_element(frequency_hz.begin(), frequency_hz.end());
}

namespace {

FMProfile integrate(std::vector<double> time, std::vector<double> freq, double period, int periods) {
  FMProfile p;
  p.period_s = period;
  p.periods = periods;
  p.phase_rad.resize(time.size());
  p.phase_rad[0] = 0.0;
  for (std::size_t j = 1; j < time.size(); ++j)
    p.phase_rad[j] = p.phase_rad[j - 1] + two_pi * 0.5 * (freq[j] + freq[j - 1]) * (time[j] - time[j - 1]);
  p.time_s = std::move(time);
  p.frequency_hz = std::move(freq);
  return p;
}

}  // namespace

FMProfile FMProfile::constant(double frequency_hz, double period_s, int periods,
                              std::size_t samples_per_period) {
  if (!(period_s > 0.0) || periods < 1 || samples_per_period < 1)
    throw Error("feedforward", "constant profile needs a positive period and sample count");
  const std::size_t n = samples_per_period * static_cast<std::size_t>(periods) + 1;
  std::vector<double> t(n), f(n, frequency_hz);
  for (std::size_t j = 0; j < n; ++j)
    t[j] = period_s * static_cast<double>(j) / static_cast<double>(samples_per_period);
  return integrate(std::move(t), std::move(f), period_s, periods);
}

FMProfile fm_from_track(const AdiabaticTrack& track, const RotationConfig& rot, int periods) {
  if (periods < 1) throw Error("feedforward", "profile needs at least one period");
  if (track.size() < 2) throw Error("feedforward", "track is empty");
  const std::vector<double> f_track = transition_frequency(track);
  const std::size_t per_period = track.size() - 1;
  const std::size_t n = per_period * static_cast<std::size_t>(periods) + 1;
  std::vector<double> t(n), f(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = j % per_period;
    const double turns = static_cast<double>(j / per_period);
    t[j] = rot.phase_origin_s + rot.period_s * (turns + track.phi[k] / two_pi);
    f[j] = f_track[k];
  }
  // closing point of the last period uses phi = 2pi exactly
  f[n - 1] = f_track[per_period];
  return integrate(std::move(t), std::move(f), rot.period_s, periods);
}

void validate_gates(const std::vector<GateWindow>& gates) {
  std::vector<GateWindow> sorted = gates;
  std::sort(sorted.begin(), sorted.end(), [](const GateWindow& a, const GateWindow& b) { return a.start < b.start; });
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (!(sorted[k].duration >= 0.0)) throw Error("feedforward", "gate duration must be non-negative");
    if (k > 0) {
      // adjacent windows may overlap by rounding of start + duration
      const double prev_end = sorted[k - 1].start + sorted[k - 1].duration;
      if (sorted[k].start < prev_end - 1e-12 * std::abs(prev_end))
        throw Error("feedforward", "gate windows overlap");
    }
  }
}

Waveform synthesize(const FMProfile& profile, const std::vector<GateWindow>& gates,
                    double sample_rate_hz) {
  validate_gates(gates);
  if (!(sample_rate_hz >= 10.0 * profile.max_frequency()))
    throw Error("feedforward", "sample rate must be at least 10x the highest profile frequency");
  Waveform out;
  out.sample_rate_hz = sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(profile.duration() * sample_rate_hz));
  out.samples.assign(n, 0.0);
  if (gates.empty()) return out;
  const double t0 = profile.time_s.front();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) / sample_rate_hz;
    for (const GateWindow& g : gates) {
      if (g.contains(t)) {
        out.samples[i] = g.amplitude_scale * std::sin(profile.phase_at(t) + g.phase_offset);
        break;
      }
    }
  }
  return out;
}

void export_waveform(const Waveform& waveform, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("feedforward", "cannot open " + path.string() + " for writing");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", waveform.sample_rate_hz);
  os << "# sample_rate_hz=" << buf << '\n';
  for (double s : waveform.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s);
    os << buf << '\n';
  }
  if (!os) throw Error("feedforward", "write failed for " + path.string());
}

Waveform import_waveform(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("feedforward", "cannot open " + path.string());
  std::string line;
  Waveform out;
  const std::string key = "# sample_rate_hz=";
  if (!std::getline(is, line) || line.rfind(key, 0) != 0)
    throw Error("feedforward", "missing sample rate header in " + path.string());
  out.sample_rate_hz = std::strtod(line.c_str() + key.size(), nullptr);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.samples.push_back(std::strtod(line.c_str(), nullptr));
  }
  return out;
}

}  // namespace rotorspin

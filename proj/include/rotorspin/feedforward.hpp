#pragma once

#include <filesystem>
#include <vector>

#include "rotorspin/spectral.hpp"

namespace rotorspin {

// Frequency-modulated drive profile sampled on a uniform grid. Between grid
// points the frequency is linear and the phase is its exact integral, so
// phase_at is continuous and consistent with frequency_at. Both extend
// periodically beyond the sampled span.
struct FMProfile {
  std::vector<double> time_s;
  std::vector<double> frequency_hz;
  std::vector<double> phase_rad;
  double period_s = 0.0;
  int periods = 0;

  double frequency_at(double t) const;
  double phase_at(double t) const;
  double duration() const { return period_s * periods; }
  double max_frequency() const;
  double min_frequency() const;

  // Fixed-frequency source, used with feedforward switched off.
  static FMProfile constant(double frequency_hz, double period_s, int periods = 1,
                            std::size_t samples_per_period = 64);
};

struct GateWindow {
  double start = 0.0;
  double duration = 0.0;
  double phase_offset = 0.0;
  double amplitude_scale = 1.0;

  bool contains(double t) const { return t >= start && t < start + duration; }
};

struct Waveform {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;
};

// Transition frequency of the tracked |0,+1> <-> |0,0> pair mapped onto
// nominal time, integrated to a continuous phase.
FMProfile fm_from_track(const AdiabaticTrack& track, const RotationConfig& rot, int periods = 1);

// Gates must have non-negative durations and must not overlap.
void validate_gates(const std::vector<GateWindow>& gates);

// Free-running gated oscillator: amplitude_scale * sin(phase_at(t) + offset)
// inside a gate, zero outside. The phase keeps accumulating while gated off.
Waveform synthesize(const FMProfile& profile, const std::vector<GateWindow>& gates,
                    double sample_rate_hz);

// "# sample_rate_hz=<rate>" header, then one sample per line at 17
// significant digits.
void export_waveform(const Waveform& waveform, const std::filesystem::path& path);
Waveform import_waveform(const std::filesystem::path& path);

}  // namespace rotorspin

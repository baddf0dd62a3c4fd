#pragma once

#include <optional>
#include <vector>

namespace rotorspin {

struct FitParameter {
  double value = 0.0;
  double error = 0.0;
};

// signal = offset + amplitude * cos(phi - phase), amplitude >= 0.
struct FringeFit {
  FitParameter amplitude;
  FitParameter phase;
  FitParameter offset;
};

// A0 * exp(-(tau / T2)^p). When the data show no decay, t2 is +inf and
// t2_is_lower_bound is set; t2_bound then holds the longest tau probed.
struct DecayFit {
  FitParameter t2;
  FitParameter exponent;
  FitParameter amplitude0;
  bool t2_is_lower_bound = false;
  double t2_bound = 0.0;
};

// signal = offset + amplitude * cos(2 pi f x + phase).
struct SinusoidFit {
  FitParameter frequency;
  FitParameter amplitude;
  FitParameter phase;
  FitParameter offset;
};

// Linear least squares in (offset, cos, sin). Needs >= 5 samples covering a
// full turn of phase.
// With `sigma` (all positive) the rows are weighted and the parameter errors
// come from those sample errors rather than from the residual scatter.
FringeFit fit_fringe(const std::vector<double>& phases, const std::vector<double>& signal,
                     const std::vector<double>& sigma = {});

// Nonlinear least squares (Levenberg-Marquardt). `fixed_exponent` pins p.
DecayFit fit_decay(const std::vector<double>& taus, const std::vector<double>& amplitudes,
                   std::optional<double> fixed_exponent = std::nullopt);

// Periodogram seed followed by Levenberg-Marquardt on all four parameters.
SinusoidFit fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rotorspin

#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rotorspin/error.hpp"
#include "rotorspin/protocols.hpp"

using namespace rotorspin;
using std::numbers::pi;

namespace {

ProtocolConfig rotating(double sigma, std::size_t shots) {
  ProtocolConfig c;
  c.jitter.sigma_period_s = sigma;
  c.shots = shots;
  return c;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

double amplitude(const ProtocolResult& r) { return r.fit.at("amplitude").value; }

const std::vector<double> phases = phase_grid(12);

}  // namespace

TEST_CASE("readout window") {
  ReadoutModel m;
  CHECK(readout_window(0.0, m) == 1.0);
  CHECK(readout_window(m.window_fwhm_s / 2, m) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(readout_window(2e-6, m) == doctest::Approx(0.5).epsilon(1e-14));
  m.window_fwhm_s = 0.0;
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("seeding helpers") {
  CHECK(shot_seed(7, 3) == shot_seed(7, 3));
  CHECK(shot_seed(7, 3) != shot_seed(7, 4));
  CHECK(shot_seed(7, 3) != shot_seed(8, 3));
  const auto g = phase_grid(4);
  CHECK(g == std::vector<double>{0.0, pi / 2, pi, 1.5 * pi});
}

TEST_CASE("configuration errors") {
  ProtocolConfig c;
  c.shots = 0;
  CHECK_THROWS_AS(Simulator{c}, Error);
  c = {};
  c.jitter.sigma_period_s = -1e-9;
  CHECK_THROWS_AS(Simulator{c}, Error);
  c = {};
  c.readout.polarization_fraction = 1.5;
  CHECK_THROWS_AS(Simulator{c}, Error);
}

TEST_CASE("jitter timelines") {
  const Simulator per_shot(rotating(323e-9, 1));
  const RotationTimeline a = per_shot.timeline_for_shot(3, 3e-3);
  const auto& al = a.alignments();
  REQUIRE(al.size() >= 4);
  const double eps = al[0];
  for (std::size_t k = 1; k < al.size(); ++k)
    CHECK(al[k] - al[k - 1] == doctest::Approx(1e-3 + eps).epsilon(1e-9));
  CHECK(per_shot.timeline_for_shot(3, 3e-3).alignments() == al);

  ProtocolConfig c = rotating(323e-9, 1);
  c.jitter.mode = JitterMode::per_period;
  const Simulator per_period(c);
  const auto& bl = per_period.timeline_for_shot(3, 3e-3).alignments();
  CHECK(std::abs((bl[2] - bl[1]) - (bl[1] - bl[0])) > 0.0);

  ProtocolConfig s;
  s.stationary = true;
  CHECK(Simulator(s).timeline_for_shot(0, 1e-3).is_stationary());
}

TEST_CASE("stationary Rabi oscillation") {
  ProtocolConfig c;
  c.stationary = true;
  const Simulator sim(c);
  const ProtocolResult r = sim.rabi(0.0, linspace(0.0, 60e-6, 61));
  CHECK(r.fit.at("f_rabi_hz").value == doctest::Approx(1.0 / 14e-6).epsilon(1e-4));
  CHECK(r.fit.at("pi_time_s").value == doctest::Approx(7e-6).epsilon(1e-4));
  CHECK(r.signal.front() == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(r.x.size() == r.signal.size());
  CHECK(r.signal.size() == r.std_error.size());
  for (double v : r.signal) {
    CHECK(v >= -1e-15);
    CHECK(v <= 0.06 + 1e-15);
  }
}

TEST_CASE("rotating Rabi frequency follows the coupling model") {
  const Simulator sim(rotating(323e-9, 200));
  CHECK(sim.rabi(0.0, {0.0}).signal.front() == doctest::Approx(0.025).epsilon(1e-12));

  // the controller's Rabi frequency follows the augmentation curve pointwise
  CHECK(sim.nominal_rabi(500e-6) / sim.nominal_rabi(0.0) == doctest::Approx(0.3416309479974583).epsilon(1e-7));

  const std::vector<double> d0 = linspace(0.0, 40e-6, 41);
  const std::vector<double> d1 = linspace(0.0, 130e-6, 41);
  const ProtocolResult a = sim.rabi(0.0, d0);
  const ProtocolResult b = sim.rabi(500e-6, d1);
  const double fa = a.fit.at("f_rabi_hz").value, ea = a.fit.at("f_rabi_hz").error;
  const double fb = b.fit.at("f_rabi_hz").value, eb = b.fit.at("f_rabi_hz").error;
  const FitParameter ma = sim.model_rabi_frequency(0.0, d0);
  const FitParameter mb = sim.model_rabi_frequency(500e-6, d1);
  const double ratio = fb / fa;
  const double model = mb.value / ma.value;
  const double err = std::hypot(ratio * std::hypot(ea / fa, eb / fb), model * std::hypot(ma.error / ma.value, mb.error / mb.value));
  CHECK(std::abs(ratio - model) <= 2.0 * err);
  CHECK_THROWS_AS(sim.model_rabi_frequency(0.0, {0.0, 1e-6}), Error);
  CHECK_THROWS_AS(sim.rabi(990e-6, {0.0, 20e-6}), Error);
}

TEST_CASE("feedforward is what keeps mid-rotation pulses resonant") {
  ProtocolConfig c = rotating(0.0, 1);
  const Simulator with(c);
  c.feedforward = false;
  const Simulator without(c);
  const Pulse p = with.place_pulse(pi, 500e-6, 0.0);
  const std::vector<double> d{p.duration_s};
  const double bright = with.contrast();
  const double on = bright - with.rabi(p.start_s, d).signal[0];
  const double off = bright - without.rabi(p.start_s, d).signal[0];
  CHECK(on > 0.95 * bright);
  CHECK(off < 0.1 * on);
}

TEST_CASE("Ramsey without jitter") {
  const Simulator sim(rotating(0.0, 1));
  const double full = sim.contrast() / 2;
  CHECK(amplitude(sim.ramsey(0.0, 0.0, phases)) == doctest::Approx(full).epsilon(1e-3));
  for (double tau : {50e-6, 150e-6, 300e-6, 600e-6})
    CHECK(amplitude(sim.ramsey(0.0, tau, phases)) == doctest::Approx(full).epsilon(2e-2));
}

TEST_CASE("Ramsey with jitter decays within the alignment region") {
  const Simulator sim(rotating(323e-9, 300));
  const ProtocolResult r = sim.ramsey_decay(0.0, linspace(20e-6, 350e-6, 12), phases);
  REQUIRE(r.fit.count("t2_s"));
  const double t2 = r.fit.at("t2_s").value;
  CHECK(t2 >= 30e-6);
  CHECK(t2 <= 300e-6);
  const ProtocolResult flat = sim.ramsey_decay(200e-6, linspace(20e-6, 350e-6, 12), phases);
  CHECK(flat.fit.at("t2_s").value > t2);
}

TEST_CASE("spin echo") {
  const Simulator clean(rotating(0.0, 1));
  for (double tau : {40e-6, 400e-6, 900e-6})
    CHECK(amplitude(clean.spin_echo(0.0, tau, phases)) == doctest::Approx(clean.contrast() / 2).epsilon(2e-2));

  const Simulator sim(rotating(323e-9, 300));
  // ends at 0.7 ms, then at 0.94 ms inside the next alignment region
  const double early = amplitude(sim.spin_echo(200e-6, 500e-6, phases));
  const double late = amplitude(sim.spin_echo(200e-6, 740e-6, phases));
  CHECK(early > 0.8 * sim.contrast() / 2);
  CHECK(late < 0.3 * early);

  const ProtocolResult r = sim.echo_decay(0.0, linspace(20e-6, 920e-6, 16), phases);
  const double t2 = r.fit.at("t2_s").value;
  CHECK(t2 >= 60e-6);
  CHECK(t2 <= 600e-6);
}

TEST_CASE("multi-period echo") {
  const Simulator clean(rotating(0.0, 1));
  CHECK(amplitude(clean.multi_period_echo(2, phases)) == doctest::Approx(clean.contrast() / 2).epsilon(2e-2));
  CHECK_THROWS_AS(clean.multi_period_echo(3, phases), Error);
  CHECK_THROWS_AS(clean.multi_period_echo(-2, phases), Error);

  const Simulator sim(rotating(323e-9, 300));
  const double a0 = amplitude(sim.multi_period_echo(0, phases));
  for (int n : {2, 4, 6}) CHECK(amplitude(sim.multi_period_echo(n, phases)) >= 0.8 * a0);

  // independent per-revolution errors do not refocus
  ProtocolConfig c = rotating(323e-9, 300);
  c.jitter.mode = JitterMode::per_period;
  CHECK(amplitude(Simulator(c).multi_period_echo(4, phases)) < 0.2 * a0);
}

TEST_CASE("spin lock across a full rotation") {
  const double lock = 1e-3 - 7e-6 - 0.1e-6;
  const Simulator clean(rotating(0.0, 1));
  const Simulator sim(rotating(323e-9, 300));
  const double reference = amplitude(clean.spin_lock(lock, phases));
  CHECK(amplitude(sim.spin_lock(lock, phases)) >= 0.9 * reference);

  // zero lock length is back-to-back Ramsey
  CHECK(amplitude(sim.spin_lock(0.0, phases)) == doctest::Approx(amplitude(sim.ramsey(0.0, 0.0, phases))).epsilon(1e-3));

  // switching the lock field off leaves free precession
  const double tau_lock = 200e-6;
  const double off = amplitude(sim.spin_lock(tau_lock, phases, 0.0));
  const Pulse first = sim.place_pulse(pi / 2, 0.0, 0.0);
  const double spacing = first.duration_s + tau_lock;
  const double ramsey = amplitude(sim.ramsey(0.0, spacing, phases));
  CHECK(off == doctest::Approx(ramsey).epsilon(0.1));
  CHECK(off < 0.7 * reference);
}

TEST_CASE("Monte Carlo properties") {
  SUBCASE("no jitter matches a single deterministic run") {
    const ProtocolResult one = Simulator(rotating(0.0, 1)).ramsey(0.0, 100e-6, phases);
    const ProtocolResult many = Simulator(rotating(0.0, 25)).ramsey(0.0, 100e-6, phases);
    REQUIRE(one.signal.size() == many.signal.size());
    for (std::size_t k = 0; k < one.signal.size(); ++k)
      CHECK(many.signal[k] == doctest::Approx(one.signal[k]).epsilon(1e-14));
    for (double e : many.std_error) CHECK(e <= 1e-15);
  }
  SUBCASE("standard error scales as one over root n") {
    const double e1 = Simulator(rotating(323e-9, 400)).ramsey(0.0, 150e-6, phases).fit.at("amplitude").error;
    const double e2 = Simulator(rotating(323e-9, 800)).ramsey(0.0, 150e-6, phases).fit.at("amplitude").error;
    const double s1 = Simulator(rotating(323e-9, 400)).ramsey(0.0, 150e-6, phases).std_error[3];
    const double s2 = Simulator(rotating(323e-9, 800)).ramsey(0.0, 150e-6, phases).std_error[3];
    CHECK(s2 / s1 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.2));
    CHECK(e1 > 0.0);
    CHECK(e2 > 0.0);
  }
  SUBCASE("phase error grows faster than linearly with the jitter") {
    std::vector<double> var;
    for (double s : {50e-9, 100e-9, 200e-9, 400e-9}) var.push_back(Simulator(rotating(s, 400)).phase_error_variance(0.0, 200e-6));
    for (std::size_t k = 1; k < var.size(); ++k) {
      const double slope = std::log(var[k] / var[k - 1]) / std::log(2.0);
      CHECK(slope > 1.5);
    }
  }
  SUBCASE("seeded determinism") {
    ProtocolConfig c = rotating(323e-9, 64);
    c.jitter.seed = 99;
    c.readout.noise_sigma = 0.002;
    const ProtocolResult a = Simulator(c).ramsey(0.0, 120e-6, phases);
    const ProtocolResult b = Simulator(c).ramsey(0.0, 120e-6, phases);
    CHECK(a.signal == b.signal);
    CHECK(a.std_error == b.std_error);
    c.jitter.seed = 100;
    CHECK(Simulator(c).ramsey(0.0, 120e-6, phases).signal != a.signal);
  }
  SUBCASE("noisy signals stay within the contrast") {
    ProtocolConfig c = rotating(323e-9, 50);
    c.readout.noise_sigma = 0.05;
    const Simulator sim(c);
    const ProtocolResult r = sim.ramsey(0.0, 100e-6, phases);
    for (double v : r.signal) {
      CHECK(v >= 0.0);
      CHECK(v <= sim.contrast());
    }
  }
}

TEST_CASE("coherence ordering under jitter") {
  const Simulator sim(rotating(323e-9, 300));
  const ProtocolResult ramsey = sim.ramsey_decay(0.0, linspace(20e-6, 350e-6, 12), phases);
  const ProtocolResult multi = sim.multi_period_decay({0, 2, 4, 6, 8}, phases);
  const double t2_multi = multi.fit.at("t2_s").value;
  CHECK(t2_multi >= 5.0 * ramsey.fit.at("t2_s").value);
}

TEST_CASE("intrinsic envelopes") {
  ProtocolConfig c = rotating(0.0, 1);
  c.intrinsic_t2star_s = 100e-6;
  c.intrinsic_t2_s = 2e-3;
  const Simulator sim(c);
  const double a0 = amplitude(sim.ramsey(0.0, 0.0, phases));
  const Pulse p = sim.place_pulse(pi / 2, 0.0, 0.0);
  const double spacing = std::max(100e-6, p.duration_s);
  CHECK(amplitude(sim.ramsey(0.0, 100e-6, phases)) / a0 ==
        doctest::Approx(std::exp(-spacing / 100e-6)).epsilon(2e-2));
  const ProtocolResult multi = sim.multi_period_decay({0, 2, 4, 6}, phases);
  CHECK(multi.fit.at("t2_s").value == doctest::Approx(2e-3).epsilon(2e-2));
}

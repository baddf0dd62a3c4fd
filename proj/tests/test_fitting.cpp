#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "rotorspin/error.hpp"
#include "rotorspin/fitting.hpp"
#include "rotorspin/protocols.hpp"

using namespace rotorspin;
using std::numbers::pi;

TEST_CASE("pure cosine fringe") {
  const std::vector<double> phi = phase_grid(12);
  std::vector<double> y;
  for (double p : phi) y.push_back(std::cos(p - 0.4));
  const FringeFit f = fit_fringe(phi, y);
  CHECK(std::abs(f.amplitude.value - 1.0) <= 1e-10);
  CHECK(f.phase.value == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(std::abs(f.offset.value) <= 1e-12);
}

TEST_CASE("constant signal has no fringe") {
  const std::vector<double> phi = phase_grid(12);
  const FringeFit f = fit_fringe(phi, std::vector<double>(12, 0.3));
  CHECK(f.amplitude.value <= 1e-12);
  CHECK(f.offset.value == doctest::Approx(0.3));
}

TEST_CASE("noisy fringe recovers the amplitude within two standard errors") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.002);
  int inside = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    const std::vector<double> phi = phase_grid(24);
    std::vector<double> y;
    for (double p : phi) y.push_back(0.0125 + 0.025 * std::cos(p - 1.0) + noise(rng));
    const FringeFit f = fit_fringe(phi, y);
    CHECK(f.amplitude.error > 0.0);
    if (std::abs(f.amplitude.value - 0.025) <= 2.0 * f.amplitude.error) ++inside;
  }
  // 95% coverage expected; allow a few misses
  CHECK(inside >= trials - 5);
}

TEST_CASE("fringe fit preconditions") {
  CHECK_THROWS_AS(fit_fringe({0.0, 1.0, 2.0, 3.0}, {1, 1, 1, 1}), Error);
  CHECK_THROWS_AS(fit_fringe({0.0, 0.1, 0.2, 0.3, 0.4}, {1, 1, 1, 1, 1}), Error);
  CHECK_THROWS_AS(fit_fringe(phase_grid(6), {1, 1, 1}), Error);
}

TEST_CASE("exponential decay") {
  std::vector<double> tau, a;
  for (int k = 0; k < 12; ++k) {
    tau.push_back(0.5e-3 * k);
    a.push_back(0.02 * std::exp(-tau.back() / 5e-3));
  }
  const DecayFit f = fit_decay(tau, a, 1.0);
  CHECK(f.t2.value == doctest::Approx(5e-3).epsilon(0.05));
  CHECK(f.t2.value == doctest::Approx(5e-3).epsilon(1e-8));
  CHECK_FALSE(f.t2_is_lower_bound);
  CHECK(f.exponent.value == 1.0);
  const DecayFit free_p = fit_decay(tau, a);
  CHECK(free_p.exponent.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gaussian decay with a free exponent") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 2e-4);
  std::vector<double> tau, a;
  for (int k = 0; k < 16; ++k) {
    tau.push_back(20e-6 * k);
    a.push_back(std::max(0.0, 0.0125 * std::exp(-std::pow(tau.back() / 150e-6, 2.0)) + noise(rng)));
  }
  const DecayFit f = fit_decay(tau, a);
  CHECK(f.exponent.value == doctest::Approx(2.0).epsilon(0.1));
  CHECK(f.t2.value == doctest::Approx(150e-6).epsilon(0.05));
}

TEST_CASE("no decay is reported as a lower bound") {
  const std::vector<double> tau{0.0, 1e-3, 2e-3, 3e-3, 4e-3};
  const DecayFit f = fit_decay(tau, std::vector<double>(5, 0.0125));
  CHECK(f.t2_is_lower_bound);
  CHECK(std::isinf(f.t2.value));
  CHECK(f.t2_bound == 4e-3);
  CHECK(f.amplitude0.value == doctest::Approx(0.0125));
}

TEST_CASE("decay fit preconditions") {
  CHECK_THROWS_AS(fit_decay({0, 1, 2}, {1, 0.5, 0.25}), Error);
  CHECK_THROWS_AS(fit_decay({0, 1, 2, 3}, {1, -0.5, 0.25, 0.1}), Error);
  CHECK_THROWS_AS(fit_decay({0, 1, 2, 3}, {0, 0, 0, 0}), Error);
}

TEST_CASE("sinusoid fit") {
  std::vector<double> x, y;
  for (int k = 0; k <= 60; ++k) {
    x.push_back(1e-6 * k);
    y.push_back(0.03 + 0.03 * std::cos(2 * pi * 71428.6 * x.back() + 0.2));
  }
  const SinusoidFit f = fit_sinusoid(x, y);
  CHECK(f.frequency.value == doctest::Approx(71428.6).epsilon(1e-6));
  CHECK(std::abs(f.amplitude.value) == doctest::Approx(0.03).epsilon(1e-6));
  CHECK_THROWS_AS(fit_sinusoid({0, 1, 2}, {0, 1, 0}), Error);
}

TEST_CASE("fringe errors from known sample errors") {
  const std::vector<double> phi = phase_grid(12);
  std::vector<double> y;
  for (double p : phi) y.push_back(0.5 + 0.2 * std::cos(p));
  // a noiseless curve still carries the propagated sample errors
  const FringeFit f = fit_fringe(phi, y, std::vector<double>(12, 0.01));
  CHECK(f.amplitude.value == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(f.amplitude.error == doctest::Approx(0.01 * std::sqrt(2.0 / 12.0)).epsilon(1e-9));
  // zero errors fall back to the residual scatter
  CHECK(fit_fringe(phi, y, std::vector<double>(12, 0.0)).amplitude.error <= 1e-12);
  CHECK_THROWS_AS(fit_fringe(phi, y, {0.1}), Error);
}

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rotorspin/config.hpp"
#include "rotorspin/error.hpp"

using namespace rotorspin;
using nlohmann::json;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("empty object gives the defaults") {
  const RunConfig c = parse_config("{}");
  CHECK(c.b_gauss == 480.0);
  CHECK(c.period_s == 1e-3);
  CHECK(c.cone_angle_deg == doctest::Approx(54.7356).epsilon(1e-6));
  CHECK(c.jitter_sigma_s == 323e-9);
  CHECK(c.gamma_n_hz_per_g == 307.7);
  CHECK(c.sample_rate_hz >= 10.0 * 5.94e6);
  const ProtocolConfig p = c.protocol();
  CHECK(p.geometry.cone_angle_rad == doctest::Approx(std::acos(1.0 / std::sqrt(3.0))).epsilon(1e-14));
  CHECK(p.constants.a_perp == doctest::Approx(two_pi * -2.62e6).epsilon(1e-15));
  CHECK(p.jitter.mode == JitterMode::per_shot);
}

TEST_CASE("range errors name the field") {
  const std::string e = error_of(R"({"b_gauss": -1})");
  CHECK(contains(e, "b_gauss"));
  CHECK(contains(error_of(R"({"cone_angle_deg": 120})"), "cone_angle_deg"));
  CHECK(contains(error_of(R"({"shots": 0})"), "shots"));
  CHECK(contains(error_of(R"({"n_periods": [0, 3]})"), "n_periods"));
  CHECK(contains(error_of(R"({"period_s": 0})"), "period_s"));
}

TEST_CASE("type errors and unknown keys") {
  CHECK(contains(error_of(R"({"b_gauss": "strong"})"), "b_gauss"));
  CHECK(contains(error_of(R"({"shots": 1.5})"), "shots"));
  CHECK(contains(error_of(R"({"stationary": 1})"), "stationary"));
  CHECK(contains(error_of(R"({"jitter_mode": "sometimes"})"), "jitter_mode"));
  CHECK(contains(error_of(R"({"bgauss": 480})"), "unknown config key 'bgauss'"));
  CHECK(contains(error_of("[1, 2]"), "JSON object"));
}

TEST_CASE("parse errors report line and column") {
  const std::string e = error_of("{\n  \"b_gauss\": 480,\n  \"shots\": ,\n}");
  CHECK(contains(e, "line 3"));
  CHECK(contains(e, "column"));
  CHECK(contains(e, "cli: "));
}

TEST_CASE("optional fields") {
  const RunConfig c = parse_config(R"({"rf_gauss": 12.5, "intrinsic_t2_s": 6.5e-3, "decay_exponent": null})");
  CHECK(c.rf_gauss == 12.5);
  CHECK(c.intrinsic_t2_s == 6.5e-3);
  CHECK_FALSE(c.decay_exponent.has_value());
  CHECK_FALSE(c.intrinsic_t2star_s.has_value());
  const auto j = save_config(c);
  CHECK(j.at("decay_exponent").is_null());
  CHECK(j.at("rf_gauss") == 12.5);
}

TEST_CASE("round trip through save and load") {
  const json raw = json::parse(
      R"({"b_gauss": 300, "seed": 42, "jitter_mode": "per_period", "taus_s": [1e-5, 2e-5, 3e-5, 4e-5],
          "rf_coupling": "rotation_axis", "stationary": true, "out_dir": "runs"})");
  const RunConfig loaded = parse_config(raw.dump());
  CHECK(save_config(loaded) == normalize_config(raw));
  const RunConfig again = parse_config(save_config(loaded).dump());
  CHECK(save_config(again) == save_config(loaded));
  CHECK(config_hash(again) == config_hash(loaded));
  CHECK(config_hash(again).size() == 16);
  CHECK(config_hash(again) != config_hash(RunConfig{}));
  RunConfig moved = again;
  moved.out_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(again));
  CHECK_FALSE(physics_config(moved).contains("out_dir"));
  CHECK(loaded.jitter_mode == JitterMode::per_period);
  CHECK(loaded.geometry().rf_coupling == RfCoupling::rotation_axis);

  // every default key appears, in a stable order
  const auto keys = save_config(RunConfig{});
  CHECK(keys.size() == normalize_config(json::object()).size());
  CHECK(keys.begin().key() == "d_zfs_hz");
}

TEST_CASE("load from file") {
  const auto path = std::filesystem::temp_directory_path() / "rotorspin_test_config.json";
  {
    std::ofstream os(path);
    os << R"({"shots": 17})";
  }
  CHECK(load_config(path).shots == 17);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), Error);
}

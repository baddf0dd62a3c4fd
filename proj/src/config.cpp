#include "rotorspin/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "rotorspin/error.hpp"

namespace rotorspin {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw Error("cli", "config field '" + key + "' must be " + expected);
}

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) bad_type(key, "a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad_type(key, "a finite number");
  return d;
}

long long as_integer(const json& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  bad_type(key, "an integer");
}

std::size_t as_count(const json& v, const std::string& key) {
  const long long n = as_integer(v, key);
  if (n < 0) throw Error("cli", "config field '" + key + "' must be non-negative");
  return static_cast<std::size_t>(n);
}

struct Field {
  const char* name;
  std::function<ordered_json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T>
Field bind(const char* name, T RunConfig::*m) {
  Field f{name, {}, {}};
  if constexpr (!std::is_same_v<T, std::optional<double>>)
    f.get = [m](const RunConfig& c) { return ordered_json(c.*m); };
  if constexpr (std::is_same_v<T, double>) {
    f.set = [m, name](RunConfig& c, const json& v) { c.*m = as_double(v, name); };
  } else if constexpr (std::is_same_v<T, bool>) {
    f.set = [m, name](RunConfig& c, const json& v) {
      if (!v.is_boolean()) bad_type(name, "true or false");
      c.*m = v.get<bool>();
    };
  } else if constexpr (std::is_same_v<T, int>) {
    f.set = [m, name](RunConfig& c, const json& v) {
      const long long n = as_integer(v, name);
      if (n < -2147483647LL || n > 2147483647LL) throw Error("cli", std::string("config field '") + name + "' is out of range");
      c.*m = static_cast<int>(n);
    };
  } else if constexpr (std::is_same_v<T, std::size_t>) {
    f.set = [m, name](RunConfig& c, const json& v) { c.*m = as_count(v, name); };
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    f.set = [m, name](RunConfig& c, const json& v) {
      if (!v.is_number_unsigned()) bad_type(name, "a non-negative integer");
      c.*m = v.get<std::uint64_t>();
    };
  } else if constexpr (std::is_same_v<T, std::string>) {
    f.set = [m, name](RunConfig& c, const json& v) {
      if (!v.is_string()) bad_type(name, "a string");
      c.*m = v.get<std::string>();
    };
  } else if constexpr (std::is_same_v<T, std::optional<double>>) {
    f.get = [m](const RunConfig& c) { return (c.*m) ? ordered_json(*(c.*m)) : ordered_json(nullptr); };
    f.set = [m, name](RunConfig& c, const json& v) {
      if (v.is_null()) c.*m = std::nullopt;
      else c.*m = as_double(v, name);
    };
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    f.set = [m, name](RunConfig& c, const json& v) {
      if (!v.is_array()) bad_type(name, "an array of numbers");
      std::vector<double> out;
      for (const json& e : v) out.push_back(as_double(e, name));
      c.*m = std::move(out);
    };
  } else if constexpr (std::is_same_v<T, std::vector<int>>) {
    f.set = [m, name](RunConfig& c, const json& v) {
      if (!v.is_array()) bad_type(name, "an array of integers");
      std::vector<int> out;
      for (const json& e : v) out.push_back(static_cast<int>(as_integer(e, name)));
      c.*m = std::move(out);
    };
  } else {
    static_assert(sizeof(T) == 0, "unsupported config field type");
  }
  return f;
}

Field rf_coupling_field() {
  return {"rf_coupling",
          [](const RunConfig& c) {
            return ordered_json(c.rf_coupling == RfCoupling::transverse ? "transverse" : "rotation_axis");
          },
          [](RunConfig& c, const json& v) {
            const std::string s = v.is_string() ? v.get<std::string>() : "";
            if (s == "transverse") c.rf_coupling = RfCoupling::transverse;
            else if (s == "rotation_axis") c.rf_coupling = RfCoupling::rotation_axis;
            else bad_type("rf_coupling", "\"transverse\" or \"rotation_axis\"");
          }};
}

Field jitter_mode_field() {
  return {"jitter_mode",
          [](const RunConfig& c) {
            return ordered_json(c.jitter_mode == JitterMode::per_shot ? "per_shot" : "per_period");
          },
          [](RunConfig& c, const json& v) {
            const std::string s = v.is_string() ? v.get<std::string>() : "";
            if (s == "per_shot") c.jitter_mode = JitterMode::per_shot;
            else if (s == "per_period") c.jitter_mode = JitterMode::per_period;
            else bad_type("jitter_mode", "\"per_shot\" or \"per_period\"");
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      bind("d_zfs_hz", &RunConfig::d_zfs_hz),
      bind("gamma_e_hz_per_g", &RunConfig::gamma_e_hz_per_g),
      bind("gamma_n_hz_per_g", &RunConfig::gamma_n_hz_per_g),
      bind("q_hz", &RunConfig::q_hz),
      bind("a_par_hz", &RunConfig::a_par_hz),
      bind("a_perp_hz", &RunConfig::a_perp_hz),
      bind("b_gauss", &RunConfig::b_gauss),
      bind("cone_angle_deg", &RunConfig::cone_angle_deg),
      bind("rf_gauss", &RunConfig::rf_gauss),
      rf_coupling_field(),
      bind("period_s", &RunConfig::period_s),
      bind("phase_origin_s", &RunConfig::phase_origin_s),
      bind("stationary", &RunConfig::stationary),
      bind("feedforward", &RunConfig::feedforward),
      bind("pi_time_s", &RunConfig::pi_time_s),
      bind("intrinsic_t2star_s", &RunConfig::intrinsic_t2star_s),
      bind("intrinsic_t2_s", &RunConfig::intrinsic_t2_s),
      bind("jitter_sigma_s", &RunConfig::jitter_sigma_s),
      jitter_mode_field(),
      bind("seed", &RunConfig::seed),
      bind("shots", &RunConfig::shots),
      bind("polarization", &RunConfig::polarization),
      bind("contrast_max", &RunConfig::contrast_max),
      bind("readout_fwhm_s", &RunConfig::readout_fwhm_s),
      bind("laser_on_offset_s", &RunConfig::laser_on_offset_s),
      bind("readout_noise_sigma", &RunConfig::readout_noise_sigma),
      bind("readout_periods", &RunConfig::readout_periods),
      bind("track_samples", &RunConfig::track_samples),
      bind("decay_exponent", &RunConfig::decay_exponent),
      bind("t_d_s", &RunConfig::t_d_s),
      bind("durations_s", &RunConfig::durations_s),
      bind("taus_s", &RunConfig::taus_s),
      bind("echo_taus_s", &RunConfig::echo_taus_s),
      bind("n_periods", &RunConfig::n_periods),
      bind("lock_s", &RunConfig::lock_s),
      bind("lock_scale", &RunConfig::lock_scale),
      bind("phase_points", &RunConfig::phase_points),
      bind("rabi_delays_s", &RunConfig::rabi_delays_s),
      bind("sample_rate_hz", &RunConfig::sample_rate_hz),
      bind("validate_rotating", &RunConfig::validate_rotating),
      bind("validate_drive", &RunConfig::validate_drive),
      bind("validate_start_s", &RunConfig::validate_start_s),
      bind("validate_duration_s", &RunConfig::validate_duration_s),
      bind("validate_detuning_hz", &RunConfig::validate_detuning_hz),
      bind("validate_full_dt_s", &RunConfig::validate_full_dt_s),
      bind("validate_reduced_dt_s", &RunConfig::validate_reduced_dt_s),
      bind("validate_checkpoints", &RunConfig::validate_checkpoints),
      bind("out_dir", &RunConfig::out_dir),
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const Field& f : fields())
    if (key == f.name) return f;
  throw Error("cli", "unknown config key '" + key + "'");
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    if (const auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw Error("cli", "config parse error at line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what);
  }
}

RunConfig from_json(const json& j) {
  if (!j.is_object()) throw Error("cli", "config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) field(key).set(cfg, value);
  cfg.validate();
  return cfg;
}

template <typename T>
void require(bool ok, const char* key, const T& what) {
  if (!ok) throw Error("cli", std::string(key) + " " + what);
}

}  // namespace

RunConfig::RunConfig()
    : durations_s(linspace(0.0, 60e-6, 61)),
      taus_s(linspace(20e-6, 350e-6, 12)),
      echo_taus_s(linspace(20e-6, 920e-6, 16)),
      n_periods{0, 2, 4, 6, 8},
      lock_s{0.0, 100e-6, 200e-6, 300e-6, 400e-6, 500e-6, 600e-6, 700e-6, 800e-6, 900e-6, 990e-6},
      rabi_delays_s(linspace(0.0, 800e-6, 9)) {}

PhysicalConstants RunConfig::constants() const {
  PhysicalConstants c;
  c.d_zfs = two_pi * d_zfs_hz;
  c.gamma_e = two_pi * gamma_e_hz_per_g;
  c.gamma_n = two_pi * gamma_n_hz_per_g;
  c.quadrupole_q = two_pi * q_hz;
  c.a_par = two_pi * a_par_hz;
  c.a_perp = two_pi * a_perp_hz;
  return c;
}

FieldGeometry RunConfig::geometry() const {
  FieldGeometry g;
  g.b_magnitude_g = b_gauss;
  g.cone_angle_rad = cone_angle_deg * std::numbers::pi / 180.0;
  g.rf_amplitude_g = rf_gauss;
  g.rf_coupling = rf_coupling;
  return g;
}

RotationConfig RunConfig::rotation() const { return {period_s, phase_origin_s}; }

ProtocolConfig RunConfig::protocol() const {
  ProtocolConfig p;
  p.constants = constants();
  p.geometry = geometry();
  p.rotation = rotation();
  p.stationary = stationary;
  p.feedforward = feedforward;
  p.pi_time_s = pi_time_s;
  p.intrinsic_t2star_s = intrinsic_t2star_s;
  p.intrinsic_t2_s = intrinsic_t2_s;
  p.jitter = {jitter_sigma_s, seed, jitter_mode};
  p.readout.polarization_fraction = polarization;
  p.readout.contrast_max = contrast_max;
  p.readout.window_fwhm_s = readout_fwhm_s;
  p.readout.laser_on_offset_s = laser_on_offset_s;
  p.readout.noise_sigma = readout_noise_sigma;
  p.shots = shots;
  p.track_samples = track_samples;
  p.readout_periods = readout_periods;
  p.decay_exponent = decay_exponent;
  return p;
}

ValidationSegment RunConfig::validation() const {
  ValidationSegment s;
  s.geometry = geometry();
  s.constants = constants();
  s.rotation = rotation();
  s.rotating = validate_rotating;
  s.start_s = validate_start_s;
  s.duration_s = validate_duration_s;
  s.drive_on = validate_drive;
  s.detuning_hz = validate_detuning_hz;
  s.pi_time_s = pi_time_s;
  s.full_dt_s = validate_full_dt_s;
  s.reduced_dt_s = validate_reduced_dt_s;
  s.checkpoints = validate_checkpoints;
  s.track_samples = track_samples;
  return s;
}

void RunConfig::validate() const {
  protocol().validate();
  require(cone_angle_deg >= 0.0 && cone_angle_deg <= 90.0, "cone_angle_deg", "must lie in [0, 90]");
  require(track_samples >= 64, "track_samples", "must be at least 64");
  require(phase_points >= 5, "phase_points", "must be at least 5");
  require(sample_rate_hz > 0.0, "sample_rate_hz", "must be positive");
  require(lock_scale >= 0.0, "lock_scale", "must be non-negative");
  require(t_d_s >= 0.0, "t_d_s", "must be non-negative");
  for (double d : durations_s) require(d >= 0.0, "durations_s", "entries must be non-negative");
  for (double d : taus_s) require(d >= 0.0, "taus_s", "entries must be non-negative");
  for (double d : echo_taus_s) require(d >= 0.0, "echo_taus_s", "entries must be non-negative");
  for (double d : lock_s) require(d >= 0.0, "lock_s", "entries must be non-negative");
  for (double d : rabi_delays_s) require(d >= 0.0, "rabi_delays_s", "entries must be non-negative");
  for (int n : n_periods) require(n >= 0 && n % 2 == 0, "n_periods", "entries must be even and non-negative");
  require(validate_duration_s > 0.0 && validate_duration_s <= 20e-6, "validate_duration_s", "must lie in (0, 20 us]");
  require(validate_full_dt_s > 0.0, "validate_full_dt_s", "must be positive");
  require(validate_reduced_dt_s > 0.0, "validate_reduced_dt_s", "must be positive");
  require(validate_checkpoints >= 1, "validate_checkpoints", "must be at least 1");
  require(validate_start_s >= 0.0, "validate_start_s", "must be non-negative");
}

RunConfig parse_config(const std::string& text) { return from_json(parse_text(text)); }

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cli", "cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

ordered_json save_config(const RunConfig& cfg) {
  ordered_json j = ordered_json::object();
  for (const Field& f : fields()) j[f.name] = f.get(cfg);
  return j;
}

ordered_json normalize_config(const json& raw) {
  if (!raw.is_object()) throw Error("cli", "config must be a JSON object");
  ordered_json out = save_config(RunConfig{});
  for (const auto& [key, value] : raw.items()) {
    const Field& f = field(key);
    RunConfig scratch;
    f.set(scratch, value);
    out[key] = f.get(scratch);
  }
  from_json(json::parse(out.dump()));  // range checks on the combination
  return out;
}

ordered_json physics_config(const RunConfig& cfg) {
  ordered_json j = save_config(cfg);
  j.erase("out_dir");
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = physics_config(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rotorspin

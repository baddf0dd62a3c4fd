#include "rotorspin/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

#include "CLI11.hpp"

#include "rotorspin/config.hpp"
#include "rotorspin/error.hpp"
#include "rotorspin/feedforward.hpp"
#include "rotorspin/protocols.hpp"
#include "rotorspin/spectral.hpp"

namespace rotorspin {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> points;
  std::optional<std::size_t> shots;
  bool svg = false;
  int periods = 1;
  std::string figure;
};

// Context shared by every output of one command.
struct Output {
  fs::path dir;
  std::string provenance;  // header comment for reproduce outputs, else empty
  bool svg = false;
  std::ostream* log = nullptr;

  fs::path path(const std::string& name) const { return dir / name; }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
public:
  Csv(const fs::path& path, const Output& out, const std::vector<std::string>& columns)
      : os_(path, std::ios::binary), path_(path) {
    if (!os_) throw Error("cli", "cannot write " + path.string());
    if (!out.provenance.empty()) os_ << "# " << out.provenance << '\n';
    for (std::size_t k = 0; k < columns.size(); ++k) os_ << (k ? "," : "") << columns[k];
    os_ << '\n';
    if (out.log) *out.log << "wrote " << path.string() << '\n';
  }
  void row(const std::vector<double>& values, const std::string& label = {}) {
    bool first = true;
    if (!label.empty()) {
      os_ << label;
      first = false;
    }
    for (double v : values) {
      os_ << (first ? "" : ",") << fmt(v);
      first = false;
    }
    os_ << '\n';
  }
  ~Csv() { os_.flush(); }

private:
  std::ofstream os_;
  fs::path path_;
};

void write_json(const Output& out, const std::string& name, const ordered_json& j) {
  const fs::path p = out.path(name);
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cli", "cannot write " + p.string());
  os << j.dump(2) << '\n';
  if (out.log) *out.log << "wrote " << p.string() << '\n';
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Polyline plot with a frame and min/max tick labels.
void write_svg(const Output& out, const std::string& name, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Series>& series) {
  if (!out.svg) return;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const Series& s : series) {
    for (double v : s.x) if (std::isfinite(v)) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
    for (double v : s.y) if (std::isfinite(v)) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
  }
  if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  const double w = 640, h = 400, left = 80, right = 20, top = 40, bottom = 60;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  const fs::path p = out.path(name);
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cli", "cannot write " + p.string());
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w - left - right << "\" height=\"" << h - top - bottom
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"start\">" << svg_num(x0) << "</text>\n";
  os << "<text x=\"" << w - right << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"end\">" << svg_num(x1) << "</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << h - bottom << "\" text-anchor=\"end\">" << svg_num(y0) << "</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << svg_num(y1) << "</text>\n";
  os << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 20 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"18\" y=\"" << (top + h - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (top + h - bottom) / 2 << ")\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* colour = colours[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].y[i])) continue;
      os << svg_num(px(series[k].x[i])) << ',' << svg_num(py(series[k].y[i])) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << w - right - 8 << "\" y=\"" << top + 16 + 14 * static_cast<double>(k)
       << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << series[k].name << "</text>\n";
  }
  os << "</svg>\n";
  if (out.log) *out.log << "wrote " << p.string() << '\n';
}

ordered_json fit_json(const ProtocolResult& r) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, p] : r.fit) {
    // JSON has no infinity; an unbounded T2 is reported as null with the flag
    j[name] = {{"value", std::isfinite(p.value) ? ordered_json(p.value) : ordered_json(nullptr)},
               {"error", std::isfinite(p.error) ? ordered_json(p.error) : ordered_json(nullptr)}};
  }
  if (r.fit.count("t2_s")) j["t2_is_lower_bound"] = r.t2_lower_bound;
  return j;
}

ordered_json summary(const std::string& command, const RunConfig& cfg) {
  ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["config"] = physics_config(cfg);
  return j;
}

std::size_t spectrum_points(const Options& opt) {
  const std::size_t p = opt.points.value_or(360);
  if (p < 1) throw Error("cli", "--points must be at least 1");
  return p;
}

AdiabaticTrack spectrum_track(const RunConfig& cfg, std::size_t points) {
  const std::size_t base = static_cast<std::size_t>(cfg.track_samples);
  const std::size_t n = points * ((base + points - 1) / points);
  if (n > 10'000'000) throw Error("cli", "--points too large");
  return build_track(cfg.geometry(), cfg.rotation(), cfg.constants(), static_cast<int>(n));
}

// ---------------------------------------------------------------------------

void cmd_spectrum(const RunConfig& cfg, const Options& opt, const Output& out, const std::string& stem) {
  const std::size_t points = spectrum_points(opt);
  const AdiabaticTrack track = spectrum_track(cfg, points);
  const std::size_t stride = (track.size() - 1) / points;
  const std::vector<double> f = transition_frequency(track);
  const std::vector<double> alpha = augmentation_factor(track, rf_drive_axis(cfg.geometry()), cfg.constants());

  std::vector<std::string> cols{"phi_rad", "theta_deg"};
  for (int k = 1; k <= 9; ++k) cols.push_back("E_" + std::to_string(k));
  cols.push_back("f_transition");
  cols.push_back("alpha_prime");
  Csv csv(out.path(stem + ".csv"), out, cols);
  Series fs_series{"f_transition (MHz)", {}, {}}, alpha_series{"alpha_prime", {}, {}};
  for (std::size_t r = 0; r < points; ++r) {
    const std::size_t j = r * stride;
    std::vector<double> row{track.phi[j], field_nv_angle(track.phi[j], cfg.geometry()) * 180.0 / std::numbers::pi};
    for (int k = 0; k < 9; ++k) row.push_back(track.energies[j](k) / two_pi);
    row.push_back(f[j]);
    row.push_back(alpha[j]);
    csv.row(row);
    fs_series.x.push_back(track.phi[j]);
    fs_series.y.push_back(f[j] * 1e-6);
    alpha_series.x.push_back(track.phi[j]);
    alpha_series.y.push_back(alpha[j]);
  }

  double theta_max = 0.0;
  for (double phi : track.phi) theta_max = std::max(theta_max, field_nv_angle(phi, cfg.geometry()));
  const auto [fmin, fmax] = std::minmax_element(f.begin(), f.end());
  const auto [amin, amax] = std::minmax_element(alpha.begin(), alpha.end());
  ordered_json j = summary(stem, cfg);
  j["results"] = {{"f0_hz", f.front()},
                  {"f_min_hz", *fmin},
                  {"f_max_hz", *fmax},
                  {"modulation_fraction", (*fmax - *fmin) / f.front()},
                  {"alpha_prime_0", alpha.front()},
                  {"alpha_prime_min", *amin},
                  {"alpha_prime_max", *amax},
                  {"alpha_prime_ratio", *amax / *amin},
                  {"theta_max_deg", theta_max * 180.0 / std::numbers::pi},
                  {"rows", points}};
  write_json(out, stem + ".json", j);
  write_svg(out, stem + "_frequency.svg", "|0,+1> - |0,0> transition", "phi (rad)", "f (MHz)", {fs_series});
  write_svg(out, stem + "_alpha.svg", "gyromagnetic augmentation", "phi (rad)", "alpha'", {alpha_series});
}

void cmd_projections(const RunConfig& cfg, const Options& opt, const Output& out, const std::string& stem) {
  const std::size_t points = spectrum_points(opt);
  const AdiabaticTrack track = spectrum_track(cfg, points);
  const std::size_t stride = (track.size() - 1) / points;
  const auto proj = bare_projections(track, basis_index(0, 1));
  static const char* names[9] = {"p_p1_p1", "p_p1_0", "p_p1_m1", "p_0_p1", "p_0_0", "p_0_m1", "p_m1_p1", "p_m1_0", "p_m1_m1"};
  std::vector<std::string> cols{"phi_rad", "theta_deg"};
  for (const char* n : names) cols.emplace_back(n);
  Csv csv(out.path(stem + ".csv"), out, cols);
  Series plus{"|0,+1>", {}, {}}, zero{"|0,0>", {}, {}}, minus{"|0,-1>", {}, {}};
  for (std::size_t r = 0; r < points; ++r) {
    const std::size_t j = r * stride;
    std::vector<double> row{track.phi[j], field_nv_angle(track.phi[j], cfg.geometry()) * 180.0 / std::numbers::pi};
    for (double p : proj[j]) row.push_back(p);
    csv.row(row);
    plus.x.push_back(track.phi[j]);
    plus.y.push_back(proj[j][basis_index(0, 1)]);
    zero.x.push_back(track.phi[j]);
    zero.y.push_back(proj[j][basis_index(0, 0)]);
    minus.x.push_back(track.phi[j]);
    minus.y.push_back(proj[j][basis_index(0, -1)]);
  }
  const std::size_t mid = (track.size() - 1) / 2;
  ordered_json j = summary(stem, cfg);
  ordered_json at_pi = ordered_json::object();
  for (int k = 0; k < 9; ++k) at_pi[names[k]] = proj[mid][static_cast<std::size_t>(k)];
  j["results"] = {{"phi_rad", track.phi[mid]}, {"weights", at_pi}, {"rows", points}};
  write_json(out, stem + ".json", j);
  write_svg(out, stem + ".svg", "tracked |0,+1> on aligned eigenstates", "phi (rad)", "weight", {plus, zero, minus});
}

void cmd_feedforward(const RunConfig& cfg, const Options& opt, const Output& out) {
  if (opt.periods < 1) throw Error("cli", "--periods must be at least 1");
  const Simulator sim(cfg.protocol());
  FMProfile profile = sim.profile();
  if (opt.periods > 1) {
    profile = cfg.stationary || !cfg.feedforward
                  ? FMProfile::constant(profile.frequency_hz.front(), cfg.period_s, opt.periods)
                  : fm_from_track(build_track(cfg.geometry(), cfg.rotation(), cfg.constants(), cfg.track_samples),
                                  cfg.rotation(), opt.periods);
  }
  const GateWindow always{profile.time_s.front(), profile.duration() * (1.0 + 1e-12), 0.0, 1.0};
  const Waveform wf = synthesize(profile, {always}, cfg.sample_rate_hz);
  export_waveform(wf, out.path("feedforward_waveform.txt"));
  if (out.log) *out.log << "wrote " << out.path("feedforward_waveform.txt").string() << '\n';
  Csv csv(out.path("feedforward_profile.csv"), out, {"time_s", "frequency_hz", "phase_rad"});
  Series s{"f (MHz)", {}, {}};
  for (std::size_t k = 0; k < profile.time_s.size(); ++k) {
    csv.row({profile.time_s[k], profile.frequency_hz[k], profile.phase_rad[k]});
    s.x.push_back(profile.time_s[k] * 1e3);
    s.y.push_back(profile.frequency_hz[k] * 1e-6);
  }
  ordered_json j = summary("feedforward", cfg);
  j["results"] = {{"periods", opt.periods},
                  {"samples", wf.samples.size()},
                  {"sample_rate_hz", wf.sample_rate_hz},
                  {"f_min_hz", profile.min_frequency()},
                  {"f_max_hz", profile.max_frequency()},
                  {"b_rf_g", sim.b_rf_g()}};
  write_json(out, "feedforward.json", j);
  write_svg(out, "feedforward.svg", "feedforward profile", "t (ms)", "f (MHz)", {s});
}

void write_fringe_sweep(const ProtocolResult& r, const Output& out, const std::string& stem) {
  Csv csv(out.path(stem + ".csv"), out, {r.variable, "amplitude", "amplitude_error"});
  for (std::size_t k = 0; k < r.x.size(); ++k) csv.row({r.x[k], r.signal[k], r.std_error[k]});
  Csv fr(out.path(stem + "_fringes.csv"), out, {r.variable, "phase_rad", "signal", "std_error"});
  for (std::size_t k = 0; k < r.fringes.size(); ++k)
    for (std::size_t i = 0; i < r.fringes[k].x.size(); ++i)
      fr.row({r.x[k], r.fringes[k].x[i], r.fringes[k].signal[i], r.fringes[k].std_error[i]});
}

ordered_json sweep_json(const ProtocolResult& r) {
  ordered_json j;
  j["protocol"] = r.protocol;
  j["variable"] = r.variable;
  j["x"] = r.x;
  j["amplitude"] = r.signal;
  j["amplitude_error"] = r.std_error;
  j["fit"] = fit_json(r);
  return j;
}

std::vector<double> phases_for(const RunConfig& cfg) { return phase_grid(cfg.phase_points); }

void cmd_rabi(const RunConfig& cfg, const Output& out) {
  const Simulator sim(cfg.protocol());
  const ProtocolResult r = sim.rabi(cfg.t_d_s, cfg.durations_s);
  Csv csv(out.path("rabi.csv"), out, {"duration_s", "signal", "std_error"});
  for (std::size_t k = 0; k < r.x.size(); ++k) csv.row({r.x[k], r.signal[k], r.std_error[k]});
  ordered_json j = summary("rabi", cfg);
  j["results"] = {{"t_d_s", cfg.t_d_s}, {"b_rf_g", sim.b_rf_g()}, {"fit", fit_json(r)}};
  write_json(out, "rabi.json", j);
  write_svg(out, "rabi.svg", "Rabi oscillation", "duration (s)", "signal", {{"signal", r.x, r.signal}});
}

void cmd_sweep(const RunConfig& cfg, const Output& out, const std::string& stem) {
  const Simulator sim(cfg.protocol());
  const auto phases = phases_for(cfg);
  ProtocolResult r;
  if (stem == "ramsey") r = sim.ramsey_decay(cfg.t_d_s, cfg.taus_s, phases);
  else if (stem == "echo") r = sim.echo_decay(cfg.t_d_s, cfg.echo_taus_s, phases);
  else if (stem == "echo_multiperiod") r = sim.multi_period_decay(cfg.n_periods, phases);
  else r = sim.spin_lock_sweep(cfg.lock_s, phases, cfg.lock_scale);
  write_fringe_sweep(r, out, stem);
  ordered_json j = summary(stem, cfg);
  j["results"] = sweep_json(r);
  j["results"]["t_d_s"] = cfg.t_d_s;
  write_json(out, stem + ".json", j);
  write_svg(out, stem + ".svg", stem + " fringe amplitude", r.variable, "amplitude", {{stem, r.x, r.signal}});
}

void cmd_validate(const RunConfig& cfg, const Output& out) {
  const ReductionReport rep = validate_reduction(cfg.validation());
  ordered_json j = summary("validate", cfg);
  j["results"] = {{"max_deviation", rep.max_deviation},
                  {"max_deviation_eta", rep.max_deviation_eta},
                  {"max_deviation_zeta", rep.max_deviation_zeta},
                  {"max_leakage", rep.max_leakage},
                  {"final_full_zeta", rep.final_full_zeta},
                  {"final_reduced_zeta", rep.final_reduced_zeta}};
  write_json(out, "validate.json", j);
}

// ---------------------------------------------------------------------------
// figure reproductions

void fig4c(const RunConfig& cfg, const Output& out) {
  const Simulator sim(cfg.protocol());
  const double readout = cfg.readout_periods * cfg.period_s;
  Csv csv(out.path("fig4c.csv"), out, {"t_d_s", "f_rabi_hz", "f_rabi_error_hz", "f_model_hz", "f_model_error_hz", "ratio", "ratio_error", "ratio_model", "ratio_model_error"});
  ordered_json rows = ordered_json::array();
  Series measured{"simulated", {}, {}}, model{"model", {}, {}};
  double f_ref = 0, e_ref = 0, m_ref = 0, me_ref = 0;
  for (std::size_t k = 0; k < cfg.rabi_delays_s.size(); ++k) {
    const double td = cfg.rabi_delays_s[k];
    // scan about 2.5 local Rabi periods, limited by the readout time
    const double span = std::min(2.5 * two_pi / sim.nominal_rabi(td), readout - td);
    std::vector<double> d(61);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = span * static_cast<double>(i) / 60.0;
    const ProtocolResult r = sim.rabi(td, d);
    const double f = r.fit.at("f_rabi_hz").value, e = r.fit.at("f_rabi_hz").error;
    const FitParameter mf = sim.model_rabi_frequency(td, d);
    const double m = mf.value;
    if (k == 0) { f_ref = f; e_ref = e; m_ref = m; me_ref = mf.error; }
    const double ratio = f / f_ref;
    const double ratio_err = ratio * std::hypot(e / f, k == 0 ? 0.0 : e_ref / f_ref);
    const double model_ratio = m / m_ref;
    const double model_err = model_ratio * std::hypot(mf.error / m, k == 0 ? 0.0 : me_ref / m_ref);
    csv.row({td, f, e, m, mf.error, ratio, ratio_err, model_ratio, model_err});
    rows.push_back({{"t_d_s", td}, {"f_rabi_hz", f}, {"f_rabi_error_hz", e}, {"f_model_hz", m}, {"f_model_error_hz", mf.error}});
    measured.x.push_back(td * 1e6);
    measured.y.push_back(ratio);
    model.x.push_back(td * 1e6);
    model.y.push_back(model_ratio);
  }
  ordered_json j = summary("reproduce fig4c", cfg);
  j["results"] = {{"b_rf_g", sim.b_rf_g()}, {"rows", rows}};
  write_json(out, "fig4c.json", j);
  write_svg(out, "fig4c.svg", "relative Rabi frequency", "t_D (us)", "f / f(t_D = first)", {measured, model});
}

void fig5(const RunConfig& cfg, const Output& out) {
  const Simulator sim(cfg.protocol());
  const auto phases = phases_for(cfg);
  struct Run { std::string name; ProtocolResult r; };
  std::vector<Run> runs;
  runs.push_back({"ramsey_td0", sim.ramsey_decay(0.0, cfg.taus_s, phases)});
  runs.push_back({"ramsey_td200us", sim.ramsey_decay(200e-6, cfg.taus_s, phases)});
  runs.push_back({"echo_td0", sim.echo_decay(0.0, cfg.echo_taus_s, phases)});
  runs.push_back({"echo_td200us", sim.echo_decay(200e-6, cfg.echo_taus_s, phases)});
  runs.push_back({"echo_multiperiod", sim.multi_period_decay(cfg.n_periods, phases)});
  Csv csv(out.path("fig5.csv"), out, {"series", "tau_s", "amplitude", "amplitude_error"});
  ordered_json res = ordered_json::object();
  std::vector<Series> within, multi;
  for (const Run& run : runs) {
    for (std::size_t k = 0; k < run.r.x.size(); ++k) csv.row({run.r.x[k], run.r.signal[k], run.r.std_error[k]}, run.name);
    res[run.name] = sweep_json(run.r);
    Series s{run.name, {}, run.r.signal};
    for (double x : run.r.x) s.x.push_back(x * 1e6);
    (run.name == "echo_multiperiod" ? multi : within).push_back(s);
  }
  ordered_json j = summary("reproduce fig5", cfg);
  j["results"] = res;
  write_json(out, "fig5.json", j);
  write_svg(out, "fig5_within_period.svg", "fringe amplitude within one period", "tau (us)", "amplitude", within);
  write_svg(out, "fig5_multiperiod.svg", "even-period spin echo", "tau (us)", "amplitude", multi);
}

void fig6(const RunConfig& cfg, const Output& out) {
  const auto phases = phases_for(cfg);
  RunConfig still = cfg;
  still.stationary = true;
  const Simulator rotating(cfg.protocol());
  const Simulator stationary(still.protocol());
  const ProtocolResult a = rotating.spin_lock_sweep(cfg.lock_s, phases, cfg.lock_scale);
  const ProtocolResult b = stationary.spin_lock_sweep(cfg.lock_s, phases, cfg.lock_scale);
  Csv csv(out.path("fig6.csv"), out, {"series", "lock_s", "amplitude", "amplitude_error", "phase_rad"});
  for (const auto& [name, r] : {std::pair{std::string("rotating"), &a}, std::pair{std::string("stationary"), &b}})
    for (std::size_t k = 0; k < r->x.size(); ++k)
      csv.row({r->x[k], r->signal[k], r->std_error[k], r->fringes[k].fit.at("phase").value}, name);
  ordered_json j = summary("reproduce fig6", cfg);
  j["results"] = {{"rotating", sweep_json(a)}, {"stationary", sweep_json(b)}};
  write_json(out, "fig6.json", j);
  Series sa{"rotating", {}, a.signal}, sb{"stationary", {}, b.signal};
  for (double x : a.x) sa.x.push_back(x * 1e6);
  for (double x : b.x) sb.x.push_back(x * 1e6);
  write_svg(out, "fig6.svg", "spin-lock fringe amplitude", "lock time (us)", "amplitude", {sa, sb});
}

void reproduce(const RunConfig& cfg, const Options& opt, Output out) {
  out.provenance = "rotorspin reproduce " + opt.figure + " config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed);
  if (opt.figure == "fig3a") cmd_projections(cfg, opt, out, "fig3a");
  else if (opt.figure == "fig3c") cmd_spectrum(cfg, opt, out, "fig3c");
  else if (opt.figure == "fig4c") fig4c(cfg, out);
  else if (opt.figure == "fig5") fig5(cfg, out);
  else fig6(cfg, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nuclear spin qubits in a rotating diamond: spectra, feedforward control and coherence protocols",
               "rotorspin"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config_path, "JSON configuration file");
  app.add_option("--out", opt.out_dir, "output directory (overrides out_dir)");
  app.add_option("--seed", opt.seed, "master seed (overrides seed)");
  app.add_option("--points", opt.points, "rows for spectrum-type outputs (default 360)")->check(CLI::PositiveNumber);
  app.add_option("--shots", opt.shots, "Monte-Carlo shots (overrides shots)")->check(CLI::PositiveNumber);
  app.add_flag("--svg", opt.svg, "also write SVG line plots");

  app.add_subcommand("spectrum", "energies, transition frequency and augmentation over one rotation");
  app.add_subcommand("projections", "tracked |0,+1> state on the aligned-field eigenstates");
  auto* ff = app.add_subcommand("feedforward", "frequency-modulated drive profile and waveform");
  ff->add_option("--periods", opt.periods, "rotation periods to synthesize")->check(CLI::PositiveNumber);
  app.add_subcommand("rabi", "Rabi oscillation at delay t_d_s");
  app.add_subcommand("ramsey", "Ramsey fringe amplitude against tau");
  app.add_subcommand("echo", "spin-echo fringe amplitude against tau");
  app.add_subcommand("echo-multiperiod", "spin echo at even multiples of the period");
  app.add_subcommand("spinlock", "spin-lock fringe amplitude against lock time");
  app.add_subcommand("validate", "compare the reduced and full propagators on one segment");
  auto* rep = app.add_subcommand("reproduce", "regenerate a figure dataset");
  rep->add_option("figure", opt.figure, "fig3a | fig3c | fig4c | fig5 | fig6")
      ->required()
      ->check(CLI::IsMember({"fig3a", "fig3c", "fig4c", "fig5", "fig6"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    RunConfig cfg = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.shots) cfg.shots = *opt.shots;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    cfg.validate();

    Output o;
    o.dir = cfg.out_dir;
    o.svg = opt.svg;
    o.log = &out;
    fs::create_directories(o.dir);

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "spectrum") cmd_spectrum(cfg, opt, o, "spectrum");
    else if (name == "projections") cmd_projections(cfg, opt, o, "projections");
    else if (name == "feedforward") cmd_feedforward(cfg, opt, o);
    else if (name == "rabi") cmd_rabi(cfg, o);
    else if (name == "ramsey") cmd_sweep(cfg, o, "ramsey");
    else if (name == "echo") cmd_sweep(cfg, o, "echo");
    else if (name == "echo-multiperiod") cmd_sweep(cfg, o, "echo_multiperiod");
    else if (name == "spinlock") cmd_sweep(cfg, o, "spinlock");
    else if (name == "validate") cmd_validate(cfg, o);
    else reproduce(cfg, opt, o);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    err << "error: cli: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: cli: " << e.what() << '\n';
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, std::cout, std::cerr);
}

}  // namespace rotorspin

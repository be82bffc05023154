// nvcharge: command-line front end for the NV charge-state toolkit.
//
// Powers are given in uW (green) and mW (IR) on the command line and stored
// in SI units in every output file.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nvcharge/analysis.hpp"
#include "nvcharge/error.hpp"
#include "nvcharge/experiments.hpp"
#include "nvcharge/io.hpp"
#include "nvcharge/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nvcharge;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::string profile;
  std::string out = ".";
  std::uint64_t seed = 20180101;
  std::string format = "csv";
};

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse '" + s + "'", {what});
  }
}

// "100us", "20 ns", "1e-6s" -> seconds
double parse_duration(std::string s, const std::string& what) {
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  struct Suffix {
    const char* text;
    double scale;
  };
  static const Suffix suffixes[] = {{"ns", 1e-9}, {"us", 1e-6}, {"\xC2\xB5s", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
  for (const auto& suf : suffixes) {
    const std::string t = suf.text;
    if (s.size() > t.size() && s.compare(s.size() - t.size(), t.size(), t) == 0) {
      return parse_double(s.substr(0, s.size() - t.size()), what) * suf.scale;
    }
  }
  throw ConfigError(what + ": '" + s + "' needs a unit (ns, us, ms, s)", {what});
}

std::pair<std::string, std::string> split_colon(const std::string& s, const std::string& what) {
  const auto c = s.find(':');
  if (c == std::string::npos) throw ConfigError(what + ": expected LO:HI, got '" + s + "'", {what});
  return {s.substr(0, c), s.substr(c + 1)};
}

// "10:60us" -> {10e-6, 60e-6}; the unit may follow either end.
std::pair<double, double> parse_window(const std::string& s, const std::string& what) {
  auto [a, b] = split_colon(s, what);
  const double hi = parse_duration(b, what);
  const bool a_has_unit = !a.empty() && std::isalpha(static_cast<unsigned char>(a.back()));
  double lo = 0.0;
  if (a_has_unit) {
    lo = parse_duration(a, what);
  } else {
    const double raw_hi = parse_double(b.substr(0, b.find_first_not_of("0123456789.eE+-")), what);
    lo = parse_double(a, what) * (raw_hi != 0.0 ? hi / raw_hi : 1.0);
  }
  return {lo, hi};
}

std::pair<double, double> parse_range(const std::string& s, double scale, const std::string& what) {
  auto [a, b] = split_colon(s, what);
  return {parse_double(a, what) * scale, parse_double(b, what) * scale};
}

class Runner {
 public:
  explicit Runner(const GlobalOptions& g) : g_(g) {}

  Profile profile() const {
    return g_.profile.empty() ? default_shallow_profile() : io::load_profile(g_.profile);
  }

  void check_format() const {
    if (g_.format != "csv" && g_.format != "json") {
      throw ConfigError("--format must be csv or json", {"--format"});
    }
  }

  fs::path output(const std::string& name) const {
    const fs::path dir(g_.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string(), {"--out"});
    return dir / name;
  }

  void emit(const std::string& name, const std::string& text) const {
    const auto path = output(name);
    io::write_text(path, text);
    std::cout << path.string() << '\n';
  }

  void emit_json(const std::string& name, const json& j) const { emit(name, j.dump(2) + "\n"); }

  void emit_trace(const std::string& stem, const Trace& trace) const {
    if (g_.format == "json") {
      emit_json(stem + ".json", io::trace_to_json(trace));
    } else {
      std::ostringstream os;
      io::write_trace_csv(os, trace);
      emit(stem + ".csv", os.str());
    }
    for (const auto& w : trace.warnings) std::cerr << "warning: " << w << '\n';
  }

  void emit_curve(const std::string& stem, const std::vector<CurvePoint>& curve) const {
    if (g_.format == "json") {
      json j = json::array();
      for (const auto& c : curve) j.push_back({{"green_power_w", c.green_power}, {"nvm_fraction", c.nvm_fraction}, {"pl_ratio", c.pl_ratio}});
      emit_json(stem + ".json", j);
    } else {
      std::ostringstream os;
      io::write_curve_csv(os, curve);
      emit(stem + ".csv", os.str());
    }
  }

  void emit_quench(const std::string& stem, const std::vector<QuenchPoint>& points) const {
    if (g_.format == "json") {
      json j = json::array();
      for (const auto& q : points) {
        j.push_back({{"green_power_w", q.green_power}, {"ir_power_w", q.ir_power}, {"channel", std::string(channel_name(q.channel))},
                     {"ratio", q.ratio}, {"ratio_sigma", q.ratio_sigma}});
      }
      emit_json(stem + ".json", j);
    } else {
      std::ostringstream os;
      io::write_quench_csv(os, points);
      emit(stem + ".csv", os.str());
    }
  }

  std::uint64_t seed() const { return g_.seed; }

 private:
  GlobalOptions g_;
};

PulseSequence build_sequence(double green_uw, double ir_mw, const std::string& window, const std::string& duration) {
  const double total = parse_duration(duration, "--duration");
  const double green = units::uw(green_uw);
  const double ir = units::mw(ir_mw);
  PulseSequence seq;
  if (window.empty()) {
    seq.segments.push_back({total, green, ir});
  } else {
    const auto [on, off] = parse_window(window, "--ir-window");
    FieldChecker fc("--ir-window");
    fc.require(on >= 0.0 && on < off, "--ir-window", "needs 0 <= on < off");
    fc.require(off <= total, "--ir-window", "must end within --duration");
    fc.throw_if_failed();
    seq = PulseSequence::ir_window(green, ir, on, off, total);
  }
  seq.validate();
  return seq;
}

struct ProgramArgs {
  double green_uw = 0.0;
  double ir_mw = 0.0;
  std::string window;
  std::string duration = "100us";
  double dt_ns = 1.0;
};

void add_program_flags(CLI::App* cmd, ProgramArgs& a) {
  cmd->add_option("--green-uw", a.green_uw, "Green power, uW")->required();
  cmd->add_option("--ir-mw", a.ir_mw, "IR power, mW");
  cmd->add_option("--ir-window", a.window, "IR on:off window, e.g. 10:60us (IR on for the whole run if omitted)");
  cmd->add_option("--duration", a.duration, "Total duration with unit, e.g. 100us");
  cmd->add_option("--dt-ns", a.dt_ns, "Sample spacing, ns");
}

json error_record(const std::string& kind, const std::string& command, const std::string& message,
                  const std::vector<std::string>& fields) {
  return {{"error", {{"kind", kind}, {"command", command}, {"message", message}, {"fields", fields}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV charge-state dynamics under green and IR illumination"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--profile", g.profile, "Profile JSON (built-in shallow profile if omitted)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Random seed for synthetic data");
  app.add_option("--format", g.format, "Output format for traces, curves and quench data")
      ->check(CLI::IsMember({"csv", "json"}));
  app.fallthrough();

  ProgramArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Time-resolved PL trace for a laser program");
  add_program_flags(simulate, sim);

  double ss_green = 0.0, ss_ir = 0.0;
  auto* steady = app.add_subcommand("steady-state", "Steady-state populations and PL");
  steady->add_option("--green-uw", ss_green, "Green power, uW")->required();
  steady->add_option("--ir-mw", ss_ir, "IR power, mW");

  std::string map_green = "10:1000", map_ir = "1:100";
  std::size_t map_points = 25;
  auto* map = app.add_subcommand("map", "Steady-state NV- PL ratio over green and IR power");
  map->add_option("--green-uw-range", map_green, "Green range LO:HI, uW");
  map->add_option("--ir-mw-range", map_ir, "IR range LO:HI, mW");
  map->add_option("--points", map_points, "Log-spaced points per axis");

  std::string curve_green = "10:1000";
  double curve_ir = 0.0;
  std::size_t curve_points = 25;
  auto* curve = app.add_subcommand("curve", "NV- fraction and PL ratio versus green power");
  curve->add_option("--green-uw-range", curve_green, "Green range LO:HI, uW");
  curve->add_option("--ir-mw", curve_ir, "IR power, mW");
  curve->add_option("--points", curve_points, "Log-spaced points");

  std::string fit_data;
  double fit_init_scale = 1.0;
  int fit_max_iter = 200;
  auto* fit = app.add_subcommand("fit", "Fit cross-sections to quench-ratio data");
  fit->add_option("--data", fit_data, "Quench CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--init-scale", fit_init_scale, "Scale applied to the profile cross-sections as the starting point");
  fit->add_option("--max-iterations", fit_max_iter, "Iteration limit");

  std::vector<std::string> ref_traces, ref_windows;
  std::vector<double> ref_green, ref_ir;
  double ref_init_scale = 1.0;
  int ref_max_iter = 100;
  auto* refine = app.add_subcommand("refine", "Refine cross-sections against measured traces");
  refine->add_option("--trace", ref_traces, "Trace CSV (repeat; one per program)")->required()->check(CLI::ExistingFile);
  refine->add_option("--green-uw", ref_green, "Green power per trace, uW")->required();
  refine->add_option("--ir-mw", ref_ir, "IR power per trace, mW")->required();
  refine->add_option("--ir-window", ref_windows, "IR window per trace, e.g. 10:60us")->required();
  refine->add_option("--init-scale", ref_init_scale, "Scale applied to the profile cross-sections as the starting point");
  refine->add_option("--max-iterations", ref_max_iter, "Iteration limit");

  double opt_green = -1.0;
  std::string opt_ir = "1:100", opt_green_range = "10:1000";
  std::size_t opt_points = 25;
  auto* optimize = app.add_subcommand("optimize", "Best IR power for the NV- population");
  optimize->add_option("--green-uw", opt_green, "Single green power, uW (otherwise optimize the curve peak)");
  optimize->add_option("--ir-mw-range", opt_ir, "IR search range LO:HI, mW");
  optimize->add_option("--green-uw-range", opt_green_range, "Green range for the curve, uW");
  optimize->add_option("--points", opt_points, "Green points for the curve");

  std::string synth_kind = "trace";
  double synth_noise = 0.02, synth_ir = 38.0;
  std::string synth_green_range = "10:300";
  std::size_t synth_points = 20;
  std::vector<std::string> synth_channels{"nvm", "nv0"};
  ProgramArgs syn;
  auto* synth = app.add_subcommand("synth", "Synthetic noisy data");
  synth->add_option("--kind", synth_kind, "trace or quench")->check(CLI::IsMember({"trace", "quench"}));
  synth->add_option("--noise", synth_noise, "Relative Gaussian noise");
  synth->add_option("--green-uw", syn.green_uw, "trace: green power, uW");
  synth->add_option("--ir-mw", synth_ir, "IR power, mW");
  synth->add_option("--ir-window", syn.window, "trace: IR window");
  synth->add_option("--duration", syn.duration, "trace: total duration");
  synth->add_option("--dt-ns", syn.dt_ns, "trace: sample spacing, ns");
  synth->add_option("--green-uw-range", synth_green_range, "quench: green range LO:HI, uW");
  synth->add_option("--points", synth_points, "quench: log-spaced green powers");
  synth->add_option("--channels", synth_channels, "quench: nvm and/or nv0")->delimiter(',');

  std::string command = "nvcharge";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_record("config", command, e.what(), {}).dump() << '\n';
    return kExitConfig;
  }

  try {
    Runner run(g);
    run.check_format();

    if (*simulate) {
      command = "simulate";
      const auto profile = run.profile();
      const auto seq = build_sequence(sim.green_uw, sim.ir_mw, sim.window, sim.duration);
      const auto trace = simulate_sequence(profile, seq, GreenSteadyState{}, units::ns(sim.dt_ns));
      run.emit_trace("trace", trace);
    } else if (*steady) {
      command = "steady-state";
      const auto profile = run.profile();
      const auto m = build_rate_matrix(profile.params, profile.beams.green(units::uw(ss_green)),
                                       profile.beams.ir(units::mw(ss_ir)));
      const auto p = steady_state(m);
      const auto m0 = build_rate_matrix(profile.params, profile.beams.green(units::uw(ss_green)), profile.beams.ir(0.0));
      const auto p0 = steady_state(m0);
      const double pl = pl_signal(p, profile.params, Channel::NVminus);
      const double pl0 = pl_signal(p0, profile.params, Channel::NVminus);
      json j;
      j["green_power_w"] = units::uw(ss_green);
      j["ir_power_w"] = units::mw(ss_ir);
      j["nvm_fraction"] = p.nv_minus();
      j["pl_nvm_hz"] = pl;
      j["pl_nv0_hz"] = pl_signal(p, profile.params, Channel::NVzero);
      j["pl_ratio"] = pl0 > 0.0 ? pl / pl0 : 1.0;
      json pops;
      for (Level l : kAllLevels) pops[std::string(level_name(l))] = p[l];
      j["populations"] = pops;
      run.emit_json("steady_state.json", j);
    } else if (*map) {
      command = "map";
      const auto profile = run.profile();
      const auto [glo, ghi] = parse_range(map_green, 1e-6, "--green-uw-range");
      const auto [ilo, ihi] = parse_range(map_ir, 1e-3, "--ir-mw-range");
      const auto pm = steady_state_pl_map(profile, PowerGrid::logarithmic(glo, ghi, map_points, ilo, ihi, map_points));
      std::ostringstream os;
      io::write_map_csv(os, pm);
      run.emit("map.csv", os.str());
      run.emit_json("map.json", io::map_metadata_json(pm));
    } else if (*curve) {
      command = "curve";
      const auto profile = run.profile();
      const auto [glo, ghi] = parse_range(curve_green, 1e-6, "--green-uw-range");
      const auto c = charge_population_curve(profile, log_space(glo, ghi, curve_points), units::mw(curve_ir));
      run.emit_curve("curve", c);
    } else if (*fit) {
      command = "fit";
      const auto profile = run.profile();
      std::ifstream in(fit_data);
      const auto points = io::read_quench_csv(in);
      auto init = profile.params.cross_sections;
      init.sigma_ionize_green *= fit_init_scale;
      init.sigma_ionize_ir *= fit_init_scale;
      init.sigma_recombine_green *= fit_init_scale;
      init.sigma_recombine_ir *= fit_init_scale;
      LeastSquaresOptions opts;
      opts.max_iterations = fit_max_iter;
      const auto result = fit_quench_curves(points, profile, init, CrossSectionBounds::around(init), opts);
      run.emit_json("fit_report.json", io::fit_report_json(result));
    } else if (*refine) {
      command = "refine";
      const auto profile = run.profile();
      const auto n = ref_traces.size();
      if (ref_green.size() != n || ref_ir.size() != n || ref_windows.size() != n) {
        throw ConfigError("refine: --trace, --green-uw, --ir-mw and --ir-window must be given the same number of times",
                          {"--trace", "--green-uw", "--ir-mw", "--ir-window"});
      }
      std::vector<TraceObservation> obs;
      for (std::size_t i = 0; i < n; ++i) {
        std::ifstream in(ref_traces[i]);
        auto trace = io::read_trace_csv(in);
        if (trace.size() < 2) throw ConfigError("refine: trace " + ref_traces[i] + " has fewer than two samples", {"--trace"});
        const auto [on, off] = parse_window(ref_windows[i], "--ir-window");
        auto seq = PulseSequence::ir_window(units::uw(ref_green[i]), units::mw(ref_ir[i]), on, off, trace.times.back());
        obs.push_back({std::move(seq), std::move(trace), GreenSteadyState{}});
      }
      auto init = profile.params.cross_sections;
      init.sigma_ionize_green *= ref_init_scale;
      init.sigma_ionize_ir *= ref_init_scale;
      init.sigma_recombine_green *= ref_init_scale;
      init.sigma_recombine_ir *= ref_init_scale;
      LeastSquaresOptions opts;
      opts.max_iterations = ref_max_iter;
      const auto result = refine_by_trace_fit(obs, init, profile, CrossSectionBounds::around(init), opts);
      run.emit_json("refine_report.json", io::fit_report_json(result));
    } else if (*optimize) {
      command = "optimize";
      const auto profile = run.profile();
      const auto [ilo, ihi] = parse_range(opt_ir, 1e-3, "--ir-mw-range");
      json j;
      if (opt_green >= 0.0) {
        const auto o = optimize_ir_power(profile, units::uw(opt_green), ilo, ihi);
        j = {{"green_power_w", units::uw(opt_green)}, {"ir_power_w", o.ir_power}, {"nvm_fraction", o.nvm_fraction},
             {"ir_off_nvm_fraction", o.ir_off_fraction}, {"flat", o.flat}};
      } else {
        const auto [glo, ghi] = parse_range(opt_green_range, 1e-6, "--green-uw-range");
        const auto o = optimize_ir_for_curve(profile, log_space(glo, ghi, opt_points), ilo, ihi);
        const auto& peak = o.ir_on.at(o.peak_index);
        double saturation = 0.0;
        for (const auto& c : o.ir_off) saturation = std::max(saturation, c.nvm_fraction);
        j = {{"ir_power_w", o.ir_power}, {"peak_green_power_w", peak.green_power},
             {"peak_nvm_fraction", o.peak_fraction()}, {"enhancement_at_peak", o.enhancement_at_peak()},
             {"ir_off_max_nvm_fraction", saturation}};
      }
      run.emit_json("optimum.json", j);
    } else if (*synth) {
      command = "synth";
      const auto profile = run.profile();
      const NoiseSpec noise{synth_noise, run.seed()};
      if (synth_kind == "trace") {
        if (syn.green_uw <= 0.0) throw ConfigError("synth --kind trace needs --green-uw > 0", {"--green-uw"});
        const auto seq = build_sequence(syn.green_uw, synth_ir, syn.window, syn.duration);
        run.emit_trace("synth_trace", synthesize(profile, seq, noise, units::ns(syn.dt_ns)));
      } else {
        std::vector<Channel> channels;
        for (const auto& c : synth_channels) {
          if (c == "nvm") channels.push_back(Channel::NVminus);
          else if (c == "nv0") channels.push_back(Channel::NVzero);
          else throw ConfigError("--channels: unknown channel '" + c + "'", {"--channels"});
        }
        const auto [glo, ghi] = parse_range(synth_green_range, 1e-6, "--green-uw-range");
        const auto pts = synthesize_quench_points(profile, log_space(glo, ghi, synth_points), units::mw(synth_ir),
                                                  channels, noise);
        run.emit_quench("quench", pts);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << error_record("config", command, e.what(), e.fields()).dump() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << error_record("numerical", command, e.what(), {}).dump() << '\n';
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << error_record("config", command, e.what(), {}).dump() << '\n';
    return kExitConfig;
  }
  return 0;
}

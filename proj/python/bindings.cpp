#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "nvcharge/analysis.hpp"
#include "nvcharge/error.hpp"
#include "nvcharge/experiments.hpp"
#include "nvcharge/io.hpp"

namespace py = pybind11;
using namespace nvcharge;

namespace {

Channel channel_from(const std::string& s) {
  if (s == "nvm") return Channel::NVminus;
  if (s == "nv0") return Channel::NVzero;
  throw ConfigError("unknown channel '" + s + "' (expected nvm or nv0)", {"channel"});
}

py::dict trace_dict(const Trace& tr) {
  py::dict d;
  d["time_s"] = tr.times;
  d["pl_nvm_hz"] = tr.pl_nvm;
  d["pl_nv0_hz"] = tr.pl_nv0;
  d["pl_nvm_norm"] = tr.pl_nvm_norm;
  Eigen::MatrixXd pops(static_cast<Eigen::Index>(tr.populations.size()), 7);
  for (std::size_t k = 0; k < tr.populations.size(); ++k) pops.row(static_cast<Eigen::Index>(k)) = tr.populations[k].transpose();
  d["populations"] = pops;
  d["warnings"] = tr.warnings;
  return d;
}

PulseSequence window_sequence(double green_w, double ir_w, double on, double off, double total) {
  if (off <= on) return PulseSequence{{{total, green_w, ir_w}}};
  return PulseSequence::ir_window(green_w, ir_w, on, off, total);
}

}  // namespace

PYBIND11_MODULE(_nvcharge, m) {
  m.doc() = "NV charge-state rate-equation toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<CrossSectionSet>(m, "CrossSections")
      .def(py::init<>())
      .def(py::init([](double ig, double iir, double rg, double rir) { return CrossSectionSet{ig, iir, rg, rir}; }),
           py::arg("ionize_green"), py::arg("ionize_ir"), py::arg("recombine_green"), py::arg("recombine_ir"))
      .def_readwrite("ionize_green", &CrossSectionSet::sigma_ionize_green)
      .def_readwrite("ionize_ir", &CrossSectionSet::sigma_ionize_ir)
      .def_readwrite("recombine_green", &CrossSectionSet::sigma_recombine_green)
      .def_readwrite("recombine_ir", &CrossSectionSet::sigma_recombine_ir)
      .def("__eq__", [](const CrossSectionSet& a, const CrossSectionSet& b) { return a == b; });

  py::class_<Profile>(m, "Profile")
      .def_readwrite("label", &Profile::label)
      .def_property(
          "cross_sections", [](const Profile& p) { return p.params.cross_sections; },
          [](Profile& p, const CrossSectionSet& cs) { p.params.cross_sections = cs; })
      .def("to_json", [](const Profile& p) { return io::profile_to_json(p).dump(2); })
      .def("__eq__", [](const Profile& a, const Profile& b) { return a == b; });

  m.def("load_profile", [](const std::filesystem::path& p) { return io::load_profile(p); }, py::arg("path"));
  m.def("profile_from_json", [](const std::string& text) { return io::profile_from_json(nlohmann::json::parse(text)); },
        py::arg("text"));
  m.def("default_shallow_profile", &default_shallow_profile);
  m.def("bulk_profile", &make_bulk_profile, py::arg("shallow"));
  m.def("table_cross_sections", &table_cross_sections);

  m.def(
      "rate_matrix",
      [](const Profile& p, double green_w, double ir_w) {
        return Matrix7(build_rate_matrix(p.params, p.beams.green(green_w), p.beams.ir(ir_w)).matrix());
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w") = 0.0);

  m.def(
      "steady_state",
      [](const Profile& p, double green_w, double ir_w) {
        return Vector7(steady_state(build_rate_matrix(p.params, p.beams.green(green_w), p.beams.ir(ir_w))).vector());
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w") = 0.0);

  m.def(
      "evolve",
      [](const Profile& p, double green_w, double ir_w, const Vector7& p0, double t) {
        const auto mat = build_rate_matrix(p.params, p.beams.green(green_w), p.beams.ir(ir_w));
        return Vector7(evolve(mat, PopulationState(p0), t).vector());
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w"), py::arg("p0"), py::arg("t"));

  m.def(
      "simulate",
      [](const Profile& p, double green_w, double ir_w, double ir_on, double ir_off, double duration, double dt) {
        return trace_dict(simulate_sequence(p, window_sequence(green_w, ir_w, ir_on, ir_off, duration),
                                            GreenSteadyState{}, dt));
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w"), py::arg("ir_on") = 0.0, py::arg("ir_off") = 0.0,
      py::arg("duration") = 100e-6, py::arg("dt") = 1e-9,
      "Trace for green light with IR on during [ir_on, ir_off); IR stays on throughout when ir_off <= ir_on.");

  m.def(
      "synthesize_trace",
      [](const Profile& p, double green_w, double ir_w, double ir_on, double ir_off, double duration, double dt,
         double noise, std::uint64_t seed) {
        return trace_dict(synthesize(p, window_sequence(green_w, ir_w, ir_on, ir_off, duration), {noise, seed}, dt));
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w"), py::arg("ir_on") = 0.0, py::arg("ir_off") = 0.0,
      py::arg("duration") = 100e-6, py::arg("dt") = 1e-9, py::arg("noise") = 0.02, py::arg("seed") = 20180101);

  m.def("photon_rate",
        [](double sigma, double wavelength, double power, double area) {
          return photon_rate(sigma, LaserField{wavelength, power, area});
        },
        py::arg("sigma"), py::arg("wavelength"), py::arg("power"), py::arg("spot_area"));

  m.def(
      "quench_ratio",
      [](const Profile& p, const std::string& channel, double green_w, double ir_w) {
        return qss_quench_ratio(p, channel_from(channel), green_w, ir_w);
      },
      py::arg("profile"), py::arg("channel"), py::arg("green_w"), py::arg("ir_w"));

  m.def(
      "pl_map",
      [](const Profile& p, const std::vector<double>& greens, const std::vector<double>& irs) {
        const auto map = steady_state_pl_map(p, PowerGrid{greens, irs, GridScale::Linear});
        return py::make_tuple(map.ratios, map.nvm_fraction);
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w"), "Returns (pl_ratio, nvm_fraction), rows = green.");

  m.def(
      "population_curve",
      [](const Profile& p, const std::vector<double>& greens, double ir_w) {
        const auto c = charge_population_curve(p, greens, ir_w);
        std::vector<double> frac, ratio;
        for (const auto& x : c) {
          frac.push_back(x.nvm_fraction);
          ratio.push_back(x.pl_ratio);
        }
        return py::make_tuple(frac, ratio);
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w"));

  m.def(
      "optimize_ir",
      [](const Profile& p, double green_w, double ir_lo, double ir_hi) {
        const auto o = optimize_ir_power(p, green_w, ir_lo, ir_hi);
        py::dict d;
        d["ir_power_w"] = o.ir_power;
        d["nvm_fraction"] = o.nvm_fraction;
        d["ir_off_nvm_fraction"] = o.ir_off_fraction;
        d["flat"] = o.flat;
        return d;
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_lo") = 1e-3, py::arg("ir_hi") = 0.1);

  m.def(
      "synthesize_quench",
      [](const Profile& p, const std::vector<double>& greens, double ir_w, const std::vector<std::string>& channels,
         double noise, std::uint64_t seed) {
        std::vector<Channel> cs;
        for (const auto& c : channels) cs.push_back(channel_from(c));
        std::ostringstream os;
        io::write_quench_csv(os, synthesize_quench_points(p, greens, ir_w, cs, {noise, seed}));
        return os.str();
      },
      py::arg("profile"), py::arg("green_w"), py::arg("ir_w"), py::arg("channels") = std::vector<std::string>{"nvm", "nv0"},
      py::arg("noise") = 0.02, py::arg("seed") = 20180101, "Quench points as CSV text.");

  m.def(
      "fit_quench",
      [](const Profile& p, const std::string& csv_text, double init_scale) {
        std::istringstream in(csv_text);
        const auto pts = io::read_quench_csv(in);
        auto init = p.params.cross_sections;
        init = {init.sigma_ionize_green * init_scale, init.sigma_ionize_ir * init_scale,
                init.sigma_recombine_green * init_scale, init.sigma_recombine_ir * init_scale};
        return io::fit_report_json(fit_quench_curves(pts, p, init, CrossSectionBounds::around(init))).dump(2);
      },
      py::arg("profile"), py::arg("csv_text"), py::arg("init_scale") = 1.0, "Fit report as JSON text.");
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "nvcharge/error.hpp"
#include "nvcharge/io.hpp"

using namespace nvcharge;
using nlohmann::json;

namespace {

const std::string kData = NVCHARGE_DATA_DIR;

template <class Write, class Read>
void check_csv_round_trip(const std::string& text, Write write, Read read) {
  std::istringstream in(text);
  const auto parsed = read(in);
  std::ostringstream out;
  write(out, parsed);
  CHECK(out.str() == text);
}

Trace small_trace() {
  const auto p = default_shallow_profile();
  return simulate_sequence(p, PulseSequence::ir_window(159e-6, 38e-3, 50e-9, 150e-9, 200e-9), GreenSteadyState{},
                           5e-9);
}

}  // namespace

TEST_CASE("number formatting uses nine significant digits") {
  CHECK(io::format_number(1.0) == "1");
  CHECK(io::format_number(1.0 / 3.0) == "0.333333333");
  CHECK(io::format_number(6.25e-20) == "6.25e-20");
  CHECK(io::format_number(123456789012.0) == "1.23456789e+11");
}

TEST_CASE("shipped profiles load and round-trip") {
  for (const char* name : {"shallow", "bulk"}) {
    const auto path = kData + "/profiles/" + name + ".json";
    const auto p = io::load_profile(path);
    CHECK(p.label == name);
    const std::string text = io::read_text(path);
    CHECK(io::profile_to_json(p).dump(2) + "\n" == text);
    CHECK(io::profile_from_json(io::profile_to_json(p)) == p);
  }
  CHECK(io::load_profile(kData + "/profiles/shallow.json") == default_shallow_profile());
  CHECK(io::load_profile(kData + "/profiles/bulk.json") == make_bulk_profile(default_shallow_profile()));
}

TEST_CASE("profile values are converted to SI") {
  const auto j = io::profile_to_json(default_shallow_profile());
  const auto p = io::profile_from_json(j);
  CHECK(p.params.k_fluor_minus == doctest::Approx(j["k_fluor_minus_mhz"].get<double>() * 1e6));
  CHECK(p.params.k_excite_minus_per_w == doctest::Approx(j["k_excite_minus_mhz_per_mw"].get<double>() * 1e9));
  CHECK(p.beams.green_wavelength == doctest::Approx(532e-9));
}

TEST_CASE("profile parsing rejects unknown and missing keys") {
  auto j = io::profile_to_json(default_shallow_profile());
  j["k_fluor_minus_hz"] = 5.5e7;
  j.erase("k_isc_ms0_mhz");
  j["sigma_ionize_ir_m2"] = "big";
  try {
    io::profile_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("k_fluor_minus_hz") != std::string::npos);
    CHECK(msg.find("k_isc_ms0_mhz") != std::string::npos);
    CHECK(msg.find("sigma_ionize_ir_m2") != std::string::npos);
  }
  CHECK_THROWS_AS(io::profile_from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(io::load_profile(kData + "/profiles/missing.json"), ConfigError);
}

TEST_CASE("profile parsing applies parameter validation") {
  auto j = io::profile_to_json(default_shallow_profile());
  j["singlet_branch_ms0"] = 1.5;
  CHECK_THROWS_AS(io::profile_from_json(j), ConfigError);
}

TEST_CASE("trace CSV round trip") {
  std::ostringstream os;
  io::write_trace_csv(os, small_trace());
  const std::string text = os.str();
  CHECK(text.rfind("time_s,pl_nvm_hz,pl_nv0_hz,pl_nvm_norm,p0,p1,p2,p3,p4,p5,p6\n", 0) == 0);
  check_csv_round_trip(text, io::write_trace_csv, io::read_trace_csv);

  Trace bare = small_trace();
  bare.populations.clear();
  std::ostringstream b;
  io::write_trace_csv(b, bare);
  CHECK(b.str().rfind("time_s,pl_nvm_hz,pl_nv0_hz,pl_nvm_norm\n", 0) == 0);
  check_csv_round_trip(b.str(), io::write_trace_csv, io::read_trace_csv);
}

TEST_CASE("trace JSON round trip") {
  const auto tr = small_trace();
  const auto j = io::trace_to_json(tr);
  const auto back = io::trace_from_json(json::parse(j.dump()));
  CHECK(back.times == tr.times);
  CHECK(back.pl_nvm == tr.pl_nvm);
  CHECK(io::trace_to_json(back).dump() == j.dump());
}

TEST_CASE("malformed CSV is a config error") {
  std::istringstream bad_header("time,pl\n0,1\n");
  CHECK_THROWS_AS(io::read_trace_csv(bad_header), ConfigError);
  std::istringstream bad_number("time_s,pl_nvm_hz,pl_nv0_hz,pl_nvm_norm\n0,1,x,1\n");
  CHECK_THROWS_AS(io::read_trace_csv(bad_number), ConfigError);
  std::istringstream ragged("green_power_w,ir_power_w,channel,ratio,ratio_sigma\n1e-5,0.038,nvm,0.9\n");
  CHECK_THROWS_AS(io::read_quench_csv(ragged), ConfigError);
  std::istringstream channel("green_power_w,ir_power_w,channel,ratio,ratio_sigma\n1e-5,0.038,nvx,0.9,0\n");
  CHECK_THROWS_AS(io::read_quench_csv(channel), ConfigError);
  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_curve_csv(empty), ConfigError);
}

TEST_CASE("shipped quench dataset round-trips byte for byte") {
  const auto text = io::read_text(kData + "/quench_synthetic.csv");
  check_csv_round_trip(text, io::write_quench_csv, io::read_quench_csv);
  std::istringstream in(text);
  const auto pts = io::read_quench_csv(in);
  CHECK(pts.size() == 40);
}

TEST_CASE("shipped quench dataset is reproducible from its seed") {
  const auto pts = synthesize_quench_points(default_shallow_profile(), log_space(10e-6, 300e-6, 20), 38e-3,
                                            {Channel::NVminus, Channel::NVzero}, {0.02, 20180101});
  std::ostringstream os;
  io::write_quench_csv(os, pts);
  CHECK(os.str() == io::read_text(kData + "/quench_synthetic.csv"));
}

TEST_CASE("fit report round trip") {
  const auto p = default_shallow_profile();
  const auto truth = p.params.cross_sections;
  std::istringstream in(io::read_text(kData + "/quench_synthetic.csv"));
  const auto fit = fit_quench_curves(io::read_quench_csv(in), p, truth, CrossSectionBounds::around(truth));
  const auto j = io::fit_report_json(fit);
  CHECK(j.at("converged").get<bool>());
  CHECK(j.contains("estimates"));
  CHECK(j.contains("standard_errors"));
  CHECK(j.contains("residual_norm"));
  CHECK(j.contains("iterations"));
  const auto back = io::fit_report_from_json(json::parse(j.dump(2)));
  CHECK(io::fit_report_json(back).dump(2) == j.dump(2));
  CHECK(back.estimate == fit.estimate);
  CHECK(back.status == fit.status);
}

TEST_CASE("curve CSV round trip") {
  const auto c = charge_population_curve(default_shallow_profile(), log_space(10e-6, 1e-3, 9), 25e-3);
  std::ostringstream os;
  io::write_curve_csv(os, c);
  CHECK(os.str().rfind("green_power_w,nvm_fraction,pl_ratio\n", 0) == 0);
  check_csv_round_trip(os.str(), io::write_curve_csv, io::read_curve_csv);
}

TEST_CASE("map CSV and sidecar round trip") {
  const auto m = steady_state_pl_map(default_shallow_profile(), PowerGrid::logarithmic(10e-6, 1e-3, 4, 1e-3, 0.1, 3));
  std::ostringstream os;
  io::write_map_csv(os, m);
  const auto meta = io::map_metadata_json(m);
  std::istringstream in(os.str());
  const auto back = io::read_map(in, json::parse(meta.dump()));
  std::ostringstream again;
  io::write_map_csv(again, back);
  CHECK(again.str() == os.str());
  CHECK(io::map_metadata_json(back).dump() == meta.dump());
  CHECK(back.ratios.size() == 4);
  CHECK(back.ratios[0].size() == 3);

  std::istringstream wrong("green_power_w,1\n1e-5,1\n");
  CHECK_THROWS_AS(io::read_map(wrong, meta), ConfigError);
}

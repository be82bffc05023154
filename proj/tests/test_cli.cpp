#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvcharge/io.hpp"

namespace fs = std::filesystem;
using namespace nvcharge;
using nlohmann::json;

namespace {

const std::string kCli = NVCHARGE_CLI;
const std::string kData = NVCHARGE_DATA_DIR;

struct Run {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nvcharge_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = kCli + " --out " + dir.string() + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = io::read_text(err);
  return r;
}

std::string profile(const char* name) { return " --profile " + kData + "/profiles/" + name + ".json "; }

template <class Reader>
auto read_file(const fs::path& p, Reader reader) {
  std::ifstream in(p);
  return reader(in);
}

}  // namespace

TEST_CASE("simulate writes a trace") {
  const auto dir = scratch("simulate");
  const auto r = run(profile("shallow") + "simulate --green-uw 159 --ir-mw 38 --ir-window 10:60us --dt-ns 10", dir);
  REQUIRE(r.code == 0);
  const auto tr = read_file(dir / "trace.csv", io::read_trace_csv);
  CHECK(tr.size() == 10001);
  CHECK(tr.times.back() == doctest::Approx(100e-6));
  CHECK(tr.pl_nvm_norm.front() == doctest::Approx(1.0));
}

TEST_CASE("simulate without IR is flat") {
  const auto dir = scratch("flat");
  REQUIRE(run("simulate --green-uw 100 --ir-mw 0 --duration 5us --dt-ns 10", dir).code == 0);
  const auto tr = read_file(dir / "trace.csv", io::read_trace_csv);
  for (double v : tr.pl_nvm_norm) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("zero duration is a config error with a machine-readable record") {
  const auto dir = scratch("zero");
  const auto r = run("simulate --green-uw 100 --duration 0us", dir);
  CHECK(r.code == 2);
  const auto j = json::parse(r.err);
  CHECK(j["error"]["kind"] == "config");
  CHECK(j["error"]["command"] == "simulate");
  CHECK_FALSE(j["error"]["fields"].empty());
}

TEST_CASE("unknown profile keys are reported") {
  const auto dir = scratch("badprofile");
  auto pj = io::profile_to_json(default_shallow_profile());
  pj["laser_colour"] = "green";
  io::write_text(dir / "bad.json", pj.dump());
  const auto r = run("--profile " + (dir / "bad.json").string() + " steady-state --green-uw 100", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("laser_colour") != std::string::npos);
}

TEST_CASE("degenerate generator is a numerical failure") {
  const auto dir = scratch("numerical");
  auto p = default_shallow_profile();
  p.params.cross_sections = {};
  io::save_profile(p, dir / "dark.json");
  const auto r = run("--profile " + (dir / "dark.json").string() + " steady-state --green-uw 100", dir);
  CHECK(r.code == 3);
  CHECK(json::parse(r.err)["error"]["kind"] == "numerical");
}

TEST_CASE("steady-state report") {
  const auto dir = scratch("steady");
  REQUIRE(run("steady-state --green-uw 100 --ir-mw 10", dir).code == 0);
  const auto j = json::parse(io::read_text(dir / "steady_state.json"));
  CHECK(j["green_power_w"].get<double>() == doctest::Approx(100e-6));
  CHECK(j["ir_power_w"].get<double>() == doctest::Approx(10e-3));
  CHECK(j["populations"].size() == 7);
}

TEST_CASE("bulk map has no enhancement") {
  const auto dir = scratch("map");
  REQUIRE(run(profile("bulk") + "map", dir).code == 0);
  std::ifstream csv(dir / "map.csv");
  const auto m = io::read_map(csv, json::parse(io::read_text(dir / "map.json")));
  CHECK(m.grid.green_powers.size() == 25);
  CHECK(m.max_ratio() <= 1.0);
}

TEST_CASE("IR raises the shallow population curve") {
  const auto off_dir = scratch("curve_off");
  const auto on_dir = scratch("curve_on");
  REQUIRE(run(profile("shallow") + "curve --ir-mw 0", off_dir).code == 0);
  REQUIRE(run(profile("shallow") + "curve --ir-mw 25", on_dir).code == 0);
  const auto off = read_file(off_dir / "curve.csv", io::read_curve_csv);
  const auto on = read_file(on_dir / "curve.csv", io::read_curve_csv);
  double saturation = 0.0, peak = 0.0;
  for (const auto& c : off) saturation = std::max(saturation, c.nvm_fraction);
  for (const auto& c : on) peak = std::max(peak, c.nvm_fraction);
  CHECK(peak - saturation >= 0.10);
}

TEST_CASE("fit on the shipped dataset recovers the embedded cross-sections") {
  const auto dir = scratch("fit");
  REQUIRE(run(profile("shallow") + "fit --init-scale 2 --data " + kData + "/quench_synthetic.csv", dir).code == 0);
  const auto fit = io::fit_report_from_json(json::parse(io::read_text(dir / "fit_report.json")));
  CHECK(fit.converged());
  const auto truth = table_cross_sections();
  CHECK(std::abs(fit.estimate.sigma_ionize_green - truth.sigma_ionize_green) <= 2 * fit.standard_error.sigma_ionize_green);
  CHECK(std::abs(fit.estimate.sigma_ionize_ir - truth.sigma_ionize_ir) <= 2 * fit.standard_error.sigma_ionize_ir);
  CHECK(std::abs(fit.estimate.sigma_recombine_green - truth.sigma_recombine_green) <=
        2 * fit.standard_error.sigma_recombine_green);
  CHECK(std::abs(fit.estimate.sigma_recombine_ir - truth.sigma_recombine_ir) <=
        2 * fit.standard_error.sigma_recombine_ir);
}

TEST_CASE("seeded synthesis is byte-identical across runs") {
  const auto a = scratch("synth_a");
  const auto b = scratch("synth_b");
  const auto c = scratch("synth_c");
  const std::string args = "synth --kind trace --green-uw 159 --ir-mw 38 --ir-window 1:3us --duration 5us --dt-ns 10";
  REQUIRE(run("--seed 5 " + args, a).code == 0);
  REQUIRE(run("--seed 5 " + args, b).code == 0);
  REQUIRE(run("--seed 6 " + args, c).code == 0);
  CHECK(io::read_text(a / "synth_trace.csv") == io::read_text(b / "synth_trace.csv"));
  CHECK(io::read_text(a / "synth_trace.csv") != io::read_text(c / "synth_trace.csv"));

  const auto q = scratch("synth_q");
  REQUIRE(run(profile("shallow") + "--seed 20180101 synth --kind quench --noise 0.02 --green-uw-range 10:300 "
              "--points 20 --ir-mw 38", q).code == 0);
  CHECK(io::read_text(q / "quench.csv") == io::read_text(kData + "/quench_synthetic.csv"));
}

TEST_CASE("JSON output format") {
  const auto dir = scratch("json");
  REQUIRE(run("--format json simulate --green-uw 100 --ir-mw 10 --duration 1us --dt-ns 10", dir).code == 0);
  const auto tr = io::trace_from_json(json::parse(io::read_text(dir / "trace.json")));
  CHECK(tr.size() == 101);
  CHECK(run("--format xml simulate --green-uw 100", dir).code == 2);
}

TEST_CASE("refine and optimize") {
  const auto dir = scratch("refine");
  REQUIRE(run("--seed 3 synth --kind trace --noise 0.0 --green-uw 159 --ir-mw 38 --ir-window 5:25us "
              "--duration 40us --dt-ns 50", dir).code == 0);
  REQUIRE(run("refine --init-scale 1.5 --trace " + (dir / "synth_trace.csv").string() +
              " --green-uw 159 --ir-mw 38 --ir-window 5:25us", dir).code == 0);
  const auto fit = io::fit_report_from_json(json::parse(io::read_text(dir / "refine_report.json")));
  CHECK(fit.estimate.sigma_ionize_ir == doctest::Approx(table_cross_sections().sigma_ionize_ir).epsilon(0.05));

  CHECK(run("refine --trace " + (dir / "synth_trace.csv").string() + " --green-uw 159 --ir-mw 38 38 --ir-window 5:25us",
            dir).code == 2);

  REQUIRE(run("optimize --green-uw 100", dir).code == 0);
  const auto o = json::parse(io::read_text(dir / "optimum.json"));
  CHECK(o["nvm_fraction"].get<double>() >= o["ir_off_nvm_fraction"].get<double>());
  REQUIRE(run("optimize --points 9", dir).code == 0);
  CHECK(json::parse(io::read_text(dir / "optimum.json")).contains("peak_nvm_fraction"));
}

TEST_CASE("missing subcommand is a config error") {
  const auto dir = scratch("none");
  CHECK(run("", dir).code == 2);
  CHECK(run("simulate --ir-mw 3", dir).code == 2);
}

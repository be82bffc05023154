#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nvcharge/analysis.hpp"
#include "nvcharge/error.hpp"
#include "nvcharge/experiments.hpp"

using namespace nvcharge;
using L = Level;

namespace {

Profile reference() { return default_shallow_profile(); }

double sigma_at(const CrossSectionSet& cs, int k) {
  const double v[] = {cs.sigma_ionize_green, cs.sigma_ionize_ir, cs.sigma_recombine_green, cs.sigma_recombine_ir};
  return v[k];
}

CrossSectionSet scaled(const CrossSectionSet& cs, double f) {
  return {cs.sigma_ionize_green * f, cs.sigma_ionize_ir * f, cs.sigma_recombine_green * f, cs.sigma_recombine_ir * f};
}

double photon(double sigma, double lambda, double power, double area) {
  return sigma * lambda * power / (area * 6.62607015e-34 * 299792458.0);
}

double max_rel_error(const CrossSectionSet& a, const CrossSectionSet& b, const std::array<bool, 4>& which) {
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (which[static_cast<std::size_t>(k)]) worst = std::max(worst, std::abs(sigma_at(a, k) / sigma_at(b, k) - 1.0));
  }
  return worst;
}

const std::vector<Channel> kBoth{Channel::NVminus, Channel::NVzero};

}  // namespace

TEST_CASE("quench ratio edge cases") {
  CHECK(quench_ratio(60e6, 10e6, 0.0) == 1.0);
  CHECK(quench_ratio(60e6, 10e6, 70e6) == doctest::Approx(0.5));
  CHECK(quench_ratio(60e6, 0.0, 60e6) == doctest::Approx(0.5));
  CHECK(quench_ratio(60e6, 10e6, 1e15) < 1e-6);
  CHECK_THROWS_AS(quench_ratio(-1.0, 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(quench_ratio(0.0, 0.0, 1.0), ConfigError);
}

TEST_CASE("quench ratio is monotone in IR and green ionization") {
  double prev = 1.0;
  for (double ir = 1e5; ir < 1e9; ir *= 2) {
    const double r = quench_ratio(60e6, 20e6, ir);
    CHECK(r < prev);
    prev = r;
  }
  CHECK(quench_ratio(60e6, 40e6, 10e6) > quench_ratio(60e6, 20e6, 10e6));
}

TEST_CASE("effective ISC rate lies between the spin-resolved rates") {
  const auto p = reference();
  for (double g : {10e-6, 100e-6, 1e-3}) {
    const double k = effective_isc_rate(p, g);
    CHECK(k > p.params.k_isc_ms0);
    CHECK(k < p.params.k_isc_ms1);
  }
  CHECK_THROWS_AS(effective_isc_rate(p, 0.0), ConfigError);
}

TEST_CASE("closed-form ratios against an independent rate oracle") {
  const auto p = reference();
  const auto& k = p.params;
  const double g = 120e-6, ir = 25e-3;
  const auto ss = steady_state(build_rate_matrix(k, p.beams.green(g), p.beams.ir(0.0)));
  const double e0 = ss[L::NVm_Excited_ms0], e1 = ss[L::NVm_Excited_ms1];
  const double ks = (e0 * k.k_isc_ms0 + e1 * k.k_isc_ms1) / (e0 + e1);
  const double kig = photon(k.cross_sections.sigma_ionize_green, 532e-9, g, p.beams.green_spot_area);
  const double kiir = photon(k.cross_sections.sigma_ionize_ir, 1064e-9, ir, p.beams.ir_spot_area);
  const double krg = photon(k.cross_sections.sigma_recombine_green, 532e-9, g, p.beams.green_spot_area);
  const double krir = photon(k.cross_sections.sigma_recombine_ir, 1064e-9, ir, p.beams.ir_spot_area);
  CHECK(qss_quench_ratio_nvm(p, g, ir) ==
        doctest::Approx((k.k_fluor_minus + ks + kig) / (k.k_fluor_minus + ks + kig + kiir)).epsilon(1e-12));
  CHECK(qss_quench_ratio_nv0(p, g, ir) ==
        doctest::Approx((k.k_fluor_zero + krg) / (k.k_fluor_zero + krg + krir)).epsilon(1e-12));
  CHECK(qss_quench_ratio(p, Channel::NVzero, g, ir) == qss_quench_ratio_nv0(p, g, ir));
  CHECK(qss_quench_ratio_nvm(p, g, 0.0) == 1.0);
}

TEST_CASE("closed form agrees with the ratio measured on a simulated trace") {
  const auto p = reference();
  const double on = 1e-6;
  for (auto [g, ir] : {std::pair{30e-6, 3e-3}, {100e-6, 10e-3}, {200e-6, 5e-3}}) {
    const auto seq = PulseSequence::ir_window(g, ir, on, on + 200e-9, on + 200e-9);
    std::vector<double> times;
    for (int k = 0; k < 10; ++k) times.push_back(on - 10e-9 + k * 1e-9);
    for (int k = 0; k <= 10; ++k) times.push_back(on + 40e-9 + k * 1e-9);
    for (int k = 0; k <= 10; ++k) times.push_back(on + 150e-9 + k * 1e-9);
    const auto tr = simulate_at(p, seq, GreenSteadyState{}, times);
    CHECK(measure_quench_from_trace(tr, on, {on + 40e-9, on + 50e-9}) ==
          doctest::Approx(qss_quench_ratio_nvm(p, g, ir)).epsilon(0.01));
    CHECK(measure_quench_from_trace(tr, on, {on + 150e-9, on + 160e-9}, Channel::NVzero) ==
          doctest::Approx(qss_quench_ratio_nv0(p, g, ir)).epsilon(0.01));
  }
}

TEST_CASE("trace measurement validates its windows") {
  const auto p = reference();
  const auto tr = simulate_sequence(p, PulseSequence::ir_window(1e-4, 1e-2, 1e-7, 2e-7, 2e-7), GreenSteadyState{}, 1e-9);
  CHECK_THROWS_AS(measure_quench_from_trace(tr, 1e-7, {1.5e-7, 1.4e-7}), ConfigError);
  CHECK_THROWS_AS(measure_quench_from_trace(tr, 1e-7, {0.5e-7, 1.4e-7}), ConfigError);
  CHECK_THROWS_AS(measure_quench_from_trace(tr, 1e-7, {3e-7, 4e-7}), ConfigError);
}

TEST_CASE("noiseless quench fit recovers the generating cross-sections") {
  const auto p = reference();
  const auto truth = p.params.cross_sections;
  const auto pts = synthesize_quench_points(p, log_space(10e-6, 300e-6, 20), 38e-3, kBoth, {0.0, 1});
  const auto fit = fit_quench_curves(pts, p, scaled(truth, 2.0), CrossSectionBounds::around(truth));
  CHECK(fit.converged());
  CHECK(max_rel_error(fit.estimate, truth, {true, true, true, true}) <= 1e-6);
  CHECK(fit.num_residuals == 40);
}

TEST_CASE("single-channel fit frees only the informed cross-sections") {
  const auto p = reference();
  const auto truth = p.params.cross_sections;
  const auto pts = synthesize_quench_points(p, log_space(10e-6, 300e-6, 12), 38e-3, {Channel::NVminus}, {0.0, 1});
  auto init = truth;
  init.sigma_ionize_green *= 1.5;
  init.sigma_ionize_ir *= 0.7;
  const auto fit = fit_quench_curves(pts, p, init, CrossSectionBounds::around(truth));
  CHECK(fit.fitted == std::array<bool, 4>{true, true, false, false});
  CHECK(max_rel_error(fit.estimate, truth, fit.fitted) <= 1e-6);
  CHECK(fit.estimate.sigma_recombine_green == truth.sigma_recombine_green);
  CHECK(fit.standard_error.sigma_recombine_ir == 0.0);
}

TEST_CASE("a single green power cannot separate green from IR ionization") {
  const auto p = reference();
  const auto truth = p.params.cross_sections;
  const auto pts = synthesize_quench_points(p, {100e-6}, 38e-3, kBoth, {0.0, 1});
  const auto fit = fit_quench_curves(pts, p, truth, CrossSectionBounds::around(truth));
  CHECK(fit.status == FitStatus::RankDeficient);
  CHECK(std::isnan(fit.standard_error.sigma_ionize_green));
}

TEST_CASE("fit input validation") {
  const auto p = reference();
  const auto truth = p.params.cross_sections;
  std::vector<QuenchPoint> pts{{100e-6, 38e-3, -0.5, 0.0, Channel::NVminus}};
  CHECK_THROWS_AS(fit_quench_curves(pts, p, truth, CrossSectionBounds::around(truth)), ConfigError);
  CHECK_THROWS_AS(fit_quench_curves({}, p, truth, CrossSectionBounds::around(truth)), ConfigError);
  pts = synthesize_quench_points(p, {50e-6, 100e-6}, 38e-3, kBoth, {0.0, 1});
  CHECK_THROWS_AS(fit_quench_curves(pts, p, scaled(truth, 1e4), CrossSectionBounds::around(truth)), ConfigError);
}

TEST_CASE("noisy fits: coverage and 1/sqrt(N) error scaling") {
  const auto p = reference();
  const auto truth = p.params.cross_sections;
  const auto bounds = CrossSectionBounds::around(truth);
  int covered = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto pts = synthesize_quench_points(p, log_space(10e-6, 300e-6, 20), 38e-3, kBoth, {0.02, seed});
    const auto fit = fit_quench_curves(pts, p, truth, bounds);
    for (int k = 0; k < 4; ++k, ++total) {
      if (std::abs(sigma_at(fit.estimate, k) - sigma_at(truth, k)) <= 2.0 * sigma_at(fit.standard_error, k)) ++covered;
    }
  }
  CHECK(covered >= 0.85 * total);

  std::vector<double> se;
  for (std::size_t n : {10u, 40u, 160u}) {
    const auto pts = synthesize_quench_points(p, log_space(10e-6, 300e-6, n), 38e-3, kBoth, {0.02, 99});
    se.push_back(fit_quench_curves(pts, p, truth, bounds).standard_error.sigma_ionize_ir);
  }
  CHECK(se[0] / se[1] == doctest::Approx(2.0).epsilon(0.2));
  CHECK(se[1] / se[2] == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("trace refinement") {
  const auto p = reference();
  const auto truth = p.params.cross_sections;
  std::vector<TraceObservation> obs;
  for (double g : {60e-6, 240e-6}) {
    const auto seq = PulseSequence::ir_window(g, 38e-3, 5e-6, 30e-6, 50e-6);
    obs.push_back({seq, simulate_sequence(p, seq, GreenSteadyState{}, 50e-9), GreenSteadyState{}});
  }
  const auto bounds = CrossSectionBounds::around(truth);
  const auto at_truth = refine_by_trace_fit(obs, truth, p, bounds);
  CHECK(max_rel_error(at_truth.estimate, truth, {true, true, true, true}) <= 1e-6);
  const auto from_double = refine_by_trace_fit(obs, scaled(truth, 2.0), p, bounds);
  CHECK(max_rel_error(from_double.estimate, truth, {true, true, true, true}) <= 0.05);
  CHECK_THROWS_AS(refine_by_trace_fit({}, truth, p, bounds), ConfigError);
}

TEST_CASE("synthesis without noise is the clean simulation") {
  const auto p = reference();
  const auto seq = PulseSequence::ir_window(159e-6, 38e-3, 1e-6, 2e-6, 3e-6);
  const auto clean = simulate_sequence(p, seq, GreenSteadyState{}, 10e-9);
  const auto syn = synthesize(p, seq, {0.0, 5}, 10e-9);
  CHECK(syn.pl_nvm == clean.pl_nvm);
  CHECK(syn.pl_nv0 == clean.pl_nv0);
}

TEST_CASE("seeded synthesis is deterministic and has the requested spread") {
  const auto p = reference();
  PulseSequence flat{{{200e-6, 100e-6, 0.0}}};
  const auto a = synthesize(p, flat, {0.02, 42}, 10e-9);
  const auto b = synthesize(p, flat, {0.02, 42}, 10e-9);
  const auto c = synthesize(p, flat, {0.02, 43}, 10e-9);
  CHECK(a.pl_nvm == b.pl_nvm);
  CHECK(a.pl_nvm != c.pl_nvm);
  const auto clean = simulate_sequence(p, flat, GreenSteadyState{}, 10e-9);
  double s2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s2 += std::pow(a.pl_nvm[k] / clean.pl_nvm[k] - 1.0, 2);
  const double sd = std::sqrt(s2 / static_cast<double>(a.size()));
  CHECK(sd >= 0.018);
  CHECK(sd <= 0.022);
  CHECK_THROWS_AS(synthesize(p, flat, {-0.1, 1}, 10e-9), ConfigError);
}

TEST_CASE("synthetic quench points") {
  const auto p = reference();
  const auto greens = log_space(10e-6, 300e-6, 5);
  const auto a = synthesize_quench_points(p, greens, 38e-3, kBoth, {0.02, 7});
  CHECK(a == synthesize_quench_points(p, greens, 38e-3, kBoth, {0.02, 7}));
  CHECK(a.size() == 10);
  CHECK(a[0].ratio_sigma == doctest::Approx(0.02 * a[0].ratio));
  const auto clean = synthesize_quench_points(p, greens, 38e-3, kBoth, {0.0, 7});
  CHECK(clean[6].ratio == qss_quench_ratio(p, Channel::NVzero, greens[1], 38e-3));
  CHECK(clean[6].ratio_sigma == 0.0);
}

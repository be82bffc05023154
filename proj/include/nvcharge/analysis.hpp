#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nvcharge/dynamics.hpp"
#include "nvcharge/least_squares.hpp"

namespace nvcharge {

// ---------------------------------------------------------------------------
// Closed-form quasi-steady-state quench ratios

/// (k_f + k_s + k_ion_green) / (k_f + k_s + k_ion_green + k_ion_ir)
double quench_ratio(double k_decay, double k_ion_green, double k_ion_ir);

/// ISC rate weighted by the excited-state spin populations of the green-only
/// steady state at `green` power.
double effective_isc_rate(const Profile& profile, double green_power);

/// NV- PL just after the IR is switched on, relative to the green-only value.
double qss_quench_ratio_nvm(const Profile& profile, double green_power, double ir_power);

/// NV0 counterpart: (K_f0 + K_rG) / (K_f0 + K_rG + K_rIR).
double qss_quench_ratio_nv0(const Profile& profile, double green_power, double ir_power);

double qss_quench_ratio(const Profile& profile, Channel channel, double green_power,
                        double ir_power);

/// Mean PL inside `qss_window` divided by the mean PL over an equally long
/// window ending at `ir_on_time`.
double measure_quench_from_trace(const Trace& trace, double ir_on_time,
                                 std::pair<double, double> qss_window,
                                 Channel channel = Channel::NVminus);

// ---------------------------------------------------------------------------
// Fitting

struct QuenchPoint {
  double green_power = 0.0;  // W
  double ir_power = 0.0;     // W
  double ratio = 1.0;
  double ratio_sigma = 0.0;
  Channel channel = Channel::NVminus;

  friend bool operator==(const QuenchPoint&, const QuenchPoint&) = default;
};

struct CrossSectionBounds {
  CrossSectionSet lower;
  CrossSectionSet upper;

  /// [init / span, init * span] for every cross-section.
  static CrossSectionBounds around(const CrossSectionSet& init, double span = 1e3);
};

struct FitResult {
  CrossSectionSet estimate;
  CrossSectionSet standard_error;   // 0 for parameters that were held fixed
  std::array<bool, 4> fitted{};     // ionize_green, ionize_ir, recombine_green, recombine_ir
  double residual_norm = 0.0;       // |r| of the (weighted) residual vector
  int iterations = 0;
  FitStatus status = FitStatus::MaxIterations;
  std::vector<double> cost_history;
  std::size_t num_residuals = 0;

  bool converged() const noexcept { return status == FitStatus::Converged; }
};

/// Weighted least squares of the closed-form quench ratios over the four
/// cross-sections (only those informed by the channels present are free).
/// `fixed` provides everything except the cross-sections.
FitResult fit_quench_curves(const std::vector<QuenchPoint>& points, const Profile& fixed,
                            const CrossSectionSet& init, const CrossSectionBounds& bounds,
                            const LeastSquaresOptions& options = {});

/// A measured trace together with the laser program that produced it.
struct TraceObservation {
  PulseSequence sequence;
  Trace trace;
  InitialState initial = GreenSteadyState{};
};

/// Fine-tunes all four cross-sections by matching simulated traces (both
/// channels, each normalized by its observed mean) to observed ones.
FitResult refine_by_trace_fit(const std::vector<TraceObservation>& observations,
                              const CrossSectionSet& init, const Profile& fixed,
                              const CrossSectionBounds& bounds,
                              const LeastSquaresOptions& options = {});

// ---------------------------------------------------------------------------
// Synthetic data

struct NoiseSpec {
  double relative_sigma = 0.0;
  std::uint64_t seed = 20180101;
};

/// simulate_sequence with i.i.d. multiplicative Gaussian noise on both PL channels.
Trace synthesize(const Profile& profile, const PulseSequence& seq, const NoiseSpec& noise,
                 double dt_sample, const InitialState& init = GreenSteadyState{});

/// Closed-form quench ratios with multiplicative noise; ratio_sigma is
/// relative_sigma times the noisy ratio (0 when noiseless).
std::vector<QuenchPoint> synthesize_quench_points(const Profile& profile,
                                                  const std::vector<double>& green_powers,
                                                  double ir_power,
                                                  const std::vector<Channel>& channels,
                                                  const NoiseSpec& noise);

}  // namespace nvcharge

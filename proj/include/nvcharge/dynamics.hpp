#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nvcharge/population.hpp"

namespace nvcharge {

/// exp(M t) p0. Throws NumericalError if the propagated state is not a valid
/// probability vector.
PopulationState evolve(const RateMatrix& m, const PopulationState& p0, double t);

/// Stationary distribution of `m`. Throws NumericalError when the generator
/// has more than one closed class; the message names the disconnected blocks.
PopulationState steady_state(const RateMatrix& m);

/// Detected emission rate (Hz) through one band-pass channel.
double pl_signal(const PopulationState& p, const PhotophysicsParams& params, Channel channel);

struct PulseSegment {
  double duration = 0.0;     // s
  double green_power = 0.0;  // W
  double ir_power = 0.0;     // W
};

struct PulseSequence {
  std::vector<PulseSegment> segments;

  double total_duration() const noexcept;
  void validate() const;

  /// Green-only, then green+IR during [ir_on, ir_off), then green-only until `total`.
  static PulseSequence ir_window(double green_power, double ir_power, double ir_on, double ir_off,
                                 double total);
};

/// Start the sequence from the green-only steady state of its first segment.
struct GreenSteadyState {};
using InitialState = std::variant<PopulationState, GreenSteadyState>;

struct Trace {
  std::vector<double> times;        // s
  std::vector<double> pl_nvm;       // Hz
  std::vector<double> pl_nv0;       // Hz
  std::vector<double> pl_nvm_norm;  // pl_nvm over green-only steady-state pl_nvm
  std::vector<Vector7> populations; // may be empty
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return times.size(); }
  const std::vector<double>& channel(Channel c) const { return c == Channel::NVminus ? pl_nvm : pl_nv0; }
  void validate() const;
};

/// Samples the sequence at the given strictly increasing times (all within
/// [0, total duration]).
Trace simulate_at(const Profile& profile, const PulseSequence& seq, const InitialState& init,
                  const std::vector<double>& times);

/// Samples at t = k dt_sample, k = 0 .. floor(T / dt_sample).
Trace simulate_sequence(const Profile& profile, const PulseSequence& seq, const InitialState& init,
                        double dt_sample);

/// Green-only steady-state NV- PL at the reference green power of `seq`
/// (first segment with green light), or 0 when the sequence has no green.
double reference_pl(const Profile& profile, const PulseSequence& seq);

}  // namespace nvcharge

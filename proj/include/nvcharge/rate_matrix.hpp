#pragma once

#include <Eigen/Core>

#include "nvcharge/levels.hpp"
#include "nvcharge/params.hpp"

namespace nvcharge {

using Matrix7 = Eigen::Matrix<double, kNumLevels, kNumLevels>;
using Vector7 = Eigen::Matrix<double, kNumLevels, 1>;

/// Single-photon transition rate K = sigma * lambda * I / (h c), in Hz.
double photon_rate(double sigma, const LaserField& laser);

/// All power-dependent rates for one pair of laser settings.
struct OpticalRates {
  double excite_minus = 0.0;   // K_e^-
  double excite_zero = 0.0;    // K_e^0
  double ionize_green = 0.0;   // K_iG
  double ionize_ir = 0.0;      // K_iIR
  double recombine_green = 0.0;
  double recombine_ir = 0.0;

  double ionize() const noexcept { return ionize_green + ionize_ir; }
  double recombine() const noexcept { return recombine_green + recombine_ir; }
};

OpticalRates optical_rates(const PhotophysicsParams& params, const LaserField& green,
                           const LaserField& ir);

/// Generator of the linear population dynamics dp/dt = M p.
/// Entry (i, j), i != j, is the rate from level j into level i; the diagonal
/// holds minus the total outflow, so every column sums to zero.
class RateMatrix {
 public:
  RateMatrix() : m_(Matrix7::Zero()) {}

  /// Wraps an arbitrary generator; throws ConfigError unless off-diagonals
  /// are non-negative and columns sum to zero.
  explicit RateMatrix(const Matrix7& m);

  const Matrix7& matrix() const noexcept { return m_; }
  double operator()(Level to, Level from) const { return m_(idx(to), idx(from)); }
  double operator()(std::size_t to, std::size_t from) const { return m_(to, from); }

  /// Largest total outflow rate of any level.
  double max_rate() const noexcept;

  /// Adds a transition `from -> to` with the given rate.
  void add(Level from, Level to, double rate);

 private:
  Matrix7 m_;
};

RateMatrix build_rate_matrix(const PhotophysicsParams& params, const LaserField& green,
                             const LaserField& ir);

}  // namespace nvcharge

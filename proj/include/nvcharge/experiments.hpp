#pragma once

#include <vector>

#include "nvcharge/params.hpp"

namespace nvcharge {

enum class GridScale { Linear, Logarithmic };

struct PowerGrid {
  std::vector<double> green_powers;  // W
  std::vector<double> ir_powers;     // W
  GridScale scale = GridScale::Logarithmic;

  void validate() const;

  static PowerGrid logarithmic(double green_lo, double green_hi, std::size_t n_green,
                               double ir_lo, double ir_hi, std::size_t n_ir);

  /// 10 uW - 1 mW green, 1 - 100 mW IR, 25 log-spaced points each.
  static PowerGrid default_map_grid();
};

std::vector<double> log_space(double lo, double hi, std::size_t n);

struct PlMap {
  PowerGrid grid;
  /// ratios[g][i]: NV- steady-state PL with both lasers over green-only PL.
  std::vector<std::vector<double>> ratios;
  /// nvm_fraction[g][i]: steady-state NV- population with both lasers.
  std::vector<std::vector<double>> nvm_fraction;

  double max_ratio() const;
  double min_ratio() const;
};

PlMap steady_state_pl_map(const Profile& profile, const PowerGrid& grid);

struct CurvePoint {
  double green_power = 0.0;
  double nvm_fraction = 0.0;
  double pl_ratio = 1.0;  // NV- PL with IR over green-only NV- PL

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

std::vector<CurvePoint> charge_population_curve(const Profile& profile,
                                                const std::vector<double>& green_powers,
                                                double ir_power);

struct SearchOptions {
  std::size_t grid_points = 41;
  double tolerance = 1e-4;  // relative bracket width in log(power) terms
};

struct IrOptimum {
  double ir_power = 0.0;
  double nvm_fraction = 0.0;
  double ir_off_fraction = 0.0;
  bool flat = false;  // objective constant over the range
};

/// Maximizes the steady-state NV- fraction over IR power in [lo, hi]
/// (IR = 0 is an admissible candidate) by a log-spaced scan followed by
/// golden-section refinement of the best bracket.
IrOptimum optimize_ir_power(const Profile& profile, double green_power, double ir_lo, double ir_hi,
                            const SearchOptions& options = {});

struct CurveOptimum {
  double ir_power = 0.0;
  std::vector<CurvePoint> ir_on;
  std::vector<CurvePoint> ir_off;
  std::size_t peak_index = 0;

  double peak_fraction() const { return ir_on.at(peak_index).nvm_fraction; }
  double enhancement_at_peak() const {
    return ir_on.at(peak_index).nvm_fraction - ir_off.at(peak_index).nvm_fraction;
  }
};

/// Picks the single IR power that maximizes the peak of the IR-on charge
/// population curve over `green_powers`.
CurveOptimum optimize_ir_for_curve(const Profile& profile, const std::vector<double>& green_powers,
                                   double ir_lo, double ir_hi, const SearchOptions& options = {});

}  // namespace nvcharge

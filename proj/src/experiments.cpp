#include "nvcharge/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nvcharge/dynamics.hpp"
#include "nvcharge/error.hpp"

namespace nvcharge {
namespace {

PopulationState steady(const Profile& profile, double green, double ir) {
  return steady_state(build_rate_matrix(profile.params, profile.beams.green(green), profile.beams.ir(ir)));
}

void check_axis(FieldChecker& fc, const std::vector<double>& v, const std::string& name, bool positive) {
  fc.require(!v.empty(), name, "must not be empty");
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(std::isfinite(v[k]) && (positive ? v[k] > 0.0 : v[k] >= 0.0))) {
      fc.require(false, name, positive ? "must be > 0 on a logarithmic grid" : "must be >= 0");
      break;
    }
    if (k > 0 && !(v[k] > v[k - 1])) {
      fc.require(false, name, "must be strictly increasing");
      break;
    }
  }
}

struct ScalarMax {
  double x = 0.0;
  double f = 0.0;
  bool flat = false;
};

// Log-spaced scan over [lo, hi] then golden-section refinement inside the
// bracket around the best scan point.
ScalarMax maximize_log(const std::function<double(double)>& fn, double lo, double hi,
                       const SearchOptions& opt) {
  const std::size_t n = std::max<std::size_t>(opt.grid_points, 3);
  const std::vector<double> xs = log_space(lo, hi, n);
  std::vector<double> fs(n);
  for (std::size_t k = 0; k < n; ++k) fs[k] = fn(xs[k]);
  const auto [mn, mx] = std::minmax_element(fs.begin(), fs.end());
  if (*mx - *mn <= 1e-12 * std::max(1.0, std::abs(*mx))) return {xs.front(), fs.front(), true};

  const auto k = static_cast<std::size_t>(mx - fs.begin());
  double a = std::log(xs[k == 0 ? 0 : k - 1]);
  double b = std::log(xs[k + 1 == n ? n - 1 : k + 1]);
  ScalarMax best{xs[k], fs[k], false};

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(std::exp(c));
  double fd = fn(std::exp(d));
  const double width_tol = opt.tolerance;
  while (b - a > width_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(std::exp(d));
    }
  }
  for (auto [x, f] : {std::pair{std::exp(c), fc}, std::pair{std::exp(d), fd}}) {
    if (f > best.f) best = {x, f, false};
  }
  return best;
}

}  // namespace

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi >= lo) || n == 0) throw ConfigError("log_space: need 0 < lo <= hi, n > 0", {"range"});
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  v.front() = lo;
  v.back() = hi;
  return v;
}

void PowerGrid::validate() const {
  FieldChecker fc("power grid");
  const bool log = scale == GridScale::Logarithmic;
  check_axis(fc, green_powers, "green_powers", log);
  check_axis(fc, ir_powers, "ir_powers", log);
  fc.throw_if_failed();
}

PowerGrid PowerGrid::logarithmic(double green_lo, double green_hi, std::size_t n_green, double ir_lo,
                                 double ir_hi, std::size_t n_ir) {
  return {log_space(green_lo, green_hi, n_green), log_space(ir_lo, ir_hi, n_ir), GridScale::Logarithmic};
}

PowerGrid PowerGrid::default_map_grid() { return logarithmic(10e-6, 1e-3, 25, 1e-3, 100e-3, 25); }

double PlMap::max_ratio() const {
  double m = -HUGE_VAL;
  for (const auto& row : ratios) m = std::max(m, *std::max_element(row.begin(), row.end()));
  return m;
}

double PlMap::min_ratio() const {
  double m = HUGE_VAL;
  for (const auto& row : ratios) m = std::min(m, *std::min_element(row.begin(), row.end()));
  return m;
}

PlMap steady_state_pl_map(const Profile& profile, const PowerGrid& grid) {
  profile.validate();
  grid.validate();
  PlMap map;
  map.grid = grid;
  for (double g : grid.green_powers) {
    const double ref = pl_signal(steady(profile, g, 0.0), profile.params, Channel::NVminus);
    std::vector<double> ratios, fractions;
    for (double i : grid.ir_powers) {
      const PopulationState p = steady(profile, g, i);
      ratios.push_back(pl_signal(p, profile.params, Channel::NVminus) / ref);
      fractions.push_back(p.nv_minus());
    }
    map.ratios.push_back(std::move(ratios));
    map.nvm_fraction.push_back(std::move(fractions));
  }
  return map;
}

std::vector<CurvePoint> charge_population_curve(const Profile& profile,
                                                const std::vector<double>& green_powers,
                                                double ir_power) {
  profile.validate();
  {
    FieldChecker fc("charge_population_curve");
    check_axis(fc, green_powers, "green_powers", true);
    fc.require(std::isfinite(ir_power) && ir_power >= 0.0, "ir_power", "must be >= 0");
    fc.throw_if_failed();
  }
  std::vector<CurvePoint> out;
  out.reserve(green_powers.size());
  for (double g : green_powers) {
    const PopulationState with_ir = steady(profile, g, ir_power);
    const PopulationState green_only = steady(profile, g, 0.0);
    out.push_back({g, with_ir.nv_minus(),
                   pl_signal(with_ir, profile.params, Channel::NVminus) /
                       pl_signal(green_only, profile.params, Channel::NVminus)});
  }
  return out;
}

IrOptimum optimize_ir_power(const Profile& profile, double green_power, double ir_lo, double ir_hi,
                            const SearchOptions& options) {
  {
    FieldChecker fc("optimize_ir_power");
    fc.require(green_power > 0.0, "green_power", "must be > 0");
    fc.require(ir_lo > 0.0 && std::isfinite(ir_lo), "ir_range", "lower end must be > 0");
    fc.require(ir_hi > ir_lo && std::isfinite(ir_hi), "ir_range", "must be ordered and non-empty");
    fc.throw_if_failed();
  }
  profile.validate();
  auto fraction = [&](double ir) { return steady(profile, green_power, ir).nv_minus(); };
  IrOptimum out;
  out.ir_off_fraction = fraction(0.0);
  const ScalarMax best = maximize_log(fraction, ir_lo, ir_hi, options);
  out.flat = best.flat && std::abs(best.f - out.ir_off_fraction) <= 1e-12;
  if (out.ir_off_fraction > best.f) {
    out.ir_power = 0.0;
    out.nvm_fraction = out.ir_off_fraction;
  } else {
    out.ir_power = best.x;
    out.nvm_fraction = best.f;
  }
  return out;
}

CurveOptimum optimize_ir_for_curve(const Profile& profile, const std::vector<double>& green_powers,
                                   double ir_lo, double ir_hi, const SearchOptions& options) {
  {
    FieldChecker fc("optimize_ir_for_curve");
    fc.require(ir_lo > 0.0 && std::isfinite(ir_lo), "ir_range", "lower end must be > 0");
    fc.require(ir_hi > ir_lo && std::isfinite(ir_hi), "ir_range", "must be ordered and non-empty");
    fc.throw_if_failed();
  }
  auto peak = [&](double ir) {
    double m = -HUGE_VAL;
    for (double g : green_powers) m = std::max(m, steady(profile, g, ir).nv_minus());
    return m;
  };
  CurveOptimum out;
  out.ir_off = charge_population_curve(profile, green_powers, 0.0);
  const ScalarMax best = maximize_log(peak, ir_lo, ir_hi, options);
  out.ir_power = best.x;
  out.ir_on = charge_population_curve(profile, green_powers, best.x);
  const auto it = std::max_element(out.ir_on.begin(), out.ir_on.end(),
                                   [](const CurvePoint& a, const CurvePoint& b) {
                                     return a.nvm_fraction < b.nvm_fraction;
                                   });
  out.peak_index = static_cast<std::size_t>(it - out.ir_on.begin());
  return out;
}

}  // namespace nvcharge

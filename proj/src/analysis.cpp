#include "nvcharge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "nvcharge/error.hpp"

namespace nvcharge {
namespace {

RateMatrix green_only_matrix(const Profile& profile, double green_power) {
  return build_rate_matrix(profile.params, profile.beams.green(green_power), profile.beams.ir(0.0));
}

double& sigma_ref(CrossSectionSet& cs, std::size_t k) {
  switch (k) {
    case 0: return cs.sigma_ionize_green;
    case 1: return cs.sigma_ionize_ir;
    case 2: return cs.sigma_recombine_green;
    default: return cs.sigma_recombine_ir;
  }
}

double sigma_of(const CrossSectionSet& cs, std::size_t k) {
  CrossSectionSet copy = cs;
  return sigma_ref(copy, k);
}

// Maps the free log-parameters onto a full cross-section set.
struct LogParameterMap {
  std::vector<std::size_t> free;
  CrossSectionSet base;

  CrossSectionSet apply(const Eigen::VectorXd& theta) const {
    CrossSectionSet cs = base;
    for (std::size_t j = 0; j < free.size(); ++j)
      sigma_ref(cs, free[j]) = std::exp(theta(static_cast<Eigen::Index>(j)));
    return cs;
  }

  Eigen::VectorXd log_of(const CrossSectionSet& cs) const {
    Eigen::VectorXd t(static_cast<Eigen::Index>(free.size()));
    for (std::size_t j = 0; j < free.size(); ++j) {
      t(static_cast<Eigen::Index>(j)) = std::log(sigma_of(cs, free[j]));
    }
    return t;
  }
};

void check_bounds(const CrossSectionSet& init, const CrossSectionBounds& bounds,
                  const std::vector<std::size_t>& free) {
  FieldChecker fc("fit bounds");
  static constexpr const char* names[] = {"sigma_ionize_green", "sigma_ionize_ir",
                                          "sigma_recombine_green", "sigma_recombine_ir"};
  for (std::size_t k : free) {
    const double lo = sigma_of(bounds.lower, k);
    const double hi = sigma_of(bounds.upper, k);
    const double x = sigma_of(init, k);
    fc.require(lo > 0.0 && hi >= lo, names[k], "bounds must satisfy 0 < lower <= upper");
    fc.require(x >= lo && x <= hi, names[k], "initial value outside bounds");
  }
  fc.throw_if_failed();
}

FitResult to_fit_result(const LeastSquaresResult& ls, const LogParameterMap& map, bool scale_by_residual) {
  FitResult fit;
  fit.estimate = map.apply(ls.x);
  fit.status = ls.status;
  fit.iterations = ls.iterations;
  fit.cost_history = ls.cost_history;
  fit.residual_norm = ls.residuals.norm();
  fit.num_residuals = static_cast<std::size_t>(ls.residuals.size());
  for (std::size_t k : map.free) fit.fitted[k] = true;

  const auto n = static_cast<double>(ls.residuals.size());
  const auto p = static_cast<double>(map.free.size());
  double s2 = 1.0;
  if (scale_by_residual) s2 = n > p ? ls.residuals.squaredNorm() / (n - p) : std::nan("");
  for (std::size_t j = 0; j < map.free.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double var = ls.covariance.size() ? ls.covariance(jj, jj) * s2 : std::nan("");
    sigma_ref(fit.standard_error, map.free[j]) = sigma_of(fit.estimate, map.free[j]) * std::sqrt(var);
  }
  return fit;
}

}  // namespace

double quench_ratio(double k_decay, double k_ion_green, double k_ion_ir) {
  FieldChecker fc("quench_ratio");
  fc.require(k_decay >= 0.0 && k_ion_green >= 0.0 && k_ion_ir >= 0.0, "rates", "must be >= 0");
  fc.require(k_decay + k_ion_green > 0.0, "k_decay + k_ion_green", "must be > 0");
  fc.throw_if_failed();
  const double base = k_decay + k_ion_green;
  return base / (base + k_ion_ir);
}

double effective_isc_rate(const Profile& profile, double green_power) {
  if (!(green_power > 0.0)) {
    throw ConfigError("effective_isc_rate: green power must be > 0", {"green_power"});
  }
  const PopulationState p = steady_state(green_only_matrix(profile, green_power));
  const double e0 = p[Level::NVm_Excited_ms0];
  const double e1 = p[Level::NVm_Excited_ms1];
  if (!(e0 + e1 > 0.0)) throw NumericalError("effective_isc_rate: no excited NV- population");
  return (e0 * profile.params.k_isc_ms0 + e1 * profile.params.k_isc_ms1) / (e0 + e1);
}

double qss_quench_ratio_nvm(const Profile& profile, double green_power, double ir_power) {
  const OpticalRates k =
      optical_rates(profile.params, profile.beams.green(green_power), profile.beams.ir(ir_power));
  const double k_decay = profile.params.k_fluor_minus + effective_isc_rate(profile, green_power);
  return quench_ratio(k_decay, k.ionize_green, k.ionize_ir);
}

double qss_quench_ratio_nv0(const Profile& profile, double green_power, double ir_power) {
  const OpticalRates k =
      optical_rates(profile.params, profile.beams.green(green_power), profile.beams.ir(ir_power));
  return quench_ratio(profile.params.k_fluor_zero, k.recombine_green, k.recombine_ir);
}

double qss_quench_ratio(const Profile& profile, Channel channel, double green_power,
                        double ir_power) {
  return channel == Channel::NVminus ? qss_quench_ratio_nvm(profile, green_power, ir_power)
                                     : qss_quench_ratio_nv0(profile, green_power, ir_power);
}

double measure_quench_from_trace(const Trace& trace, double ir_on_time,
                                 std::pair<double, double> qss_window, Channel channel) {
  const auto [w0, w1] = qss_window;
  FieldChecker fc("measure_quench_from_trace");
  fc.require(w1 > w0, "qss_window", "end must be after start");
  fc.require(w0 >= ir_on_time, "qss_window", "must start at or after IR-on");
  fc.throw_if_failed();
  const double pre0 = ir_on_time - (w1 - w0);
  const auto& pl = trace.channel(channel);
  double pre_sum = 0.0, qss_sum = 0.0;
  std::size_t pre_n = 0, qss_n = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double t = trace.times[k];
    if (t >= pre0 && t < ir_on_time) {
      pre_sum += pl[k];
      ++pre_n;
    }
    if (t >= w0 && t <= w1) {
      qss_sum += pl[k];
      ++qss_n;
    }
  }
  fc.require(pre_n > 0, "pre-IR window", "contains no samples");
  fc.require(qss_n > 0, "qss_window", "contains no samples");
  fc.require(pre_sum > 0.0, "pre-IR window", "PL must be positive");
  fc.throw_if_failed();
  return (qss_sum / static_cast<double>(qss_n)) / (pre_sum / static_cast<double>(pre_n));
}

CrossSectionBounds CrossSectionBounds::around(const CrossSectionSet& init, double span) {
  CrossSectionBounds b{init, init};
  for (std::size_t k = 0; k < 4; ++k) {
    sigma_ref(b.lower, k) /= span;
    sigma_ref(b.upper, k) *= span;
  }
  return b;
}

FitResult fit_quench_curves(const std::vector<QuenchPoint>& points, const Profile& fixed,
                            const CrossSectionSet& init, const CrossSectionBounds& bounds,
                            const LeastSquaresOptions& options) {
  fixed.beams.validate();
  {
    FieldChecker fc("quench points");
    fc.require(!points.empty(), "points", "at least one point is required");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& q = points[i];
      const std::string tag = "points[" + std::to_string(i) + "]";
      fc.require(q.ratio > 0.0 && std::isfinite(q.ratio), tag + ".ratio", "must be > 0");
      fc.require(q.ratio_sigma >= 0.0, tag + ".ratio_sigma", "must be >= 0");
      fc.require(q.green_power > 0.0, tag + ".green_power", "must be > 0");
      fc.require(q.ir_power >= 0.0, tag + ".ir_power", "must be >= 0");
    }
    fc.throw_if_failed();
  }

  std::set<double> greens_nvm, greens_nv0;
  for (const auto& q : points) {
    (q.channel == Channel::NVminus ? greens_nvm : greens_nv0).insert(q.green_power);
  }
  LogParameterMap map;
  map.base = init;
  if (!greens_nvm.empty()) map.free.insert(map.free.end(), {0, 1});
  if (!greens_nv0.empty()) map.free.insert(map.free.end(), {2, 3});
  check_bounds(init, bounds, map.free);

  const bool identifiable = (greens_nvm.empty() || greens_nvm.size() >= 2) &&
                            (greens_nv0.empty() || greens_nv0.size() >= 2);
  if (!identifiable) {
    FitResult fit;
    fit.estimate = init;
    fit.status = FitStatus::RankDeficient;
    for (std::size_t k : map.free) {
      fit.fitted[k] = true;
      sigma_ref(fit.standard_error, k) = std::nan("");
    }
    return fit;
  }

  const bool all_weighted = std::all_of(points.begin(), points.end(),
                                        [](const QuenchPoint& q) { return q.ratio_sigma > 0.0; });

  Profile model = fixed;
  const ResidualFn residuals = [&](const Eigen::VectorXd& theta) {
    model.params.cross_sections = map.apply(theta);
    Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& q = points[i];
      const double w = q.ratio_sigma > 0.0 ? 1.0 / q.ratio_sigma : 1.0;
      r(static_cast<Eigen::Index>(i)) =
          w * (qss_quench_ratio(model, q.channel, q.green_power, q.ir_power) - q.ratio);
    }
    return r;
  };

  const LeastSquaresResult ls = levenberg_marquardt(residuals, map.log_of(init), map.log_of(bounds.lower),
                                                    map.log_of(bounds.upper), options);
  return to_fit_result(ls, map, !all_weighted);
}

FitResult refine_by_trace_fit(const std::vector<TraceObservation>& observations,
                              const CrossSectionSet& init, const Profile& fixed,
                              const CrossSectionBounds& bounds, const LeastSquaresOptions& options) {
  if (observations.empty()) throw ConfigError("refine_by_trace_fit: no traces", {"traces"});
  LogParameterMap map;
  map.base = init;
  map.free = {0, 1, 2, 3};
  check_bounds(init, bounds, map.free);

  struct Scales {
    double nvm = 0.0;
    double nv0 = 0.0;
  };
  std::vector<Scales> scales;
  Eigen::Index n = 0;
  for (const auto& obs : observations) {
    obs.sequence.validate();
    obs.trace.validate();
    Scales s;
    for (double v : obs.trace.pl_nvm) s.nvm += v;
    for (double v : obs.trace.pl_nv0) s.nv0 += v;
    s.nvm /= static_cast<double>(obs.trace.size());
    s.nv0 /= static_cast<double>(obs.trace.size());
    scales.push_back(s);
    n += static_cast<Eigen::Index>((s.nvm > 0.0) + (s.nv0 > 0.0)) *
         static_cast<Eigen::Index>(obs.trace.size());
  }

  Profile model = fixed;
  const ResidualFn residuals = [&](const Eigen::VectorXd& theta) {
    model.params.cross_sections = map.apply(theta);
    Eigen::VectorXd r(n);
    Eigen::Index row = 0;
    for (std::size_t o = 0; o < observations.size(); ++o) {
      const auto& obs = observations[o];
      const Trace sim = simulate_at(model, obs.sequence, obs.initial, obs.trace.times);
      for (std::size_t k = 0; k < sim.size(); ++k) {
        if (scales[o].nvm > 0.0) r(row++) = (sim.pl_nvm[k] - obs.trace.pl_nvm[k]) / scales[o].nvm;
        if (scales[o].nv0 > 0.0) r(row++) = (sim.pl_nv0[k] - obs.trace.pl_nv0[k]) / scales[o].nv0;
      }
    }
    return r;
  };

  const LeastSquaresResult ls = levenberg_marquardt(residuals, map.log_of(init), map.log_of(bounds.lower),
                                                    map.log_of(bounds.upper), options);
  return to_fit_result(ls, map, true);
}

Trace synthesize(const Profile& profile, const PulseSequence& seq, const NoiseSpec& noise,
                 double dt_sample, const InitialState& init) {
  if (!(noise.relative_sigma >= 0.0)) {
    throw ConfigError("synthesize: relative_sigma must be >= 0", {"relative_sigma"});
  }
  Trace tr = simulate_sequence(profile, seq, init, dt_sample);
  if (noise.relative_sigma == 0.0) return tr;
  const double ref = reference_pl(profile, seq);
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    tr.pl_nvm[k] = std::max(0.0, tr.pl_nvm[k] * (1.0 + noise.relative_sigma * normal(rng)));
    tr.pl_nv0[k] = std::max(0.0, tr.pl_nv0[k] * (1.0 + noise.relative_sigma * normal(rng)));
    tr.pl_nvm_norm[k] = ref > 0.0 ? tr.pl_nvm[k] / ref : 0.0;
  }
  return tr;
}

std::vector<QuenchPoint> synthesize_quench_points(const Profile& profile,
                                                  const std::vector<double>& green_powers,
                                                  double ir_power,
                                                  const std::vector<Channel>& channels,
                                                  const NoiseSpec& noise) {
  if (!(noise.relative_sigma >= 0.0)) {
    throw ConfigError("synthesize_quench_points: relative_sigma must be >= 0", {"relative_sigma"});
  }
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<QuenchPoint> out;
  for (Channel c : channels) {
    for (double g : green_powers) {
      QuenchPoint q;
      q.green_power = g;
      q.ir_power = ir_power;
      q.channel = c;
      const double exact = qss_quench_ratio(profile, c, g, ir_power);
      if (noise.relative_sigma > 0.0) {
        q.ratio = exact * (1.0 + noise.relative_sigma * normal(rng));
        q.ratio_sigma = noise.relative_sigma * q.ratio;
      } else {
        q.ratio = exact;
      }
      out.push_back(q);
    }
  }
  return out;
}

}  // namespace nvcharge

#include "nvcharge/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "nvcharge/error.hpp"

namespace nvcharge {
namespace {

Matrix7 propagator(const RateMatrix& m, double t) {
  if (t == 0.0 || m.matrix().isZero(0.0)) return Matrix7::Identity();
  Matrix7 a = m.matrix() * t;
  Matrix7 phi = a.exp();
  if (!phi.allFinite()) throw NumericalError("evolve: matrix exponential did not converge");
  return phi;
}

using Reach = std::array<std::array<bool, kNumLevels>, kNumLevels>;

Reach reachability(const Matrix7& m) {
  Reach r{};
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    r[i][i] = true;
    for (std::size_t j = 0; j < kNumLevels; ++j) {
      if (i != j && m(j, i) > 0.0) r[i][j] = true;  // edge i -> j
    }
  }
  for (std::size_t k = 0; k < kNumLevels; ++k)
    for (std::size_t i = 0; i < kNumLevels; ++i)
      for (std::size_t j = 0; j < kNumLevels; ++j)
        if (r[i][k] && r[k][j]) r[i][j] = true;
  return r;
}

// Closed communicating classes of the chain, each as a list of level indices.
std::vector<std::vector<std::size_t>> closed_classes(const Matrix7& m) {
  const Reach r = reachability(m);
  std::vector<std::vector<std::size_t>> classes;
  std::array<bool, kNumLevels> seen{};
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    if (seen[i]) continue;
    std::vector<std::size_t> cls;
    for (std::size_t j = 0; j < kNumLevels; ++j) {
      if (r[i][j] && r[j][i]) {
        cls.push_back(j);
        seen[j] = true;
      }
    }
    bool closed = true;
    for (std::size_t a : cls)
      for (std::size_t b = 0; b < kNumLevels; ++b)
        if (r[a][b] && std::find(cls.begin(), cls.end(), b) == cls.end()) closed = false;
    if (closed) classes.push_back(std::move(cls));
  }
  return classes;
}

std::string describe_class(const std::vector<std::size_t>& cls) {
  const bool all_minus = std::all_of(cls.begin(), cls.end(),
                                     [](std::size_t i) { return i <= idx(Level::NVm_Singlet); });
  const bool all_zero = std::all_of(cls.begin(), cls.end(),
                                    [](std::size_t i) { return i >= idx(Level::NV0_Ground); });
  std::string s = all_minus ? "NV- block {" : all_zero ? "NV0 block {" : "mixed block {";
  for (std::size_t k = 0; k < cls.size(); ++k) {
    if (k) s += ", ";
    s += level_name(kAllLevels[cls[k]]);
  }
  return s + "}";
}

// Grassmann-Taksar-Heyman elimination on the off-diagonal rates of an
// irreducible chain. Subtraction-free, so small populations keep full
// relative accuracy.
Eigen::VectorXd gth_stationary(Eigen::MatrixXd q) {
  // q(i, j): rate i -> j (row convention).
  const Eigen::Index n = q.rows();
  for (Eigen::Index k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) s += q(k, j);
    if (!(s > 0.0)) throw NumericalError("steady_state: chain is not irreducible");
    for (Eigen::Index i = 0; i < k; ++i) q(i, k) /= s;
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        if (i != j) q(i, j) += q(i, k) * q(k, j);
  }
  Eigen::VectorXd pi(n);
  pi(0) = 1.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) acc += pi(i) * q(i, j);
    pi(j) = acc;
  }
  return pi / pi.sum();
}

}  // namespace

PopulationState evolve(const RateMatrix& m, const PopulationState& p0, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("evolve: t must be finite and >= 0", {"t"});
  if (t == 0.0 || m.matrix().isZero(0.0)) return p0;
  return make_population_checked(propagator(m, t) * p0.vector(), "evolve");
}

PopulationState steady_state(const RateMatrix& m) {
  const auto classes = closed_classes(m.matrix());
  if (classes.size() != 1) {
    std::ostringstream msg;
    msg << "steady_state: no unique stationary state; " << classes.size()
        << " disconnected closed blocks:";
    for (const auto& c : classes) msg << " " << describe_class(c);
    throw NumericalError(msg.str());
  }
  const auto& cls = classes.front();
  const auto n = static_cast<Eigen::Index>(cls.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      if (a != b) q(a, b) = m(cls[static_cast<std::size_t>(b)], cls[static_cast<std::size_t>(a)]);

  Vector7 p = Vector7::Zero();
  if (n == 1) {
    p(cls.front()) = 1.0;
  } else {
    const Eigen::VectorXd pi = gth_stationary(q);
    for (Eigen::Index a = 0; a < n; ++a) p(cls[static_cast<std::size_t>(a)]) = pi(a);
  }

  const double scale = m.matrix().cwiseAbs().maxCoeff();
  const double residual = (m.matrix() * p).cwiseAbs().maxCoeff();
  if (residual > 1e-10 * scale) {
    throw NumericalError("steady_state: residual " + std::to_string(residual) +
                         " exceeds tolerance");
  }
  return make_population_checked(p, "steady_state");
}

double pl_signal(const PopulationState& p, const PhotophysicsParams& params, Channel channel) {
  if (channel == Channel::NVminus) {
    return params.k_fluor_minus * (p[Level::NVm_Excited_ms0] + p[Level::NVm_Excited_ms1]);
  }
  return params.k_fluor_zero * p[Level::NV0_Excited];
}

double PulseSequence::total_duration() const noexcept {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

void PulseSequence::validate() const {
  FieldChecker fc("pulse sequence");
  fc.require(!segments.empty(), "segments", "at least one segment is required");
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    const std::string tag = "segments[" + std::to_string(k) + "]";
    fc.require(std::isfinite(s.duration) && s.duration > 0.0, tag + ".duration", "must be > 0");
    fc.require(std::isfinite(s.green_power) && s.green_power >= 0.0, tag + ".green_power",
               "must be >= 0");
    fc.require(std::isfinite(s.ir_power) && s.ir_power >= 0.0, tag + ".ir_power", "must be >= 0");
  }
  fc.throw_if_failed();
}

PulseSequence PulseSequence::ir_window(double green_power, double ir_power, double ir_on,
                                       double ir_off, double total) {
  FieldChecker fc("IR window");
  fc.require(ir_on >= 0.0, "ir_on", "must be >= 0");
  fc.require(ir_off > ir_on, "ir_off", "must be after ir_on");
  fc.require(total >= ir_off, "total", "must not end before ir_off");
  fc.throw_if_failed();
  PulseSequence seq;
  if (ir_on > 0.0) seq.segments.push_back({ir_on, green_power, 0.0});
  seq.segments.push_back({ir_off - ir_on, green_power, ir_power});
  if (total > ir_off) seq.segments.push_back({total - ir_off, green_power, 0.0});
  return seq;
}

void Trace::validate() const {
  FieldChecker fc("trace");
  fc.require(pl_nvm.size() == times.size() && pl_nv0.size() == times.size() &&
                 pl_nvm_norm.size() == times.size(),
             "columns", "all columns must have the same length");
  fc.require(populations.empty() || populations.size() == times.size(), "populations",
             "must be empty or one per sample");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      fc.require(false, "times", "must be strictly increasing");
      break;
    }
  }
  for (std::size_t k = 0; k < pl_nvm.size() && k < pl_nv0.size(); ++k) {
    if (!(pl_nvm[k] >= 0.0) || !(pl_nv0[k] >= 0.0)) {
      fc.require(false, "pl", "must be >= 0");
      break;
    }
  }
  fc.throw_if_failed();
}

double reference_pl(const Profile& profile, const PulseSequence& seq) {
  for (const auto& s : seq.segments) {
    if (s.green_power > 0.0) {
      const RateMatrix m =
          build_rate_matrix(profile.params, profile.beams.green(s.green_power), profile.beams.ir(0.0));
      return pl_signal(steady_state(m), profile.params, Channel::NVminus);
    }
  }
  return 0.0;
}

Trace simulate_at(const Profile& profile, const PulseSequence& seq, const InitialState& init,
                  const std::vector<double>& times) {
  profile.validate();
  seq.validate();
  const double total = seq.total_duration();
  {
    FieldChecker fc("sample times");
    fc.require(!times.empty(), "times", "at least one sample is required");
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (!(times[k] >= 0.0 && times[k] <= total * (1.0 + 1e-12))) {
        fc.require(false, "times", "must lie within the sequence");
        break;
      }
      if (k > 0 && !(times[k] > times[k - 1])) {
        fc.require(false, "times", "must be strictly increasing");
        break;
      }
    }
    fc.throw_if_failed();
  }

  std::vector<RateMatrix> mats;
  mats.reserve(seq.segments.size());
  for (const auto& s : seq.segments) {
    mats.push_back(build_rate_matrix(profile.params, profile.beams.green(s.green_power),
                                     profile.beams.ir(s.ir_power)));
  }

  Vector7 state = std::holds_alternative<PopulationState>(init)
                      ? std::get<PopulationState>(init).vector()
                      : steady_state(mats.front()).vector();

  Trace tr;
  tr.times = times;
  tr.pl_nvm.reserve(times.size());
  tr.pl_nv0.reserve(times.size());
  tr.populations.reserve(times.size());
  const double ref = reference_pl(profile, seq);

  double min_spacing_limit = 0.0;
  bool coarse = false;

  std::size_t seg = 0;
  double seg_start = 0.0;
  double now = 0.0;
  double cached_dt = -1.0;
  Matrix7 cached_phi;

  auto advance = [&](double to) {
    // Move `state` from `now` to `to`, crossing segment boundaries exactly.
    while (true) {
      const double seg_end = seg_start + seq.segments[seg].duration;
      const bool last = seg + 1 == seq.segments.size();
      if (to < seg_end || last) {
        const double dt = to - now;
        if (dt > 0.0) {
          if (cached_dt > 0.0 && std::abs(dt - cached_dt) <= 1e-12 * cached_dt) {
            state = cached_phi * state;
          } else {
            cached_phi = propagator(mats[seg], dt);
            cached_dt = dt;
            state = cached_phi * state;
          }
        }
        now = to;
        return;
      }
      state = propagator(mats[seg], seg_end - now) * state;
      now = seg_end;
      seg_start = seg_end;
      ++seg;
      cached_dt = -1.0;
    }
  };

  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = std::min(times[k], total);
    if (k > 0) {
      const double spacing = times[k] - times[k - 1];
      const double limit = 0.1 / mats[seg].max_rate();
      if (spacing > limit) {
        coarse = true;
        min_spacing_limit = min_spacing_limit == 0.0 ? limit : std::min(min_spacing_limit, limit);
      }
    }
    advance(t);
    const PopulationState p = make_population_checked(state, "simulate_sequence");
    tr.pl_nvm.push_back(pl_signal(p, profile.params, Channel::NVminus));
    tr.pl_nv0.push_back(pl_signal(p, profile.params, Channel::NVzero));
    tr.pl_nvm_norm.push_back(ref > 0.0 ? tr.pl_nvm.back() / ref : 0.0);
    tr.populations.push_back(p.vector());
  }
  if (coarse) {
    std::ostringstream w;
    w << "sample step exceeds 0.1/max rate (" << min_spacing_limit
      << " s); propagation is exact but transients between samples are not resolved";
    tr.warnings.push_back(w.str());
  }
  return tr;
}

Trace simulate_sequence(const Profile& profile, const PulseSequence& seq, const InitialState& init,
                        double dt_sample) {
  seq.validate();
  if (!(dt_sample > 0.0) || !std::isfinite(dt_sample)) {
    throw ConfigError("simulate_sequence: dt_sample must be > 0", {"dt_sample"});
  }
  const double total = seq.total_duration();
  const auto n = static_cast<std::size_t>(std::floor(total / dt_sample * (1.0 + 1e-12)));
  std::vector<double> times(n + 1);
  for (std::size_t k = 0; k <= n; ++k) times[k] = static_cast<double>(k) * dt_sample;
  return simulate_at(profile, seq, init, times);
}

}  // namespace nvcharge

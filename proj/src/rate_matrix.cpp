#include "nvcharge/rate_matrix.hpp"

#include <cmath>

#include "nvcharge/error.hpp"
#include "nvcharge/units.hpp"

namespace nvcharge {

double photon_rate(double sigma, const LaserField& laser) {
  FieldChecker fc("photon_rate");
  fc.require(std::isfinite(sigma) && sigma >= 0.0, "sigma", "must be finite and >= 0");
  fc.throw_if_failed();
  laser.validate();
  const double photon_energy = units::kPlanck * units::kSpeedOfLight / laser.wavelength;
  return sigma * laser.intensity() / photon_energy;
}

OpticalRates optical_rates(const PhotophysicsParams& params, const LaserField& green,
                           const LaserField& ir) {
  green.validate("green");
  ir.validate("ir");
  const auto& cs = params.cross_sections;
  OpticalRates r;
  r.excite_minus = params.k_excite_minus_per_w * green.power;
  r.excite_zero = params.k_excite_zero_per_w * green.power;
  r.ionize_green = photon_rate(cs.sigma_ionize_green, green);
  r.ionize_ir = photon_rate(cs.sigma_ionize_ir, ir);
  r.recombine_green = photon_rate(cs.sigma_recombine_green, green);
  r.recombine_ir = photon_rate(cs.sigma_recombine_ir, ir);
  return r;
}

RateMatrix::RateMatrix(const Matrix7& m) : m_(m) {
  FieldChecker fc("rate matrix");
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
  for (std::size_t j = 0; j < kNumLevels; ++j) {
    for (std::size_t i = 0; i < kNumLevels; ++i) {
      if (i != j && !(m(i, j) >= 0.0)) {
        fc.require(false, "m(" + std::to_string(i) + "," + std::to_string(j) + ")",
                   "off-diagonal rate must be >= 0");
      }
    }
    fc.require(std::abs(m.col(j).sum()) <= 1e-12 * scale, "column " + std::to_string(j),
               "must sum to zero");
  }
  fc.throw_if_failed();
}

double RateMatrix::max_rate() const noexcept { return (-m_.diagonal()).maxCoeff(); }

void RateMatrix::add(Level from, Level to, double rate) {
  if (rate == 0.0) return;
  m_(idx(to), idx(from)) += rate;
  m_(idx(from), idx(from)) -= rate;
}

RateMatrix build_rate_matrix(const PhotophysicsParams& params, const LaserField& green,
                             const LaserField& ir) {
  params.validate();
  const OpticalRates k = optical_rates(params, green, ir);
  using L = Level;
  RateMatrix m;

  // NV- triplet: spin-conserving excitation and radiative decay.
  m.add(L::NVm_Ground_ms0, L::NVm_Excited_ms0, k.excite_minus);
  m.add(L::NVm_Ground_ms1, L::NVm_Excited_ms1, k.excite_minus);
  m.add(L::NVm_Excited_ms0, L::NVm_Ground_ms0, params.k_fluor_minus);
  m.add(L::NVm_Excited_ms1, L::NVm_Ground_ms1, params.k_fluor_minus);

  // Intersystem crossing (spin dependent) and singlet decay.
  m.add(L::NVm_Excited_ms0, L::NVm_Singlet, params.k_isc_ms0);
  m.add(L::NVm_Excited_ms1, L::NVm_Singlet, params.k_isc_ms1);
  m.add(L::NVm_Singlet, L::NVm_Ground_ms0, params.k_singlet_decay * params.singlet_branch_ms0);
  m.add(L::NVm_Singlet, L::NVm_Ground_ms1,
        params.k_singlet_decay * (1.0 - params.singlet_branch_ms0));

  // Ionization from the NV- excited state into the NV0 ground state.
  m.add(L::NVm_Excited_ms0, L::NV0_Ground, k.ionize());
  m.add(L::NVm_Excited_ms1, L::NV0_Ground, k.ionize());

  // NV0 two-level system.
  m.add(L::NV0_Ground, L::NV0_Excited, k.excite_zero);
  m.add(L::NV0_Excited, L::NV0_Ground, params.k_fluor_zero);

  // Recombination from the NV0 excited state into the NV- ground triplet.
  m.add(L::NV0_Excited, L::NVm_Ground_ms0, k.recombine() * params.recombination_branch_ms0);
  m.add(L::NV0_Excited, L::NVm_Ground_ms1,
        k.recombine() * (1.0 - params.recombination_branch_ms0));
  return m;
}

}  // namespace nvcharge

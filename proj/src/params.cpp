#include "nvcharge/params.hpp"

#include <cmath>

#include "nvcharge/error.hpp"
#include "nvcharge/units.hpp"

namespace nvcharge {
namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }
bool fraction(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void check_sigmas(FieldChecker& fc, const CrossSectionSet& cs) {
  fc.require(finite_nonneg(cs.sigma_ionize_green), "sigma_ionize_green", "must be finite and >= 0");
  fc.require(finite_nonneg(cs.sigma_ionize_ir), "sigma_ionize_ir", "must be finite and >= 0");
  fc.require(finite_nonneg(cs.sigma_recombine_green), "sigma_recombine_green",
             "must be finite and >= 0");
  fc.require(finite_nonneg(cs.sigma_recombine_ir), "sigma_recombine_ir", "must be finite and >= 0");
}

}  // namespace

void LaserField::validate(const std::string& name) const {
  FieldChecker fc(name);
  fc.require(finite_pos(wavelength), name + ".wavelength", "must be finite and > 0");
  fc.require(finite_nonneg(power), name + ".power", "must be finite and >= 0");
  fc.require(finite_pos(spot_area), name + ".spot_area", "must be finite and > 0");
  fc.throw_if_failed();
}

void CrossSectionSet::validate() const {
  FieldChecker fc("cross sections");
  check_sigmas(fc, *this);
  fc.throw_if_failed();
}

void PhotophysicsParams::validate() const {
  FieldChecker fc("photophysics parameters");
  fc.require(finite_nonneg(k_excite_minus_per_w), "k_excite_minus", "must be finite and >= 0");
  fc.require(finite_nonneg(k_excite_zero_per_w), "k_excite_zero", "must be finite and >= 0");
  fc.require(finite_nonneg(k_fluor_minus), "k_fluor_minus", "must be finite and >= 0");
  fc.require(finite_nonneg(k_fluor_zero), "k_fluor_zero", "must be finite and >= 0");
  fc.require(finite_nonneg(k_isc_ms0), "k_isc_ms0", "must be finite and >= 0");
  fc.require(finite_nonneg(k_isc_ms1), "k_isc_ms1", "must be finite and >= 0");
  fc.require(k_isc_ms1 >= k_isc_ms0, "k_isc_ms1", "must be >= k_isc_ms0");
  fc.require(finite_nonneg(k_singlet_decay), "k_singlet_decay", "must be finite and >= 0");
  fc.require(fraction(singlet_branch_ms0), "singlet_branch_ms0", "must lie in [0, 1]");
  fc.require(fraction(recombination_branch_ms0), "recombination_branch_ms0", "must lie in [0, 1]");
  check_sigmas(fc, cross_sections);
  fc.throw_if_failed();
}

void BeamConfig::validate() const {
  FieldChecker fc("beam configuration");
  fc.require(finite_pos(green_wavelength), "wavelength_green", "must be finite and > 0");
  fc.require(finite_pos(ir_wavelength), "wavelength_ir", "must be finite and > 0");
  fc.require(finite_pos(green_spot_area), "spot_area_green", "must be finite and > 0");
  fc.require(finite_pos(ir_spot_area), "spot_area_ir", "must be finite and > 0");
  fc.throw_if_failed();
}

CrossSectionSet table_cross_sections() {
  return {.sigma_ionize_green = 6.25e-20,
          .sigma_ionize_ir = 1.76e-22,
          .sigma_recombine_green = 9.83e-21,
          .sigma_recombine_ir = 4.66e-22};
}

Profile default_shallow_profile() {
  using namespace units;
  Profile p;
  p.label = "shallow";
  p.description =
      "Shallow NV. Cross-sections from the measured table; internal rates are a "
      "literature-range profile with calibrated effective excitation coefficients.";
  p.params.k_excite_minus_per_w = mhz_per_mw(1.0);
  p.params.k_excite_zero_per_w = mhz_per_mw(1.6);
  p.params.k_fluor_minus = mhz(55.0);
  p.params.k_fluor_zero = mhz(25.0);
  p.params.k_isc_ms0 = mhz(5.0);
  p.params.k_isc_ms1 = mhz(85.0);
  p.params.k_singlet_decay = mhz(5.5);
  p.params.singlet_branch_ms0 = 0.9;
  p.params.recombination_branch_ms0 = 1.0 / 3.0;
  p.params.cross_sections = table_cross_sections();
  return p;
}

Profile make_bulk_profile(const Profile& shallow) {
  Profile bulk = shallow;
  bulk.label = "bulk";
  bulk.description = "Bulk NV: shallow profile with reduced green ionization cross-section.";
  bulk.params.cross_sections.sigma_ionize_green = kBulkSigmaIonizeGreen;
  return bulk;
}

}  // namespace nvcharge

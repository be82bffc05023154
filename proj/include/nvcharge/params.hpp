#pragma once

#include <string>

namespace nvcharge {

/// One excitation line. Intensity is derived from power and spot area.
struct LaserField {
  double wavelength = 0.0;  // m
  double power = 0.0;       // W
  double spot_area = 0.0;   // m^2

  double intensity() const noexcept { return power / spot_area; }  // W / m^2

  void validate(const std::string& name = "laser") const;
};

/// Excited-state ionization (NV- -> NV0) and recombination (NV0 -> NV-)
/// cross-sections for the green and IR lines, in m^2.
struct CrossSectionSet {
  double sigma_ionize_green = 0.0;
  double sigma_ionize_ir = 0.0;
  double sigma_recombine_green = 0.0;
  double sigma_recombine_ir = 0.0;

  void validate() const;

  friend bool operator==(const CrossSectionSet&, const CrossSectionSet&) = default;
};

/// Internal transition rates of the level scheme plus the optical cross-sections.
/// Rates are in Hz; excitation coefficients are Hz per W of green power.
struct PhotophysicsParams {
  double k_excite_minus_per_w = 0.0;
  double k_excite_zero_per_w = 0.0;
  double k_fluor_minus = 0.0;
  double k_fluor_zero = 0.0;
  double k_isc_ms0 = 0.0;
  double k_isc_ms1 = 0.0;
  double k_singlet_decay = 0.0;
  double singlet_branch_ms0 = 0.5;
  CrossSectionSet cross_sections;
  double recombination_branch_ms0 = 1.0 / 3.0;

  /// Throws ConfigError listing every violated invariant.
  void validate() const;

  friend bool operator==(const PhotophysicsParams&, const PhotophysicsParams&) = default;
};

/// Wavelengths and effective focal-spot areas of the two beams.
struct BeamConfig {
  double green_wavelength = 532e-9;
  double ir_wavelength = 1064e-9;
  double green_spot_area = 1.9646e-13;
  double ir_spot_area = 7.856e-13;

  LaserField green(double power) const { return {green_wavelength, power, green_spot_area}; }
  LaserField ir(double power) const { return {ir_wavelength, power, ir_spot_area}; }

  void validate() const;

  friend bool operator==(const BeamConfig&, const BeamConfig&) = default;
};

/// A named parameter set: the unit every simulation and experiment runs on.
struct Profile {
  std::string label = "custom";
  std::string description;
  PhotophysicsParams params;
  BeamConfig beams;

  void validate() const {
    params.validate();
    beams.validate();
  }

  friend bool operator==(const Profile&, const Profile&) = default;
};

/// Green ionization cross-section of bulk (deep) NVs, m^2.
inline constexpr double kBulkSigmaIonizeGreen = 0.95e-21;

/// Bulk profile: identical to `shallow` except for the green ionization
/// cross-section. Recombination is assumed unchanged.
Profile make_bulk_profile(const Profile& shallow);

/// Built-in copy of the shipped shallow-NV profile (data/profiles/shallow.json).
Profile default_shallow_profile();

/// Table values of the four cross-sections measured on shallow NVs, m^2.
CrossSectionSet table_cross_sections();

}  // namespace nvcharge

#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace nvcharge {

/// Electronic/charge levels of the model. The numeric value is the row and
/// column index used by every rate matrix and population vector.
///
///   0  NV- ground, m_s = 0
///   1  NV- ground, m_s = +-1 (combined)
///   2  NV- excited, m_s = 0
///   3  NV- excited, m_s = +-1 (combined)
///   4  NV- singlet (combined singlet levels)
///   5  NV0 ground
///   6  NV0 excited
enum class Level : std::size_t {
  NVm_Ground_ms0 = 0,
  NVm_Ground_ms1 = 1,
  NVm_Excited_ms0 = 2,
  NVm_Excited_ms1 = 3,
  NVm_Singlet = 4,
  NV0_Ground = 5,
  NV0_Excited = 6,
};

inline constexpr std::size_t kNumLevels = 7;

constexpr std::size_t idx(Level l) noexcept { return static_cast<std::size_t>(l); }

inline constexpr std::array<Level, kNumLevels> kAllLevels = {
    Level::NVm_Ground_ms0, Level::NVm_Ground_ms1, Level::NVm_Excited_ms0, Level::NVm_Excited_ms1,
    Level::NVm_Singlet,    Level::NV0_Ground,     Level::NV0_Excited,
};

constexpr bool is_nv_minus(Level l) noexcept { return idx(l) <= idx(Level::NVm_Singlet); }

constexpr std::string_view level_name(Level l) noexcept {
  switch (l) {
    case Level::NVm_Ground_ms0: return "NVm_Ground_ms0";
    case Level::NVm_Ground_ms1: return "NVm_Ground_ms1";
    case Level::NVm_Excited_ms0: return "NVm_Excited_ms0";
    case Level::NVm_Excited_ms1: return "NVm_Excited_ms1";
    case Level::NVm_Singlet: return "NVm_Singlet";
    case Level::NV0_Ground: return "NV0_Ground";
    case Level::NV0_Excited: return "NV0_Excited";
  }
  return "?";
}

/// Detection channel: idealized band-pass filters with no cross-talk.
enum class Channel { NVminus, NVzero };

constexpr std::string_view channel_name(Channel c) noexcept {
  return c == Channel::NVminus ? "nvm" : "nv0";
}

}  // namespace nvcharge

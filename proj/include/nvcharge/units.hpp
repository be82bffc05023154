#pragma once

namespace nvcharge::units {

inline constexpr double kPlanck = 6.62607015e-34;        // J s
inline constexpr double kSpeedOfLight = 299792458.0;      // m / s

inline constexpr double kNano = 1e-9;
inline constexpr double kMicro = 1e-6;
inline constexpr double kMilli = 1e-3;
inline constexpr double kMega = 1e6;

constexpr double nm(double v) { return v * kNano; }
constexpr double uw(double v) { return v * kMicro; }
constexpr double mw(double v) { return v * kMilli; }
constexpr double mhz(double v) { return v * kMega; }
constexpr double ns(double v) { return v * kNano; }
constexpr double us(double v) { return v * kMicro; }

/// MHz per mW expressed in Hz per W.
constexpr double mhz_per_mw(double v) { return v * kMega / kMilli; }

}  // namespace nvcharge::units

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvcharge/analysis.hpp"
#include "nvcharge/experiments.hpp"

namespace nvcharge::io {

/// Fixed-width text form used in every CSV: 9 significant digits.
std::string format_number(double v);

// Profiles. Keys carry their unit suffix; unknown keys are rejected.
Profile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const Profile& p);
Profile load_profile(const std::filesystem::path& path);
void save_profile(const Profile& p, const std::filesystem::path& path);

// Traces: time_s,pl_nvm_hz,pl_nv0_hz,pl_nvm_norm,p0,...,p6
void write_trace_csv(std::ostream& os, const Trace& trace);
Trace read_trace_csv(std::istream& is);
nlohmann::json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);

// Quench points: green_power_w,ir_power_w,channel,ratio,ratio_sigma
void write_quench_csv(std::ostream& os, const std::vector<QuenchPoint>& points);
std::vector<QuenchPoint> read_quench_csv(std::istream& is);

// Fit report
nlohmann::json fit_report_json(const FitResult& fit);
FitResult fit_report_from_json(const nlohmann::json& j);

// Charge-population curve: green_power_w,nvm_fraction,pl_ratio
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> read_curve_csv(std::istream& is);

// Steady-state map: one row per green power, one column per IR power; the
// JSON sidecar carries the axes.
void write_map_csv(std::ostream& os, const PlMap& map);
nlohmann::json map_metadata_json(const PlMap& map);
PlMap read_map(std::istream& csv, const nlohmann::json& metadata);

// Small helpers shared by the CLI and tests.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nvcharge::io

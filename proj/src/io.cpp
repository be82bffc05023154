#include "nvcharge/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "nvcharge/error.hpp"

namespace nvcharge::io {
namespace {

using nlohmann::json;

constexpr const char* kTraceHeader = "time_s,pl_nvm_hz,pl_nv0_hz,pl_nvm_norm";
constexpr const char* kQuenchHeader = "green_power_w,ir_power_w,channel,ratio,ratio_sigma";
constexpr const char* kCurveHeader = "green_power_w,nvm_fraction,pl_ratio";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    if (s == "nan" || s == "-nan") return std::nan("");
    throw ConfigError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'",
                      {"line " + std::to_string(line_no)});
  }
  return v;
}

std::vector<std::vector<std::string>> read_rows(std::istream& is, std::string& header) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("CSV input is empty", {"header"});
  header = trim(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv(line));
  }
  return rows;
}

Channel parse_channel(const std::string& s, std::size_t line_no) {
  if (s == "nvm" || s == "NVminus") return Channel::NVminus;
  if (s == "nv0" || s == "NVzero") return Channel::NVzero;
  throw ConfigError("line " + std::to_string(line_no) + ": unknown channel '" + s + "'",
                    {"channel"});
}

// Profile keys with their scale into SI units.
struct ProfileKey {
  const char* name;
  double to_si;
};

constexpr double kMHz = 1e6;
constexpr double kMHzPerMw = 1e9;

const std::vector<ProfileKey>& numeric_profile_keys() {
  static const std::vector<ProfileKey> keys = {
      {"wavelength_green_nm", 1e-9},
      {"wavelength_ir_nm", 1e-9},
      {"spot_area_green_m2", 1.0},
      {"spot_area_ir_m2", 1.0},
      {"k_excite_minus_mhz_per_mw", kMHzPerMw},
      {"k_excite_zero_mhz_per_mw", kMHzPerMw},
      {"k_fluor_minus_mhz", kMHz},
      {"k_fluor_zero_mhz", kMHz},
      {"k_isc_ms0_mhz", kMHz},
      {"k_isc_ms1_mhz", kMHz},
      {"k_singlet_decay_mhz", kMHz},
      {"singlet_branch_ms0", 1.0},
      {"recombination_branch_ms0", 1.0},
      {"sigma_ionize_green_m2", 1.0},
      {"sigma_ionize_ir_m2", 1.0},
      {"sigma_recombine_green_m2", 1.0},
      {"sigma_recombine_ir_m2", 1.0},
  };
  return keys;
}

std::vector<double*> profile_slots(Profile& p) {
  auto& k = p.params;
  auto& cs = k.cross_sections;
  return {&p.beams.green_wavelength, &p.beams.ir_wavelength, &p.beams.green_spot_area,
          &p.beams.ir_spot_area,     &k.k_excite_minus_per_w, &k.k_excite_zero_per_w,
          &k.k_fluor_minus,          &k.k_fluor_zero,         &k.k_isc_ms0,
          &k.k_isc_ms1,              &k.k_singlet_decay,      &k.singlet_branch_ms0,
          &k.recombination_branch_ms0, &cs.sigma_ionize_green, &cs.sigma_ionize_ir,
          &cs.sigma_recombine_green, &cs.sigma_recombine_ir};
}

json cross_sections_json(const CrossSectionSet& cs) {
  return {{"sigma_ionize_green_m2", cs.sigma_ionize_green},
          {"sigma_ionize_ir_m2", cs.sigma_ionize_ir},
          {"sigma_recombine_green_m2", cs.sigma_recombine_green},
          {"sigma_recombine_ir_m2", cs.sigma_recombine_ir}};
}

double number_or_nan(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

CrossSectionSet cross_sections_from_json(const json& j) {
  return {number_or_nan(j.at("sigma_ionize_green_m2")), number_or_nan(j.at("sigma_ionize_ir_m2")),
          number_or_nan(j.at("sigma_recombine_green_m2")), number_or_nan(j.at("sigma_recombine_ir_m2"))};
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Profile profile_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("profile: expected a JSON object", {"profile"});
  FieldChecker fc("profile");
  const auto& keys = numeric_profile_keys();
  for (const auto& [name, value] : j.items()) {
    const bool known = name == "label" || name == "description" ||
                       std::any_of(keys.begin(), keys.end(),
                                   [&](const ProfileKey& k) { return name == k.name; });
    fc.require(known, name, "unknown key");
  }
  Profile p;
  auto slots = profile_slots(p);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto it = j.find(keys[i].name);
    if (it == j.end()) {
      fc.require(false, keys[i].name, "missing");
    } else if (!it->is_number()) {
      fc.require(false, keys[i].name, "must be a number");
    } else {
      *slots[i] = it->get<double>() * keys[i].to_si;
    }
  }
  if (auto it = j.find("label"); it != j.end()) {
    if (it->is_string()) p.label = it->get<std::string>();
    else fc.require(false, "label", "must be a string");
  }
  if (auto it = j.find("description"); it != j.end()) {
    if (it->is_string()) p.description = it->get<std::string>();
    else fc.require(false, "description", "must be a string");
  }
  fc.throw_if_failed();
  p.validate();
  return p;
}

json profile_to_json(const Profile& p) {
  json j;
  j["label"] = p.label;
  if (!p.description.empty()) j["description"] = p.description;
  Profile copy = p;
  auto slots = profile_slots(copy);
  const auto& keys = numeric_profile_keys();
  for (std::size_t i = 0; i < keys.size(); ++i) j[keys[i].name] = *slots[i] / keys[i].to_si;
  return j;
}

Profile load_profile(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("profile " + path.string() + ": " + e.what(), {"profile"});
  }
  return profile_from_json(j);
}

void save_profile(const Profile& p, const std::filesystem::path& path) {
  write_text(path, profile_to_json(p).dump(2) + "\n");
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  const bool pops = !trace.populations.empty();
  os << kTraceHeader;
  if (pops) for (std::size_t i = 0; i < kNumLevels; ++i) os << ",p" << i;
  os << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    os << format_number(trace.times[k]) << ',' << format_number(trace.pl_nvm[k]) << ','
       << format_number(trace.pl_nv0[k]) << ',' << format_number(trace.pl_nvm_norm[k]);
    if (pops) for (std::size_t i = 0; i < kNumLevels; ++i) os << ',' << format_number(trace.populations[k](i));
    os << '\n';
  }
}

Trace read_trace_csv(std::istream& is) {
  std::string header;
  const auto rows = read_rows(is, header);
  std::string with_pops = kTraceHeader;
  for (std::size_t i = 0; i < kNumLevels; ++i) with_pops += ",p" + std::to_string(i);
  const bool pops = header == with_pops;
  if (!pops && header != kTraceHeader) throw ConfigError("trace CSV: unexpected header '" + header + "'", {"header"});
  const std::size_t ncol = pops ? 4 + kNumLevels : 4;
  Trace tr;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != ncol) throw ConfigError("trace CSV line " + std::to_string(r + 2) + ": wrong column count", {"columns"});
    tr.times.push_back(parse_number(row[0], r + 2));
    tr.pl_nvm.push_back(parse_number(row[1], r + 2));
    tr.pl_nv0.push_back(parse_number(row[2], r + 2));
    tr.pl_nvm_norm.push_back(parse_number(row[3], r + 2));
    if (pops) {
      Vector7 p;
      for (std::size_t i = 0; i < kNumLevels; ++i) p(i) = parse_number(row[4 + i], r + 2);
      tr.populations.push_back(p);
    }
  }
  tr.validate();
  return tr;
}

json trace_to_json(const Trace& trace) {
  json j;
  j["time_s"] = trace.times;
  j["pl_nvm_hz"] = trace.pl_nvm;
  j["pl_nv0_hz"] = trace.pl_nv0;
  j["pl_nvm_norm"] = trace.pl_nvm_norm;
  if (!trace.populations.empty()) {
    json pops = json::array();
    for (const auto& p : trace.populations) pops.push_back(std::vector<double>(p.data(), p.data() + kNumLevels));
    j["populations"] = std::move(pops);
  }
  if (!trace.warnings.empty()) j["warnings"] = trace.warnings;
  return j;
}

Trace trace_from_json(const json& j) {
  Trace tr;
  tr.times = j.at("time_s").get<std::vector<double>>();
  tr.pl_nvm = j.at("pl_nvm_hz").get<std::vector<double>>();
  tr.pl_nv0 = j.at("pl_nv0_hz").get<std::vector<double>>();
  tr.pl_nvm_norm = j.at("pl_nvm_norm").get<std::vector<double>>();
  if (auto it = j.find("populations"); it != j.end()) {
    for (const auto& row : *it) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != kNumLevels) throw ConfigError("trace JSON: population row must have 7 entries", {"populations"});
      tr.populations.emplace_back(Eigen::Map<const Vector7>(v.data()));
    }
  }
  if (auto it = j.find("warnings"); it != j.end()) tr.warnings = it->get<std::vector<std::string>>();
  tr.validate();
  return tr;
}

void write_quench_csv(std::ostream& os, const std::vector<QuenchPoint>& points) {
  os << kQuenchHeader << '\n';
  for (const auto& q : points) {
    os << format_number(q.green_power) << ',' << format_number(q.ir_power) << ','
       << channel_name(q.channel) << ',' << format_number(q.ratio) << ','
       << format_number(q.ratio_sigma) << '\n';
  }
}

std::vector<QuenchPoint> read_quench_csv(std::istream& is) {
  std::string header;
  const auto rows = read_rows(is, header);
  if (header != kQuenchHeader) throw ConfigError("quench CSV: unexpected header '" + header + "'", {"header"});
  std::vector<QuenchPoint> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 5) throw ConfigError("quench CSV line " + std::to_string(r + 2) + ": wrong column count", {"columns"});
    out.push_back({parse_number(row[0], r + 2), parse_number(row[1], r + 2), parse_number(row[3], r + 2),
                   parse_number(row[4], r + 2), parse_channel(row[2], r + 2)});
  }
  return out;
}

json fit_report_json(const FitResult& fit) {
  json j;
  j["status"] = std::string(fit_status_name(fit.status));
  j["converged"] = fit.converged();
  j["estimates"] = cross_sections_json(fit.estimate);
  j["standard_errors"] = cross_sections_json(fit.standard_error);
  j["fitted"] = {{"sigma_ionize_green_m2", fit.fitted[0]},
                 {"sigma_ionize_ir_m2", fit.fitted[1]},
                 {"sigma_recombine_green_m2", fit.fitted[2]},
                 {"sigma_recombine_ir_m2", fit.fitted[3]}};
  j["residual_norm"] = fit.residual_norm;
  j["iterations"] = fit.iterations;
  j["num_residuals"] = fit.num_residuals;
  j["cost_history"] = fit.cost_history;
  return j;
}

FitResult fit_report_from_json(const json& j) {
  FitResult fit;
  const auto status = j.at("status").get<std::string>();
  bool found = false;
  for (auto s : {FitStatus::Converged, FitStatus::MaxIterations, FitStatus::AtBound, FitStatus::RankDeficient}) {
    if (status == fit_status_name(s)) {
      fit.status = s;
      found = true;
    }
  }
  if (!found) throw ConfigError("fit report: unknown status '" + status + "'", {"status"});
  fit.estimate = cross_sections_from_json(j.at("estimates"));
  fit.standard_error = cross_sections_from_json(j.at("standard_errors"));
  const auto& f = j.at("fitted");
  fit.fitted = {f.at("sigma_ionize_green_m2").get<bool>(), f.at("sigma_ionize_ir_m2").get<bool>(),
                f.at("sigma_recombine_green_m2").get<bool>(), f.at("sigma_recombine_ir_m2").get<bool>()};
  fit.residual_norm = number_or_nan(j.at("residual_norm"));
  fit.iterations = j.at("iterations").get<int>();
  fit.num_residuals = j.at("num_residuals").get<std::size_t>();
  for (const auto& c : j.at("cost_history")) fit.cost_history.push_back(number_or_nan(c));
  return fit;
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
  os << kCurveHeader << '\n';
  for (const auto& c : curve) {
    os << format_number(c.green_power) << ',' << format_number(c.nvm_fraction) << ','
       << format_number(c.pl_ratio) << '\n';
  }
}

std::vector<CurvePoint> read_curve_csv(std::istream& is) {
  std::string header;
  const auto rows = read_rows(is, header);
  if (header != kCurveHeader) throw ConfigError("curve CSV: unexpected header '" + header + "'", {"header"});
  std::vector<CurvePoint> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3) throw ConfigError("curve CSV line " + std::to_string(r + 2) + ": wrong column count", {"columns"});
    out.push_back({parse_number(row[0], r + 2), parse_number(row[1], r + 2), parse_number(row[2], r + 2)});
  }
  return out;
}

void write_map_csv(std::ostream& os, const PlMap& map) {
  os << "green_power_w";
  for (double i : map.grid.ir_powers) os << ',' << format_number(i);
  os << '\n';
  for (std::size_t g = 0; g < map.grid.green_powers.size(); ++g) {
    os << format_number(map.grid.green_powers[g]);
    for (double v : map.ratios[g]) os << ',' << format_number(v);
    os << '\n';
  }
}

json map_metadata_json(const PlMap& map) {
  json j;
  j["quantity"] = "nvm_steady_state_pl_ratio";
  j["rows"] = "green_power_w";
  j["columns"] = "ir_power_w";
  j["scale"] = map.grid.scale == GridScale::Logarithmic ? "logarithmic" : "linear";
  std::vector<std::string> g, i;
  for (double v : map.grid.green_powers) g.push_back(format_number(v));
  for (double v : map.grid.ir_powers) i.push_back(format_number(v));
  j["green_powers_w"] = g;
  j["ir_powers_w"] = i;
  j["max_ratio"] = format_number(map.max_ratio());
  j["min_ratio"] = format_number(map.min_ratio());
  return j;
}

PlMap read_map(std::istream& csv, const json& metadata) {
  PlMap map;
  const auto scale = metadata.at("scale").get<std::string>();
  map.grid.scale = scale == "linear" ? GridScale::Linear : GridScale::Logarithmic;
  for (const auto& s : metadata.at("green_powers_w")) map.grid.green_powers.push_back(parse_number(s.get<std::string>(), 0));
  for (const auto& s : metadata.at("ir_powers_w")) map.grid.ir_powers.push_back(parse_number(s.get<std::string>(), 0));
  map.grid.validate();

  std::string header;
  const auto rows = read_rows(csv, header);
  const auto head = split_csv(header);
  if (head.empty() || head[0] != "green_power_w" || head.size() != map.grid.ir_powers.size() + 1) {
    throw ConfigError("map CSV: header does not match metadata", {"header"});
  }
  if (rows.size() != map.grid.green_powers.size()) throw ConfigError("map CSV: row count does not match metadata", {"rows"});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != head.size()) throw ConfigError("map CSV: ragged row " + std::to_string(r + 2), {"columns"});
    std::vector<double> v;
    for (std::size_t c = 1; c < rows[r].size(); ++c) v.push_back(parse_number(rows[r][c], r + 2));
    map.ratios.push_back(std::move(v));
  }
  return map;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string(), {path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string(), {path.string()});
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string(), {path.string()});
}

}  // namespace nvcharge::io

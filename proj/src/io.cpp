#include "pairsource/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pairsource/errors.hpp"

namespace pairsource::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t line) {
  if (field.empty()) throw ParseError("empty field", line);
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("malformed number '" + field + "'", line);
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected_header) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto fields = split(s);
    if (!have_header) {
      if (fields != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        throw ParseError("expected CSV header '" + want + "'", lineno);
      }
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, lineno));
    t.rows.push_back(std::move(row));
    t.lines.push_back(lineno);
  }
  if (!have_header) throw ParseError("missing CSV header", lineno + 1);
  return t;
}

CsvTable read_csv_file(const std::string& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv(in, expected_header);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_double(r[i]);
    out << '\n';
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
}

namespace {

void check_finite_rows(const CsvTable& t) {
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    for (double v : t.rows[k]) {
      if (!std::isfinite(v)) throw ParseError("non-finite value", t.lines[k]);
    }
  }
}

}  // namespace

dispersion::ResonanceGrid grid_from_csv(const CsvTable& t) {
  check_finite_rows(t);
  dispersion::ResonanceGrid g;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const double mu = t.rows[k][0];
    if (mu != std::round(mu)) throw ParseError("mode index must be an integer", t.lines[k]);
    g.entries.push_back({static_cast<int>(mu), t.rows[k][1]});
  }
  return g;
}

spectra::SpectrumTrace trace_from_csv(const CsvTable& t) {
  check_finite_rows(t);
  spectra::SpectrumTrace tr;
  tr.source = "csv";
  for (const auto& r : t.rows) {
    tr.frequency_hz.push_back(r[0]);
    tr.transmission.push_back(r[1]);
  }
  return tr;
}

counting::PowerSweepRecord sweep_from_csv(const CsvTable& t) {
  check_finite_rows(t);
  counting::PowerSweepRecord s;
  for (const auto& r : t.rows) s.rows.push_back({r[0], r[1], r[2], r[3]});
  return s;
}

link::SampledField field_from_csv(const CsvTable& t) {
  check_finite_rows(t);
  link::SampledField f;
  for (const auto& r : t.rows) {
    f.xs.push_back(r[0]);
    f.ys.push_back(r[1]);
  }
  std::sort(f.xs.begin(), f.xs.end());
  f.xs.erase(std::unique(f.xs.begin(), f.xs.end()), f.xs.end());
  std::sort(f.ys.begin(), f.ys.end());
  f.ys.erase(std::unique(f.ys.begin(), f.ys.end()), f.ys.end());
  if (f.xs.size() * f.ys.size() != t.rows.size()) {
    throw ParseError("field samples do not form a complete rectangular grid", t.lines.empty() ? 1 : t.lines.back());
  }
  f.amplitude.assign(t.rows.size(), std::nan(""));
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto ix = static_cast<std::size_t>(std::lower_bound(f.xs.begin(), f.xs.end(), t.rows[k][0]) - f.xs.begin());
    const auto iy = static_cast<std::size_t>(std::lower_bound(f.ys.begin(), f.ys.end(), t.rows[k][1]) - f.ys.begin());
    double& slot = f.amplitude[iy * f.xs.size() + ix];
    if (!std::isnan(slot)) throw ParseError("duplicate field sample", t.lines[k]);
    slot = t.rows[k][2];
  }
  return f;
}

double get_double(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError("expected a JSON object holding '" + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing key '" + key + "'");
  if (!it->is_number()) throw ConfigError("key '" + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ConfigError("key '" + key + "' must be finite");
  return v;
}

double get_double(const json& j, const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get_double(j, key);
}

const json& get_object(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError("expected a JSON object holding '" + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing key '" + key + "'");
  if (!it->is_object()) throw ConfigError("key '" + key + "' must be an object");
  return *it;
}

namespace {

std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError("key '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::array<double, 3> get_triplet(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 3) {
    throw ConfigError("key '" + key + "' must be an array of 3 numbers");
  }
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j.at(key)[i].is_number()) throw ConfigError("key '" + key + "' must be an array of 3 numbers");
    out[i] = j.at(key)[i].get<double>();
  }
  return out;
}

std::optional<double> get_optional(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_double(j, key);
}

// Domain validators raise InvalidInput; inside a config that is a configuration error.
template <typename F>
auto as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

dispersion::MaterialModel material_from_json(const json& j) {
  dispersion::MaterialModel m;
  m.name = get_string(j, "name", "custom");
  m.b = get_triplet(j, "b");
  m.c_um2 = get_triplet(j, "c_um2");
  m.min_wavelength_um = get_double(j, "min_wavelength_um", 0.3);
  m.max_wavelength_um = get_double(j, "max_wavelength_um", 5.0);
  as_config([&] { dispersion::validate(m); });
  return m;
}

json to_json(const dispersion::MaterialModel& m) {
  return {{"name", m.name},
          {"b", m.b},
          {"c_um2", m.c_um2},
          {"min_wavelength_um", m.min_wavelength_um},
          {"max_wavelength_um", m.max_wavelength_um}};
}

dispersion::EffectiveIndexTable index_table_from_json(const json& j) {
  dispersion::EffectiveIndexTable t;
  t.mode = get_string(j, "mode", "");
  t.radius_m = get_double(j, "radius_m");
  if (!j.contains("samples") || !j.at("samples").is_array()) throw ConfigError("key 'samples' must be an array");
  for (const auto& s : j.at("samples")) t.samples.push_back({get_double(s, "frequency_hz"), get_double(s, "n_eff")});
  as_config([&] { dispersion::validate(t); });
  return t;
}

json to_json(const dispersion::DispersionFit& f) {
  json samples = json::array();
  for (const auto& s : f.samples) samples.push_back({{"mu", s.mu}, {"dint_hz", s.dint_hz}, {"residual_hz", s.residual_hz}});
  return {{"f0_hz", f.f0_hz},
          {"d1_hz", f.d1_hz},
          {"d2_hz", f.d2_hz},
          {"window", {{"lo", f.window.lo}, {"hi", f.window.hi}}},
          {"samples", samples}};
}

spectra::ResonatorMode mode_from_json(const json& j) {
  spectra::ResonatorMode m;
  m.f0_hz = get_double(j, "f0_hz");
  m.kappa0_hz = get_double(j, "kappa0_hz");
  m.kappa_ex_hz = get_double(j, "kappa_ex_hz");
  m.split_re_hz = get_double(j, "split_re_hz", 0.0);
  m.split_im_hz = get_double(j, "split_im_hz", 0.0);
  as_config([&] { spectra::validate(m); });
  return m;
}

json to_json(const spectra::ResonatorMode& m) {
  return {{"f0_hz", m.f0_hz},
          {"kappa0_hz", m.kappa0_hz},
          {"kappa_ex_hz", m.kappa_ex_hz},
          {"split_re_hz", m.split_re_hz},
          {"split_im_hz", m.split_im_hz}};
}

json to_json(const spectra::ResonanceFit& f) {
  json j = to_json(f.mode);
  j["loaded_linewidth_hz"] = f.mode.loaded_linewidth_hz();
  j["loaded_q"] = f.mode.loaded_q();
  j["ambiguous"] = f.coupling_ambiguous;
  j["rms"] = f.rms;
  j["baseline_offset"] = f.baseline_offset;
  j["baseline_slope"] = f.baseline_slope;
  return j;
}

sfwm::ModeTriple triple_from_json(const json& j) {
  sfwm::ModeTriple t;
  t.signal = mode_from_json(get_object(j, "signal"));
  t.pump = mode_from_json(get_object(j, "pump"));
  t.idler = mode_from_json(get_object(j, "idler"));
  t.n2_m2_per_w = get_double(j, "n2_m2_per_w");
  t.vg_m_per_s = get_double(j, "vg_m_per_s");
  t.a_eff_m2 = get_double(j, "a_eff_m2");
  t.radius_m = get_double(j, "radius_m");
  as_config([&] { sfwm::validate(t); });
  return t;
}

json to_json(const sfwm::ModeTriple& t) {
  return {{"signal", to_json(t.signal)},
          {"pump", to_json(t.pump)},
          {"idler", to_json(t.idler)},
          {"n2_m2_per_w", t.n2_m2_per_w},
          {"vg_m_per_s", t.vg_m_per_s},
          {"a_eff_m2", t.a_eff_m2},
          {"radius_m", t.radius_m}};
}

json to_json(const sfwm::Report& r) {
  constexpr double mw2 = 1e-6;  // W^2 per mW^2
  json j = {{"gamma_rad_per_s", r.gamma_rad_per_s},
            {"pgr_pairs_per_s_per_w2", r.pgr_pairs_per_s_per_w2},
            {"pgr_pairs_per_s_per_mw2", r.pgr_pairs_per_s_per_w2 * mw2},
            {"linewidth_hz", r.linewidth_hz},
            {"brightness_pairs_per_s_per_mw2_per_ghz", r.brightness_pairs_per_s_per_w2_per_hz * mw2 * 1e9},
            {"power_w", r.power_w},
            {"alpha_hz", r.alpha_hz},
            {"n1_hz", r.n1_hz},
            {"bus_flux_hz", r.bus_flux_hz},
            {"energy_mismatch_hz", r.energy_mismatch_hz},
            {"above_threshold", r.above_threshold},
            {"warnings", r.warnings}};
  if (r.a_coefficient) j["threshold_coefficient_a"] = *r.a_coefficient;
  if (r.threshold) {
    j["threshold"] = {{"power_w", r.threshold->power_w},
                      {"alpha_max_hz", r.threshold->alpha_max_hz},
                      {"n1_max_hz", r.threshold->n1_max_hz},
                      {"bus_max_hz", r.threshold->bus_max_hz}};
  } else {
    j["threshold"] = nullptr;
  }
  return j;
}

counting::DetectionChain chain_from_json(const json& j) {
  counting::DetectionChain c;
  c.eta_s = get_double(j, "eta_s");
  c.eta_i = get_double(j, "eta_i");
  c.dark_s_hz = get_double(j, "dark_s_hz", 0.0);
  c.dark_i_hz = get_double(j, "dark_i_hz", 0.0);
  c.jitter_sigma_s = get_double(j, "jitter_sigma_s", 0.0);
  c.dead_time_s = get_double(j, "dead_time_s", 0.0);
  as_config([&] { counting::validate(c); });
  return c;
}

json to_json(const counting::DetectionChain& c) {
  return {{"eta_s", c.eta_s},
          {"eta_i", c.eta_i},
          {"dark_s_hz", c.dark_s_hz},
          {"dark_i_hz", c.dark_i_hz},
          {"jitter_sigma_s", c.jitter_sigma_s},
          {"dead_time_s", c.dead_time_s}};
}

counting::SourceTruth source_from_json(const json& j) {
  counting::SourceTruth s;
  s.a_pairs_per_s_per_w2 = get_double(j, "a_pairs_per_s_per_w2");
  s.b_s_per_s_per_w = get_double(j, "b_s_per_s_per_w", 0.0);
  s.b_i_per_s_per_w = get_double(j, "b_i_per_s_per_w", 0.0);
  s.kappa_s_hz = get_double(j, "kappa_s_hz");
  s.kappa_i_hz = get_double(j, "kappa_i_hz");
  s.power_w = get_double(j, "power_w", 0.0);
  s.threshold_w = get_optional(j, "threshold_w");
  if (!(s.a_pairs_per_s_per_w2 >= 0.0) || !(s.b_s_per_s_per_w >= 0.0) || !(s.b_i_per_s_per_w >= 0.0) ||
      !(s.kappa_s_hz > 0.0) || !(s.kappa_i_hz > 0.0) || !(s.power_w >= 0.0)) {
    throw ConfigError("source rates must be >= 0 and linewidths positive");
  }
  return s;
}

json to_json(const counting::SourceTruth& s) {
  json j = {{"a_pairs_per_s_per_w2", s.a_pairs_per_s_per_w2},
            {"b_s_per_s_per_w", s.b_s_per_s_per_w},
            {"b_i_per_s_per_w", s.b_i_per_s_per_w},
            {"kappa_s_hz", s.kappa_s_hz},
            {"kappa_i_hz", s.kappa_i_hz},
            {"power_w", s.power_w}};
  j["threshold_w"] = s.threshold_w ? json(*s.threshold_w) : json(nullptr);
  return j;
}

counting::MeasurementSettings measurement_from_json(const json& j) {
  counting::MeasurementSettings m;
  m.bin_width_s = get_double(j, "bin_width_s", m.bin_width_s);
  m.rate_window_s = get_double(j, "rate_window_s", m.rate_window_s);
  m.car_window_s = get_double(j, "car_window_s", m.car_window_s);
  m.accidental_offset_s = get_double(j, "accidental_offset_s", m.accidental_offset_s);
  m.accidental_span_s = get_double(j, "accidental_span_s", m.accidental_span_s);
  const double region = std::max({m.rate_window_s, m.car_window_s, m.accidental_span_s});
  if (!(m.bin_width_s > 0.0) || !(m.rate_window_s >= m.bin_width_s) || !(m.car_window_s >= m.bin_width_s) ||
      !(m.accidental_span_s >= 0.0) || !(m.accidental_offset_s - 0.5 * region > 0.5 * m.rate_window_s + 10e-9)) {
    throw ConfigError("measurement windows must be at least one bin and the accidental region clear of the peak");
  }
  return m;
}

json to_json(const counting::MeasurementSettings& m) {
  return {{"bin_width_s", m.bin_width_s},
          {"rate_window_s", m.rate_window_s},
          {"car_window_s", m.car_window_s},
          {"accidental_offset_s", m.accidental_offset_s},
          {"accidental_span_s", m.accidental_span_s}};
}

json to_json(const counting::CoincidenceRates& r) {
  return {{"n_cc_hz", r.n_cc_hz},   {"n_acc_hz", r.n_acc_hz},   {"n_net_hz", r.n_net_hz},
          {"car", r.car},           {"cc_counts", r.cc_counts}, {"acc_counts", r.acc_counts},
          {"acc_region_s", r.acc_region_s}};
}

json to_json(const counting::HeraldedG2& g) {
  return {{"g2h", g.g2h}, {"sigma", g.sigma}, {"n1", g.n1}, {"n12", g.n12}, {"n13", g.n13}, {"n123", g.n123}};
}

json to_json(const counting::PgrExtraction& x) {
  return {{"a_pairs_per_s_per_w2", x.a_pairs_per_s_per_w2},
          {"a_pairs_per_s_per_mw2", x.a_pairs_per_s_per_w2 * 1e-6},
          {"eta_s", x.eta_s},
          {"eta_i", x.eta_i},
          {"b_s_per_s_per_w", x.b_s_per_s_per_w},
          {"b_i_per_s_per_w", x.b_i_per_s_per_w},
          {"c_s", x.c_s},
          {"c_i", x.c_i},
          {"c_net", x.c_net},
          {"offset_s_hz", x.offset_s_hz},
          {"offset_i_hz", x.offset_i_hz}};
}

franson::FransonConfig franson_from_json(const json& j) {
  franson::FransonConfig c;
  c.delta_t_s = get_double(j, "delta_t_s", c.delta_t_s);
  c.phase_rad = get_double(j, "phase_rad", c.phase_rad);
  c.intrinsic_visibility = get_double(j, "intrinsic_visibility", c.intrinsic_visibility);
  c.window_s = get_double(j, "window_s", c.window_s);
  return c;
}

json to_json(const franson::FransonConfig& c) {
  return {{"delta_t_s", c.delta_t_s},
          {"phase_rad", c.phase_rad},
          {"intrinsic_visibility", c.intrinsic_visibility},
          {"window_s", c.window_s}};
}

json to_json(const franson::FringeFit& f) {
  return {{"amplitude_hz", f.amplitude},
          {"visibility", f.visibility},
          {"visibility_sigma", f.visibility_sigma},
          {"extrema_visibility", f.extrema_visibility},
          {"rms_hz", f.rms}};
}

link::LossBudget budget_from_json(const json& j) {
  link::LossBudget b;
  if (!j.is_object() || !j.contains("stages") || !j.at("stages").is_array()) {
    throw ConfigError("loss budget needs a 'stages' array");
  }
  for (const auto& s : j.at("stages")) b.stages.push_back({get_string(s, "label", ""), get_double(s, "eta")});
  as_config([&] { link::validate(b); });
  return b;
}

json to_json(const link::LossBudget& b) {
  json stages = json::array();
  for (const auto& s : b.stages) stages.push_back({{"label", s.label}, {"eta", s.eta}});
  return {{"stages", stages}};
}

link::FiberSpec fiber_from_json(const json& j) {
  link::FiberSpec f{get_double(j, "core_radius_um"), get_double(j, "numerical_aperture"), get_double(j, "wavelength_um")};
  as_config([&] { link::validate(f); });
  return f;
}

json to_json(const link::FiberSpec& f) {
  return {{"core_radius_um", f.core_radius_um}, {"numerical_aperture", f.numerical_aperture}, {"wavelength_um", f.wavelength_um}};
}

}  // namespace pairsource::io

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pairsource/constants.hpp"
#include "pairsource/errors.hpp"

namespace pairsource::cli {

namespace fs = std::filesystem;

namespace {

std::string fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

io::CsvTable read_ref(const json& ref, const std::vector<std::string>& header) {
  if (!ref.is_object() || !ref.contains("path") || !ref.at("path").is_string()) {
    throw ConfigError("file reference needs a 'path'");
  }
  const std::string path = ref.at("path").get<std::string>();
  const std::string data = slurp(path);
  if (ref.contains("fnv1a64") && ref.at("fnv1a64").get<std::string>() != fnv1a64(data)) {
    throw ConfigError("'" + path + "' changed since the config was written (hash mismatch)");
  }
  std::istringstream in(data);
  return io::read_csv(in, header);
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  io::write_csv(out, header, rows);
  return out.str();
}

// Two-column quantity,value table for scalar reports.
std::string scalar_table(const std::vector<std::pair<std::string, double>>& items) {
  std::ostringstream out;
  out << "quantity,value\n";
  for (const auto& [k, v] : items) out << k << ',' << io::format_double(v) << '\n';
  return out.str();
}

std::string histogram_csv(const counting::CorrelationHistogram& h) {
  std::ostringstream out;
  out << "offset_s,counts\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) out << io::format_double(h.offsets_s[i]) << ',' << h.counts[i] << '\n';
  return out.str();
}

std::string tags_csv(const std::vector<const counting::TimeTagStream*>& streams) {
  struct Tag {
    double t;
    std::size_t ch;
  };
  std::vector<Tag> all;
  for (std::size_t c = 0; c < streams.size(); ++c) {
    for (double t : streams[c]->tags) all.push_back({t, c});
  }
  std::sort(all.begin(), all.end(), [](const Tag& a, const Tag& b) { return a.t < b.t || (a.t == b.t && a.ch < b.ch); });
  std::string out = "channel,timestamp_s\n";
  out.reserve(all.size() * 32);
  for (const auto& tag : all) {
    out += streams[tag.ch]->channel;
    out += ',';
    out += io::format_double(tag.t);
    out += '\n';
  }
  return out;
}

double req(const json& j, const std::string& key) { return io::get_double(j, key); }

std::uint64_t need_seed(std::optional<std::uint64_t> seed, const std::string& command) {
  if (!seed) throw ConfigError("'" + command + "' is stochastic and needs --seed");
  return *seed;
}

counting::SourceTruth truth_at(const json& fixture, double power_w) {
  auto truth = io::source_from_json(io::get_object(fixture, "source"));
  truth.power_w = power_w;
  return truth;
}

counting::MeasurementSettings measurement_of(const json& fixture) {
  return fixture.contains("measurement") ? io::measurement_from_json(fixture.at("measurement"))
                                         : counting::MeasurementSettings{};
}

std::vector<double> double_list(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError("key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError("key '" + key + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

counting::TimeTagStream merge(const counting::TimeTagStream& a, const counting::TimeTagStream& b) {
  counting::TimeTagStream m;
  m.channel = "signal";
  m.duration_s = a.duration_s;
  m.tags.resize(a.tags.size() + b.tags.size());
  std::merge(a.tags.begin(), a.tags.end(), b.tags.begin(), b.tags.end(), m.tags.begin());
  return m;
}

json or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Output run_dispersion(const json& config) {
  const auto grid = io::grid_from_csv(read_ref(config.at("grid_csv"), io::kGridHeader));
  dispersion::MuWindow window;
  if (config.contains("window")) {
    window.lo = config.at("window").value("lo", window.lo);
    window.hi = config.at("window").value("hi", window.hi);
  }
  const auto fit = dispersion::fit_dispersion(grid, window);

  Output out;
  out.result = io::to_json(fit);
  if (config.contains("triple_mu") && !config.at("triple_mu").is_null()) {
    const auto& t = config.at("triple_mu");
    if (!t.is_array() || t.size() != 3) throw ConfigError("triple_mu needs three mode indices");
    std::array<double, 3> f{};
    for (std::size_t k = 0; k < 3; ++k) {
      const int mu = t[k].get<int>();
      const auto it = std::find_if(grid.entries.begin(), grid.entries.end(), [mu](const auto& e) { return e.mu == mu; });
      if (it == grid.entries.end()) throw ConfigError("mode index " + std::to_string(mu) + " is not in the grid");
      f[k] = it->frequency_hz;
    }
    out.result["phase_matching"] = {{"mu", t},
                                    {"frequencies_hz", f},
                                    {"metric_hz", dispersion::phase_matching_metric(f[0], f[1], f[2])}};
  }
  if (config.contains("neff_tables") && !config.at("neff_tables").empty()) {
    const double at = io::get_double(config, "fsr_frequency_hz", fit.f0_hz);
    std::vector<dispersion::ModeCandidate> cands;
    json cj = json::array();
    for (const auto& tj : config.at("neff_tables")) {
      const auto table_in = io::index_table_from_json(tj);
      const double fsr = dispersion::fsr_from_neff(table_in, at);
      cands.push_back({table_in.mode, fsr});
      cj.push_back({{"mode", table_in.mode}, {"fsr_hz", fsr}});
    }
    const double measured = io::get_double(config, "measured_fsr_hz", fit.d1_hz);
    const auto match = dispersion::identify_mode(measured, cands);
    out.result["mode_candidates"] = cj;
    out.result["mode_match"] = {{"measured_fsr_hz", measured}, {"mode", match.label}, {"mismatch_hz", match.mismatch_hz}};
  }
  std::vector<std::vector<double>> rows;
  for (const auto& s : fit.samples) rows.push_back({static_cast<double>(s.mu), s.dint_hz, s.residual_hz});
  out.table = table({"mu", "dint_hz", "residual_hz"}, rows);
  return out;
}

Output run_fit_spectrum(const json& config) {
  auto trace = io::trace_from_csv(read_ref(config.at("trace_csv"), io::kTraceHeader));
  spectra::validate(trace);
  const double min_depth = io::get_double(config, "min_depth", 0.05);
  const double min_sep = io::get_double(config, "min_separation_hz", 1e9);
  const double half_window = io::get_double(config, "half_window_hz", 0.0);
  spectra::FitOptions opts;
  opts.over_coupled = config.value("over_coupled", false);
  opts.linear_baseline = config.value("linear_baseline", false);

  const auto centres = spectra::find_resonances(trace, min_depth, min_sep);
  Output out;
  json list = json::array();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < centres.size(); ++i) {
    double lo = i > 0 ? 0.5 * (centres[i - 1] + centres[i]) : trace.frequency_hz.front();
    double hi = i + 1 < centres.size() ? 0.5 * (centres[i] + centres[i + 1]) : trace.frequency_hz.back();
    if (half_window > 0.0) {
      lo = std::max(lo, centres[i] - half_window);
      hi = std::min(hi, centres[i] + half_window);
    }
    json entry = {{"center_guess_hz", centres[i]}, {"window_hz", {lo, hi}}};
    try {
      const auto fit = spectra::fit_resonance(trace, lo, hi, opts);
      entry.update(io::to_json(fit));
      rows.push_back({fit.mode.f0_hz, fit.mode.kappa0_hz, fit.mode.kappa_ex_hz, fit.mode.loaded_linewidth_hz(),
                      fit.mode.loaded_q(), fit.coupling_ambiguous ? 1.0 : 0.0, fit.rms});
    } catch (const Error& e) {
      entry["error"] = e.what();
    }
    list.push_back(entry);
  }
  out.result = {{"count", list.size()}, {"resonances", list}};
  out.table = table({"f0_hz", "kappa0_hz", "kappa_ex_hz", "loaded_linewidth_hz", "loaded_q", "ambiguous", "rms"}, rows);
  return out;
}

Output run_design(const json& config) {
  const auto triple = io::triple_from_json(io::get_object(config, "triple"));
  std::optional<double> a_coeff;
  if (config.contains("measured_threshold_w") && !config.at("measured_threshold_w").is_null()) {
    a_coeff = sfwm::calibrate_threshold_coefficient(req(config, "measured_threshold_w"), triple);
  }
  Output out;
  json reports = json::array();
  std::vector<std::vector<double>> rows;
  for (double p : double_list(config, "powers_w")) {
    const auto r = sfwm::design_report(triple, p, a_coeff);
    reports.push_back(io::to_json(r));
    rows.push_back({p, r.pgr_pairs_per_s_per_w2 * 1e-6, r.linewidth_hz, r.brightness_pairs_per_s_per_w2_per_hz * 1e3,
                    r.alpha_hz, r.n1_hz, r.bus_flux_hz, r.above_threshold ? 1.0 : 0.0});
  }
  out.result = {{"threshold_coefficient_a", or_null(a_coeff)}, {"reports", reports}};
  out.table = table({"power_w", "pgr_pairs_per_s_per_mw2", "linewidth_hz", "brightness_pairs_per_s_per_mw2_per_ghz",
                     "alpha_hz", "n1_hz", "bus_flux_hz", "above_threshold"},
                    rows);
  return out;
}

Output run_simulate(const json& config, std::uint64_t seed) {
  const json& fixture = io::get_object(config, "fixture");
  const auto truth = truth_at(fixture, req(config, "power_w"));
  const auto chain = io::chain_from_json(io::get_object(fixture, "chain"));
  const auto ms = measurement_of(fixture);
  const double duration = req(config, "duration_s");
  const bool hbt = config.value("hbt", false);
  const bool write_tags = config.value("write_tags", true);
  const double g2_window = io::get_double(config, "g2_window_s", ms.car_window_s);

  const auto tags = counting::simulate_tags(truth, chain, duration, seed, hbt);
  const counting::TimeTagStream signal = hbt ? merge(tags.signal, *tags.signal_b) : tags.signal;
  const double widest = std::max({ms.rate_window_s, ms.car_window_s, ms.accidental_span_s});
  const double reach = ms.accidental_offset_s + 0.5 * widest + 2.0 * ms.bin_width_s;
  const auto hist = counting::correlate(signal, tags.idler, ms.bin_width_s, reach);

  Output out;
  json r;
  r["singles"] = {{"signal_hz", signal.rate_hz()}, {"idler_hz", tags.idler.rate_hz()}};
  if (hbt) {
    r["singles"]["signal_a_hz"] = tags.signal.rate_hz();
    r["singles"]["signal_b_hz"] = tags.signal_b->rate_hz();
  }
  r["pair_rate_hz"] = truth.pair_rate_hz();
  r["correlation_fwhm_model_s"] = truth.correlation_fwhm_s();
  try {
    r["histogram_fwhm_s"] = counting::peak_fwhm(hist);
  } catch (const NumericalError& e) {
    r["histogram_fwhm_s"] = nullptr;
    r["histogram_fwhm_error"] = e.what();
  }
  for (const auto& [key, w] : {std::pair{"rate_window", ms.rate_window_s}, std::pair{"car_window", ms.car_window_s}}) {
    try {
      r[key] = io::to_json(counting::coincidence_rates(hist, w, ms.accidental_offset_s, ms.accidental_span_s));
    } catch (const NumericalError& e) {
      r[key] = {{"error", e.what()}};
    }
    r[key]["window_s"] = w;
  }
  if (hbt) {
    try {
      r["heralded_g2"] = io::to_json(counting::heralded_g2(tags.idler, tags.signal, *tags.signal_b, g2_window));
    } catch (const NumericalError& e) {
      r["heralded_g2"] = {{"error", e.what()}};
    }
    r["heralded_g2"]["window_s"] = g2_window;
  }
  out.result = r;

  std::vector<std::pair<std::string, double>> items{{"signal_hz", signal.rate_hz()}, {"idler_hz", tags.idler.rate_hz()}};
  if (r["car_window"].contains("car")) items.emplace_back("car", r["car_window"]["car"].get<double>());
  if (r["rate_window"].contains("n_net_hz")) items.emplace_back("n_net_hz", r["rate_window"]["n_net_hz"].get<double>());
  if (r["histogram_fwhm_s"].is_number()) items.emplace_back("histogram_fwhm_s", r["histogram_fwhm_s"].get<double>());
  if (hbt && r["heralded_g2"].contains("g2h")) items.emplace_back("g2h", r["heralded_g2"]["g2h"].get<double>());
  out.table = scalar_table(items);

  out.files.push_back({"histogram.csv", histogram_csv(hist)});
  if (write_tags) {
    std::vector<const counting::TimeTagStream*> streams{&tags.signal, &tags.idler};
    if (hbt) streams.push_back(&*tags.signal_b);
    out.files.push_back({"tags.csv", tags_csv(streams)});
  }
  return out;
}

Output run_franson(const json& config, std::uint64_t seed) {
  const json& fixture = io::get_object(config, "fixture");
  const auto truth = truth_at(fixture, req(config, "power_w"));
  const auto chain = io::chain_from_json(io::get_object(fixture, "chain"));
  auto fc = io::franson_from_json(fixture.contains("franson") ? fixture.at("franson") : json::object());
  fc.intrinsic_visibility = io::get_double(config, "intrinsic_visibility", fc.intrinsic_visibility);
  const double duration = req(config, "duration_s");
  const auto phases = double_list(config, "phases_rad");
  if (phases.empty()) throw ConfigError("franson needs at least one phase");

  Output out;
  json points = json::array();
  std::vector<double> ncc;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> warnings;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    fc.phase_rad = phases[k];
    const auto run = franson::simulate_franson(truth, fc, chain, duration, counting::derive_seed(seed, k));
    if (k == 0) warnings = run.warnings;
    const auto pk = franson::peak_integrals(run.histogram, fc.delta_t_s, fc.window_s);
    ncc.push_back(pk.central / duration);
    rows.push_back({phases[k], ncc.back()});
    points.push_back({{"phase_rad", phases[k]},
                      {"central_counts", pk.central},
                      {"side_minus_counts", pk.side_minus},
                      {"side_plus_counts", pk.side_plus},
                      {"accidental_counts", pk.accidental},
                      {"ncc_hz", ncc.back()}});
    char name[40];
    std::snprintf(name, sizeof name, "histogram_%03zu.csv", k);
    out.files.push_back({name, histogram_csv(run.histogram)});
  }
  out.table = table(io::kFringeHeader, rows);
  out.files.push_back({"fringe.csv", out.table});

  const auto fit = franson::fringe_fit(phases, ncc);
  const auto chsh = franson::chsh_margin(std::clamp(fit.visibility, 0.0, 1.0));
  out.result = {{"points", points},
                {"fit", io::to_json(fit)},
                {"chsh", {{"passes", chsh.passes}, {"margin", chsh.margin}, {"limit", 1.0 / std::numbers::sqrt2}}},
                {"warnings", warnings}};
  return out;
}

Output run_extract_pgr(const json& config) {
  const auto sweep = io::sweep_from_csv(read_ref(config.at("sweep_csv"), io::kSweepHeader));
  const auto x = counting::extract_pgr(sweep, config.value("fit_dark_offset", true));
  Output out;
  out.result = io::to_json(x);
  out.table = table({"a_pairs_per_s_per_w2", "eta_s", "eta_i", "b_s_per_s_per_w", "b_i_per_s_per_w"},
                    {{x.a_pairs_per_s_per_w2, x.eta_s, x.eta_i, x.b_s_per_s_per_w, x.b_i_per_s_per_w}});
  return out;
}

Output run_linkbudget(const json& config) {
  Output out;
  json r = json::object();
  std::vector<std::pair<std::string, double>> items;

  if (config.contains("rates")) {
    json rates = json::array();
    for (const auto& e : config.at("rates")) {
      const double in = req(e, "rate_hz");
      const auto losses = double_list(e, "losses_db");
      const double rate_out = link::db_chain(in, losses);
      json row = {{"label", e.value("label", "")}, {"rate_in_hz", in}, {"losses_db", losses}, {"rate_out_hz", rate_out}};
      if (e.contains("requirement_hz")) {
        row["requirement_hz"] = req(e, "requirement_hz");
        row["meets_requirement"] = rate_out > req(e, "requirement_hz");
      }
      rates.push_back(row);
      items.emplace_back("rate_out_hz[" + row["label"].get<std::string>() + "]", rate_out);
    }
    r["rates"] = rates;
  }
  if (config.contains("thermal")) {
    const auto& t = config.at("thermal");
    const double shift = link::thermal_shift(req(t, "coefficient_hz_per_k"), req(t, "delta_t_k"));
    r["thermal"] = {{"shift_hz", shift}};
    items.emplace_back("thermal_shift_hz", shift);
  }
  std::optional<double> gaussian_w_m;
  if (config.contains("fiber")) {
    const auto fiber = io::fiber_from_json(config.at("fiber"));
    const auto v = link::v_number(fiber);
    json fj = {{"v_number", v.v}, {"single_mode", v.single_mode}};
    try {
      const double mfd = link::marcuse_mfd_um(fiber);
      fj["w_over_r"] = link::marcuse_w_over_r(v.v);
      fj["mfd_um"] = mfd;
      gaussian_w_m = 0.5 * mfd * 1e-6;
      items.emplace_back("mfd_um", mfd);
    } catch (const OutOfRange& e) {
      fj["mfd_error"] = e.what();
    }
    r["fiber"] = fj;
    items.emplace_back("v_number", v.v);
  }
  json budgets = json::object();
  auto add_budget = [&](const std::string& name, const json& bj) {
    const auto b = io::budget_from_json(bj);
    const auto s = link::compose_budget(b);
    json stages = json::array();
    for (const auto& st : b.stages) stages.push_back({{"label", st.label}, {"eta", st.eta}, {"loss_db", link::stage_db(st.eta)}});
    budgets[name] = {{"stages", stages}, {"overall", s.overall}, {"overall_db", s.overall_db}};
    items.emplace_back("overall[" + name + "]", s.overall);
    items.emplace_back("overall_db[" + name + "]", s.overall_db);
  };
  if (config.contains("stages")) add_budget("budget", json{{"stages", config.at("stages")}});
  if (config.contains("budgets")) {
    for (const auto& [name, bj] : config.at("budgets").items()) add_budget(name, bj);
  }
  if (!budgets.empty()) r["budgets"] = budgets;
  if (config.contains("taper_field_csv")) {
    const auto field = io::field_from_csv(read_ref(config.at("taper_field_csv"), io::kFieldHeader));
    const double w = io::get_double(config, "gaussian_w_m", gaussian_w_m.value_or(0.0));
    if (!(w > 0.0)) throw ConfigError("taper overlap needs 'gaussian_w_m' or a fiber to derive it from");
    const auto ov = link::overlap_efficiency(field, link::GaussianField::circular(w));
    r["taper_overlap"] = {{"efficiency", ov.efficiency}, {"error_estimate", ov.error_estimate}, {"gaussian_w_m", w}};
    items.emplace_back("taper_overlap", ov.efficiency);
  }
  out.result = r;
  out.table = scalar_table(items);
  return out;
}

Output run_sweep(const json& config, std::uint64_t seed) {
  const json& fixture = io::get_object(config, "fixture");
  const auto chain = io::chain_from_json(io::get_object(fixture, "chain"));
  const auto ms = measurement_of(fixture);
  const double duration = req(config, "duration_s");
  auto powers = double_list(config, "powers_w");
  std::sort(powers.begin(), powers.end());
  if (std::adjacent_find(powers.begin(), powers.end()) != powers.end()) throw ConfigError("sweep powers must be distinct");

  Output out;
  counting::PowerSweepRecord record;
  json points = json::array();
  for (std::size_t k = 0; k < powers.size(); ++k) {
    const auto pt = counting::measure_point(truth_at(fixture, powers[k]), chain, duration, counting::derive_seed(seed, k), ms);
    record.rows.push_back(pt.row);
    json pj = {{"power_w", pt.row.power_w},
               {"ns_hz", pt.row.ns_hz},
               {"ni_hz", pt.row.ni_hz},
               {"nnet_hz", pt.row.nnet_hz},
               {"rate_window", io::to_json(pt.rate_window)}};
    pj["car_window"] = pt.car_window ? io::to_json(*pt.car_window) : json(nullptr);
    points.push_back(pj);
  }
  std::vector<std::vector<double>> rows;
  for (const auto& row : record.rows) rows.push_back({row.power_w, row.ns_hz, row.ni_hz, row.nnet_hz});
  out.table = table(io::kSweepHeader, rows);
  out.files.push_back({"sweep.csv", out.table});
  json r = {{"points", points}};
  try {
    r["extraction"] = io::to_json(counting::extract_pgr(record, config.value("fit_dark_offset", true)));
  } catch (const Error& e) {
    r["extraction"] = {{"error", e.what()}};
  }
  out.result = r;
  return out;
}

}  // namespace

bool is_stochastic(const std::string& command) {
  return command == "simulate" || command == "franson" || command == "sweep";
}

Output run_command(const std::string& command, const json& config, std::optional<std::uint64_t> seed) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  if (command == "dispersion") return run_dispersion(config);
  if (command == "fit-spectrum") return run_fit_spectrum(config);
  if (command == "design") return run_design(config);
  if (command == "extract-pgr") return run_extract_pgr(config);
  if (command == "linkbudget") return run_linkbudget(config);
  if (command == "simulate") return run_simulate(config, need_seed(seed, command));
  if (command == "franson") return run_franson(config, need_seed(seed, command));
  if (command == "sweep") return run_sweep(config, need_seed(seed, command));
  throw ConfigError("unknown command '" + command + "'");
}

json file_ref(const std::string& path) {
  const std::string data = slurp(path);
  return {{"path", fs::absolute(path).lexically_normal().string()}, {"fnv1a64", fnv1a64(data)}};
}

json load_config_file(const std::string& path) {
  json j = io::read_json_file(path);
  if (!j.is_object()) throw ConfigError("'" + path + "' must hold a JSON object");
  const fs::path dir = fs::path(path).parent_path();
  auto resolve = [&](const std::string& rel) { return (dir / rel).string(); };
  if (j.contains("budgets") && j.at("budgets").is_object()) {
    for (auto& [name, v] : j.at("budgets").items()) {
      if (v.is_string()) v = io::read_json_file(resolve(v.get<std::string>()));
    }
  }
  if (j.contains("taper_field_csv") && j.at("taper_field_csv").is_string()) {
    j["taper_field_csv"] = file_ref(resolve(j.at("taper_field_csv").get<std::string>()));
  }
  return j;
}

json envelope(const std::string& command, const json& config, std::optional<std::uint64_t> seed, const json& result) {
  return {{"tool", "pairsource"},
          {"version", kToolVersion},
          {"command", command},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"config", config},
          {"result", result}};
}

std::string csv_preamble(const std::string& command, const json& config, std::optional<std::uint64_t> seed) {
  std::string s = "# pairsource " + std::string(kToolVersion) + " command=" + command;
  s += " seed=" + (seed ? std::to_string(*seed) : std::string("none")) + "\n";
  s += "# config: " + config.dump() + "\n";
  return s;
}

}  // namespace pairsource::cli

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "commands.hpp"
#include "pairsource/constants.hpp"
#include "pairsource/errors.hpp"

namespace fs = std::filesystem;
using namespace pairsource;
using cli::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "json";
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << text;
}

void emit(const std::string& command, const json& config, const Globals& g) {
  const auto out = cli::run_command(command, config, g.seed);
  const std::string preamble = cli::csv_preamble(command, config, g.seed);
  const std::string text = g.format == "csv" ? preamble + out.table
                                             : cli::envelope(command, config, g.seed, out.result).dump(2) + "\n";
  std::cout << text;
  if (g.out_dir.empty()) return;
  fs::create_directories(g.out_dir);
  write_file(fs::path(g.out_dir) / (command + "." + g.format), text);
  for (const auto& f : out.files) write_file(fs::path(g.out_dir) / f.name, preamble + f.content);
}

json fixture_or_throw(const std::string& path) {
  json j = io::read_json_file(path);
  if (!j.is_object()) throw ConfigError("'" + path + "' must hold a JSON object");
  return j;
}

double fixture_power(const json& fixture) { return io::get_double(io::get_object(fixture, "source"), "power_w"); }

int run(int argc, char** argv) {
  CLI::App app{"Microresonator photon-pair source toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for stochastic commands")->capture_default_str();
  app.add_option("--out", g.out_dir, "Directory for output artifacts");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  std::string command;
  json config = json::object();

  // dispersion
  auto* disp = app.add_subcommand("dispersion", "Fit D1/D2 and D_int to a resonance grid");
  std::string grid_csv;
  int mu_lo = -5, mu_hi = 5;
  std::vector<int> triple_mu;
  std::vector<std::string> neff_files;
  double measured_fsr = 0.0, fsr_frequency = 0.0;
  disp->add_option("--grid", grid_csv, "CSV mu,frequency_hz")->required()->check(CLI::ExistingFile);
  disp->add_option("--mu-lo", mu_lo, "Lowest mode index in the fit")->capture_default_str();
  disp->add_option("--mu-hi", mu_hi, "Highest mode index in the fit")->capture_default_str();
  disp->add_option("--triple-mu", triple_mu, "Signal, pump, idler mode indices")->expected(3);
  disp->add_option("--neff", neff_files, "Effective-index tables for mode identification")->check(CLI::ExistingFile);
  auto* mfsr = disp->add_option("--measured-fsr", measured_fsr, "Measured FSR in Hz (default: fitted D1)");
  auto* ffsr = disp->add_option("--fsr-frequency", fsr_frequency, "Frequency at which table FSRs are evaluated");
  disp->callback([&] {
    command = "dispersion";
    config["grid_csv"] = cli::file_ref(grid_csv);
    config["window"] = {{"lo", mu_lo}, {"hi", mu_hi}};
    config["triple_mu"] = triple_mu.empty() ? json(nullptr) : json(triple_mu);
    json tables = json::array();
    for (const auto& f : neff_files) tables.push_back(io::read_json_file(f));
    config["neff_tables"] = tables;
    config["measured_fsr_hz"] = *mfsr ? json(measured_fsr) : json(nullptr);
    config["fsr_frequency_hz"] = *ffsr ? json(fsr_frequency) : json(nullptr);
  });

  // fit-spectrum
  auto* fitc = app.add_subcommand("fit-spectrum", "Find and fit every resonance in a transmission trace");
  std::string trace_csv;
  double min_depth = 0.05, min_sep = 1e9, half_window = 0.0;
  bool over_coupled = false, linear_baseline = false;
  fitc->add_option("--trace", trace_csv, "CSV frequency_hz,transmission")->required()->check(CLI::ExistingFile);
  fitc->add_option("--min-depth", min_depth, "Minimum dip depth below baseline")->capture_default_str();
  fitc->add_option("--min-separation", min_sep, "Minimum dip separation in Hz")->capture_default_str();
  fitc->add_option("--half-window", half_window, "Maximum fit half-window in Hz (0: up to neighbours)");
  fitc->add_flag("--over-coupled", over_coupled, "Resolve the coupling ambiguity towards over-coupling");
  fitc->add_flag("--linear-baseline", linear_baseline, "Fit a linear transmission baseline");
  fitc->callback([&] {
    command = "fit-spectrum";
    config = {{"trace_csv", cli::file_ref(trace_csv)},
              {"min_depth", min_depth},
              {"min_separation_hz", min_sep},
              {"half_window_hz", half_window},
              {"over_coupled", over_coupled},
              {"linear_baseline", linear_baseline}};
  });

  // design
  auto* design = app.add_subcommand("design", "Closed-form SFWM figures for a mode triple");
  std::string triple_file;
  std::vector<double> design_powers;
  double threshold_w = 0.0;
  bool no_threshold = false;
  design->add_option("--triple", triple_file, "Mode-triple JSON or fixture holding 'triple'")->required()->check(CLI::ExistingFile);
  design->add_option("--power", design_powers, "On-chip pump powers in W");
  auto* thr = design->add_option("--threshold", threshold_w, "Measured OPO threshold in W for calibrating A");
  design->add_flag("--no-threshold", no_threshold, "Ignore any threshold in the fixture");
  design->callback([&] {
    command = "design";
    const json doc = fixture_or_throw(triple_file);
    const bool is_fixture = doc.contains("triple");
    config["triple"] = is_fixture ? doc.at("triple") : doc;
    if (design_powers.empty()) {
      design_powers = is_fixture && doc.contains("design_powers_w") ? doc.at("design_powers_w").get<std::vector<double>>()
                                                                    : std::vector<double>{1e-3};
    }
    config["powers_w"] = design_powers;
    json threshold = nullptr;
    if (*thr) {
      threshold = threshold_w;
    } else if (is_fixture && doc.contains("measured_threshold_w")) {
      threshold = doc.at("measured_threshold_w");
    }
    config["measured_threshold_w"] = no_threshold ? json(nullptr) : threshold;
  });

  // simulate
  auto* sim = app.add_subcommand("simulate", "Time-tag simulation with histogram, CAR and heralded g2");
  std::string fixture_file;
  double duration = 0.0, power = 0.0, g2_window = 0.0;
  bool hbt = false, no_tags = false;
  sim->add_option("--fixture", fixture_file, "Fixture JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--duration", duration, "Simulated acquisition time in s")->required();
  auto* sim_power = sim->add_option("--power", power, "On-chip pump power in W (default: fixture)");
  sim->add_flag("--hbt", hbt, "Split the signal over two detectors and report heralded g2");
  sim->add_flag("--no-tags", no_tags, "Do not write the tag stream CSV");
  auto* g2w = sim->add_option("--g2-window", g2_window, "Heralded g2 coincidence window in s (default: CAR window)");
  sim->callback([&] {
    command = "simulate";
    const json fixture = fixture_or_throw(fixture_file);
    config = {{"fixture", fixture},
              {"power_w", *sim_power ? power : fixture_power(fixture)},
              {"duration_s", duration},
              {"hbt", hbt},
              {"write_tags", !no_tags}};
    if (*g2w) config["g2_window_s"] = g2_window;
  });

  // franson
  auto* fr = app.add_subcommand("franson", "Folded Franson interferometer phase sweep and fringe fit");
  std::string fr_fixture;
  double fr_duration = 0.0, fr_power = 0.0, fr_vis = 0.0;
  std::vector<double> phases;
  int n_phases = 12;
  fr->add_option("--fixture", fr_fixture, "Fixture JSON")->required()->check(CLI::ExistingFile);
  fr->add_option("--duration", fr_duration, "Acquisition time per phase in s")->required();
  auto* fr_p = fr->add_option("--power", fr_power, "On-chip pump power in W (default: fixture)");
  auto* fr_ph = fr->add_option("--phases", phases, "Explicit phase list in rad");
  fr->add_option("--n-phases", n_phases, "Evenly spaced phases over [0, pi)")->capture_default_str()->excludes(fr_ph);
  auto* fr_v = fr->add_option("--visibility", fr_vis, "Override the intrinsic visibility");
  fr->callback([&] {
    command = "franson";
    const json fixture = fixture_or_throw(fr_fixture);
    if (!*fr_ph) {
      if (n_phases < 1) throw ConfigError("--n-phases must be >= 1");
      phases.clear();
      for (int k = 0; k < n_phases; ++k) phases.push_back(k * std::numbers::pi / n_phases);
    }
    config = {{"fixture", fixture},
              {"power_w", *fr_p ? fr_power : fixture_power(fixture)},
              {"duration_s", fr_duration},
              {"phases_rad", phases}};
    if (*fr_v) config["intrinsic_visibility"] = fr_vis;
  });

  // extract-pgr
  auto* ex = app.add_subcommand("extract-pgr", "Recover a, eta_s, eta_i from a power sweep");
  std::string sweep_csv;
  bool no_dark = false;
  ex->add_option("--sweep", sweep_csv, "CSV power_w,ns_hz,ni_hz,nnet_hz")->required()->check(CLI::ExistingFile);
  ex->add_flag("--no-dark-offset", no_dark, "Do not fit a constant dark-count term in the singles");
  ex->callback([&] {
    command = "extract-pgr";
    config = {{"sweep_csv", cli::file_ref(sweep_csv)}, {"fit_dark_offset", !no_dark}};
  });

  // linkbudget
  auto* lb = app.add_subcommand("linkbudget", "dB chains, loss budgets, fiber mode field and taper overlap");
  std::string lb_config;
  lb->add_option("--config", lb_config, "Link-budget JSON")->required()->check(CLI::ExistingFile);
  lb->callback([&] {
    command = "linkbudget";
    config = cli::load_config_file(lb_config);
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "Simulated power sweep with PGR extraction");
  std::string sw_fixture;
  double sw_duration = 0.0;
  std::vector<double> sw_powers;
  sw->add_option("--fixture", sw_fixture, "Fixture JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--duration", sw_duration, "Acquisition time per power in s")->required();
  sw->add_option("--powers", sw_powers, "Pump powers in W (default: fixture sweep_powers_w)");
  sw->callback([&] {
    command = "sweep";
    const json fixture = fixture_or_throw(sw_fixture);
    if (sw_powers.empty()) {
      if (!fixture.contains("sweep_powers_w")) throw ConfigError("no --powers given and fixture has no sweep_powers_w");
      sw_powers = fixture.at("sweep_powers_w").get<std::vector<double>>();
    }
    config = {{"fixture", fixture}, {"powers_w", sw_powers}, {"duration_s", sw_duration}};
  });

  // replay
  auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a JSON artifact");
  std::string artifact;
  rp->add_option("artifact", artifact, "JSON artifact written by any command")->required()->check(CLI::ExistingFile);
  rp->callback([&] {
    const json env = io::read_json_file(artifact);
    if (!env.is_object() || !env.contains("command") || !env.contains("config")) {
      throw ConfigError("'" + artifact + "' is not a pairsource artifact");
    }
    command = env.at("command").get<std::string>();
    config = env.at("config");
    if (!*seed_opt && env.contains("seed") && !env.at("seed").is_null()) {
      seed_value = env.at("seed").get<std::uint64_t>();
      g.seed = seed_value;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed_value;
  emit(command, config, g);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}

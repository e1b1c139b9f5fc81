#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pairsource/constants.hpp"
#include "pairsource/counting.hpp"
#include "pairsource/dispersion.hpp"
#include "pairsource/errors.hpp"
#include "pairsource/franson.hpp"
#include "pairsource/link.hpp"
#include "pairsource/sfwm.hpp"
#include "pairsource/spectra.hpp"

namespace py = pybind11;
using namespace pairsource;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Microresonator photon-pair source toolkit";
  m.attr("__version__") = kToolVersion;

  auto invalid = py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", invalid.ptr());

  // dispersion
  py::class_<dispersion::MaterialModel>(m, "MaterialModel")
      .def(py::init<>())
      .def_readwrite("name", &dispersion::MaterialModel::name)
      .def_readwrite("b", &dispersion::MaterialModel::b)
      .def_readwrite("c_um2", &dispersion::MaterialModel::c_um2)
      .def_readwrite("min_wavelength_um", &dispersion::MaterialModel::min_wavelength_um)
      .def_readwrite("max_wavelength_um", &dispersion::MaterialModel::max_wavelength_um);
  m.def("silicon_nitride", &dispersion::silicon_nitride);
  m.def("silica", &dispersion::silica);
  m.def("sellmeier_index", &dispersion::sellmeier_index, py::arg("model"), py::arg("wavelength_um"));

  py::class_<dispersion::DispersionFit>(m, "DispersionFit")
      .def_readonly("f0_hz", &dispersion::DispersionFit::f0_hz)
      .def_readonly("d1_hz", &dispersion::DispersionFit::d1_hz)
      .def_readonly("d2_hz", &dispersion::DispersionFit::d2_hz)
      .def_property_readonly("dint_hz", [](const dispersion::DispersionFit& f) {
        std::vector<std::pair<int, double>> out;
        for (const auto& s : f.samples) out.emplace_back(s.mu, s.dint_hz);
        return out;
      });
  m.def(
      "fit_dispersion",
      [](const std::vector<std::pair<int, double>>& grid, int mu_lo, int mu_hi) {
        dispersion::ResonanceGrid g;
        for (const auto& [mu, f] : grid) g.entries.push_back({mu, f});
        return dispersion::fit_dispersion(g, {mu_lo, mu_hi});
      },
      py::arg("grid"), py::arg("mu_lo") = -5, py::arg("mu_hi") = 5);
  m.def("phase_matching_metric", &dispersion::phase_matching_metric, py::arg("f_signal_hz"), py::arg("f_pump_hz"),
        py::arg("f_idler_hz"));

  // resonance spectra
  py::class_<spectra::ResonatorMode>(m, "ResonatorMode")
      .def(py::init([](double f0, double k0, double kex, double sr, double si) {
             return spectra::ResonatorMode{f0, k0, kex, sr, si};
           }),
           py::arg("f0_hz"), py::arg("kappa0_hz"), py::arg("kappa_ex_hz"), py::arg("split_re_hz") = 0.0,
           py::arg("split_im_hz") = 0.0)
      .def_readwrite("f0_hz", &spectra::ResonatorMode::f0_hz)
      .def_readwrite("kappa0_hz", &spectra::ResonatorMode::kappa0_hz)
      .def_readwrite("kappa_ex_hz", &spectra::ResonatorMode::kappa_ex_hz)
      .def_readwrite("split_re_hz", &spectra::ResonatorMode::split_re_hz)
      .def_readwrite("split_im_hz", &spectra::ResonatorMode::split_im_hz)
      .def_property_readonly("loaded_linewidth_hz", &spectra::ResonatorMode::loaded_linewidth_hz)
      .def_property_readonly("loaded_q", &spectra::ResonatorMode::loaded_q);
  m.def("model_transmission", &spectra::model_transmission, py::arg("mode"), py::arg("f_hz"));
  m.def(
      "synth_trace",
      [](const std::vector<spectra::ResonatorMode>& modes, const std::vector<double>& f, double sigma,
         std::uint64_t seed) { return spectra::synth_trace(modes, f, sigma, seed).transmission; },
      py::arg("modes"), py::arg("frequency_hz"), py::arg("noise_sigma") = 0.0, py::arg("seed") = 0);
  m.def(
      "find_resonances",
      [](const std::vector<double>& f, const std::vector<double>& t, double depth, double sep) {
        return spectra::find_resonances({f, t, "python"}, depth, sep);
      },
      py::arg("frequency_hz"), py::arg("transmission"), py::arg("min_depth") = 0.05,
      py::arg("min_separation_hz") = 1e9);
  py::class_<spectra::ResonanceFit>(m, "ResonanceFit")
      .def_readonly("mode", &spectra::ResonanceFit::mode)
      .def_readonly("coupling_ambiguous", &spectra::ResonanceFit::coupling_ambiguous)
      .def_readonly("rms", &spectra::ResonanceFit::rms);
  m.def(
      "fit_resonance",
      [](const std::vector<double>& f, const std::vector<double>& t, double lo, double hi, bool over) {
        spectra::FitOptions o;
        o.over_coupled = over;
        return spectra::fit_resonance({f, t, "python"}, lo, hi, o);
      },
      py::arg("frequency_hz"), py::arg("transmission"), py::arg("f_lo_hz"), py::arg("f_hi_hz"),
      py::arg("over_coupled") = false);

  // sfwm
  py::class_<sfwm::ModeTriple>(m, "ModeTriple")
      .def(py::init([](spectra::ResonatorMode s, spectra::ResonatorMode p, spectra::ResonatorMode i, double n2,
                       double vg, double aeff, double r) { return sfwm::ModeTriple{s, p, i, n2, vg, aeff, r}; }),
           py::arg("signal"), py::arg("pump"), py::arg("idler"), py::arg("n2_m2_per_w"), py::arg("vg_m_per_s"),
           py::arg("a_eff_m2"), py::arg("radius_m"))
      .def_readwrite("signal", &sfwm::ModeTriple::signal)
      .def_readwrite("pump", &sfwm::ModeTriple::pump)
      .def_readwrite("idler", &sfwm::ModeTriple::idler)
      .def_property_readonly("energy_mismatch_hz", &sfwm::ModeTriple::energy_mismatch_hz);
  m.def("nonlinear_gamma", &sfwm::nonlinear_gamma);
  m.def("photon_linewidth", &sfwm::photon_linewidth, py::arg("kappa_s_hz"), py::arg("kappa_i_hz"));
  m.def("pair_generation_rate", &sfwm::pair_generation_rate);
  m.def("brightness", &sfwm::brightness, py::arg("pgr"), py::arg("linewidth_hz"));
  m.def(
      "optimal_kex",
      [](double k0, const std::string& objective) {
        if (objective == "intracavity_flux") return sfwm::optimal_kex(k0, sfwm::Objective::intracavity_flux);
        if (objective == "heralding") return sfwm::optimal_kex(k0, sfwm::Objective::heralding);
        if (objective == "bus_flux") return sfwm::optimal_kex(k0, sfwm::Objective::bus_flux);
        throw InvalidInput("objective must be intracavity_flux, heralding or bus_flux");
      },
      py::arg("kappa0_hz"), py::arg("objective"));
  py::class_<sfwm::Report>(m, "Report")
      .def_readonly("gamma_rad_per_s", &sfwm::Report::gamma_rad_per_s)
      .def_readonly("pgr_pairs_per_s_per_w2", &sfwm::Report::pgr_pairs_per_s_per_w2)
      .def_readonly("linewidth_hz", &sfwm::Report::linewidth_hz)
      .def_readonly("brightness_pairs_per_s_per_w2_per_hz", &sfwm::Report::brightness_pairs_per_s_per_w2_per_hz)
      .def_readonly("alpha_hz", &sfwm::Report::alpha_hz)
      .def_readonly("n1_hz", &sfwm::Report::n1_hz)
      .def_readonly("bus_flux_hz", &sfwm::Report::bus_flux_hz)
      .def_readonly("above_threshold", &sfwm::Report::above_threshold)
      .def_readonly("warnings", &sfwm::Report::warnings);
  m.def("design_report", &sfwm::design_report, py::arg("triple"), py::arg("power_w"),
        py::arg("a_coefficient") = std::optional<double>{});

  // counting
  py::class_<counting::DetectionChain>(m, "DetectionChain")
      .def(py::init([](double es, double ei, double ds, double di, double j, double dead) {
             return counting::DetectionChain{es, ei, ds, di, j, dead};
           }),
           py::arg("eta_s") = 1.0, py::arg("eta_i") = 1.0, py::arg("dark_s_hz") = 0.0, py::arg("dark_i_hz") = 0.0,
           py::arg("jitter_sigma_s") = 0.0, py::arg("dead_time_s") = 0.0);
  py::class_<counting::SourceTruth>(m, "SourceTruth")
      .def(py::init([](double a, double bs, double bi, double ks, double ki, double p, std::optional<double> th) {
             return counting::SourceTruth{a, bs, bi, ks, ki, p, th};
           }),
           py::arg("a_pairs_per_s_per_w2"), py::arg("b_s_per_s_per_w") = 0.0, py::arg("b_i_per_s_per_w") = 0.0,
           py::arg("kappa_s_hz") = 1e9, py::arg("kappa_i_hz") = 1e9, py::arg("power_w") = 0.0,
           py::arg("threshold_w") = std::optional<double>{})
      .def_readwrite("power_w", &counting::SourceTruth::power_w)
      .def_property_readonly("correlation_fwhm_s", &counting::SourceTruth::correlation_fwhm_s);
  py::class_<counting::TimeTagStream>(m, "TimeTagStream")
      .def(py::init([](std::string ch, std::vector<double> tags, double d) {
             counting::TimeTagStream s{std::move(ch), std::move(tags), d};
             counting::validate(s);
             return s;
           }),
           py::arg("channel"), py::arg("tags"), py::arg("duration_s"))
      .def_readonly("channel", &counting::TimeTagStream::channel)
      .def_readonly("tags", &counting::TimeTagStream::tags)
      .def_readonly("duration_s", &counting::TimeTagStream::duration_s)
      .def_property_readonly("rate_hz", &counting::TimeTagStream::rate_hz)
      .def("__len__", [](const counting::TimeTagStream& s) { return s.tags.size(); });
  py::class_<counting::SimulatedTags>(m, "SimulatedTags")
      .def_readonly("signal", &counting::SimulatedTags::signal)
      .def_readonly("idler", &counting::SimulatedTags::idler)
      .def_readonly("signal_b", &counting::SimulatedTags::signal_b);
  m.def("simulate_tags", &counting::simulate_tags, py::arg("truth"), py::arg("chain"), py::arg("duration_s"),
        py::arg("seed"), py::arg("hbt_split") = false);
  py::class_<counting::CorrelationHistogram>(m, "CorrelationHistogram")
      .def_readonly("bin_width_s", &counting::CorrelationHistogram::bin_width_s)
      .def_readonly("offsets_s", &counting::CorrelationHistogram::offsets_s)
      .def_readonly("counts", &counting::CorrelationHistogram::counts)
      .def_readonly("acquisition_s", &counting::CorrelationHistogram::acquisition_s);
  m.def("correlate", &counting::correlate, py::arg("s1"), py::arg("s2"), py::arg("bin_width_s"),
        py::arg("max_offset_s"));
  m.def("peak_fwhm", &counting::peak_fwhm);
  py::class_<counting::CoincidenceRates>(m, "CoincidenceRates")
      .def_readonly("n_cc_hz", &counting::CoincidenceRates::n_cc_hz)
      .def_readonly("n_acc_hz", &counting::CoincidenceRates::n_acc_hz)
      .def_readonly("n_net_hz", &counting::CoincidenceRates::n_net_hz)
      .def_readonly("car", &counting::CoincidenceRates::car);
  m.def("coincidence_rates", &counting::coincidence_rates, py::arg("hist"), py::arg("window_s"),
        py::arg("accidental_offset_s"), py::arg("accidental_span_s") = 0.0);
  py::class_<counting::HeraldedG2>(m, "HeraldedG2")
      .def_readonly("g2h", &counting::HeraldedG2::g2h)
      .def_readonly("sigma", &counting::HeraldedG2::sigma)
      .def_readonly("n1", &counting::HeraldedG2::n1)
      .def_readonly("n12", &counting::HeraldedG2::n12)
      .def_readonly("n13", &counting::HeraldedG2::n13)
      .def_readonly("n123", &counting::HeraldedG2::n123);
  m.def("heralded_g2", &counting::heralded_g2, py::arg("idler"), py::arg("signal_a"), py::arg("signal_b"),
        py::arg("window_s"));
  py::class_<counting::PgrExtraction>(m, "PgrExtraction")
      .def_readonly("a_pairs_per_s_per_w2", &counting::PgrExtraction::a_pairs_per_s_per_w2)
      .def_readonly("eta_s", &counting::PgrExtraction::eta_s)
      .def_readonly("eta_i", &counting::PgrExtraction::eta_i)
      .def_readonly("b_s_per_s_per_w", &counting::PgrExtraction::b_s_per_s_per_w)
      .def_readonly("b_i_per_s_per_w", &counting::PgrExtraction::b_i_per_s_per_w);
  m.def(
      "extract_pgr",
      [](const std::vector<std::tuple<double, double, double, double>>& rows, bool dark) {
        counting::PowerSweepRecord rec;
        for (const auto& [p, s, i, n] : rows) rec.rows.push_back({p, s, i, n});
        return counting::extract_pgr(rec, dark);
      },
      py::arg("rows"), py::arg("fit_dark_offset") = true);

  // franson
  m.def("franson_probability", &franson::franson_probability, py::arg("phase_rad"));
  py::class_<franson::FringeFit>(m, "FringeFit")
      .def_readonly("amplitude", &franson::FringeFit::amplitude)
      .def_readonly("visibility", &franson::FringeFit::visibility)
      .def_readonly("visibility_sigma", &franson::FringeFit::visibility_sigma)
      .def_readonly("extrema_visibility", &franson::FringeFit::extrema_visibility);
  m.def("fringe_fit", &franson::fringe_fit, py::arg("phases_rad"), py::arg("rates_hz"));
  m.def(
      "chsh_margin",
      [](double v) {
        const auto c = franson::chsh_margin(v);
        return std::make_pair(c.passes, c.margin);
      },
      py::arg("visibility"));

  // link
  m.def("db_chain", &link::db_chain, py::arg("rate_in_hz"), py::arg("losses_db"));
  m.def("thermal_shift", &link::thermal_shift, py::arg("coefficient_hz_per_k"), py::arg("delta_t_k"));
  m.def(
      "v_number",
      [](double r, double na, double lambda) {
        const auto v = link::v_number({r, na, lambda});
        return std::make_pair(v.v, v.single_mode);
      },
      py::arg("core_radius_um"), py::arg("numerical_aperture"), py::arg("wavelength_um"));
  m.def(
      "marcuse_mfd_um", [](double r, double na, double lambda) { return link::marcuse_mfd_um({r, na, lambda}); },
      py::arg("core_radius_um"), py::arg("numerical_aperture"), py::arg("wavelength_um"));
  m.def(
      "gaussian_overlap",
      [](double wxa, double wya, double wxb, double wyb) {
        return link::overlap_efficiency(link::GaussianField{wxa, wya}, link::GaussianField{wxb, wyb}).efficiency;
      },
      py::arg("wx_a_m"), py::arg("wy_a_m"), py::arg("wx_b_m"), py::arg("wy_b_m"));
  m.def(
      "compose_budget",
      [](const std::vector<double>& etas) {
        link::LossBudget b;
        for (double e : etas) b.stages.push_back({"", e});
        const auto s = link::compose_budget(b);
        return std::make_pair(s.overall, s.overall_db);
      },
      py::arg("etas"));
}

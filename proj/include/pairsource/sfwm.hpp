#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pairsource/spectra.hpp"

namespace pairsource::sfwm {

using spectra::ResonatorMode;

/// Signal/pump/idler resonances plus the waveguide parameters that set the Kerr coupling.
struct ModeTriple {
  ResonatorMode signal;
  ResonatorMode pump;
  ResonatorMode idler;
  double n2_m2_per_w = 0.0;
  double vg_m_per_s = 0.0;
  double a_eff_m2 = 0.0;
  double radius_m = 0.0;

  /// A_eff times the circumference 2 pi R.
  double v_eff_m3() const;
  /// f_s + f_i - 2 f_p.
  double energy_mismatch_hz() const;
  /// |f_s + f_i - 2 f_p| below the pump loaded linewidth.
  bool energy_conserved() const;
};

void validate(const ModeTriple& triple);

/// gamma = hbar w^2 n2 vg^2 / (c V_eff) in rad/s, with w the pump angular frequency.
double nonlinear_gamma(const ModeTriple& triple);

/// |eps|^2 = (4 kappa_ex / kappa^2) P / (hbar w) for on-resonance pumping.
double intracavity_pump_photons(const ResonatorMode& pump, double power_w);

enum class Channel { signal, idler };

/// Output spectral density (photons/s/Hz) at `offset_hz` from line centre; integrates over
/// ordinary frequency to the output-port flux. Throws RegimeError when `threshold_w` is given
/// and power >= threshold.
double output_spectral_density(const ModeTriple& triple, double power_w, double offset_hz,
                               Channel channel = Channel::signal, std::optional<double> threshold_w = {});

/// Closed-form integral of the spectral density over ordinary frequency (photons/s),
/// 4 kappa_ex,c kappa_o gamma^2 |eps|^4 / (kappa_s kappa_i (kappa_s + kappa_i)); reduces to
/// 2 kappa_ex gamma^2 |eps|^4 / kappa^2 when the linewidths match.
double output_flux(const ModeTriple& triple, double power_w, Channel channel = Channel::signal);

/// FWHM (Hz) of the biphoton spectrum for loaded linewidths kappa_s, kappa_i (Hz).
double photon_linewidth(double kappa_s_hz, double kappa_i_hz);

/// PGR a in pairs/s/W^2 under the uniform-kappa approximation (pump kappa, kappa_ex).
double pair_generation_rate(const ModeTriple& triple);

struct ExtractionRates {
  double heralding_hz;  // n1 = alpha * eta
  double bus_flux_hz;   // alpha_bus = alpha * eta^2
};

ExtractionRates heralding_and_bus_rates(const ModeTriple& triple, double power_w,
                                        std::optional<double> threshold_w = {});

enum class Objective { intracavity_flux, heralding, bus_flux };

/// kappa_ex maximising alpha, n1 or alpha_bus at fixed kappa0: 2/3, 1 and 4/3 of kappa0.
double optimal_kex(double kappa0_hz, Objective objective);

/// Exponent pair (p, q) so the objective scales as kappa_ex^p / kappa^q.
std::pair<int, int> objective_exponents(Objective objective);

struct Threshold {
  double power_w;
  double alpha_max_hz;   // 32 A^2 kappa
  double n1_max_hz;      // 32 A^2 kappa_ex
  double bus_max_hz;     // 32 A^2 kappa_ex^2 / kappa
};

/// P_th = A c V_eff / (w n2 vg^2) kappa^3 / kappa_ex, with rates in rad/s.
Threshold opo_threshold(const ModeTriple& triple, double a_coefficient);

/// Inverts opo_threshold for the prefactor A.
double calibrate_threshold_coefficient(double measured_threshold_w, const ModeTriple& triple);

/// a / linewidth. Throws DomainError for a non-positive linewidth.
double brightness(double pgr, double linewidth_hz);

struct Report {
  double gamma_rad_per_s = 0.0;
  double pgr_pairs_per_s_per_w2 = 0.0;
  double linewidth_hz = 0.0;
  double brightness_pairs_per_s_per_w2_per_hz = 0.0;
  double power_w = 0.0;
  double alpha_hz = 0.0;
  double n1_hz = 0.0;
  double bus_flux_hz = 0.0;
  double energy_mismatch_hz = 0.0;
  std::optional<Threshold> threshold;
  std::optional<double> a_coefficient;
  bool above_threshold = false;
  std::vector<std::string> warnings;
};

/// Evaluates every closed-form figure for `triple` at `power_w`. When a threshold coefficient is
/// supplied and the power is at or above threshold, the rate fields are left at zero and
/// `above_threshold` is set instead of raising.
Report design_report(const ModeTriple& triple, double power_w, std::optional<double> a_coefficient = {});

}  // namespace pairsource::sfwm

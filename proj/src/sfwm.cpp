#include "pairsource/sfwm.hpp"

#include <cmath>

#include "pairsource/constants.hpp"
#include "pairsource/errors.hpp"

namespace pairsource::sfwm {

double ModeTriple::v_eff_m3() const { return a_eff_m2 * kTwoPi * radius_m; }

double ModeTriple::energy_mismatch_hz() const {
  return (signal.f0_hz - pump.f0_hz) + (idler.f0_hz - pump.f0_hz);
}

bool ModeTriple::energy_conserved() const {
  return std::abs(energy_mismatch_hz()) < pump.loaded_linewidth_hz();
}

void validate(const ModeTriple& triple) {
  spectra::validate(triple.signal);
  spectra::validate(triple.pump);
  spectra::validate(triple.idler);
  if (!(triple.n2_m2_per_w > 0.0) || !(triple.vg_m_per_s > 0.0) || !(triple.a_eff_m2 > 0.0) ||
      !(triple.radius_m > 0.0)) {
    throw InvalidInput("n2, group velocity, effective area and radius must all be positive");
  }
}

namespace {

double pump_omega(const ModeTriple& t) { return angular(t.pump.f0_hz); }

// gamma / (hbar w), the coefficient multiplying P in every rate formula.
double gamma_per_photon_flux(const ModeTriple& t) { return nonlinear_gamma(t) / (kHbar * pump_omega(t)); }

void check_below(double power_w, std::optional<double> threshold_w) {
  if (threshold_w && power_w >= *threshold_w) {
    throw RegimeError("pump power " + std::to_string(power_w) + " W is at or above the OPO threshold " +
                      std::to_string(*threshold_w) + " W");
  }
}

}  // namespace

double nonlinear_gamma(const ModeTriple& triple) {
  validate(triple);
  const double w = pump_omega(triple);
  return kHbar * w * w * triple.n2_m2_per_w * triple.vg_m_per_s * triple.vg_m_per_s /
         (kSpeedOfLight * triple.v_eff_m3());
}

double intracavity_pump_photons(const ResonatorMode& pump, double power_w) {
  spectra::validate(pump);
  if (power_w < 0.0) throw InvalidInput("pump power must be non-negative");
  const double kappa = angular(pump.loaded_linewidth_hz());
  const double kappa_ex = angular(pump.kappa_ex_hz);
  return 4.0 * kappa_ex / (kappa * kappa) * power_w / (kHbar * angular(pump.f0_hz));
}

double output_spectral_density(const ModeTriple& triple, double power_w, double offset_hz, Channel channel,
                               std::optional<double> threshold_w) {
  check_below(power_w, threshold_w);
  const double g = nonlinear_gamma(triple);
  const double eps2 = intracavity_pump_photons(triple.pump, power_w);
  const double ks = angular(triple.signal.loaded_linewidth_hz());
  const double ki = angular(triple.idler.loaded_linewidth_hz());
  const bool sig = channel == Channel::signal;
  const double kex_own = angular(sig ? triple.signal.kappa_ex_hz : triple.idler.kappa_ex_hz);
  const double k_other = sig ? ki : ks;
  const double w = angular(offset_hz);
  const double w2x4 = 4.0 * w * w;
  return 16.0 * kex_own * k_other * g * g * eps2 * eps2 / ((ks * ks + w2x4) * (ki * ki + w2x4));
}

double output_flux(const ModeTriple& triple, double power_w, Channel channel) {
  const double g = nonlinear_gamma(triple);
  const double eps2 = intracavity_pump_photons(triple.pump, power_w);
  const double ks = angular(triple.signal.loaded_linewidth_hz());
  const double ki = angular(triple.idler.loaded_linewidth_hz());
  const bool sig = channel == Channel::signal;
  const double kex_own = angular(sig ? triple.signal.kappa_ex_hz : triple.idler.kappa_ex_hz);
  const double k_other = sig ? ki : ks;
  return 4.0 * kex_own * k_other * g * g * eps2 * eps2 / (ks * ki * (ks + ki));
}

double photon_linewidth(double kappa_s_hz, double kappa_i_hz) {
  if (!(kappa_s_hz > 0.0) || !(kappa_i_hz > 0.0)) throw InvalidInput("linewidths must be positive");
  const double s2 = kappa_s_hz * kappa_s_hz;
  const double i2 = kappa_i_hz * kappa_i_hz;
  const double sum = s2 + i2;
  return std::sqrt(std::sqrt(sum * sum + 4.0 * s2 * i2) - sum) / std::numbers::sqrt2;
}

double pair_generation_rate(const ModeTriple& triple) {
  const double kappa = angular(triple.pump.loaded_linewidth_hz());
  const double kappa_ex = angular(triple.pump.kappa_ex_hz);
  const double c = gamma_per_photon_flux(triple);
  return 32.0 * kappa_ex * kappa_ex / std::pow(kappa, 5) * c * c;
}

ExtractionRates heralding_and_bus_rates(const ModeTriple& triple, double power_w, std::optional<double> threshold_w) {
  check_below(power_w, threshold_w);
  if (power_w < 0.0) throw InvalidInput("pump power must be non-negative");
  const double eta = triple.pump.kappa_ex_hz / triple.pump.loaded_linewidth_hz();
  const double alpha = pair_generation_rate(triple) * power_w * power_w;
  return {alpha * eta, alpha * eta * eta};
}

double optimal_kex(double kappa0_hz, Objective objective) {
  if (!(kappa0_hz > 0.0)) throw InvalidInput("kappa0 must be positive");
  // d/dx [x^p / (k0 + x)^q] = 0  =>  x = p k0 / (q - p)
  const auto [p, q] = objective_exponents(objective);
  return static_cast<double>(p) * kappa0_hz / static_cast<double>(q - p);
}

std::pair<int, int> objective_exponents(Objective objective) {
  switch (objective) {
    case Objective::intracavity_flux:
      return {2, 5};
    case Objective::heralding:
      return {3, 6};
    case Objective::bus_flux:
      return {4, 7};
  }
  return {2, 5};
}

Threshold opo_threshold(const ModeTriple& triple, double a_coefficient) {
  validate(triple);
  if (!(a_coefficient > 0.0)) throw InvalidInput("threshold coefficient A must be positive");
  const double kappa = angular(triple.pump.loaded_linewidth_hz());
  const double kappa_ex = angular(triple.pump.kappa_ex_hz);
  if (!(kappa_ex > 0.0)) throw DomainError("threshold is unbounded for an uncoupled pump mode");
  const double w = pump_omega(triple);
  const double vg2 = triple.vg_m_per_s * triple.vg_m_per_s;
  Threshold th;
  th.power_w = a_coefficient * kSpeedOfLight * triple.v_eff_m3() / (w * triple.n2_m2_per_w * vg2) *
               kappa * kappa * kappa / kappa_ex;
  const double a2 = a_coefficient * a_coefficient;
  th.alpha_max_hz = 32.0 * a2 * kappa;
  th.n1_max_hz = 32.0 * a2 * kappa_ex;
  th.bus_max_hz = 32.0 * a2 * kappa_ex * kappa_ex / kappa;
  return th;
}

double calibrate_threshold_coefficient(double measured_threshold_w, const ModeTriple& triple) {
  if (!(measured_threshold_w > 0.0)) throw InvalidInput("measured threshold must be positive");
  return measured_threshold_w / opo_threshold(triple, 1.0).power_w;
}

double brightness(double pgr, double linewidth_hz) {
  if (!(linewidth_hz > 0.0)) throw DomainError("brightness needs a positive photon linewidth");
  return pgr / linewidth_hz;
}

Report design_report(const ModeTriple& triple, double power_w, std::optional<double> a_coefficient) {
  validate(triple);
  if (!(power_w >= 0.0)) throw InvalidInput("pump power must be non-negative");
  Report r;
  r.power_w = power_w;
  r.gamma_rad_per_s = nonlinear_gamma(triple);
  r.pgr_pairs_per_s_per_w2 = pair_generation_rate(triple);
  r.linewidth_hz = photon_linewidth(triple.signal.loaded_linewidth_hz(), triple.idler.loaded_linewidth_hz());
  r.brightness_pairs_per_s_per_w2_per_hz = brightness(r.pgr_pairs_per_s_per_w2, r.linewidth_hz);
  r.energy_mismatch_hz = triple.energy_mismatch_hz();
  if (!triple.energy_conserved()) {
    r.warnings.push_back("energy mismatch exceeds the pump loaded linewidth");
  }
  if (a_coefficient) {
    r.a_coefficient = a_coefficient;
    r.threshold = opo_threshold(triple, *a_coefficient);
    r.above_threshold = power_w >= r.threshold->power_w;
  }
  if (r.above_threshold) {
    r.warnings.push_back("pump power is at or above the OPO threshold; below-threshold rates not reported");
    return r;
  }
  r.alpha_hz = r.pgr_pairs_per_s_per_w2 * power_w * power_w;
  const auto rates = heralding_and_bus_rates(triple, power_w);
  r.n1_hz = rates.heralding_hz;
  r.bus_flux_hz = rates.bus_flux_hz;
  return r;
}

}  // namespace pairsource::sfwm

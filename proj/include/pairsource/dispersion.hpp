#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pairsource::dispersion {

/// Three-term Sellmeier model, n^2 = 1 + sum b_i l^2 / (l^2 - c_i) with l in micrometres.
struct MaterialModel {
  std::string name;
  std::array<double, 3> b{};
  std::array<double, 3> c_um2{};
  double min_wavelength_um = 0.3;
  double max_wavelength_um = 5.0;
};

/// Throws InvalidInput if b has a non-positive entry or c is not strictly increasing.
void validate(const MaterialModel& model);

/// LPCVD Si3N4 fitted over 0.3-5.0 um.
MaterialModel silicon_nitride();
/// LPCVD SiO2 fitted over 0.3-5.0 um.
MaterialModel silica();

/// Refractive index at `wavelength_um`. Throws OutOfRange outside the validity
/// window and DomainError at (or numerically on top of) a pole.
double sellmeier_index(const MaterialModel& model, double wavelength_um);

struct IndexSample {
  double frequency_hz;
  double n_eff;
};

/// Effective index of one transverse mode family, as produced by an external mode solver.
struct EffectiveIndexTable {
  std::string mode;
  double radius_m = 0.0;  // effective mode radius
  std::vector<IndexSample> samples;
};

void validate(const EffectiveIndexTable& table);

/// FSR (Hz) of the mode family at `frequency_hz`: beta(omega) = n_eff omega / c is fitted with a
/// cubic, and FSR = 1 / (beta_1 * 2 pi R).
double fsr_from_neff(const EffectiveIndexTable& table, double frequency_hz);

struct ModeCandidate {
  std::string label;
  double fsr_hz;
};

struct ModeMatch {
  std::string label;
  double mismatch_hz;
};

/// Nearest simulated FSR to the measured one; ties go to the first listed candidate.
ModeMatch identify_mode(double measured_fsr_hz, std::span<const ModeCandidate> candidates);

struct Resonance {
  int mu;
  double frequency_hz;
};

struct ResonanceGrid {
  std::vector<Resonance> entries;
};

/// Checks unique mu, frequency increasing with mu, mu = 0 present. Sorts nothing.
void validate(const ResonanceGrid& grid);

/// Inclusive mode-index window.
struct MuWindow {
  int lo = -5;
  int hi = 5;
};

struct DintSample {
  int mu;
  double dint_hz;      // f(mu) - f0 - D1 mu / 2pi
  double residual_hz;  // f(mu) minus the full quadratic fit
};

struct DispersionFit {
  double f0_hz = 0.0;
  double d1_hz = 0.0;  // D1 / 2pi, the FSR
  double d2_hz = 0.0;  // D2 / 2pi
  MuWindow window;
  std::vector<DintSample> samples;  // every grid point, in grid order
};

/// Unweighted least-squares fit of f(mu) = f0 + D1 mu + D2 mu^2 / 2 over `window`.
DispersionFit fit_dispersion(const ResonanceGrid& grid, MuWindow window = {});

/// f_s + f_i - 2 f_p. Positive when the pump sits below the signal/idler midpoint.
constexpr double phase_matching_metric(double f_signal_hz, double f_pump_hz, double f_idler_hz) {
  return (f_signal_hz - f_pump_hz) + (f_idler_hz - f_pump_hz);
}

}  // namespace pairsource::dispersion

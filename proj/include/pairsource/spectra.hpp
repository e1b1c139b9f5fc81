#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pairsource::spectra {

/// One optical resonance. All rates are ordinary frequencies (kappa / 2pi) in Hz.
struct ResonatorMode {
  double f0_hz = 0.0;
  double kappa0_hz = 0.0;
  double kappa_ex_hz = 0.0;
  double split_re_hz = 0.0;  // k_r / 2pi, clockwise/counter-clockwise coupling
  double split_im_hz = 0.0;  // k_i / 2pi

  double loaded_linewidth_hz() const { return kappa0_hz + kappa_ex_hz; }
  double loaded_q() const { return f0_hz / loaded_linewidth_hz(); }
};

void validate(const ResonatorMode& mode);

/// Bus transmission of a (possibly mode-split) resonance at frequency `f_hz`.
double model_transmission(const ResonatorMode& mode, double f_hz);

struct SpectrumTrace {
  std::vector<double> frequency_hz;
  std::vector<double> transmission;
  std::string source;

  std::size_t size() const { return frequency_hz.size(); }
};

/// Frequencies strictly increasing, transmission finite and non-negative, equal lengths.
void validate(const SpectrumTrace& trace);

/// Product of every mode's transmission on `f_axis` plus white Gaussian noise.
SpectrumTrace synth_trace(std::span<const ResonatorMode> modes, std::span<const double> f_axis,
                          double noise_sigma, std::uint64_t seed);

/// Dip centres, ascending. A dip qualifies when it falls at least `min_depth` below the local
/// baseline; of two dips closer than `min_separation_hz` the deeper one is kept.
std::vector<double> find_resonances(const SpectrumTrace& trace, double min_depth, double min_separation_hz);

struct FitOptions {
  bool over_coupled = false;    // resolve the kappa0/kappa_ex swap towards kappa_ex > kappa0
  bool linear_baseline = false;  // fit T_obs = T(f) (c0 + c1 (f - f0) / kappa)
  int max_evaluations = 4000;
};

struct ResonanceFit {
  ResonatorMode mode;
  bool coupling_ambiguous = false;  // the swapped kappa0 <-> kappa_ex solution fits equally well
  double rms = 0.0;
  double baseline_offset = 1.0;
  double baseline_slope = 0.0;
  int evaluations = 0;
};

/// Nonlinear least-squares fit of `model_transmission` to the samples with f in [f_lo, f_hi].
ResonanceFit fit_resonance(const SpectrumTrace& trace, double f_lo_hz, double f_hi_hz, const FitOptions& opts = {});

}  // namespace pairsource::spectra

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairsource/counting.hpp"

namespace pairsource::franson {

struct FransonConfig {
  double delta_t_s = 6.6e-9;          // long minus short arm delay
  double phase_rad = 0.0;
  double intrinsic_visibility = 1.0;  // [0, 1]; 0 disables interference
  double window_s = 3e-9;             // central-peak integration window
};

/// Throws ConfigError when the arm delay does not exceed the two-photon correlation FWHM.
/// Returns a warning when it is below three FWHM.
std::vector<std::string> validate(const FransonConfig& config, double correlation_fwhm_s);

/// Two-photon interference probability (1 + cos 2 phi) / 4.
double franson_probability(double phase_rad);

struct FransonRun {
  counting::CorrelationHistogram histogram;
  counting::TimeTagStream signal;
  counting::TimeTagStream idler;
  std::vector<std::string> warnings;
};

/// Event-level folded interferometer. Each photon takes the short or long arm with probability 1/2.
/// Same-arm pairs land in the central peak and pass the output projection with probability
/// (1 + V cos 2 phi) / 4; mixed-arm pairs land at +-delta_t and pass with probability 1/4.
/// Unpaired photons pass with probability 1/2.
FransonRun simulate_franson(const counting::SourceTruth& truth, const FransonConfig& config,
                            const counting::DetectionChain& chain, double duration_s, std::uint64_t seed,
                            double bin_width_s = 50e-12);

struct PeakIntegrals {
  double central = 0.0;
  double side_minus = 0.0;
  double side_plus = 0.0;
  double accidental = 0.0;  // same window far from any peak
};

/// Counts in windows of `window_s` at 0, -delta_t, +delta_t and at 2.5 delta_t.
PeakIntegrals peak_integrals(const counting::CorrelationHistogram& hist, double delta_t_s, double window_s);

struct FringeFit {
  double amplitude = 0.0;   // A in n = A/2 (1 + V cos 2 phi)
  double visibility = 0.0;
  double visibility_sigma = 0.0;
  double extrema_visibility = 0.0;
  double rms = 0.0;
};

/// Linear least squares of n = p + q cos 2 phi, giving A = 2p and V = q/p.
/// Needs at least 5 points spanning at least half a period of cos 2 phi.
FringeFit fringe_fit(const std::vector<double>& phases_rad, const std::vector<double>& rates_hz);

struct ChshMargin {
  bool passes = false;
  double margin = 0.0;
};

ChshMargin chsh_margin(double visibility);

}  // namespace pairsource::franson

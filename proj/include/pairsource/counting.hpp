#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pairsource::counting {

/// Losses and imperfections between the chip and the time tagger.
struct DetectionChain {
  double eta_s = 1.0;           // total signal-channel efficiency
  double eta_i = 1.0;           // total idler-channel efficiency
  double dark_s_hz = 0.0;       // per signal detector
  double dark_i_hz = 0.0;
  double jitter_sigma_s = 0.0;  // Gaussian timing jitter, per detector
  double dead_time_s = 0.0;     // non-paralysable
};

void validate(const DetectionChain& chain);

/// Ground truth of the pair source at one pump power.
struct SourceTruth {
  double a_pairs_per_s_per_w2 = 0.0;
  double b_s_per_s_per_w = 0.0;  // linear (Raman/PL) noise photons, signal band
  double b_i_per_s_per_w = 0.0;
  double kappa_s_hz = 0.0;       // loaded linewidths, kappa / 2pi
  double kappa_i_hz = 0.0;
  double power_w = 0.0;
  std::optional<double> threshold_w;  // refuse to simulate at or above this power

  double pair_rate_hz() const { return a_pairs_per_s_per_w2 * power_w * power_w; }
  /// FWHM of the jitter-free signal/idler delay distribution, ln2 (tau_s + tau_i).
  double correlation_fwhm_s() const;
};

void validate(const SourceTruth& truth);

struct TimeTagStream {
  std::string channel;
  std::vector<double> tags;  // seconds, ascending, inside [0, duration]
  double duration_s = 0.0;

  double rate_hz() const { return duration_s > 0.0 ? static_cast<double>(tags.size()) / duration_s : 0.0; }
};

void validate(const TimeTagStream& stream);

/// Photons that reached a detector, before dark counts, jitter and dead time.
/// `pair_signal[k]` and `pair_idler[k]` belong to the same pair.
struct Arrivals {
  std::vector<double> pair_signal;
  std::vector<double> pair_idler;
  std::vector<double> signal_only;  // partner lost, or noise photon
  std::vector<double> idler_only;
};

/// Poisson pair emission at rate aP^2 with independent exponential cavity leakage for each
/// photon, plus linear-in-power noise photons, thinned by the channel efficiencies.
Arrivals generate_arrivals(const SourceTruth& truth, const DetectionChain& chain, double duration_s,
                           std::mt19937_64& rng);

/// Detector stage: adds dark counts, applies jitter, clips to [0, duration], sorts, applies dead time.
TimeTagStream detect(std::string channel, std::vector<double> arrivals, double dark_hz, const DetectionChain& chain,
                     double duration_s, std::mt19937_64& rng);

struct SimulatedTags {
  TimeTagStream signal;  // detector A when split
  TimeTagStream idler;
  std::optional<TimeTagStream> signal_b;
};

/// Full detection-chain simulation. With `hbt_split` the signal photons go 50/50 to two detectors.
/// Results depend only on the arguments.
SimulatedTags simulate_tags(const SourceTruth& truth, const DetectionChain& chain, double duration_s,
                            std::uint64_t seed, bool hbt_split = false);

/// Bins are centred on k * bin_width for |k| <= floor(max_offset / bin_width).
struct CorrelationHistogram {
  double bin_width_s = 0.0;
  std::vector<double> offsets_s;
  std::vector<std::uint64_t> counts;
  double acquisition_s = 0.0;

  /// Index of the bin centred closest to `offset_s`, or -1 when outside the histogram.
  std::ptrdiff_t bin_index(double offset_s) const;
  std::ptrdiff_t half_span() const { return static_cast<std::ptrdiff_t>(counts.size() / 2); }
};

/// Histogram of t2 - t1 over all tag pairs within +-max_offset. Passing the same stream object
/// twice excludes self-pairs.
CorrelationHistogram correlate(const TimeTagStream& s1, const TimeTagStream& s2, double bin_width_s,
                               double max_offset_s);

/// FWHM of the histogram peak above the far-offset floor, with linear interpolation between bins.
double peak_fwhm(const CorrelationHistogram& hist);

struct CoincidenceRates {
  double n_cc_hz = 0.0;
  double n_acc_hz = 0.0;
  double n_net_hz = 0.0;
  double car = 0.0;
  std::uint64_t cc_counts = 0;
  std::uint64_t acc_counts = 0;  // raw counts in the accidental region
  double acc_region_s = 0.0;     // width of the accidental region
};

/// Window counts of round(window / bin_width) bins centred on zero delay and on
/// `accidental_offset_s`. With `accidental_span_s` > window the accidental rate is the mean floor
/// over that wider region, scaled to the window. Throws DomainError when the accidental region is empty.
CoincidenceRates coincidence_rates(const CorrelationHistogram& hist, double window_s, double accidental_offset_s,
                                   double accidental_span_s = 0.0);

/// Sum of the counts in the window of width `window_s` centred on `centre_s`.
std::uint64_t window_counts(const CorrelationHistogram& hist, double centre_s, double window_s);

struct HeraldedG2 {
  double g2h = 0.0;
  double sigma = 0.0;
  std::uint64_t n1 = 0, n12 = 0, n13 = 0, n123 = 0;
};

/// g2h(0) = n123 n1 / (n12 n13) with coincidences counted inside +-window/2 of each herald.
HeraldedG2 heralded_g2(const TimeTagStream& idler, const TimeTagStream& signal_a, const TimeTagStream& signal_b,
                       double window_s);

struct SweepRow {
  double power_w;
  double ns_hz;
  double ni_hz;
  double nnet_hz;
};

struct PowerSweepRecord {
  std::vector<SweepRow> rows;
};

void validate(const PowerSweepRecord& sweep);

struct PgrExtraction {
  double a_pairs_per_s_per_w2 = 0.0;
  double eta_s = 0.0;
  double eta_i = 0.0;
  double b_s_per_s_per_w = 0.0;
  double b_i_per_s_per_w = 0.0;
  double c_s = 0.0;    // eta_s a
  double c_i = 0.0;    // eta_i a
  double c_net = 0.0;  // eta_s eta_i a
  double offset_s_hz = 0.0;  // constant term of the singles fit (dark counts)
  double offset_i_hz = 0.0;
};

/// Fits n_s/i = c P^2 + d P (+ e) and n_net = c_net P^2 with Poisson-like 1/n weights, then
/// a = c_s c_i / c_net, eta_s = c_net / c_i, eta_i = c_net / c_s.
PgrExtraction extract_pgr(const PowerSweepRecord& sweep, bool fit_dark_offset = true);

struct MeasurementSettings {
  double bin_width_s = 0.1e-9;
  double rate_window_s = 20e-9;
  double car_window_s = 0.7e-9;
  double accidental_offset_s = 100e-9;
  double accidental_span_s = 0.0;  // 0: same width as the coincidence window
};

struct SweepPoint {
  SweepRow row;
  CoincidenceRates rate_window;
  std::optional<CoincidenceRates> car_window;  // empty when no accidental coincidences were seen
};

/// Simulates one power and reduces it to singles, net coincidences (rate window) and CAR.
SweepPoint measure_point(const SourceTruth& truth, const DetectionChain& chain, double duration_s,
                         std::uint64_t seed, const MeasurementSettings& settings = {});

/// Deterministic per-index seed derivation for sweeps.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace pairsource::counting

#include "pairsource/counting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pairsource/constants.hpp"
#include "pairsource/errors.hpp"

namespace pairsource::counting {

void validate(const DetectionChain& chain) {
  auto in_unit = [](double e) { return e > 0.0 && e <= 1.0; };
  if (!in_unit(chain.eta_s) || !in_unit(chain.eta_i)) throw InvalidInput("channel efficiencies must lie in (0, 1]");
  if (!(chain.dark_s_hz >= 0.0) || !(chain.dark_i_hz >= 0.0)) throw InvalidInput("dark-count rates must be >= 0");
  if (!(chain.jitter_sigma_s >= 0.0)) throw InvalidInput("jitter must be >= 0");
  if (!(chain.dead_time_s >= 0.0)) throw InvalidInput("dead time must be >= 0");
}

double SourceTruth::correlation_fwhm_s() const {
  return std::numbers::ln2 * (1.0 / angular(kappa_s_hz) + 1.0 / angular(kappa_i_hz));
}

void validate(const SourceTruth& truth) {
  if (!(truth.a_pairs_per_s_per_w2 >= 0.0) || !(truth.b_s_per_s_per_w >= 0.0) || !(truth.b_i_per_s_per_w >= 0.0) ||
      !(truth.power_w >= 0.0)) {
    throw InvalidInput("source rates and pump power must be >= 0");
  }
  if (!(truth.kappa_s_hz > 0.0) || !(truth.kappa_i_hz > 0.0)) throw InvalidInput("source linewidths must be positive");
  if (truth.threshold_w && truth.power_w >= *truth.threshold_w) {
    throw RegimeError("pump power " + std::to_string(truth.power_w) + " W is at or above the OPO threshold " +
                      std::to_string(*truth.threshold_w) + " W; the pair-source model does not apply");
  }
}

void validate(const TimeTagStream& stream) {
  if (!(stream.duration_s > 0.0)) throw InvalidInput("stream duration must be positive");
  for (std::size_t i = 0; i < stream.tags.size(); ++i) {
    const double t = stream.tags[i];
    if (!(t >= 0.0 && t <= stream.duration_s)) throw InvalidInput("tag outside [0, duration] in " + stream.channel);
    if (i > 0 && t < stream.tags[i - 1]) throw InvalidInput("tags not sorted in " + stream.channel);
  }
}

namespace {

std::int64_t poisson_count(double mean, std::mt19937_64& rng) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

void append_uniform(std::vector<double>& out, std::int64_t n, double duration, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> when(0.0, duration);
  out.reserve(out.size() + static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) out.push_back(when(rng));
}

}  // namespace

Arrivals generate_arrivals(const SourceTruth& truth, const DetectionChain& chain, double duration_s,
                           std::mt19937_64& rng) {
  validate(truth);
  validate(chain);
  if (!(duration_s > 0.0)) throw InvalidInput("simulation duration must be positive");

  const double pairs = truth.pair_rate_hz() * duration_s;
  const double es = chain.eta_s, ei = chain.eta_i;
  const auto n_both = poisson_count(pairs * es * ei, rng);
  const auto n_sig = poisson_count(pairs * es * (1.0 - ei), rng);
  const auto n_idl = poisson_count(pairs * (1.0 - es) * ei, rng);
  const auto n_noise_s = poisson_count(es * truth.b_s_per_s_per_w * truth.power_w * duration_s, rng);
  const auto n_noise_i = poisson_count(ei * truth.b_i_per_s_per_w * truth.power_w * duration_s, rng);

  // Each photon leaks out of its own mode after an exponential delay, so the idler-minus-signal
  // delay is two-sided exponential with decay 2 pi kappa_i (positive side) and 2 pi kappa_s.
  std::exponential_distribution<double> leak_s(angular(truth.kappa_s_hz));
  std::exponential_distribution<double> leak_i(angular(truth.kappa_i_hz));
  std::uniform_real_distribution<double> when(0.0, duration_s);

  Arrivals a;
  a.pair_signal.reserve(static_cast<std::size_t>(n_both));
  a.pair_idler.reserve(static_cast<std::size_t>(n_both));
  for (std::int64_t k = 0; k < n_both; ++k) {
    const double t = when(rng);
    a.pair_signal.push_back(t + leak_s(rng));
    a.pair_idler.push_back(t + leak_i(rng));
  }
  a.signal_only.reserve(static_cast<std::size_t>(n_sig + n_noise_s));
  for (std::int64_t k = 0; k < n_sig; ++k) a.signal_only.push_back(when(rng) + leak_s(rng));
  a.idler_only.reserve(static_cast<std::size_t>(n_idl + n_noise_i));
  for (std::int64_t k = 0; k < n_idl; ++k) a.idler_only.push_back(when(rng) + leak_i(rng));
  append_uniform(a.signal_only, n_noise_s, duration_s, rng);
  append_uniform(a.idler_only, n_noise_i, duration_s, rng);
  return a;
}

TimeTagStream detect(std::string channel, std::vector<double> arrivals, double dark_hz, const DetectionChain& chain,
                     double duration_s, std::mt19937_64& rng) {
  append_uniform(arrivals, poisson_count(dark_hz * duration_s, rng), duration_s, rng);
  if (chain.jitter_sigma_s > 0.0) {
    std::normal_distribution<double> jitter(0.0, chain.jitter_sigma_s);
    for (double& t : arrivals) t += jitter(rng);
  }
  std::erase_if(arrivals, [&](double t) { return !(t >= 0.0 && t <= duration_s); });
  std::sort(arrivals.begin(), arrivals.end());

  TimeTagStream out;
  out.channel = std::move(channel);
  out.duration_s = duration_s;
  if (chain.dead_time_s > 0.0) {
    out.tags.reserve(arrivals.size());
    double last = -std::numeric_limits<double>::infinity();
    for (double t : arrivals) {
      if (t - last >= chain.dead_time_s) {
        out.tags.push_back(t);
        last = t;
      }
    }
  } else {
    out.tags = std::move(arrivals);
  }
  return out;
}

SimulatedTags simulate_tags(const SourceTruth& truth, const DetectionChain& chain, double duration_s,
                            std::uint64_t seed, bool hbt_split) {
  if (!(duration_s > 0.0)) throw InvalidInput("simulation duration must be positive");
  std::mt19937_64 rng(seed);
  Arrivals a = generate_arrivals(truth, chain, duration_s, rng);

  std::vector<double> signal = std::move(a.pair_signal);
  signal.insert(signal.end(), a.signal_only.begin(), a.signal_only.end());
  std::vector<double> idler = std::move(a.pair_idler);
  idler.insert(idler.end(), a.idler_only.begin(), a.idler_only.end());

  SimulatedTags out;
  if (hbt_split) {
    std::bernoulli_distribution coin(0.5);
    std::vector<double> to_a, to_b;
    to_a.reserve(signal.size() / 2 + 16);
    to_b.reserve(signal.size() / 2 + 16);
    for (double t : signal) (coin(rng) ? to_a : to_b).push_back(t);
    out.idler = detect("idler", std::move(idler), chain.dark_i_hz, chain, duration_s, rng);
    out.signal = detect("signal_a", std::move(to_a), chain.dark_s_hz, chain, duration_s, rng);
    out.signal_b = detect("signal_b", std::move(to_b), chain.dark_s_hz, chain, duration_s, rng);
  } else {
    out.idler = detect("idler", std::move(idler), chain.dark_i_hz, chain, duration_s, rng);
    out.signal = detect("signal", std::move(signal), chain.dark_s_hz, chain, duration_s, rng);
  }
  return out;
}

std::ptrdiff_t CorrelationHistogram::bin_index(double offset_s) const {
  const auto k = static_cast<std::ptrdiff_t>(std::llround(offset_s / bin_width_s));
  const auto idx = k + half_span();
  if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(counts.size())) return -1;
  return idx;
}

CorrelationHistogram correlate(const TimeTagStream& s1, const TimeTagStream& s2, double bin_width_s,
                               double max_offset_s) {
  if (!(bin_width_s > 0.0)) throw InvalidInput("bin width must be positive");
  if (!(max_offset_s >= 10.0 * bin_width_s)) throw InvalidInput("max offset must span at least 10 bins");
  const bool self = &s1 == &s2;
  const auto half = static_cast<std::ptrdiff_t>(std::floor(max_offset_s / bin_width_s + 1e-9));

  CorrelationHistogram h;
  h.bin_width_s = bin_width_s;
  h.acquisition_s = std::min(s1.duration_s, s2.duration_s);
  h.counts.assign(static_cast<std::size_t>(2 * half + 1), 0);
  h.offsets_s.resize(h.counts.size());
  for (std::ptrdiff_t k = -half; k <= half; ++k) h.offsets_s[static_cast<std::size_t>(k + half)] = k * bin_width_s;

  const double reach = (static_cast<double>(half) + 0.5) * bin_width_s;
  const auto& b = s2.tags;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < s1.tags.size(); ++i) {
    const double t = s1.tags[i];
    while (lo < b.size() && b[lo] < t - reach) ++lo;
    for (std::size_t j = lo; j < b.size() && b[j] < t + reach; ++j) {
      if (self && j == i) continue;
      const auto k = static_cast<std::ptrdiff_t>(std::floor((b[j] - t) / bin_width_s + 0.5));
      if (k >= -half && k <= half) ++h.counts[static_cast<std::size_t>(k + half)];
    }
  }
  return h;
}

double peak_fwhm(const CorrelationHistogram& hist) {
  const auto n = hist.counts.size();
  if (n < 5) throw InsufficientData("histogram too short for a FWHM");
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  double floor_level = 0.0;
  for (std::size_t i = 0; i < edge; ++i) floor_level += static_cast<double>(hist.counts[i] + hist.counts[n - 1 - i]);
  floor_level /= static_cast<double>(2 * edge);

  const auto peak = static_cast<std::size_t>(std::max_element(hist.counts.begin(), hist.counts.end()) -
                                             hist.counts.begin());
  const double top = static_cast<double>(hist.counts[peak]);
  if (!(top > floor_level)) throw InsufficientData("histogram has no peak above its floor");
  const double half = floor_level + 0.5 * (top - floor_level);

  auto edge_at = [&](int step) {
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak);
    while (i + step >= 0 && i + step < static_cast<std::ptrdiff_t>(n) &&
           static_cast<double>(hist.counts[static_cast<std::size_t>(i + step)]) >= half) {
      i += step;
    }
    const auto inside = static_cast<std::size_t>(i);
    const std::ptrdiff_t out_i = i + step;
    if (out_i < 0 || out_i >= static_cast<std::ptrdiff_t>(n)) return hist.offsets_s[inside];
    const auto outside = static_cast<std::size_t>(out_i);
    const double ci = static_cast<double>(hist.counts[inside]);
    const double co = static_cast<double>(hist.counts[outside]);
    const double u = (ci - half) / (ci - co);
    return hist.offsets_s[inside] + u * (hist.offsets_s[outside] - hist.offsets_s[inside]);
  };
  return edge_at(+1) - edge_at(-1);
}

std::uint64_t window_counts(const CorrelationHistogram& hist, double centre_s, double window_s) {
  if (!(window_s >= hist.bin_width_s * (1.0 - 1e-9))) throw InvalidInput("coincidence window narrower than one bin");
  const auto nbins = static_cast<std::ptrdiff_t>(std::llround(window_s / hist.bin_width_s));
  const auto centre = static_cast<std::ptrdiff_t>(std::llround(centre_s / hist.bin_width_s));
  // Odd widths are symmetric about the centre bin; even widths take one extra bin on the left.
  const std::ptrdiff_t k_lo = centre - nbins / 2;
  const std::ptrdiff_t k_hi = k_lo + nbins - 1;
  const auto half = hist.half_span();
  if (k_lo < -half || k_hi > half) throw InvalidInput("coincidence window extends beyond the histogram");
  std::uint64_t sum = 0;
  for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) sum += hist.counts[static_cast<std::size_t>(k + half)];
  return sum;
}

CoincidenceRates coincidence_rates(const CorrelationHistogram& hist, double window_s, double accidental_offset_s,
                                   double accidental_span_s) {
  if (!(hist.acquisition_s > 0.0)) throw InvalidInput("histogram acquisition time must be positive");
  const double region = std::max(window_s, accidental_span_s);
  CoincidenceRates r;
  r.cc_counts = window_counts(hist, 0.0, window_s);
  r.acc_counts = window_counts(hist, accidental_offset_s, region);
  r.acc_region_s = region;
  const double window_bins = std::round(window_s / hist.bin_width_s);
  const double region_bins = std::round(region / hist.bin_width_s);
  r.n_cc_hz = static_cast<double>(r.cc_counts) / hist.acquisition_s;
  r.n_acc_hz = static_cast<double>(r.acc_counts) * (window_bins / region_bins) / hist.acquisition_s;
  r.n_net_hz = r.n_cc_hz - r.n_acc_hz;
  if (r.acc_counts == 0) {
    throw DomainError("accidental window holds no counts; CAR = n_cc / n_acc - 1 is undefined "
                      "(lengthen the acquisition or widen the window)");
  }
  r.car = r.n_cc_hz / r.n_acc_hz - 1.0;
  return r;
}

HeraldedG2 heralded_g2(const TimeTagStream& idler, const TimeTagStream& signal_a, const TimeTagStream& signal_b,
                       double window_s) {
  if (!(window_s > 0.0)) throw InvalidInput("g2 window must be positive");
  const double half = 0.5 * window_s;

  // Sliding pointer: first tag not earlier than h - half.
  auto make_probe = [half](const std::vector<double>& tags) {
    return [&tags, half, lo = std::size_t{0}](double h) mutable {
      while (lo < tags.size() && tags[lo] < h - half) ++lo;
      return lo < tags.size() && tags[lo] <= h + half;
    };
  };
  auto probe_a = make_probe(signal_a.tags);
  auto probe_b = make_probe(signal_b.tags);

  HeraldedG2 g;
  g.n1 = idler.tags.size();
  for (double h : idler.tags) {
    const bool a = probe_a(h);
    const bool b = probe_b(h);
    g.n12 += a;
    g.n13 += b;
    g.n123 += a && b;
  }
  if (g.n12 == 0 || g.n13 == 0) {
    throw UndefinedStatistic("heralded g2 undefined: no herald/signal coincidences on one detector");
  }
  const double n1 = static_cast<double>(g.n1), n12 = static_cast<double>(g.n12), n13 = static_cast<double>(g.n13);
  const double n123 = static_cast<double>(g.n123);
  g.g2h = n123 * n1 / (n12 * n13);
  if (g.n123 > 0) {
    g.sigma = g.g2h * std::sqrt(1.0 / n123 + 1.0 / n1 + 1.0 / n12 + 1.0 / n13);
  } else {
    g.sigma = n1 / (n12 * n13);  // one-count scale
  }
  return g;
}

void validate(const PowerSweepRecord& sweep) {
  if (sweep.rows.size() < 3) throw InsufficientData("power sweep needs at least 3 rows");
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    if (!std::isfinite(r.power_w) || !std::isfinite(r.ns_hz) || !std::isfinite(r.ni_hz) || !std::isfinite(r.nnet_hz)) {
      throw InvalidInput("non-finite value in power sweep row " + std::to_string(i));
    }
    if (!(r.power_w > 0.0)) throw InvalidInput("sweep powers must be positive");
    if (i > 0 && !(r.power_w > sweep.rows[i - 1].power_w)) {
      throw InvalidInput("sweep powers must be strictly increasing");
    }
  }
}

namespace {

// Weighted least squares with weights 1/max(|y|, floor), i.e. Poisson-like variances.
Eigen::VectorXd weighted_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  const double floor = std::max(1e-12, 1e-9 * y.cwiseAbs().maxCoeff());
  Eigen::VectorXd w = y.cwiseAbs().cwiseMax(floor).cwiseInverse().cwiseSqrt();
  const Eigen::MatrixXd a = w.asDiagonal() * design;
  const Eigen::VectorXd b = w.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < design.cols()) throw IdentifiabilityError("power sweep does not determine the fit coefficients");
  return qr.solve(b);
}

}  // namespace

PgrExtraction extract_pgr(const PowerSweepRecord& sweep, bool fit_dark_offset) {
  validate(sweep);
  if (sweep.rows.size() < 4) throw InsufficientData("PGR extraction needs at least 4 distinct powers");
  const auto n = static_cast<Eigen::Index>(sweep.rows.size());
  const int cols = fit_dark_offset ? 3 : 2;

  // Powers in mW keep the design columns O(1).
  constexpr double mw = 1e-3;
  Eigen::MatrixXd singles(n, cols);
  Eigen::MatrixXd quad(n, 1);
  Eigen::VectorXd ys(n), yi(n), ynet(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = sweep.rows[static_cast<std::size_t>(k)];
    const double p = r.power_w / mw;
    singles(k, 0) = p * p;
    singles(k, 1) = p;
    if (fit_dark_offset) singles(k, 2) = 1.0;
    quad(k, 0) = p * p;
    ys(k) = r.ns_hz;
    yi(k) = r.ni_hz;
    ynet(k) = r.nnet_hz;
  }
  const Eigen::VectorXd fs = weighted_fit(singles, ys);
  const Eigen::VectorXd fi = weighted_fit(singles, yi);
  const Eigen::VectorXd fn = weighted_fit(quad, ynet);

  PgrExtraction x;
  x.c_s = fs(0) / (mw * mw);
  x.c_i = fi(0) / (mw * mw);
  x.c_net = fn(0) / (mw * mw);
  if (!(x.c_s > 0.0) || !(x.c_i > 0.0) || !(x.c_net > 0.0)) {
    throw IdentifiabilityError("non-positive quadratic coefficient; the sweep cannot separate pairs from noise");
  }
  x.a_pairs_per_s_per_w2 = x.c_s * x.c_i / x.c_net;
  x.eta_s = x.c_net / x.c_i;
  x.eta_i = x.c_net / x.c_s;
  x.b_s_per_s_per_w = fs(1) / mw / x.eta_s;
  x.b_i_per_s_per_w = fi(1) / mw / x.eta_i;
  if (fit_dark_offset) {
    x.offset_s_hz = fs(2);
    x.offset_i_hz = fi(2);
  }
  return x;
}

SweepPoint measure_point(const SourceTruth& truth, const DetectionChain& chain, double duration_s,
                         std::uint64_t seed, const MeasurementSettings& settings) {
  const auto tags = simulate_tags(truth, chain, duration_s, seed, false);
  const double widest = std::max({settings.rate_window_s, settings.car_window_s, settings.accidental_span_s});
  const double reach = settings.accidental_offset_s + 0.5 * widest + 2.0 * settings.bin_width_s;
  const auto hist = correlate(tags.signal, tags.idler, settings.bin_width_s, std::max(reach, 10.0 * settings.bin_width_s));
  SweepPoint p;
  p.row.power_w = truth.power_w;
  p.row.ns_hz = tags.signal.rate_hz();
  p.row.ni_hz = tags.idler.rate_hz();
  // Rate window: accidentals are subtracted even when none were counted.
  try {
    p.rate_window = coincidence_rates(hist, settings.rate_window_s, settings.accidental_offset_s,
                                      settings.accidental_span_s);
  } catch (const DomainError&) {
    p.rate_window.cc_counts = window_counts(hist, 0.0, settings.rate_window_s);
    p.rate_window.n_cc_hz = static_cast<double>(p.rate_window.cc_counts) / hist.acquisition_s;
    p.rate_window.n_net_hz = p.rate_window.n_cc_hz;
    p.rate_window.acc_region_s = std::max(settings.rate_window_s, settings.accidental_span_s);
  }
  p.row.nnet_hz = p.rate_window.n_net_hz;
  try {
    p.car_window = coincidence_rates(hist, settings.car_window_s, settings.accidental_offset_s,
                                     settings.accidental_span_s);
  } catch (const DomainError&) {
    p.car_window.reset();
  }
  return p;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace pairsource::counting

#include "pairsource/franson.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pairsource/errors.hpp"

namespace pairsource::franson {

std::vector<std::string> validate(const FransonConfig& config, double correlation_fwhm_s) {
  if (!(config.intrinsic_visibility >= 0.0 && config.intrinsic_visibility <= 1.0)) {
    throw ConfigError("intrinsic visibility must lie in [0, 1]");
  }
  if (!(config.phase_rad >= 0.0) || !std::isfinite(config.phase_rad)) throw ConfigError("phase must be finite and >= 0");
  if (!(config.window_s > 0.0)) throw ConfigError("central-peak window must be positive");
  if (!(config.delta_t_s > correlation_fwhm_s)) {
    throw ConfigError("arm delay does not exceed the two-photon correlation FWHM; the single-photon "
                      "interference regime is not modelled");
  }
  std::vector<std::string> warnings;
  if (config.delta_t_s <= 3.0 * correlation_fwhm_s) {
    warnings.emplace_back("arm delay should significantly exceed the two-photon correlation histogram FWHM "
                          "(less than 3x here); side peaks will overlap the central peak");
  }
  if (config.window_s >= config.delta_t_s) {
    warnings.emplace_back("central-peak window reaches the side peaks");
  }
  return warnings;
}

double franson_probability(double phase_rad) { return (1.0 + std::cos(2.0 * phase_rad)) / 4.0; }

FransonRun simulate_franson(const counting::SourceTruth& truth, const FransonConfig& config,
                            const counting::DetectionChain& chain, double duration_s, std::uint64_t seed,
                            double bin_width_s) {
  counting::validate(truth);
  FransonRun run;
  run.warnings = validate(config, truth.correlation_fwhm_s());
  if (!(duration_s > 0.0)) throw InvalidInput("simulation duration must be positive");

  std::mt19937_64 rng(seed);
  counting::Arrivals a = counting::generate_arrivals(truth, chain, duration_s, rng);

  const double dt = config.delta_t_s;
  const double p_same = (1.0 + config.intrinsic_visibility * std::cos(2.0 * config.phase_rad)) / 4.0;
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution pass_same(std::clamp(p_same, 0.0, 1.0));
  std::bernoulli_distribution pass_mixed(0.25);

  std::vector<double> sig, idl;
  sig.reserve(a.pair_signal.size() / 2 + a.signal_only.size() / 2 + 16);
  idl.reserve(a.pair_idler.size() / 2 + a.idler_only.size() / 2 + 16);
  for (std::size_t k = 0; k < a.pair_signal.size(); ++k) {
    const bool long_s = coin(rng);
    const bool long_i = coin(rng);
    const bool kept = long_s == long_i ? pass_same(rng) : pass_mixed(rng);
    if (!kept) continue;
    sig.push_back(a.pair_signal[k] + (long_s ? dt : 0.0));
    idl.push_back(a.pair_idler[k] + (long_i ? dt : 0.0));
  }
  for (double t : a.signal_only) {
    const bool long_arm = coin(rng);
    if (coin(rng)) sig.push_back(t + (long_arm ? dt : 0.0));
  }
  for (double t : a.idler_only) {
    const bool long_arm = coin(rng);
    if (coin(rng)) idl.push_back(t + (long_arm ? dt : 0.0));
  }

  run.signal = counting::detect("signal", std::move(sig), chain.dark_s_hz, chain, duration_s, rng);
  run.idler = counting::detect("idler", std::move(idl), chain.dark_i_hz, chain, duration_s, rng);
  const double span = 3.0 * dt + config.window_s;
  run.histogram = counting::correlate(run.signal, run.idler, bin_width_s, std::max(span, 10.0 * bin_width_s));
  return run;
}

PeakIntegrals peak_integrals(const counting::CorrelationHistogram& hist, double delta_t_s, double window_s) {
  PeakIntegrals p;
  p.central = static_cast<double>(counting::window_counts(hist, 0.0, window_s));
  p.side_minus = static_cast<double>(counting::window_counts(hist, -delta_t_s, window_s));
  p.side_plus = static_cast<double>(counting::window_counts(hist, delta_t_s, window_s));
  p.accidental = static_cast<double>(counting::window_counts(hist, 2.5 * delta_t_s, window_s));
  return p;
}

FringeFit fringe_fit(const std::vector<double>& phases_rad, const std::vector<double>& rates_hz) {
  if (phases_rad.size() != rates_hz.size()) throw InvalidInput("phase and rate lists differ in length");
  for (std::size_t i = 0; i < phases_rad.size(); ++i) {
    if (!std::isfinite(phases_rad[i]) || !std::isfinite(rates_hz[i])) throw InvalidInput("non-finite fringe sample");
  }
  const auto n = static_cast<Eigen::Index>(phases_rad.size());
  if (n < 5) throw IdentifiabilityError("fringe fit needs at least 5 phase points");
  const auto [lo, hi] = std::minmax_element(phases_rad.begin(), phases_rad.end());
  if (*hi - *lo < std::numbers::pi / 2.0 - 1e-12) {
    throw IdentifiabilityError("phase points must span at least half a fringe period (pi/2)");
  }

  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x(k, 0) = 1.0;
    x(k, 1) = std::cos(2.0 * phases_rad[static_cast<std::size_t>(k)]);
    y(k) = rates_hz[static_cast<std::size_t>(k)];
  }
  const double c_mean = x.col(1).mean();
  if ((x.col(1).array() - c_mean).square().sum() < 1e-12 * static_cast<double>(n)) {
    throw IdentifiabilityError("degenerate phase sampling: all phases equal modulo pi");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::Vector2d beta = qr.solve(y);
  const double p = beta(0), q = beta(1);
  if (!(p > 0.0)) throw IdentifiabilityError("fringe mean is not positive");

  FringeFit f;
  f.amplitude = 2.0 * p;
  f.visibility = q / p;
  const Eigen::VectorXd resid = y - x * beta;
  const double dof = static_cast<double>(n - 2);
  const double s2 = resid.squaredNorm() / dof;
  f.rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  const Eigen::Matrix2d cov = s2 * (x.transpose() * x).inverse();
  const Eigen::Vector2d grad(-q / (p * p), 1.0 / p);
  f.visibility_sigma = std::sqrt(std::max(0.0, grad.dot(cov * grad)));

  const auto [mn, mx] = std::minmax_element(rates_hz.begin(), rates_hz.end());
  f.extrema_visibility = (*mx + *mn) > 0.0 ? (*mx - *mn) / (*mx + *mn) : 0.0;
  return f;
}

ChshMargin chsh_margin(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw InvalidInput("visibility must lie in [0, 1]");
  const double limit = 1.0 / std::numbers::sqrt2;
  return {visibility > limit, visibility - limit};
}

}  // namespace pairsource::franson

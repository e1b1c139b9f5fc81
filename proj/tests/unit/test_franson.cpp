#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pairsource/errors.hpp"
#include "pairsource/franson.hpp"

using namespace pairsource;
using namespace pairsource::franson;

namespace {

counting::SourceTruth clean_source() {
  counting::SourceTruth t;
  t.a_pairs_per_s_per_w2 = 1.74e13;
  t.kappa_s_hz = 605e6;
  t.kappa_i_hz = 514e6;
  t.power_w = 50e-6;
  return t;
}

PeakIntegrals run_peaks(double phase, double visibility, std::uint64_t seed) {
  FransonConfig cfg;
  cfg.phase_rad = phase;
  cfg.intrinsic_visibility = visibility;
  const auto run = simulate_franson(clean_source(), cfg, counting::DetectionChain{}, 4.0, seed);
  return peak_integrals(run.histogram, cfg.delta_t_s, cfg.window_s);
}

}  // namespace

TEST_CASE("interference probability") {
  CHECK(franson_probability(0.0) == doctest::Approx(0.5));
  CHECK(franson_probability(std::numbers::pi / 2) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(franson_probability(std::numbers::pi / 4) == doctest::Approx(0.25));
  CHECK(franson_probability(0.3) == doctest::Approx(franson_probability(0.3 + std::numbers::pi)));
}

TEST_CASE("config validation") {
  FransonConfig cfg;
  CHECK(validate(cfg, 0.4e-9).empty());
  CHECK(validate(cfg, 3e-9).size() == 1);
  CHECK_THROWS_AS(validate(cfg, 7e-9), ConfigError);
  cfg.intrinsic_visibility = 1.5;
  CHECK_THROWS_AS(validate(cfg, 0.4e-9), ConfigError);
  cfg.intrinsic_visibility = 0.0;
  CHECK_NOTHROW(validate(cfg, 0.4e-9));
  cfg.window_s = 7e-9;
  CHECK_FALSE(validate(cfg, 0.4e-9).empty());
}

TEST_CASE("three-peak histogram") {
  const auto constructive = run_peaks(0.0, 1.0, 1);
  const double side = 0.5 * (constructive.side_minus + constructive.side_plus);
  REQUIRE(side > 5000.0);
  CHECK(constructive.central / side == doctest::Approx(4.0).epsilon(0.05));
  CHECK(constructive.side_minus == doctest::Approx(constructive.side_plus).epsilon(0.05));
  CHECK(constructive.accidental < 0.01 * side);

  const auto destructive = run_peaks(std::numbers::pi / 2, 1.0, 2);
  CHECK(destructive.central < 0.01 * destructive.side_plus);

  const auto incoherent = run_peaks(0.0, 0.0, 3);
  CHECK(incoherent.central / (0.5 * (incoherent.side_minus + incoherent.side_plus)) ==
        doctest::Approx(2.0).epsilon(0.05));

  // Side peaks do not depend on the phase.
  CHECK(destructive.side_plus == doctest::Approx(constructive.side_plus).epsilon(0.05));
}

TEST_CASE("side peaks sit at the arm delay") {
  FransonConfig cfg;
  const auto run = simulate_franson(clean_source(), cfg, counting::DetectionChain{}, 2.0, 4);
  const auto& h = run.histogram;
  std::size_t best_pos = 0, best_neg = 0;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    if (h.offsets_s[k] > 0.5 * cfg.delta_t_s && h.counts[k] > h.counts[best_pos]) best_pos = k;
    if (h.offsets_s[k] < -0.5 * cfg.delta_t_s && h.counts[k] > h.counts[best_neg]) best_neg = k;
  }
  CHECK(std::abs(h.offsets_s[best_pos] - cfg.delta_t_s) <= h.bin_width_s);
  CHECK(std::abs(h.offsets_s[best_neg] + cfg.delta_t_s) <= h.bin_width_s);
}

TEST_CASE("fringe fit") {
  std::vector<double> ph, n;
  for (int k = 0; k < 12; ++k) {
    const double p = k * std::numbers::pi / 11;
    ph.push_back(p);
    n.push_back(0.5 * 800.0 * (1 + 0.9 * std::cos(2 * p)));
  }
  const auto f = fringe_fit(ph, n);
  CHECK(f.amplitude == doctest::Approx(800.0).epsilon(1e-10));
  CHECK(f.visibility == doctest::Approx(0.9).epsilon(1e-10));
  CHECK(f.rms == doctest::Approx(0.0).epsilon(1e-8));

  const auto flat = fringe_fit(ph, std::vector<double>(12, 50.0));
  CHECK(flat.visibility == doctest::Approx(0.0).epsilon(1e-12));

  // Poisson noise at a few hundred counts per point.
  std::mt19937_64 rng(6);
  std::vector<double> noisy;
  for (double p : ph) noisy.push_back(static_cast<double>(std::poisson_distribution<long>(0.5 * 4000.0 * (1 + 0.987 * std::cos(2 * p)))(rng)));
  const auto fn = fringe_fit(ph, noisy);
  CHECK(std::abs(fn.visibility - 0.987) < 0.02);
  CHECK(fn.visibility_sigma > 0.0);

  CHECK_THROWS_AS(fringe_fit({0.0, 0.5, 1.0, 1.5}, {1, 2, 3, 4}), IdentifiabilityError);
  CHECK_THROWS_AS(fringe_fit({0.0, 0.1, 0.2, 0.3, 0.4}, {1, 2, 3, 4, 5}), IdentifiabilityError);
  CHECK_THROWS_AS(fringe_fit({0.0, 0.1}, {1.0}), InvalidInput);
  std::vector<double> zeros(12, 0.0);
  CHECK_THROWS_AS(fringe_fit(ph, zeros), IdentifiabilityError);
}

TEST_CASE("CHSH margin") {
  CHECK(chsh_margin(0.987).passes);
  CHECK(chsh_margin(0.987).margin == doctest::Approx(0.987 - 1 / std::numbers::sqrt2));
  CHECK(chsh_margin(0.984).margin == doctest::Approx(0.277).epsilon(0.005));
  CHECK_FALSE(chsh_margin(0.702).passes);
  CHECK(chsh_margin(0.702).margin == doctest::Approx(-0.005).epsilon(0.2));
  CHECK_FALSE(chsh_margin(1 / std::numbers::sqrt2).passes);
  CHECK_THROWS_AS(chsh_margin(1.2), InvalidInput);
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pairsource/errors.hpp"
#include "pairsource/link.hpp"

using namespace pairsource;
using namespace pairsource::link;

namespace {

std::vector<double> grid(double half, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = -half + 2 * half * i / (n - 1);
  return v;
}

// Closed-form overlap of two centred circular Gaussians.
double circular_oracle(double wa, double wb) { return std::pow(2 * wa * wb / (wa * wa + wb * wb), 2); }

}  // namespace

TEST_CASE("rate budgets") {
  CHECK(db_chain(2.3e6, {40}) == doctest::Approx(230.0));
  CHECK(db_chain(15e6, {70}) == doctest::Approx(1.5));
  CHECK(db_chain(15e6, {30, 40}) == doctest::Approx(1.5));
  CHECK(db_chain(123.0, {}) == 123.0);
  CHECK_THROWS_AS(db_chain(-1.0, {3}), InvalidInput);
  CHECK(thermal_shift(4e9, 10e-3) == doctest::Approx(40e6));
  CHECK(thermal_shift(4e9, 0.0) == 0.0);
  static_assert(thermal_shift(4e9, 1.0) == 4e9);
}

TEST_CASE("fiber V-number and mode field") {
  const FiberSpec uhna{0.9, 0.35, 0.78};
  const auto v = v_number(uhna);
  CHECK(v.v == doctest::Approx(2.54).epsilon(0.005));
  CHECK_FALSE(v.single_mode);
  const double lambda = 2 * std::numbers::pi * 0.9 * 0.35 / 2.405;
  const auto edge = v_number({0.9, 0.35, lambda});
  CHECK(edge.v == doctest::Approx(2.405).epsilon(1e-14));
  CHECK_FALSE(edge.single_mode);
  CHECK(v_number({0.9, 0.35, lambda * 1.001}).single_mode);

  CHECK(marcuse_w_over_r(v.v) == doctest::Approx(1.06).epsilon(0.01));
  CHECK(marcuse_mfd_um(uhna) == doctest::Approx(1.9).epsilon(0.01));
  CHECK(marcuse_w_over_r(1e6) == doctest::Approx(0.65).epsilon(1e-6));
  CHECK_THROWS_AS(marcuse_w_over_r(0.5), OutOfRange);
  CHECK_THROWS_AS(v_number({0.0, 0.35, 0.78}), InvalidInput);
}

TEST_CASE("Gaussian overlaps") {
  CHECK(overlap_efficiency(GaussianField::circular(1e-6), GaussianField::circular(1e-6)).efficiency ==
        doctest::Approx(1.0));
  CHECK(overlap_efficiency(GaussianField::circular(2e-6), GaussianField::circular(1e-6)).efficiency ==
        doctest::Approx(0.64));
  const GaussianField ell{1.25e-6, 0.6e-6};
  const GaussianField round = GaussianField::circular(0.95e-6);
  const double expect = (2 * 1.25 * 0.95 / (1.25 * 1.25 + 0.95 * 0.95)) * (2 * 0.6 * 0.95 / (0.6 * 0.6 + 0.95 * 0.95));
  CHECK(overlap_efficiency(ell, round).efficiency == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sampled overlaps") {
  const auto xs = grid(8e-6, 161);
  const auto a = SampledField::from_gaussian(GaussianField::circular(2e-6), xs, xs);
  const auto r = overlap_efficiency(a, GaussianField::circular(1e-6));
  CHECK(r.efficiency == doctest::Approx(circular_oracle(2e-6, 1e-6)).epsilon(1e-4));
  CHECK(r.error_estimate < 1e-3);
  CHECK(overlap_efficiency(a, a).efficiency == doctest::Approx(1.0).epsilon(1e-9));

  // Grid that only covers about one mode radius.
  const auto narrow = grid(1.5e-6, 61);
  const auto clipped = SampledField::from_gaussian(GaussianField::circular(2e-6), narrow, narrow);
  CHECK_THROWS_AS(overlap_efficiency(clipped, GaussianField::circular(1e-6)), PrecisionError);

  // Wide enough but far too coarse for the narrow partner.
  const auto coarse = grid(8e-6, 9);
  const auto c = SampledField::from_gaussian(GaussianField::circular(2e-6), coarse, coarse);
  CHECK_THROWS_AS(overlap_efficiency(c, GaussianField::circular(0.3e-6)), PrecisionError);

  SampledField bad = a;
  bad.amplitude.pop_back();
  CHECK_THROWS_AS(validate(bad), InvalidInput);
}

TEST_CASE("loss budgets") {
  const auto s = compose_budget({{{"coupling", 0.32}, {"filter", 0.48}, {"fiber", 0.50}, {"detector", 0.60}}});
  CHECK(s.overall == doctest::Approx(0.046).epsilon(0.01));
  CHECK(s.overall_db == doctest::Approx(13.4).epsilon(0.005));
  const auto i = compose_budget({{{"coupling", 0.33}, {"filter", 0.48}, {"fiber", 0.59}, {"detector", 0.60}}});
  CHECK(i.overall == doctest::Approx(0.056).epsilon(0.01));
  CHECK(i.overall_db == doctest::Approx(12.5).epsilon(0.005));
  const auto one = compose_budget({{{"x", 0.5}}});
  CHECK(one.overall_db == doctest::Approx(3.0103).epsilon(1e-4));
  CHECK(stage_db(1.0) == 0.0);
  CHECK_THROWS_AS(compose_budget({{{"x", 0.0}}}), InvalidInput);
  CHECK_THROWS_AS(stage_db(1.5), InvalidInput);
}

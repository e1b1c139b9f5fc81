#pragma once

#include <string>
#include <vector>

namespace pairsource::link {

/// Applies a chain of losses in dB to a rate.
double db_chain(double rate_in_hz, const std::vector<double>& losses_db);

/// Resonance frequency drift for a temperature excursion.
constexpr double thermal_shift(double coefficient_hz_per_k, double delta_t_k) { return coefficient_hz_per_k * delta_t_k; }

struct FiberSpec {
  double core_radius_um = 0.0;
  double numerical_aperture = 0.0;
  double wavelength_um = 0.0;
};

void validate(const FiberSpec& fiber);

struct VNumber {
  double v = 0.0;
  bool single_mode = false;  // strict V < 2.405
};

VNumber v_number(const FiberSpec& fiber);

/// Marcuse mode-field radius ratio w / r = 0.65 + 1.619 V^-1.5 + 2.879 V^-6.
double marcuse_w_over_r(double v);

/// Mode-field diameter 2w in micrometres. Throws OutOfRange for V < 0.8.
double marcuse_mfd_um(const FiberSpec& fiber);

/// Gaussian amplitude exp(-x^2/wx^2 - y^2/wy^2) centred on the origin.
struct GaussianField {
  double wx_m = 0.0;
  double wy_m = 0.0;

  static GaussianField circular(double w_m) { return {w_m, w_m}; }
};

/// Real field sampled on a uniform rectangular grid, `amplitude[iy * xs.size() + ix]`.
struct SampledField {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> amplitude;

  static SampledField from_gaussian(const GaussianField& g, std::vector<double> xs, std::vector<double> ys);
};

void validate(const SampledField& field);

struct OverlapResult {
  double efficiency = 0.0;
  double error_estimate = 0.0;  // Richardson estimate, 0 for the closed form
};

/// Power overlap |int a b dA|^2 / (int a^2 dA int b^2 dA).
OverlapResult overlap_efficiency(const GaussianField& a, const GaussianField& b);
/// Trapezoid rule on the sampled grid. Throws PrecisionError when the grid does not cover
/// four mode-field radii or the quadrature error estimate exceeds `tolerance`.
OverlapResult overlap_efficiency(const SampledField& a, const GaussianField& b, double tolerance = 1e-3);
OverlapResult overlap_efficiency(const SampledField& a, const SampledField& b, double tolerance = 1e-3);

struct LossStage {
  std::string label;
  double eta = 1.0;
};

struct LossBudget {
  std::vector<LossStage> stages;
};

void validate(const LossBudget& budget);

struct BudgetSummary {
  double overall = 1.0;
  double overall_db = 0.0;
};

BudgetSummary compose_budget(const LossBudget& budget);

/// Loss of one stage in dB, -10 log10(eta).
double stage_db(double eta);

}  // namespace pairsource::link

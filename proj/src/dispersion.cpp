#include "pairsource/dispersion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pairsource/constants.hpp"
#include "pairsource/errors.hpp"

namespace pairsource::dispersion {

void validate(const MaterialModel& model) {
  for (double b : model.b) {
    if (!(b > 0.0)) throw InvalidInput("Sellmeier strengths must be positive (" + model.name + ")");
  }
  for (std::size_t i = 1; i < model.c_um2.size(); ++i) {
    if (!(model.c_um2[i] > model.c_um2[i - 1])) {
      throw InvalidInput("Sellmeier poles must be strictly increasing (" + model.name + ")");
    }
  }
  if (!(model.min_wavelength_um > 0.0) || !(model.max_wavelength_um > model.min_wavelength_um)) {
    throw InvalidInput("invalid Sellmeier validity window (" + model.name + ")");
  }
}

MaterialModel silicon_nitride() {
  return {"Si3N4", {1.73783, 1.25000, 2.68390}, {0.00745, 0.03128, 143.75857}, 0.3, 5.0};
}

MaterialModel silica() {
  return {"SiO2", {0.69652, 0.40321, 0.85807}, {0.00429, 0.01401, 96.57021}, 0.3, 5.0};
}

double sellmeier_index(const MaterialModel& model, double wavelength_um) {
  validate(model);
  if (!std::isfinite(wavelength_um)) throw InvalidInput("wavelength is not finite");
  const double l2 = wavelength_um * wavelength_um;
  // Pole check comes first so that a pole inside or outside the window reports as a domain error.
  for (double c : model.c_um2) {
    if (std::abs(l2 - c) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(l2, c)) {
      throw DomainError("wavelength " + std::to_string(wavelength_um) + " um sits on a Sellmeier pole");
    }
  }
  if (wavelength_um < model.min_wavelength_um || wavelength_um > model.max_wavelength_um) {
    throw OutOfRange("wavelength " + std::to_string(wavelength_um) + " um outside the " + model.name +
                     " validity window");
  }
  double n2 = 1.0;
  for (std::size_t i = 0; i < 3; ++i) n2 += model.b[i] * l2 / (l2 - model.c_um2[i]);
  if (!(n2 > 1.0)) throw DomainError("Sellmeier model gives n^2 <= 1 at " + std::to_string(wavelength_um) + " um");
  return std::sqrt(n2);
}

void validate(const EffectiveIndexTable& table) {
  if (table.samples.size() < 4) {
    throw InsufficientData("effective-index table '" + table.mode + "' needs at least 4 samples");
  }
  if (!(table.radius_m > 0.0)) throw InvalidInput("effective-index table radius must be positive");
  for (std::size_t i = 0; i < table.samples.size(); ++i) {
    const auto& s = table.samples[i];
    if (!std::isfinite(s.frequency_hz) || !std::isfinite(s.n_eff)) {
      throw InvalidInput("non-finite effective-index sample");
    }
    if (!(s.n_eff > 1.0)) throw InvalidInput("effective index must exceed 1");
    if (i > 0 && !(s.frequency_hz > table.samples[i - 1].frequency_hz)) {
      throw InvalidInput("effective-index frequencies must be strictly increasing");
    }
  }
}

double fsr_from_neff(const EffectiveIndexTable& table, double frequency_hz) {
  validate(table);
  const double f_lo = table.samples.front().frequency_hz;
  const double f_hi = table.samples.back().frequency_hz;
  if (!(frequency_hz >= f_lo && frequency_hz <= f_hi)) {
    throw OutOfRange("frequency outside the effective-index table range");
  }

  // Centre and scale omega so the cubic design matrix stays well conditioned.
  const double w_mid = 0.5 * angular(f_lo + f_hi);
  const double w_scale = 0.5 * angular(f_hi - f_lo);
  const auto n = static_cast<Eigen::Index>(table.samples.size());
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd beta(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = table.samples[static_cast<std::size_t>(k)];
    const double w = angular(s.frequency_hz);
    const double x = (w - w_mid) / w_scale;
    design(k, 0) = 1.0;
    design(k, 1) = x;
    design(k, 2) = x * x;
    design(k, 3) = x * x * x;
    beta(k) = s.n_eff * w / kSpeedOfLight;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 4) throw NumericalError("rank-deficient beta(omega) fit");
  const Eigen::Vector4d p = qr.solve(beta);

  auto beta1 = [&](double f) {
    const double x = (angular(f) - w_mid) / w_scale;
    return (p(1) + 2.0 * p(2) * x + 3.0 * p(3) * x * x) / w_scale;
  };
  for (const auto& s : table.samples) {
    if (!(beta1(s.frequency_hz) > 0.0)) {
      throw NumericalError("beta(omega) fit is not monotone over the table; group delay changes sign");
    }
  }
  return 1.0 / (beta1(frequency_hz) * kTwoPi * table.radius_m);
}

ModeMatch identify_mode(double measured_fsr_hz, std::span<const ModeCandidate> candidates) {
  if (candidates.empty()) throw InvalidInput("identify_mode needs at least one candidate");
  const ModeCandidate* best = &candidates.front();
  double best_gap = std::abs(measured_fsr_hz - best->fsr_hz);
  for (const auto& c : candidates.subspan(1)) {
    const double gap = std::abs(measured_fsr_hz - c.fsr_hz);
    if (gap < best_gap) {
      best = &c;
      best_gap = gap;
    }
  }
  return {best->label, best_gap};
}

void validate(const ResonanceGrid& grid) {
  std::set<int> seen;
  bool has_zero = false;
  std::vector<Resonance> sorted = grid.entries;
  for (const auto& r : grid.entries) {
    if (!std::isfinite(r.frequency_hz)) throw InvalidInput("non-finite resonance frequency");
    if (!seen.insert(r.mu).second) throw InvalidInput("duplicate mode index mu=" + std::to_string(r.mu));
    has_zero = has_zero || r.mu == 0;
  }
  if (!has_zero) throw InvalidInput("resonance grid has no mu=0 reference");
  std::sort(sorted.begin(), sorted.end(), [](const Resonance& a, const Resonance& b) { return a.mu < b.mu; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!(sorted[i].frequency_hz > sorted[i - 1].frequency_hz)) {
      throw InvalidInput("resonance frequency must increase with mu (at mu=" + std::to_string(sorted[i].mu) + ")");
    }
  }
}

DispersionFit fit_dispersion(const ResonanceGrid& grid, MuWindow window) {
  validate(grid);
  if (window.lo > 0 || window.hi < 0) throw InvalidInput("fit window must contain mu=0");

  std::vector<const Resonance*> used;
  for (const auto& r : grid.entries) {
    if (r.mu >= window.lo && r.mu <= window.hi) used.push_back(&r);
  }
  if (used.size() < 3) {
    throw InsufficientData("dispersion fit needs at least 3 resonances in the window, got " +
                           std::to_string(used.size()));
  }

  // Fit offsets from the mu=0 resonance to keep the constant column O(FSR) instead of O(f0).
  double f_ref = 0.0;
  for (const auto& r : grid.entries) {
    if (r.mu == 0) f_ref = r.frequency_hz;
  }
  const auto n = static_cast<Eigen::Index>(used.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mu = used[static_cast<std::size_t>(k)]->mu;
    design(k, 0) = 1.0;
    design(k, 1) = mu;
    design(k, 2) = 0.5 * mu * mu;
    y(k) = used[static_cast<std::size_t>(k)]->frequency_hz - f_ref;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw InsufficientData("rank-deficient dispersion design matrix");
  const Eigen::Vector3d coef = qr.solve(y);

  DispersionFit fit;
  fit.f0_hz = f_ref + coef(0);
  fit.d1_hz = coef(1);
  fit.d2_hz = coef(2);
  fit.window = window;
  if (!(fit.d1_hz > 0.0)) throw NumericalError("fitted FSR is not positive");
  fit.samples.reserve(grid.entries.size());
  for (const auto& r : grid.entries) {
    const double mu = r.mu;
    const double rel = r.frequency_hz - f_ref;
    const double dint = rel - coef(0) - coef(1) * mu;
    fit.samples.push_back({r.mu, dint, dint - 0.5 * coef(2) * mu * mu});
  }
  return fit;
}

}  // namespace pairsource::dispersion

#include "pairsource/link.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pairsource/errors.hpp"

namespace pairsource::link {

double db_chain(double rate_in_hz, const std::vector<double>& losses_db) {
  if (!(rate_in_hz >= 0.0)) throw InvalidInput("input rate must be >= 0");
  double total = 0.0;
  for (double l : losses_db) {
    if (!std::isfinite(l)) throw InvalidInput("non-finite loss value");
    total += l;
  }
  return rate_in_hz * std::pow(10.0, -total / 10.0);
}

void validate(const FiberSpec& fiber) {
  if (!(fiber.core_radius_um > 0.0) || !(fiber.numerical_aperture > 0.0) || !(fiber.wavelength_um > 0.0)) {
    throw InvalidInput("fiber core radius, NA and wavelength must be positive");
  }
  const double v = 2.0 * std::numbers::pi * fiber.core_radius_um * fiber.numerical_aperture / fiber.wavelength_um;
  if (!(v < 10.0)) throw OutOfRange("fiber V-number " + std::to_string(v) + " is not below 10");
}

VNumber v_number(const FiberSpec& fiber) {
  validate(fiber);
  const double v = 2.0 * std::numbers::pi * fiber.core_radius_um * fiber.numerical_aperture / fiber.wavelength_um;
  return {v, v < 2.405};
}

double marcuse_w_over_r(double v) {
  if (!(v >= 0.8)) throw OutOfRange("Marcuse formula used outside V >= 0.8");
  return 0.65 + 1.619 / std::pow(v, 1.5) + 2.879 / std::pow(v, 6.0);
}

double marcuse_mfd_um(const FiberSpec& fiber) {
  return 2.0 * fiber.core_radius_um * marcuse_w_over_r(v_number(fiber).v);
}

SampledField SampledField::from_gaussian(const GaussianField& g, std::vector<double> xs, std::vector<double> ys) {
  SampledField f{std::move(xs), std::move(ys), {}};
  f.amplitude.reserve(f.xs.size() * f.ys.size());
  for (double y : f.ys) {
    for (double x : f.xs) f.amplitude.push_back(std::exp(-x * x / (g.wx_m * g.wx_m) - y * y / (g.wy_m * g.wy_m)));
  }
  return f;
}

namespace {

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 5) throw InvalidInput(std::string("overlap grid needs at least 5 points along ") + name);
  const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  if (!(step > 0.0)) throw InvalidInput(std::string("overlap grid axis ") + name + " must be increasing");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (std::abs(axis[i] - axis[i - 1] - step) > 1e-6 * step) {
      throw InvalidInput(std::string("overlap grid axis ") + name + " is not uniform");
    }
  }
}

void check_gaussian(const GaussianField& g) {
  if (!(g.wx_m > 0.0) || !(g.wy_m > 0.0)) throw InvalidInput("Gaussian mode radii must be positive");
}

// Trapezoid integrals of a*b, a*a, b*b using every `stride`-th sample.
struct Moments {
  double ab = 0.0, aa = 0.0, bb = 0.0;
};

Moments trapezoid(const SampledField& a, const std::vector<double>& b, std::size_t stride) {
  const std::size_t nx = a.xs.size(), ny = a.ys.size();
  const std::size_t last_x = (nx - 1) / stride * stride, last_y = (ny - 1) / stride * stride;
  Moments m;
  for (std::size_t iy = 0; iy <= last_y; iy += stride) {
    const double wy = (iy == 0 || iy == last_y) ? 0.5 : 1.0;
    for (std::size_t ix = 0; ix <= last_x; ix += stride) {
      const double w = wy * ((ix == 0 || ix == last_x) ? 0.5 : 1.0);
      const double fa = a.amplitude[iy * nx + ix], fb = b[iy * nx + ix];
      m.ab += w * fa * fb;
      m.aa += w * fa * fa;
      m.bb += w * fb * fb;
    }
  }
  return m;
}

double efficiency(const Moments& m) {
  if (!(m.aa > 0.0) || !(m.bb > 0.0)) throw InvalidInput("overlap field has zero power");
  return std::clamp(m.ab * m.ab / (m.aa * m.bb), 0.0, 1.0);
}

// Mode-field radius along each axis from the second moment of |E|^2, 2 sqrt(<x^2>).
void check_coverage(const SampledField& f) {
  const std::size_t nx = f.xs.size(), ny = f.ys.size();
  double p = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double i = f.amplitude[iy * nx + ix] * f.amplitude[iy * nx + ix];
      p += i;
      mx += i * f.xs[ix];
      my += i * f.ys[iy];
    }
  }
  if (!(p > 0.0)) throw InvalidInput("overlap field has zero power");
  mx /= p;
  my /= p;
  double vx = 0.0, vy = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double i = f.amplitude[iy * nx + ix] * f.amplitude[iy * nx + ix];
      vx += i * (f.xs[ix] - mx) * (f.xs[ix] - mx);
      vy += i * (f.ys[iy] - my) * (f.ys[iy] - my);
    }
  }
  const double wx = 2.0 * std::sqrt(vx / p), wy = 2.0 * std::sqrt(vy / p);
  const double half_x = std::min(mx - f.xs.front(), f.xs.back() - mx);
  const double half_y = std::min(my - f.ys.front(), f.ys.back() - my);
  if (half_x < 2.0 * wx || half_y < 2.0 * wy) {
    throw PrecisionError("overlap grid does not cover four mode-field radii of the field");
  }
}

OverlapResult sampled_overlap(const SampledField& a, const std::vector<double>& b, double tolerance) {
  const Moments fine = trapezoid(a, b, 1);
  const Moments coarse = trapezoid(a, b, 2);
  OverlapResult r;
  r.efficiency = efficiency(fine);
  r.error_estimate = std::abs(r.efficiency - efficiency(coarse)) / 3.0;
  if (r.error_estimate > tolerance) {
    throw PrecisionError("overlap quadrature error estimate " + std::to_string(r.error_estimate) +
                         " exceeds tolerance; refine the grid");
  }
  return r;
}

}  // namespace

void validate(const SampledField& field) {
  check_axis(field.xs, "x");
  check_axis(field.ys, "y");
  if (field.amplitude.size() != field.xs.size() * field.ys.size()) {
    throw InvalidInput("overlap field amplitude count does not match the grid");
  }
  for (double v : field.amplitude) {
    if (!std::isfinite(v)) throw InvalidInput("non-finite overlap field sample");
  }
}

OverlapResult overlap_efficiency(const GaussianField& a, const GaussianField& b) {
  check_gaussian(a);
  check_gaussian(b);
  auto axis = [](double p, double q) { return 2.0 * p * q / (p * p + q * q); };
  return {axis(a.wx_m, b.wx_m) * axis(a.wy_m, b.wy_m), 0.0};
}

OverlapResult overlap_efficiency(const SampledField& a, const GaussianField& b, double tolerance) {
  validate(a);
  check_gaussian(b);
  const SampledField gb = SampledField::from_gaussian(b, a.xs, a.ys);
  check_coverage(a);
  check_coverage(gb);
  return sampled_overlap(a, gb.amplitude, tolerance);
}

OverlapResult overlap_efficiency(const SampledField& a, const SampledField& b, double tolerance) {
  validate(a);
  validate(b);
  if (a.xs.size() != b.xs.size() || a.ys.size() != b.ys.size()) throw InvalidInput("overlap fields use different grids");
  for (std::size_t i = 0; i < a.xs.size(); ++i) {
    if (std::abs(a.xs[i] - b.xs[i]) > 1e-9 * std::abs(a.xs.back() - a.xs.front())) {
      throw InvalidInput("overlap fields use different grids");
    }
  }
  for (std::size_t i = 0; i < a.ys.size(); ++i) {
    if (std::abs(a.ys[i] - b.ys[i]) > 1e-9 * std::abs(a.ys.back() - a.ys.front())) {
      throw InvalidInput("overlap fields use different grids");
    }
  }
  check_coverage(a);
  check_coverage(b);
  return sampled_overlap(a, b.amplitude, tolerance);
}

void validate(const LossBudget& budget) {
  for (const auto& s : budget.stages) {
    if (!(s.eta > 0.0 && s.eta <= 1.0)) throw InvalidInput("stage '" + s.label + "' efficiency must lie in (0, 1]");
  }
}

double stage_db(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput("efficiency must lie in (0, 1]");
  return -10.0 * std::log10(eta);
}

BudgetSummary compose_budget(const LossBudget& budget) {
  validate(budget);
  BudgetSummary s;
  for (const auto& st : budget.stages) s.overall *= st.eta;
  s.overall_db = -10.0 * std::log10(s.overall);
  return s;
}

}  // namespace pairsource::link

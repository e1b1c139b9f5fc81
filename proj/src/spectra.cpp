#include "pairsource/spectra.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <random>

#include "pairsource/errors.hpp"

namespace pairsource::spectra {

void validate(const ResonatorMode& mode) {
  if (!std::isfinite(mode.f0_hz) || !std::isfinite(mode.kappa0_hz) || !std::isfinite(mode.kappa_ex_hz) ||
      !std::isfinite(mode.split_re_hz) || !std::isfinite(mode.split_im_hz)) {
    throw InvalidInput("resonator mode has non-finite fields");
  }
  if (!(mode.kappa0_hz > 0.0)) throw InvalidInput("intrinsic loss rate kappa0 must be positive");
  if (mode.kappa_ex_hz < 0.0) throw InvalidInput("external coupling rate kappa_ex must be non-negative");
  if (!(mode.f0_hz > 0.0)) throw InvalidInput("resonance frequency must be positive");
}

namespace {

// Rates enter as ratios, so the 2pi between Hz and rad/s cancels.
double transmission_hz(double detuning, double kappa0, double kappa_ex, double split_re, double split_im) {
  using cd = std::complex<double>;
  const cd x{0.5 * (kappa0 + kappa_ex), detuning};
  const cd s{split_re, split_im};
  const cd den = x * x + 0.25 * s * s;
  if (den == cd{0.0, 0.0}) return 1.0;
  return std::norm(1.0 - kappa_ex * x / den);
}

}  // namespace

double model_transmission(const ResonatorMode& mode, double f_hz) {
  return transmission_hz(f_hz - mode.f0_hz, mode.kappa0_hz, mode.kappa_ex_hz, mode.split_re_hz, mode.split_im_hz);
}

void validate(const SpectrumTrace& trace) {
  if (trace.frequency_hz.size() != trace.transmission.size()) {
    throw InvalidInput("trace frequency and transmission columns differ in length");
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (!std::isfinite(trace.frequency_hz[i]) || !std::isfinite(trace.transmission[i])) {
      throw InvalidInput("non-finite value in trace at sample " + std::to_string(i));
    }
    if (trace.transmission[i] < 0.0) throw InvalidInput("negative transmission at sample " + std::to_string(i));
    if (i > 0 && !(trace.frequency_hz[i] > trace.frequency_hz[i - 1])) {
      throw InvalidInput("trace frequencies must be strictly increasing (sample " + std::to_string(i) + ")");
    }
  }
}

SpectrumTrace synth_trace(std::span<const ResonatorMode> modes, std::span<const double> f_axis, double noise_sigma,
                          std::uint64_t seed) {
  if (f_axis.empty()) throw InvalidInput("synth_trace needs a non-empty frequency axis");
  if (!(noise_sigma >= 0.0)) throw InvalidInput("noise sigma must be non-negative");
  for (const auto& m : modes) validate(m);
  for (std::size_t i = 1; i < f_axis.size(); ++i) {
    if (!(f_axis[i] > f_axis[i - 1])) throw InvalidInput("frequency axis must be strictly increasing");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  SpectrumTrace out;
  out.source = "synthetic";
  out.frequency_hz.assign(f_axis.begin(), f_axis.end());
  out.transmission.resize(f_axis.size());
  for (std::size_t i = 0; i < f_axis.size(); ++i) {
    double t = 1.0;
    for (const auto& m : modes) t *= model_transmission(m, f_axis[i]);
    if (noise_sigma > 0.0) t += noise_sigma * noise(rng);
    out.transmission[i] = std::max(t, 0.0);
  }
  return out;
}

namespace {

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// Piecewise-linear baseline through block medians.
std::vector<double> local_baseline(const SpectrumTrace& trace, double span_hz) {
  const std::size_t n = trace.size();
  std::vector<double> base(n, 1.0);
  if (n == 0) return base;
  // Median spacing, so gaps between stitched scan segments do not inflate the step.
  std::vector<double> steps;
  steps.reserve(n);
  for (std::size_t i = 1; i < n; ++i) steps.push_back(trace.frequency_hz[i] - trace.frequency_hz[i - 1]);
  const double df = steps.empty() ? 0.0 : median(std::move(steps));
  std::size_t block = 16;
  if (df > 0.0) block = std::max<std::size_t>(block, static_cast<std::size_t>(span_hz / df));
  block = std::min(block, n);

  std::vector<double> centres, medians;
  for (std::size_t start = 0; start < n; start += block) {
    const std::size_t stop = std::min(n, start + block);
    std::vector<double> chunk(trace.transmission.begin() + static_cast<std::ptrdiff_t>(start),
                              trace.transmission.begin() + static_cast<std::ptrdiff_t>(stop));
    centres.push_back(0.5 * (trace.frequency_hz[start] + trace.frequency_hz[stop - 1]));
    medians.push_back(median(std::move(chunk)));
  }
  if (centres.size() == 1) return std::vector<double>(n, medians.front());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = trace.frequency_hz[i];
    while (k + 2 < centres.size() && f > centres[k + 1]) ++k;
    const double u = std::clamp((f - centres[k]) / (centres[k + 1] - centres[k]), 0.0, 1.0);
    base[i] = medians[k] + u * (medians[k + 1] - medians[k]);
  }
  return base;
}

// Vertex of the parabola through three points; falls back to the middle abscissa.
double parabolic_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d = (x0 - x1) * (x0 - x2) * (x1 - x2);
  if (d == 0.0) return x1;
  const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d;
  const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d;
  if (!(a > 0.0)) return x1;
  const double xv = -b / (2.0 * a);
  return (xv >= x0 && xv <= x2) ? xv : x1;
}

}  // namespace

std::vector<double> find_resonances(const SpectrumTrace& trace, double min_depth, double min_separation_hz) {
  validate(trace);
  if (!(min_depth > 0.0 && min_depth < 1.0)) throw InvalidInput("min_depth must lie in (0, 1)");
  if (!(min_separation_hz >= 0.0)) throw InvalidInput("min_separation must be non-negative");
  const std::size_t n = trace.size();
  if (n < 3) return {};

  const auto base = local_baseline(trace, 2.0 * min_separation_hz);
  struct Dip {
    double centre;
    double depth;
  };
  std::vector<Dip> dips;
  std::size_t i = 0;
  while (i < n) {
    if (trace.transmission[i] > base[i] - min_depth) {
      ++i;
      continue;
    }
    std::size_t arg = i;
    while (i < n && trace.transmission[i] <= base[i] - min_depth) {
      if (trace.transmission[i] < trace.transmission[arg]) arg = i;
      ++i;
    }
    double centre = trace.frequency_hz[arg];
    if (arg > 0 && arg + 1 < n) {
      centre = parabolic_vertex(trace.frequency_hz[arg - 1], trace.transmission[arg - 1], trace.frequency_hz[arg],
                                trace.transmission[arg], trace.frequency_hz[arg + 1], trace.transmission[arg + 1]);
    }
    dips.push_back({centre, base[arg] - trace.transmission[arg]});
  }

  std::sort(dips.begin(), dips.end(), [](const Dip& a, const Dip& b) { return a.depth > b.depth; });
  std::vector<double> kept;
  for (const auto& d : dips) {
    const bool clash = std::any_of(kept.begin(), kept.end(),
                                   [&](double k) { return std::abs(k - d.centre) < min_separation_hz; });
    if (!clash) kept.push_back(d.centre);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

namespace {

// Parameters are scaled by the linewidth guess:
// [ (f0 - fc)/k, kappa0/k, kappa_ex/k, k_r/k, k_i/k, (c0 - 1), c1 ].
struct LineshapeResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<double>* x = nullptr;  // (f - fc) / k
  const std::vector<double>* y = nullptr;
  int n_params = 5;

  int inputs() const { return n_params; }
  int values() const { return static_cast<int>(x->size()); }

  static double eval(const Eigen::VectorXd& p, double u) {
    const double t = transmission_hz(u - p(0), std::abs(p(1)), std::abs(p(2)), p(3), p(4));
    if (p.size() > 5) return t * (1.0 + p(5) + p(6) * (u - p(0)));
    return t;
  }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < x->size(); ++i) r(static_cast<Eigen::Index>(i)) = eval(p, (*x)[i]) - (*y)[i];
    return 0;
  }
};

struct Attempt {
  Eigen::VectorXd p;
  double rms = 0.0;
  int evaluations = 0;
  bool ok = false;
};

double rms_of(const LineshapeResidual& f, const Eigen::VectorXd& p) {
  Eigen::VectorXd r(f.values());
  f(p, r);
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

Attempt run_lm(const LineshapeResidual& f, Eigen::VectorXd p, int max_evaluations) {
  Eigen::NumericalDiff<LineshapeResidual, Eigen::Central> diff(f);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LineshapeResidual, Eigen::Central>> lm(diff);
  lm.parameters.maxfev = max_evaluations;
  lm.parameters.xtol = 1e-13;
  lm.parameters.ftol = 1e-15;
  const auto status = lm.minimize(p);
  Attempt a;
  a.p = p;
  a.rms = rms_of(f, p);
  a.evaluations = static_cast<int>(lm.nfev);
  a.ok = status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
         status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters && std::isfinite(a.rms);
  return a;
}

// Canonical sign of the splitting (it enters squared) and positive decay rates.
void canonicalise(Eigen::VectorXd& p) {
  p(1) = std::abs(p(1));
  p(2) = std::abs(p(2));
  if (p(3) < 0.0 || (p(3) == 0.0 && p(4) < 0.0)) {
    p(3) = -p(3);
    p(4) = -p(4);
  }
}

}  // namespace

ResonanceFit fit_resonance(const SpectrumTrace& trace, double f_lo_hz, double f_hi_hz, const FitOptions& opts) {
  validate(trace);
  if (!(f_hi_hz > f_lo_hz)) throw InvalidInput("fit window must have f_hi > f_lo");

  std::vector<double> f, t;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.frequency_hz[i] >= f_lo_hz && trace.frequency_hz[i] <= f_hi_hz) {
      f.push_back(trace.frequency_hz[i]);
      t.push_back(trace.transmission[i]);
    }
  }
  if (f.size() < 10) throw InvalidInput("fit window holds fewer than 10 samples");

  // Initial guesses from the dip itself.
  const std::size_t n = f.size();
  const auto imin = static_cast<std::size_t>(std::min_element(t.begin(), t.end()) - t.begin());
  const std::size_t edge = std::max<std::size_t>(2, n / 10);
  std::vector<double> outer(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(edge));
  outer.insert(outer.end(), t.end() - static_cast<std::ptrdiff_t>(edge), t.end());
  const double base = median(outer);
  double noise = 0.0;
  for (std::size_t i = 1; i < n; ++i) noise += (t[i] - t[i - 1]) * (t[i] - t[i - 1]);
  noise = std::sqrt(noise / (2.0 * static_cast<double>(n - 1)));
  const double depth = base - t[imin];
  if (!(depth > std::max(0.01, 5.0 * noise))) throw NoResonance("no resonance dip inside the fit window");

  const double half = base - 0.5 * depth;
  auto crossing = [&](std::ptrdiff_t step) {
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(imin);
    while (i + step >= 0 && i + step < static_cast<std::ptrdiff_t>(n) && t[static_cast<std::size_t>(i)] < half) {
      i += step;
    }
    const auto a = static_cast<std::size_t>(i - step), b = static_cast<std::size_t>(i);
    if (t[b] == t[a]) return f[b];
    return f[a] + (half - t[a]) * (f[b] - f[a]) / (t[b] - t[a]);
  };
  const double spacing = (f.back() - f.front()) / static_cast<double>(n - 1);
  const double fwhm = std::max(crossing(+1) - crossing(-1), 2.0 * spacing);
  if (f.back() - f.front() < 3.0 * fwhm) throw InvalidInput("fit window spans fewer than 3 linewidths");

  const double k = fwhm;
  const double fc = f[imin];
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = (f[i] - fc) / k;
  std::vector<double> y = t;
  LineshapeResidual resid;
  resid.x = &u;
  resid.y = &y;
  resid.n_params = opts.linear_baseline ? 7 : 5;

  const double tmin = std::clamp(t[imin] / std::max(base, 1e-12), 0.0, 1.0);
  const double eta = 0.5 * (1.0 - std::sqrt(tmin));  // under-coupled branch of (1 - 2 eta)^2

  auto start = [&](double kappa, double ex_fraction, double split) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(resid.n_params);
    p(0) = 0.0;
    p(1) = kappa * (1.0 - ex_fraction);
    p(2) = kappa * ex_fraction;
    p(3) = split;
    p(4) = 0.01;
    if (opts.linear_baseline) p(5) = base - 1.0;
    return p;
  };

  std::optional<Attempt> best;
  int evaluations = 0;
  for (const auto& p0 : {start(1.0, eta, 0.05), start(0.5, eta, 1.0)}) {
    Attempt a = run_lm(resid, p0, opts.max_evaluations);
    evaluations += a.evaluations;
    if (a.ok && (!best || a.rms < best->rms)) best = a;
    if (!best && !a.ok) best = a;
  }
  if (!best->ok) throw FitFailure("resonance fit did not converge", best->rms);
  canonicalise(best->p);

  // The kappa0 <-> kappa_ex swap leaves the unsplit lineshape unchanged; refit from the swapped
  // point to see whether the other coupling regime explains the data as well.
  Eigen::VectorXd swapped = best->p;
  std::swap(swapped(1), swapped(2));
  Attempt alt = run_lm(resid, swapped, opts.max_evaluations);
  evaluations += alt.evaluations;
  canonicalise(alt.p);
  const double tol = 0.05 * best->rms + 1e-9;
  const bool alt_regime_differs = (alt.p(2) > alt.p(1)) != (best->p(2) > best->p(1));
  const bool ambiguous = alt.ok && alt_regime_differs && alt.rms <= best->rms + tol;

  Eigen::VectorXd chosen = best->p;
  double chosen_rms = best->rms;
  if (ambiguous) {
    const bool best_is_over = best->p(2) > best->p(1);
    if (best_is_over != opts.over_coupled) {
      chosen = alt.p;
      chosen_rms = alt.rms;
    }
  }

  ResonanceFit out;
  out.mode.f0_hz = fc + chosen(0) * k;
  out.mode.kappa0_hz = chosen(1) * k;
  out.mode.kappa_ex_hz = chosen(2) * k;
  out.mode.split_re_hz = chosen(3) * k;
  out.mode.split_im_hz = chosen(4) * k;
  out.coupling_ambiguous = ambiguous;
  out.rms = chosen_rms;
  if (opts.linear_baseline) {
    out.baseline_offset = 1.0 + chosen(5);
    out.baseline_slope = chosen(6) / k;
  }
  out.evaluations = evaluations;
  if (!(out.mode.kappa0_hz > 0.0)) throw FitFailure("fit collapsed the intrinsic loss rate to zero", chosen_rms);
  return out;
}

}  // namespace pairsource::spectra

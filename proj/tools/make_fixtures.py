#!/usr/bin/env python3
"""Regenerates the files under fixtures/. Output is deterministic."""

import csv
import json
import math
import pathlib
import random

C = 299792458.0
HERE = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
RADIUS = 41.6e-6


def write_csv(name, header, rows):
    with open(HERE / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([x if isinstance(x, int) else "%.17g" % x for x in r])


def write_json(name, doc):
    (HERE / name).write_text(json.dumps(doc, indent=2) + "\n")


def te20_grid():
    # Quoted signal/pump/idler resonances sit at mu = -2, 0, +2.
    fs, fp, fi = 383.43767e12, 384.49233e12, 385.54702e12
    d1 = (fi - fs) / 4.0
    d2 = (fs + fi - 2.0 * fp) / 4.0
    amx = {-7: 140e6, -6: 60e6, -5: 20e6, 4: -35e6, 5: -80e6, 6: 90e6, 7: 40e6}
    rows = []
    for mu in range(-7, 8):
        f = fp + d1 * mu + 0.5 * d2 * mu * mu + amx.get(mu, 0.0)
        rows.append((mu, f))
    write_csv("te20_grid.csv", ["mu", "frequency_hz"], rows)


def index_tables():
    # n_eff(f) = n0 + s (f - f0) + q (f - f0)^2 with the group index tuned to the quoted FSR.
    f0 = 384.49233e12
    families = {"TE10": (540.1e9, 1.905), "TE20": (526.6e9, 1.862), "TE30": (511.9e9, 1.811), "TM10": (532.8e9, 1.874)}
    for mode, (fsr, n0) in families.items():
        ng = C / (2.0 * math.pi * RADIUS * fsr)
        s = (ng - n0) / f0
        q = 2.0e-31
        samples = []
        for k in range(21):
            f = 369.0e12 + k * 1.5e12
            samples.append({"frequency_hz": f, "n_eff": n0 + s * (f - f0) + q * (f - f0) ** 2})
        write_json("neff_%s.json" % mode.lower(), {"mode": mode, "radius_m": RADIUS, "samples": samples})


def taper_field():
    # Inverse-taper facet mode approximated as an elliptical Gaussian.
    wx, wy = 1.25e-6, 0.60e-6
    rows = []
    n = 81
    for iy in range(n):
        y = -4e-6 + iy * 0.1e-6
        for ix in range(n):
            x = -4e-6 + ix * 0.1e-6
            rows.append((x, y, math.exp(-(x / wx) ** 2 - (y / wy) ** 2)))
    write_csv("taper_field.csv", ["x_m", "y_m", "amplitude"], rows)


def lorentz_dip(f, f0, k0, kex):
    k = k0 + kex
    d = f - f0
    x = complex(k / 2.0, d)
    t = 1.0 - kex / x
    return abs(t) ** 2


def synthetic_trace():
    rng = random.Random(7)
    modes = []
    for j in range(15):
        f0 = 192.0e12 + 4.0e9 * (j + 1) + rng.uniform(-0.3e9, 0.3e9)
        k0 = rng.uniform(120e6, 320e6)
        kex = rng.uniform(80e6, 260e6)
        modes.append((f0, k0, kex))
    rows = []
    f = 192.0e12
    while f <= 192.0e12 + 64.0e9:
        t = 1.0
        for m in modes:
            t *= lorentz_dip(f, *m)
        t += rng.gauss(0.0, 0.002)
        rows.append((f, max(t, 0.0)))
        f += 10e6
    write_csv("synthetic_15_modes.csv", ["frequency_hz", "transmission"], rows)
    write_json("synthetic_15_modes_truth.json",
               {"modes": [{"f0_hz": m[0], "kappa0_hz": m[1], "kappa_ex_hz": m[2]} for m in modes]})


def mode(f0, k0, kex):
    return {"f0_hz": f0, "kappa0_hz": k0, "kappa_ex_hz": kex}


COMMON = {
    "n2_m2_per_w": 3.0e-19,
    "vg_m_per_s": 1.5e8,
    "a_eff_m2": 0.5e-12,
    "radius_m": RADIUS,
}


def replica_configs():
    te20 = {
        "name": "TE20 reference device",
        "provenance": {
            "frequencies": "quoted signal/pump/idler resonances of the TE20 triple",
            "linewidths": "quoted loaded linewidths 605/533/514 MHz; kappa0/kappa_ex split chosen under-coupled",
            "waveguide": "n2, vg, A_eff and R from the PGR parameter estimate",
            "a": "extracted PGR 1.74e7 pairs/s/mW^2",
            "efficiencies": "measured system efficiencies 4.8% / 6.4%",
            "threshold_w": "measured OPO threshold 1.52 mW",
            "noise": "b_s, b_i not quoted; chosen so the simulated CAR peaks near 1e3",
            "dark": "500 Hz per detector, assumed",
            "jitter": "0.35 ns combined timing jitter FWHM, split over two detectors (sigma 0.105 ns each)",
            "franson": "2 m arm difference (6.6 ns), 3.0 ns window, intrinsic visibility 0.987",
        },
        "triple": dict(signal=mode(383.43767e12, 420e6, 185e6), pump=mode(384.49233e12, 353e6, 180e6),
                       idler=mode(385.54702e12, 334e6, 180e6), **COMMON),
        "measured_threshold_w": 1.52e-3,
        "source": {
            "a_pairs_per_s_per_w2": 1.74e13,
            "b_s_per_s_per_w": 3.0e9,
            "b_i_per_s_per_w": 3.0e9,
            "kappa_s_hz": 605e6,
            "kappa_i_hz": 514e6,
            "power_w": 153e-6,
            "threshold_w": 1.52e-3,
        },
        "chain": {"eta_s": 0.048, "eta_i": 0.064, "dark_s_hz": 500.0, "dark_i_hz": 500.0,
                  "jitter_sigma_s": 0.105e-9, "dead_time_s": 22e-9},
        "measurement": {"bin_width_s": 0.1e-9, "rate_window_s": 20e-9, "car_window_s": 0.7e-9,
                        "accidental_offset_s": 250e-9, "accidental_span_s": 400e-9},
        "franson": {"delta_t_s": 6.6e-9, "phase_rad": 0.0, "intrinsic_visibility": 0.987, "window_s": 3.0e-9},
        "design_powers_w": [1.0e-3],
        "sweep_powers_w": [5e-6, 10e-6, 20e-6, 40e-6, 60e-6, 100e-6, 150e-6, 250e-6],
        "duration_s": 10.0,
    }
    tm10 = {
        "name": "TM10 reference device",
        "provenance": {
            "frequencies": "quoted signal/pump/idler resonances of the TM10 triple",
            "linewidths": "quoted loaded linewidths 240/269/253 MHz; pump kappa_ex chosen to reproduce the PGR",
            "waveguide": "TE20 waveguide parameters reused",
            "a": "extracted PGR 9.29e7 pairs/s/mW^2",
            "efficiencies": "5.0% / 5.5%",
            "threshold_w": "measured OPO threshold 0.69 mW",
            "noise": "not quoted; same per-watt noise as the TE20 fixture",
            "dark": "500 Hz per detector, assumed",
            "jitter": "as TE20",
        },
        "triple": dict(signal=mode(383.28230e12, 160e6, 80e6), pump=mode(384.35063e12, 192.5e6, 76.5e6),
                       idler=mode(385.41900e12, 170e6, 83e6), **COMMON),
        "measured_threshold_w": 0.69e-3,
        "source": {
            "a_pairs_per_s_per_w2": 9.29e13,
            "b_s_per_s_per_w": 3.0e9,
            "b_i_per_s_per_w": 3.0e9,
            "kappa_s_hz": 240e6,
            "kappa_i_hz": 253e6,
            "power_w": 100e-6,
            "threshold_w": 0.69e-3,
        },
        "chain": {"eta_s": 0.050, "eta_i": 0.055, "dark_s_hz": 500.0, "dark_i_hz": 500.0,
                  "jitter_sigma_s": 0.105e-9, "dead_time_s": 22e-9},
        "measurement": {"bin_width_s": 0.1e-9, "rate_window_s": 20e-9, "car_window_s": 0.7e-9,
                        "accidental_offset_s": 250e-9, "accidental_span_s": 400e-9},
        "franson": {"delta_t_s": 6.6e-9, "phase_rad": 0.0, "intrinsic_visibility": 0.987, "window_s": 3.0e-9},
        "design_powers_w": [0.5e-3],
        "sweep_powers_w": [20e-6, 40e-6, 60e-6, 80e-6, 100e-6, 150e-6, 200e-6, 300e-6],
        "duration_s": 10.0,
    }
    write_json("te20_replica.json", te20)
    write_json("tm10_replica.json", tm10)


def link_configs():
    write_json("table_s1_signal.json", {"stages": [
        {"label": "chip-to-fiber coupling", "eta": 0.32},
        {"label": "filtering", "eta": 0.48},
        {"label": "fiber routing", "eta": 0.50},
        {"label": "detector", "eta": 0.60}]})
    write_json("table_s1_idler.json", {"stages": [
        {"label": "chip-to-fiber coupling", "eta": 0.33},
        {"label": "filtering", "eta": 0.48},
        {"label": "fiber routing", "eta": 0.59},
        {"label": "detector", "eta": 0.60}]})
    write_json("linkbudget.json", {
        "rates": [
            {"label": "deep-space downlink", "rate_hz": 2.3e6, "losses_db": [40.0], "requirement_hz": 100.0},
            {"label": "entangled-pair link", "rate_hz": 15e6, "losses_db": [70.0], "requirement_hz": 1.0},
        ],
        "thermal": {"coefficient_hz_per_k": 4e9, "delta_t_k": 10e-3},
        "fiber": {"core_radius_um": 0.9, "numerical_aperture": 0.35, "wavelength_um": 0.78},
        "budgets": {"signal": "table_s1_signal.json", "idler": "table_s1_idler.json"},
        "taper_field_csv": "taper_field.csv",
    })


def fringe():
    # Fringe: 12 phases, Poisson counts over 30 s at ~60 Hz peak.
    rng = random.Random(11)
    rows = []
    t = 30.0
    for k in range(12):
        phi = k * math.pi / 12.0
        mean = 0.5 * 120.0 * (1 + 0.987 * math.cos(2 * phi)) * t
        # Normal approximation to Poisson is adequate at these counts.
        n = max(0, round(rng.gauss(mean, math.sqrt(max(mean, 1.0)))))
        rows.append((phi, n / t))
    write_csv("fringe_v0987.csv", ["phase_rad", "ncc_hz"], rows)


def sweep_example():
    # Noise-free singles/coincidences for the TE20 replica parameters.
    a, es, ei, bs, bi, dark = 1.74e13, 0.048, 0.064, 3.0e9, 3.0e9, 500.0
    rows = []
    for p in [20e-6, 40e-6, 60e-6, 80e-6, 100e-6, 120e-6, 150e-6, 200e-6]:
        rows.append((p, es * (a * p * p + bs * p) + dark, ei * (a * p * p + bi * p) + dark, es * ei * a * p * p))
    write_csv("sweep_te20_ideal.csv", ["power_w", "ns_hz", "ni_hz", "nnet_hz"], rows)


if __name__ == "__main__":
    HERE.mkdir(exist_ok=True)
    te20_grid()
    index_tables()
    taper_field()
    synthetic_trace()
    replica_configs()
    link_configs()
    fringe()
    sweep_example()

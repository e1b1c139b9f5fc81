import math

import pytest

import pairsource as ps


def test_linewidth_and_symmetric_constant():
    assert ps.photon_linewidth(605e6, 514e6) == pytest.approx(357.2e6, abs=0.5e6)
    assert ps.photon_linewidth(1e9, 1e9) / 1e9 == pytest.approx(math.sqrt(math.sqrt(2) - 1), rel=1e-12)


def test_design_report_te20():
    s = ps.ResonatorMode(383.43767e12, 420e6, 185e6)
    p = ps.ResonatorMode(384.49233e12, 353e6, 180e6)
    i = ps.ResonatorMode(385.54702e12, 334e6, 180e6)
    t = ps.ModeTriple(s, p, i, 3e-19, 1.5e8, 0.5e-12, 41.6e-6)
    r = ps.design_report(t, 1e-3)
    assert r.pgr_pairs_per_s_per_w2 * 1e-6 == pytest.approx(1.7e7, rel=0.1)
    assert not r.above_threshold


def test_simulation_is_seeded():
    truth = ps.SourceTruth(1e13, kappa_s_hz=600e6, kappa_i_hz=500e6, power_w=1e-4)
    chain = ps.DetectionChain(0.5, 0.5)
    a = ps.simulate_tags(truth, chain, 0.1, 5)
    b = ps.simulate_tags(truth, chain, 0.1, 5)
    assert a.signal.tags == b.signal.tags
    assert len(a.idler) > 0
    h = ps.correlate(a.signal, a.idler, 0.1e-9, 20e-9)
    assert max(h.counts) == h.counts[len(h.counts) // 2] or max(h.counts) > 0


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        ps.simulate_tags(ps.SourceTruth(1e13), ps.DetectionChain(), 0.0, 1)
    with pytest.raises(ArithmeticError):
        ps.fringe_fit([0.0, 0.1], [1.0, 2.0])
    with pytest.raises(ps.NumericalError):
        ps.brightness(1.0, 0.0)


def test_link_numbers():
    assert ps.db_chain(2.3e6, [40.0]) == pytest.approx(230.0)
    v, single = ps.v_number(0.9, 0.35, 0.78)
    assert round(v, 2) == 2.54 and not single
    assert ps.marcuse_mfd_um(0.9, 0.35, 0.78) == pytest.approx(1.9, abs=0.05)
    overall, db = ps.compose_budget([0.32, 0.48, 0.50, 0.60])
    assert round(overall, 3) == 0.046 and round(db, 1) == 13.4
    assert ps.chsh_margin(0.984)[0]

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kikerr import duffing
from kikerr import units as u
from kikerr.errors import DomainError, FitError, PreconditionError


def brute_force_critical_photons(kerr, kappa):
    """Photon number at the onset of a fold found by scanning the drive curve.

    P(n) = n [(D + 2 pi K n)^2 + (pi kappa)^2] is sampled densely; the detuning
    where P(n) first stops being monotonic is bisected and the flat point of
    P(n) there is returned.
    """
    n = np.linspace(0.0, 5.0 * kappa / kerr, 200001)

    def dpdn(d):
        return (d + u.TWO_PI * kerr * n) ** 2 + 2 * n * u.TWO_PI * kerr * (d + u.TWO_PI * kerr * n) \
            + (math.pi * kappa) ** 2

    lo, hi = 0.0, -20.0 * u.TWO_PI * kappa  # lo monotone, hi folded
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if dpdn(mid).min() < 0:
            hi = mid
        else:
            lo = mid
    return float(n[np.argmin(dpdn(lo))])


def test_threshold_against_brute_force():
    rng = np.random.default_rng(1234)
    t0 = time.perf_counter()
    for _ in range(20):
        kerr = 10 ** rng.uniform(3, 6)
        kappa = 10 ** rng.uniform(4, 7)
        oracle = brute_force_critical_photons(kerr, kappa)
        assert abs(duffing.bifurcation_threshold(kerr, kappa) - oracle) / oracle < 0.02
    assert time.perf_counter() - t0 < 10.0


def test_threshold_edges():
    assert duffing.bifurcation_threshold(0.0, 1e6) == math.inf
    with pytest.raises(DomainError):
        duffing.bifurcation_threshold(1e3, 0.0)
    with pytest.raises(DomainError):
        duffing.bifurcation_threshold(-1.0, 1e6)


def _cubic_residual(cav, fd, p, n):
    d = u.TWO_PI * (fd - cav.resonance_frequency + cav.kerr * n)
    lhs = (d * d + (math.pi * cav.total_linewidth) ** 2) * n
    rhs = u.TWO_PI * cav.external_linewidth * p / (u.hbar * u.TWO_PI * fd)
    return (lhs - rhs) / rhs


@settings(max_examples=200, deadline=None)
@given(kerr=st.floats(1e2, 1e6), gi=st.floats(1e3, 1e6), ge=st.floats(1e3, 1e6),
       det=st.floats(-20, 5), pscale=st.floats(1e-3, 1e3))
def test_roots_solve_the_cubic(kerr, gi, ge, det, pscale):
    cav = duffing.KerrCavity(7e9, kerr, gi, ge)
    p = pscale * duffing.critical_drive_power(cav)
    fd = 7e9 + det * cav.total_linewidth
    ss = duffing.steady_state(cav, fd, p)
    assert 1 <= len(ss.roots) <= 3
    for r in ss.roots:
        assert r.photon_number >= 0
        assert abs(_cubic_residual(cav, fd, p, r.photon_number)) < 1e-7
    if len(ss.roots) == 3:
        assert [r.stable for r in ss.roots] == [True, False, True]


@settings(max_examples=100, deadline=None)
@given(kerr=st.floats(0, 1e6), ge=st.floats(1e3, 1e6), det=st.floats(-5e6, 5e6), p=st.floats(0, 1e-12))
def test_lossless_reflection_is_unity(kerr, ge, det, p):
    cav = duffing.KerrCavity(7e9, kerr, 0.0, ge)
    for r in duffing.steady_state(cav, 7e9 + det, p).roots:
        assert abs(abs(r.s11) - 1.0) < 1e-12


def test_zero_kerr_matches_linear():
    cav = duffing.KerrCavity(7e9, 0.0, 2e5, 3e5)
    for det in (-1e6, 0.0, 2e5):
        ss = duffing.steady_state(cav, 7e9 + det, 1e-15)
        assert len(ss.roots) == 1
        lin = duffing.photon_number_from_power(1e-15, 7e9 + det, 3e5, 5e5, det)
        assert ss.roots[0].photon_number == pytest.approx(lin, rel=1e-12)
    with pytest.raises(DomainError):
        duffing.KerrCavity(7e9, -1.0, 1e5, 1e5)


def test_power_photon_round_trip():
    n = duffing.photon_number_from_power(1e-14, 6.3e9, 3e5, 5.8e5, 1e5)
    assert duffing.power_for_photon_number(n, 6.3e9, 3e5, 5.8e5, 1e5) == pytest.approx(1e-14, rel=1e-14)


def test_bistability_onset_at_critical_power():
    cav = duffing.KerrCavity(6.3e9, 123.5e3, 2.9e5, 2.9e5)
    pc = duffing.critical_drive_power(cav)
    freqs = 6.3e9 + np.linspace(-6, 1, 1401) * cav.total_linewidth
    below = [len(duffing.steady_state(cav, f, 0.98 * pc).roots) for f in freqs]
    above = [len(duffing.steady_state(cav, f, 1.05 * pc).roots) for f in freqs]
    assert max(below) == 1
    assert max(above) == 3


def test_softening_asymmetry():
    cav = duffing.KerrCavity(6.3e9, 123.5e3, 2.9e5, 2.9e5)
    pc = duffing.critical_drive_power(cav)
    freqs = 6.3e9 + np.linspace(-4, 4, 801) * cav.total_linewidth
    lo, _ = duffing.stable_branches(cav, freqs, 0.5 * pc)
    peak = freqs[np.argmax(lo)]
    assert peak < 6.3e9
    mirror = [abs(duffing.steady_state(cav, 6.3e9 + d, 0.5 * pc).roots[0].s11)
              - abs(duffing.steady_state(cav, 6.3e9 - d, 0.5 * pc).roots[0].s11) for d in (2e5, 4e5)]
    assert any(abs(m) > 1e-3 for m in mirror)


def test_response_sweep_rows():
    cav = duffing.KerrCavity(6.3e9, 123.5e3, 2.9e5, 2.9e5)
    pc = duffing.critical_drive_power(cav)
    freqs = 6.3e9 + np.linspace(-6, 1, 201) * cav.total_linewidth
    rows = duffing.response_sweep(cav, freqs, 3 * pc)
    assert len(rows) > len(freqs)
    assert {r[4] for r in rows} == {0, 1, 2}
    assert all(r[3] >= 0 for r in rows)


def test_two_tone_shift_linear_in_pump():
    cav = duffing.KerrCavity(6.3e9, 123.5e3, 2.9e5, 2.9e5)
    probe = np.linspace(6.29e9, 6.301e9, 501)
    for p in (0.0, 1e-14, 1e-13):
        r = duffing.two_tone_response(cav, duffing.DriveConfig(6.32e9, p, 20e6), probe)
        assert r.shifted_frequency == pytest.approx(6.3e9 - 123.5e3 * r.pump_photons, rel=1e-15)
        assert r.linewidth == cav.total_linewidth
        dip = probe[np.argmin(np.abs(r.s11))]
        assert abs(dip - r.shifted_frequency) <= probe[1] - probe[0]
    half = duffing.two_tone_response(cav, duffing.DriveConfig(6.32e9, 1e-13, 20e6, 0.0), probe, slope=0.5)
    full = duffing.two_tone_response(cav, duffing.DriveConfig(6.32e9, 1e-13, 20e6, 0.0), probe)
    assert 6.3e9 - half.shifted_frequency == pytest.approx(0.5 * (6.3e9 - full.shifted_frequency), rel=1e-6)


def test_two_tone_probe_guard():
    cav = duffing.KerrCavity(6.3e9, 123.5e3, 2.9e5, 2.9e5)
    with pytest.raises(PreconditionError):
        duffing.two_tone_response(cav, duffing.DriveConfig(6.32e9, 1e-15, 20e6, 1e-14), [6.3e9])


def test_shot_noise_linewidth_fit():
    m = duffing.LinewidthModel(3e5, 1.2e5, 0.8)
    n = np.array([0.0, 1, 4, 9, 16, 25, 100])
    lw = duffing.shot_noise_linewidth(m, n)
    assert lw[0] == 3e5
    r = duffing.fit_shot_noise_broadening(n, lw)
    assert r["gamma0"] == pytest.approx(3e5, rel=1e-12)
    assert r["slope"] == pytest.approx(0.8 * 1.2e5, rel=1e-12)
    with pytest.raises(FitError):
        duffing.fit_shot_noise_broadening([1, 1, 1], [1, 2, 3])
    with pytest.raises(DomainError):
        duffing.shot_noise_linewidth(m, -1.0)


def test_offresonant_dephasing():
    assert duffing.offresonant_dephasing(10, 1e5, -1e9) == pytest.approx(100.0)
    with pytest.raises(DomainError):
        duffing.offresonant_dephasing(10, 1e5, 0.0)


def test_real_cubic_roots_known():
    r = duffing._real_cubic_roots(-6.0, 11.0, -6.0)
    assert np.allclose(r, [1, 2, 3], atol=1e-12)
    r = duffing._real_cubic_roots(0.0, 1.0, -2.0)
    assert np.allclose(r, [1.0], atol=1e-12)


def test_subnormal_kerr_behaves_linearly():
    cav = duffing.KerrCavity(7e9, 5e-324, 0.0, 1e3)
    ss = duffing.steady_state(cav, 7e9, 1e-13)
    lin = duffing.photon_number_from_power(1e-13, 7e9, 1e3, 1e3, 0.0)
    assert ss.roots[0].photon_number == pytest.approx(lin, rel=1e-12)

import math

import pytest

from kikerr import core
from kikerr import units as u

# (f0 GHz, width nm, length nm, linewidth kHz, Qi, K kHz, K err kHz)
DEVICES = [
    (6.30, 18, 460, 580, 1.08e4, 123.5, 3.0),
    (8.48, 38, 600, 1600, 0.53e4, 88.0, 5.3),
    (8.07, 38, 800, 800, 1.0e4, 72.5, 4.5),
    (7.03, 36, 1450, 310, 2.3e4, 46.0, 6.0),
    (7.12, 38, 1200, 1000, 0.71e4, 42.0, 5.4),
    (6.50, 44, 1800, 2300, 0.2e4, 15.5, 1.5),
    (7.70, 225, 7250, 220, 3.5e4, 2.2, 0.15),
]
FILM_NM = 14.0


@pytest.fixture
def device1_material():
    return core.MaterialSpec.from_lab_units(Tc=2.9, thickness_nm=14, Ls_pH_sq=40, Jstar_MA_cm2=3.95,
                                            N0_per_eV_um3=2e10)


@pytest.fixture
def device1_design(device1_material):
    wire = core.WireGeometry(18 * u.NM, 460 * u.NM, 14 * u.NM)
    d = core.ResonatorDesign(device1_material, wire, 1 * u.PF)
    return core.with_frequency(d, 6.3e9)


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.fixture
def close():
    def check(a, b, rtol):
        assert rel(a, b) < rtol, f"{a} vs {b} (rtol {rtol})"
    return check


def hand_kerr(Ls, Jstar, w, l, t, f):
    """Independent hand evaluation of the circuit Kerr formula."""
    hbar = 1.054571817e-34
    L = Ls * l / w
    wang = 2 * math.pi * f
    izpf = math.sqrt(hbar * wang / (2 * L))
    istar = Jstar * w * t
    return 1.5 * f * (izpf / istar) ** 2


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)

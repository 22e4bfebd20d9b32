"""Driven Kerr resonator in the mean-field (Duffing) approximation.

Single-port reflection geometry. The cavity has resonance ``f0``, Kerr
shift per photon ``K`` (softening: the resonance moves to ``f0 - K n``),
internal linewidth ``gamma`` and external coupling ``kappa_ext``; all in Hz
as energy-decay rates / ordinary frequencies. The intracavity photon
number n solves

    [(Delta + 2 pi K n)^2 + (pi kappa)^2] n = 2 pi kappa_ext P / (hbar omega_d)

with Delta = 2 pi (f_d - f0) and kappa = gamma + kappa_ext.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import units as u
from .errors import DomainError, FitError, PreconditionError
from .fitresult import FitResult


@dataclass(frozen=True)
class KerrCavity:
    resonance_frequency: float
    kerr: float
    internal_linewidth: float
    external_linewidth: float

    def __post_init__(self):
        if self.kerr < 0:
            raise DomainError("kerr must be >= 0 (softening convention)")
        if self.internal_linewidth < 0 or self.external_linewidth < 0:
            raise DomainError("linewidths must be >= 0")
        if not self.total_linewidth > 0:
            raise DomainError("total linewidth must be > 0")

    @property
    def total_linewidth(self):
        return self.internal_linewidth + self.external_linewidth

    @classmethod
    def from_circuit(cls, circuit, internal_linewidth, external_linewidth):
        return cls(circuit.resonance_frequency, circuit.kerr_shift,
                   internal_linewidth, external_linewidth)


@dataclass(frozen=True)
class DriveConfig:
    drive_frequency: float
    drive_power: float
    pump_detuning: float = 0.0
    probe_power: float = 0.0

    def __post_init__(self):
        if self.drive_power < 0 or self.probe_power < 0:
            raise DomainError("powers must be >= 0")


@dataclass(frozen=True)
class SteadyRoot:
    photon_number: float
    stable: bool
    s11: complex


@dataclass(frozen=True)
class SteadyState:
    roots: tuple

    @property
    def photon_numbers(self):
        return [r.photon_number for r in self.roots]

    @property
    def stable_roots(self):
        return [r for r in self.roots if r.stable]

    @property
    def bistable(self):
        return len(self.roots) == 3


@dataclass(frozen=True)
class LinewidthModel:
    base_linewidth: float
    kerr: float
    broadening_coefficient: float

    def __post_init__(self):
        if not self.base_linewidth > 0:
            raise DomainError("base linewidth must be > 0")
        if self.broadening_coefficient < 0:
            raise DomainError("broadening coefficient must be >= 0")


@dataclass
class TwoToneResult:
    probe_frequencies: np.ndarray
    s11: np.ndarray
    shifted_frequency: float
    pump_photons: float
    linewidth: float
    meta: dict = field(default_factory=dict)


def photon_number_from_power(power, frequency, kappa_ext, kappa, detuning):
    """Linear-cavity photon number for a drive of ``power`` watts at the chip."""
    if not kappa > 0:
        raise DomainError("kappa must be > 0")
    k_ext = u.TWO_PI * kappa_ext
    k_tot = u.TWO_PI * kappa
    d = u.TWO_PI * detuning
    return k_ext / (d * d + 0.25 * k_tot * k_tot) * power / (u.hbar * u.TWO_PI * frequency)


def power_for_photon_number(n, frequency, kappa_ext, kappa, detuning):
    """Inverse of :func:`photon_number_from_power`."""
    return n / photon_number_from_power(1.0, frequency, kappa_ext, kappa, detuning)


def _real_cubic_roots(b, c, d):
    """Real roots of x^3 + b x^2 + c x + d, ascending.

    Trigonometric form when three real roots exist, hyperbolic Cardano
    otherwise; each root is then polished with guarded Newton steps.
    """
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if p < 0 and disc < 0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = max(-1.0, min(1.0, arg))
        theta = math.acos(arg) / 3.0
        ts = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    elif p == 0.0:
        ts = [-math.copysign(abs(q) ** (1.0 / 3.0), q)]
    elif p > 0:
        s = 2.0 * math.sqrt(p / 3.0)
        ts = [-s * math.sinh(math.asinh(1.5 * q / p * math.sqrt(3.0 / p)) / 3.0)]
    else:
        s = 2.0 * math.sqrt(-p / 3.0)
        arg = -1.5 * abs(q) / p * math.sqrt(-3.0 / p)
        ts = [-math.copysign(1.0, q) * s * math.cosh(math.acosh(max(arg, 1.0)) / 3.0)]
    roots = []
    for t in ts:
        x = t + shift
        f = ((x + b) * x + c) * x + d
        for _ in range(4):
            fp = (3.0 * x + 2.0 * b) * x + c
            if fp == 0.0:
                break
            xn = x - f / fp
            fn = ((xn + b) * xn + c) * xn + d
            if abs(fn) >= abs(f):
                break
            x, f = xn, fn
        roots.append(x)
    return sorted(roots)


def _reflection(cavity, drive_frequency, n):
    delta = cavity.resonance_frequency - cavity.kerr * n - drive_frequency
    return 1.0 - cavity.external_linewidth / (0.5 * cavity.total_linewidth + 1j * delta)


def steady_state(cavity, drive_frequency, drive_power):
    """All physical steady states of the driven Kerr cavity.

    Roots are returned in increasing photon number; a root is stable when
    the cubic's derivative there is positive.
    """
    if drive_power <= 0:
        return SteadyState((SteadyRoot(0.0, True, complex(_reflection(cavity, drive_frequency, 0.0))),))
    kap = cavity.total_linewidth
    detuning = drive_frequency - cavity.resonance_frequency
    # K/kappa can underflow for subnormal K; that cavity is linear
    if cavity.kerr / (0.5 * kap) == 0:
        n = photon_number_from_power(drive_power, drive_frequency, cavity.external_linewidth,
                                     kap, detuning)
        return SteadyState((SteadyRoot(n, True, complex(_reflection(cavity, drive_frequency, n))),))

    # scaled variables: x = 2K n / kappa, D = 2 Delta / kappa
    half = 0.5 * kap
    dd = detuning / half
    n_lin0 = photon_number_from_power(drive_power, drive_frequency, cavity.external_linewidth,
                                      kap, 0.0)
    scale = cavity.kerr / half
    drive = n_lin0 * scale  # x (dd^2+... ) normalised so that linear x = drive/(dd^2+1)
    xs = _real_cubic_roots(2.0 * dd, dd * dd + 1.0, -drive)
    roots = []
    for x in xs:
        if x < 0:
            continue
        deriv = (3.0 * x + 4.0 * dd) * x + dd * dd + 1.0
        n = x / scale
        roots.append(SteadyRoot(n, deriv > 0, complex(_reflection(cavity, drive_frequency, n))))
    return SteadyState(tuple(roots))


def bifurcation_threshold(kerr, kappa):
    """Critical intracavity photon number kappa / (sqrt(3) K).

    Returns ``math.inf`` for K = 0 (no bifurcation).
    """
    if kappa <= 0:
        raise DomainError("kappa must be > 0")
    if kerr < 0:
        raise DomainError("kerr must be >= 0")
    if kerr == 0:
        return math.inf
    return kappa / (math.sqrt(3.0) * kerr)


def critical_drive_power(cavity, frequency=None):
    """Chip power at which bistability first appears (cusp of the fold)."""
    kap = cavity.total_linewidth
    n_c = bifurcation_threshold(cavity.kerr, kap)
    # at the cusp: Delta = -sqrt(3) kappa/2, (Delta + K n)^2 = kappa^2 / 12
    drive_rate = n_c * (u.TWO_PI * kap) ** 2 / 3.0  # kappa_ext_ang P/(hbar w) in s^-2
    f = frequency or cavity.resonance_frequency - math.sqrt(3.0) * kap / 2.0
    return drive_rate * u.hbar * u.TWO_PI * f / (u.TWO_PI * cavity.external_linewidth)


def response_sweep(cavity, drive_frequencies, drive_power):
    """Steady states over a drive-frequency grid, flattened into rows.

    Each row is ``(frequency_hz, re_s11, im_s11, n_c, branch_id)``. With three
    roots, branch 0 / 1 / 2 are the low stable, unstable and high stable
    solutions; a single root is branch 0.
    """
    rows = []
    for f in np.asarray(drive_frequencies, dtype=float):
        ss = steady_state(cavity, float(f), drive_power)
        for i, r in enumerate(ss.roots):
            rows.append((float(f), r.s11.real, r.s11.imag, r.photon_number, i))
    return rows


def stable_branches(cavity, drive_frequencies, drive_power):
    """Lowest and highest stable photon number at each drive frequency."""
    lo, hi = [], []
    for f in np.asarray(drive_frequencies, dtype=float):
        st = [r.photon_number for r in steady_state(cavity, float(f), drive_power).stable_roots]
        lo.append(min(st))
        hi.append(max(st))
    return np.array(lo), np.array(hi)


def two_tone_response(cavity, pump, probe_frequencies, slope=1.0):
    """Weak-probe reflection while a detuned pump populates the cavity.

    The pump sits at ``f0 + pump.pump_detuning``; its photon number comes from
    the steady state (lowest stable root). The probe sees a Lorentzian at
    ``f0 - slope * K * n_pump`` with unchanged linewidth.
    """
    f0 = cavity.resonance_frequency
    kap = cavity.total_linewidth
    f_pump = f0 + pump.pump_detuning
    n_pump = steady_state(cavity, f_pump, pump.drive_power).stable_roots[0].photon_number
    f_shift = f0 - slope * cavity.kerr * n_pump
    if pump.probe_power > 0 and n_pump > 0:
        n_probe = photon_number_from_power(pump.probe_power, f_shift,
                                           cavity.external_linewidth, kap, 0.0)
        if n_probe > 1e-2 * n_pump:
            raise PreconditionError(
                f"probe population {n_probe:.3g} exceeds 1% of pump population {n_pump:.3g}")
    fp = np.asarray(probe_frequencies, dtype=float)
    s11 = 1.0 - cavity.external_linewidth / (0.5 * kap + 1j * (f_shift - fp))
    return TwoToneResult(fp, s11, f_shift, n_pump, kap,
                         meta={"pump_frequency_Hz": f_pump, "slope_convention": slope})


def shot_noise_linewidth(model, n_c):
    """gamma(n) = gamma0 + c sqrt(n) K."""
    if np.any(np.asarray(n_c) < 0):
        raise DomainError("photon number must be >= 0")
    return model.base_linewidth + model.broadening_coefficient * np.sqrt(n_c) * model.kerr


def fit_shot_noise_broadening(n_c, linewidth):
    """Straight-line fit of linewidth against sqrt(n_c).

    Returns the intercept ``gamma0`` and ``slope`` (= c K) in Hz.
    """
    x = np.sqrt(np.asarray(n_c, dtype=float))
    y = np.asarray(linewidth, dtype=float)
    if len(x) < 3 or np.ptp(x) == 0:
        raise FitError("need >= 3 distinct photon numbers")
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = np.linalg.inv(A.T @ A) * s2
    return FitResult(params={"gamma0": float(coef[0]), "slope": float(coef[1])},
                     errors={"gamma0": math.sqrt(cov[0, 0]), "slope": math.sqrt(cov[1, 1])},
                     residual_norm=float(np.linalg.norm(resid)), dof=dof)


def offresonant_dephasing(n, kerr, detuning):
    """Linewidth increase n K^2 / Delta for an off-resonant (virtual) population."""
    if detuning == 0:
        raise DomainError("detuning must be non-zero")
    return n * kerr ** 2 / abs(detuning)

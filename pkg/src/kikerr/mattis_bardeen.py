"""Mattis-Bardeen conductivity and thin-film surface impedance.

Only the sub-gap branch (hbar omega < 2 Delta) is implemented. Integrals are
evaluated with adaptive quadrature after substitutions that remove the
inverse-square-root endpoint singularities of the BCS density of states.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

from . import units as u
from .core import GAP_RATIO, gap_from_tc
from .errors import DomainError, FitError, NormalStateWarning, OutOfRegimeError
from .fitresult import FitResult, covariance_from_jacobian

EPSREL = 1e-8
EPSABS = 1e-14
# weak-coupling BCS ratio Delta0/(kB Tc) = pi exp(-euler_gamma)
BCS_RATIO = math.pi * math.exp(-np.euler_gamma)


@dataclass(frozen=True)
class ConductivityPoint:
    temperature: float
    frequency: float
    sigma1_ratio: float
    sigma2_ratio: float


@dataclass(frozen=True)
class FreqShiftCurve:
    temperatures: np.ndarray
    shifts: np.ndarray
    ki_fraction: float
    frequency: float = 6e9

    def __post_init__(self):
        if len(self.temperatures) != len(self.shifts):
            raise ValueError("temperatures and shifts differ in length")


def _fermi(E, kT):
    if kT <= 0:
        return 0.0 if E > 0 else 1.0
    return float(expit(-E / kT))


def _gap_exact(T, Tc):
    """Self-consistent weak-coupling gap.

    Solves ln(Delta0/Delta) = 2 int_0^inf f(E)/E dxi with E = sqrt(xi^2 + Delta^2).
    """
    d0 = BCS_RATIO * u.k_B * Tc
    kT = u.k_B * T

    def mismatch(x):
        d = x * d0

        def integrand(s):
            E = math.sqrt(s * s + d * d)
            return _fermi(E, kT) / E

        val = integrate.quad(integrand, 0, 60 * kT, epsabs=0, epsrel=1e-11, limit=200)[0]
        return math.log(1.0 / x) - 2.0 * val

    lo = 1e-12
    if mismatch(1.0 - 1e-15) <= 0 and mismatch(lo) <= 0:
        return 0.0
    x = optimize.brentq(mismatch, lo, 1.0, xtol=1e-14, rtol=1e-13)
    return x * d0


def bcs_gap(T, Tc, exact=False):
    """Temperature-dependent gap in joules.

    Default is the interpolation Delta0 tanh(1.74 sqrt(Tc/T - 1)) with
    Delta0 = 1.76 kB Tc. ``exact=True`` solves the weak-coupling gap equation
    instead. At or above Tc returns 0 and warns.
    """
    if T < 0:
        raise DomainError("temperature must be >= 0")
    if T >= Tc:
        warnings.warn(f"T = {T} K is at or above Tc = {Tc} K: normal state", NormalStateWarning,
                      stacklevel=2)
        return 0.0
    if T == 0:
        return gap_from_tc(Tc) if not exact else BCS_RATIO * u.k_B * Tc
    if exact:
        return _gap_exact(T, Tc)
    return gap_from_tc(Tc) * math.tanh(1.74 * math.sqrt(Tc / T - 1.0))


def _sigma1(hw, D, kT):
    if kT <= 0:
        return 0.0
    emax = 60.0 * kT
    # E = D + s^2 removes 1/sqrt(E - D)

    def integrand(s):
        E = D + s * s
        df = _fermi(E, kT) - _fermi(E + hw, kT)
        num = E * E + D * D + hw * E
        den = math.sqrt(E + D) * math.sqrt((E + hw) ** 2 - D * D)
        return 2.0 * df * num / den

    val = integrate.quad(integrand, 0.0, math.sqrt(emax), epsabs=EPSABS, epsrel=EPSREL,
                         limit=200)[0]
    return 2.0 / hw * val


def _sigma2(hw, D, kT):
    """Zero-temperature part minus the thermal (quasiparticle) correction."""
    lo, hi = D - hw, D
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    # E = mid + half sin(theta) removes both endpoint singularities

    def kernel(theta):
        E = mid + half * math.sin(theta)
        return (E * E + D * D + hw * E) / (math.sqrt(D + E) * math.sqrt(E + hw + D)), E

    def zero_t(theta):
        return kernel(theta)[0]

    def thermal(theta):
        k, E = kernel(theta)
        return 2.0 * _fermi(E + hw, kT) * k

    lim = (-0.5 * math.pi, 0.5 * math.pi)
    s0 = integrate.quad(zero_t, *lim, epsabs=EPSABS, epsrel=EPSREL, limit=200)[0]
    st = 0.0
    if kT > 0:
        st = integrate.quad(thermal, *lim, epsabs=EPSABS, epsrel=EPSREL, limit=200)[0]
    return (s0 - st) / hw


def mb_conductivity(frequency, T, gap):
    """sigma1/sigma_n and sigma2/sigma_n for hbar omega < 2 Delta."""
    hw = u.hbar * u.TWO_PI * frequency
    if gap <= 0:
        raise OutOfRegimeError("gap must be > 0 (normal state)")
    if hw >= 2.0 * gap:
        raise OutOfRegimeError("hbar omega >= 2 Delta: pair-breaking regime not implemented")
    if T < 0:
        raise DomainError("temperature must be >= 0")
    kT = u.k_B * T
    return ConductivityPoint(T, frequency, _sigma1(hw, gap, kT), _sigma2(hw, gap, kT))


def surface_impedance(cond, thickness, rho_n):
    """Thin-film (local limit) surface impedance rho_n / ((s1 - i s2) t).

    Returns a complex number whose imaginary part is the (positive,
    inductive) surface reactance X_s.
    """
    if cond.sigma2_ratio == 0:
        raise DomainError("sigma2 = 0: normal state, surface reactance undefined")
    return rho_n / ((cond.sigma1_ratio - 1j * cond.sigma2_ratio) * thickness)


def _reactance_shape(T, Tc, frequency, exact_gap=False):
    """X_s up to the constant rho_n/t: sigma2 / (sigma1^2 + sigma2^2)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormalStateWarning)
        gap = bcs_gap(T, Tc, exact=exact_gap)
    cond = mb_conductivity(frequency, T, gap)
    s1, s2 = cond.sigma1_ratio, cond.sigma2_ratio
    return s2 / (s1 * s1 + s2 * s2)


def frequency_shift(T, alpha, material, frequency, exact_gap=False):
    """Fractional shift -(alpha/2) (X_s(T) - X_s(0)) / X_s(0).

    ``material`` may be a MaterialSpec or a bare Tc in kelvin; only Tc
    matters since rho_n / t cancels in the ratio.
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must be in (0, 1]")
    Tc = getattr(material, "critical_temperature", material)
    if T == 0:
        return 0.0
    x0 = _reactance_shape(0.0, Tc, frequency, exact_gap)
    xt = _reactance_shape(T, Tc, frequency, exact_gap)
    return -0.5 * alpha * (xt - x0) / x0


def frequency_shift_curve(temperatures, alpha, Tc, frequency, exact_gap=False):
    x0 = _reactance_shape(0.0, Tc, frequency, exact_gap)
    out = np.empty(len(temperatures))
    for i, T in enumerate(temperatures):
        if T == 0:
            out[i] = 0.0
            continue
        xt = _reactance_shape(float(T), Tc, frequency, exact_gap)
        out[i] = -0.5 * alpha * (xt - x0) / x0
    return out


def fit_tc(curve, material=None, tc_guess=None, fit_offset=False):
    """Least-squares Tc with the kinetic-inductance fraction held fixed.

    ``curve`` holds (T, delta f0/f0) samples. With ``fit_offset`` a constant
    calibration offset on delta f0/f0 is co-fitted.
    """
    T = np.asarray(curve.temperatures, dtype=float)
    y = np.asarray(curve.shifts, dtype=float)
    if len(T) < 5:
        raise FitError("need >= 5 samples to fit Tc")
    if np.ptp(y) == 0:
        raise FitError("no visible frequency shift in data")
    alpha, f = curve.ki_fraction, curve.frequency
    if tc_guess is None:
        tc_guess = getattr(material, "critical_temperature", None) or _tc_initial_guess(T, y, alpha, f)

    def model(p):
        m = frequency_shift_curve(T, alpha, p[0], f)
        return m + (p[1] if fit_offset else 0.0)

    scale = max(np.max(np.abs(y)), 1e-15)

    def resid(p):
        if p[0] <= T.max() * 1.0001:
            return np.full(len(T), 1e3)
        return (model(p) - y) / scale

    p0 = [tc_guess] + ([0.0] if fit_offset else [])
    lower = [T.max() * 1.001] + ([-np.inf] if fit_offset else [])
    upper = [np.inf] + ([np.inf] if fit_offset else [])
    p0[0] = max(p0[0], lower[0] * 1.01)
    try:
        sol = optimize.least_squares(resid, p0, bounds=(lower, upper), x_scale="jac",
                                     xtol=1e-12, ftol=1e-12, gtol=1e-12,
                                     diff_step=1e-6)
    except OutOfRegimeError as exc:
        raise FitError(f"model evaluation failed: {exc}") from exc
    if not sol.success:
        raise FitError("Tc fit did not converge", {"message": sol.message, "x": sol.x.tolist()})
    cov = covariance_from_jacobian(sol.jac, sol.fun, len(p0))
    params = {"Tc": float(sol.x[0])}
    errors = {"Tc": float(math.sqrt(max(cov[0, 0], 0.0)))}
    if fit_offset:
        params["offset"] = float(sol.x[1])
        errors["offset"] = float(math.sqrt(max(cov[1, 1], 0.0)))
    return FitResult(params, errors, residual_norm=float(np.linalg.norm(sol.fun * scale)),
                     dof=len(T) - len(p0), extras={"nfev": sol.nfev, "alpha": alpha})


def _tc_initial_guess(T, y, alpha, f):
    """Coarse grid search for Tc on the model curve."""
    grid = np.linspace(T.max() * 1.05, T.max() * 20, 40)
    best, best_cost = grid[0], np.inf
    for tc in grid:
        try:
            m = frequency_shift_curve(T, alpha, tc, f)
        except OutOfRegimeError:
            continue
        cost = float(np.sum((m - y) ** 2))
        if cost < best_cost:
            best, best_cost = tc, cost
    return best


def shifts_from_frequencies(temperatures, f0):
    """Convert measured resonance frequencies to delta f0 / f0.

    The lowest-temperature sample is taken as the reference.
    """
    T = np.asarray(temperatures, dtype=float)
    f = np.asarray(f0, dtype=float)
    ref = f[np.argmin(T)]
    return (f - ref) / ref, ref


def sheet_inductance_from_reactance(frequency, Tc, rho_n, thickness):
    """Zero-temperature kinetic sheet inductance X_s(0) / omega."""
    gap = gap_from_tc(Tc)
    cond = mb_conductivity(frequency, 0.0, gap)
    zs = surface_impedance(cond, thickness, rho_n)
    return zs.imag / (u.TWO_PI * frequency)


__all__ = [
    "BCS_RATIO", "GAP_RATIO", "ConductivityPoint", "FreqShiftCurve", "bcs_gap",
    "mb_conductivity", "surface_impedance", "frequency_shift", "frequency_shift_curve",
    "fit_tc", "shifts_from_frequencies", "sheet_inductance_from_reactance",
]

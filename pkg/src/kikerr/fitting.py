"""Measurement-analysis fits: reflection resonances, sheet inductance, Kerr, TLS."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .duffing import photon_number_from_power
from .errors import DomainError, FitError, FitWarning
from .fitresult import FitResult, covariance_from_jacobian
from . import units as u

MIN_SAMPLES = 8


@dataclass(frozen=True)
class MeasurementTrace:
    """Sampled S-parameter sweep or real-valued time series."""

    kind: str
    axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("frequency_sweep", "time_series"):
            raise DomainError(f"unknown trace kind {self.kind!r}")
        axis = np.asarray(self.axis, dtype=float)
        values = np.asarray(self.values)
        if axis.ndim != 1 or axis.shape != values.shape:
            raise DomainError("axis and values must be 1-D arrays of equal length")
        if len(axis) < MIN_SAMPLES:
            raise DomainError(f"need at least {MIN_SAMPLES} samples")
        if np.any(np.diff(axis) <= 0):
            raise DomainError("axis must be strictly increasing")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)


@dataclass
class ResonanceFit:
    f0: float
    qi: float
    qc: float
    errors: dict
    amplitude: complex
    slope: float
    delay: float
    residual_norm: float
    dof: int
    extras: dict = field(default_factory=dict)

    @property
    def linewidth(self):
        """Internal linewidth f0 / Q_i in Hz."""
        return self.f0 / self.qi

    @property
    def q_loaded(self):
        return 1.0 / (1.0 / self.qi + 1.0 / self.qc)

    def to_fit_result(self):
        params = {"f0": self.f0, "Qi": self.qi, "Qc": self.qc, "linewidth": self.linewidth,
                  "delay": self.delay, "slope": self.slope,
                  "amplitude_re": self.amplitude.real, "amplitude_im": self.amplitude.imag}
        return FitResult(params, dict(self.errors), self.residual_norm, self.dof, dict(self.extras))


# --- reflection resonance -----------------------------------------------------


def reflection_model(freq, f0, qi, qc, amplitude=1.0, slope=0.0, delay=0.0, reference=None):
    """Single-port reflection with affine amplitude and cable delay.

    S = A (1 + s (f - f0)/f0) exp(-2 pi i (f - f_ref) tau) [1 - (2Q/Qc) / (1 - 2iQ (f - f0)/f0)]
    where 1/Q = 1/Qi + 1/Qc.
    """
    f = np.asarray(freq, dtype=float)
    ref = f0 if reference is None else reference
    q = 1.0 / (1.0 / qi + 1.0 / qc)
    x = (f - f0) / f0
    core = 1.0 - (2.0 * q / qc) / (1.0 - 2j * q * x)
    return amplitude * (1.0 + slope * x) * np.exp(-2j * math.pi * (f - ref) * delay) * core


def synthesize_reflection(freq, f0, qi, qc, amplitude=1.0, slope=0.0, delay=0.0, noise=0.0,
                          rng=None):
    """Reflection trace with complex Gaussian noise of std ``noise * |amplitude|`` per quadrature."""
    s = reflection_model(freq, f0, qi, qc, amplitude, slope, delay, reference=float(np.mean(freq)))
    if noise > 0:
        rng = np.random.default_rng(rng)
        s = s + noise * abs(amplitude) * (rng.standard_normal(len(s)) + 1j * rng.standard_normal(len(s)))
    return MeasurementTrace("frequency_sweep", np.asarray(freq, dtype=float), s)


def _circle_fit(z):
    """Algebraic (Kasa) circle fit; returns centre, radius, rms radial residual."""
    x, y = z.real, z.imag
    A = np.column_stack([x, y, np.ones_like(x)])
    rhs = x * x + y * y
    (cx2, cy2, c), *_ = np.linalg.lstsq(A, rhs, rcond=None)
    zc = 0.5 * (cx2 + 1j * cy2)
    r = math.sqrt(max(c + abs(zc) ** 2, 0.0))
    resid = np.abs(z - zc) - r
    return zc, r, float(np.sqrt(np.mean(resid * resid)))


def _estimate_delay(f, s, fref):
    span = f[-1] - f[0]
    phase = np.unwrap(np.angle(s))
    tau0 = -np.polyfit(f - fref, phase, 1)[0] / (2.0 * math.pi)

    def cost(tau):
        zc, r, rms = _circle_fit(s * np.exp(2j * math.pi * (f - fref) * tau))
        return rms / r if r > 0 else np.inf

    grid = tau0 + np.linspace(-2.0, 2.0, 201) / span
    costs = [cost(t) for t in grid]
    i = int(np.argmin(costs))
    step = grid[1] - grid[0]
    res = optimize.minimize_scalar(cost, bounds=(grid[i] - step, grid[i] + step), method="bounded",
                                   options={"xatol": 1e-6 * step})
    return float(res.x)


def _initial_guess(f, s, fref):
    tau = _estimate_delay(f, s, fref)
    z = s * np.exp(2j * math.pi * (f - fref) * tau)
    zc, r, _ = _circle_fit(z)
    nedge = max(2, len(f) // 20)
    p_off = np.mean(np.concatenate([z[:nedge], z[-nedge:]]))
    dist2 = np.abs(z - p_off) ** 2
    k = int(np.argmax(dist2))
    f0 = f[k]
    above = np.flatnonzero(dist2 >= 0.5 * dist2[k])
    width = max(f[above[-1]] - f[above[0]], 2.0 * (f[1] - f[0]))
    q = f0 / width

    theta = np.unwrap(np.angle(z - zc))
    theta = theta - 2.0 * math.pi * np.round((theta[k] - math.pi - np.angle(p_off - zc)) / (2.0 * math.pi))

    def phase_resid(p):
        t0, lq, df = p
        return theta - (t0 + 2.0 * np.arctan(2.0 * math.exp(lq) * (f - (f0 + df * width)) / f0))

    t0 = theta[k]
    sol = optimize.least_squares(phase_resid, [t0, math.log(q), 0.0], method="lm")
    t0, lq, df = sol.x
    q = math.exp(lq)
    f0 = f0 + df * width
    amp = zc + r * np.exp(1j * (t0 - math.pi))
    d = min(2.0 * r / abs(amp), 1.999)
    qc = 2.0 * q / d
    inv_qi = 1.0 / q - 1.0 / qc
    qi = 1.0 / inv_qi if inv_qi > 0 else 100.0 * q
    return f0, qi, qc, complex(amp), tau


def fit_resonance(trace, slope=True):
    """Fit f0, Q_i, Q_c and a complex background to a reflection sweep.

    Initialization is deterministic: delay from a circle-quality scan, then a
    circle fit and a phase-vs-frequency arctangent fit, followed by a full
    complex least-squares refinement.
    """
    if trace.kind != "frequency_sweep":
        raise FitError("fit_resonance needs a frequency_sweep trace")
    f = trace.axis
    s = np.asarray(trace.values, dtype=complex)
    fref = float(np.mean(f))
    span = f[-1] - f[0]
    try:
        f0i, qii, qci, ampi, taui = _initial_guess(f, s, fref)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise FitError(f"initialization failed: {exc}") from exc
    lw0 = f0i / qii + f0i / qci

    def unpack(p):
        f0 = f0i + p[0] * lw0
        # cap ln Q so a runaway step cannot overflow to inf
        return (f0, math.exp(min(p[1], 100.0)), math.exp(min(p[2], 100.0)), complex(p[3], p[4]), p[5],
                taui + p[6] / span)

    def resid(p):
        f0, qi, qc, amp, sl, tau = unpack(p)
        m = reflection_model(f, f0, qi, qc, amp, sl if slope else 0.0, tau, reference=fref)
        r = m - s
        return np.concatenate([r.real, r.imag])

    p0 = [0.0, math.log(qii), math.log(qci), ampi.real, ampi.imag, 0.0, 0.0]
    try:
        sol = optimize.least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                     max_nfev=4000)
    except (ValueError, ArithmeticError) as exc:
        raise FitError(f"least squares failed: {exc}") from exc
    f0, qi, qc, amp, sl, tau = unpack(sol.x)
    diag = {"message": sol.message, "status": int(sol.status), "f0": f0, "Qi": qi, "Qc": qc}
    if not np.all(np.isfinite(sol.x)) or sol.status <= 0:
        raise FitError("resonance fit did not converge", diag)
    if not f[0] <= f0 <= f[-1]:
        raise FitError("fitted resonance lies outside the sweep span", diag)
    q = 1.0 / (1.0 / qi + 1.0 / qc)
    if span < 3.0 * f0 / q:
        warnings.warn("sweep spans fewer than 3 linewidths", FitWarning, stacklevel=2)
    cov = covariance_from_jacobian(sol.jac, sol.fun, len(sol.x))
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    errors = {"f0": float(sd[0] * lw0), "Qi": float(qi * sd[1]), "Qc": float(qc * sd[2]),
              "delay": float(sd[6] / span), "slope": float(sd[5])}
    errors["linewidth"] = float(math.hypot(errors["f0"] / qi, f0 * errors["Qi"] / qi ** 2))
    return ResonanceFit(f0, qi, qc, errors, amp, float(sl if slope else 0.0), float(tau),
                        float(np.linalg.norm(sol.fun)), 2 * len(f) - len(sol.x),
                        extras={"nfev": int(sol.nfev), "reference_frequency": fref})


# --- sheet inductance ---------------------------------------------------------


def fit_sheet_inductance(lengths, frequencies, capacitance, width):
    """Ls from the slope m = 4 pi^2 Ls C / w of 1/f0^2 against wire length."""
    l = np.asarray(lengths, dtype=float)
    f = np.asarray(frequencies, dtype=float)
    if len(np.unique(l)) < 2:
        raise FitError("need at least two distinct wire lengths")
    if not (capacitance > 0 and width > 0):
        raise DomainError("capacitance and width must be > 0")
    y = 1.0 / f ** 2
    A = np.column_stack([l, np.ones_like(l)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(l) - 2
    if dof > 0:
        cov = np.linalg.inv(A.T @ A) * float(resid @ resid) / dof
        sd = np.sqrt(np.diag(cov))
    else:
        sd = np.zeros(2)
    scale = width / (4.0 * math.pi ** 2 * capacitance)
    return FitResult({"Ls": float(coef[0] * scale), "intercept": float(coef[1])},
                     {"Ls": float(sd[0] * scale), "intercept": float(sd[1])},
                     float(np.linalg.norm(resid)), dof, {"slope": float(coef[0])})


# --- Kerr extraction ----------------------------------------------------------


def pump_photon_numbers(source_power_dbm, attenuation_db, frequency, kappa_ext, kappa, detuning=0.0):
    """Intracavity pump photons for source powers delivered through an attenuating line."""
    p = u.dbm_to_watt(np.asarray(source_power_dbm, dtype=float) - attenuation_db)
    return photon_number_from_power(p, frequency, kappa_ext, kappa, detuning)


def extract_kerr(n_pump, shifts, sigma=None, intercept=True, attenuation_uncertainty_db=0.0):
    """Kerr shift per photon from frequency shift against pump photon number.

    Weighted straight-line fit of delta f0 = c - K n (``intercept=False`` pins
    c = 0). K is the slope magnitude. An input-line attenuation uncertainty
    sigma_A (dB) scales every n by the same unknown factor and adds
    K ln(10)/10 sigma_A in quadrature.
    """
    n = np.asarray(n_pump, dtype=float)
    y = np.asarray(shifts, dtype=float)
    if len(n) < 3:
        raise FitError("need at least three pump levels")
    if np.ptp(n) == 0:
        raise FitError("pump levels must differ")
    w = np.ones_like(n) if sigma is None else 1.0 / np.asarray(sigma, dtype=float) ** 2
    cols = [n, np.ones_like(n)] if intercept else [n]
    A = np.column_stack(cols)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    resid = y - A @ coef
    dof = len(n) - len(coef)
    chi2 = float(np.sum(w * resid ** 2))
    cov = np.linalg.inv((A * w[:, None]).T @ A)
    if sigma is None:
        cov = cov * (chi2 / dof if dof > 0 else 0.0)
    slope = float(coef[0])
    k = abs(slope)
    stat = float(math.sqrt(max(cov[0, 0], 0.0)))
    sys = k * math.log(10.0) / 10.0 * attenuation_uncertainty_db
    noise = float(np.sqrt(chi2 / dof)) if (sigma is None and dof > 0) else None
    order = np.argsort(n)
    steps = np.diff(y[order])
    tol = 3.0 * (noise if noise is not None else float(np.max(np.asarray(sigma, dtype=float))))
    if slope != 0 and np.any(np.sign(steps) == -np.sign(slope)) and np.any(np.abs(steps[np.sign(steps) == -np.sign(slope)]) > tol):
        warnings.warn("frequency shifts are non-monotonic beyond the noise level", FitWarning, stacklevel=2)
    params = {"K": k}
    errors = {"K": math.hypot(stat, sys)}
    if intercept:
        params["intercept"] = float(coef[1])
        errors["intercept"] = float(math.sqrt(max(cov[1, 1], 0.0)))
    return FitResult(params, errors, float(np.linalg.norm(resid)), dof,
                     {"slope": slope, "statistical_error": stat, "attenuation_error": sys,
                      "softening": slope < 0})


# --- TLS saturation -----------------------------------------------------------


def tls_quality_factor(n_c, q_tls, q_other, n_sat, beta=0.5):
    """Q_i from 1/Q_i = (1/Q_TLS)(1 + n/n_sat)^(-beta) + 1/Q_other."""
    n = np.asarray(n_c, dtype=float)
    return 1.0 / ((1.0 + n / n_sat) ** (-beta) / q_tls + 1.0 / q_other)


def fit_tls_saturation(n_c, qi, beta=0.5, fit_beta=False):
    """Fit the phenomenological TLS saturation model to Q_i(n_c)."""
    n = np.asarray(n_c, dtype=float)
    q = np.asarray(qi, dtype=float)
    if len(n) < 5:
        raise FitError("need at least five power levels")
    pos = n[n > 0]
    if len(pos) < 2 or np.log10(pos.max() / pos.min()) < 2.0:
        raise FitError("photon numbers must span at least two decades")
    if np.any(q <= 0):
        raise FitError("quality factors must be positive")
    qlo = q[np.argmin(n)]
    qhi = q[np.argmax(n)]
    q_other0 = qhi * 1.05
    inv_tls = max(1.0 / qlo - 1.0 / q_other0, 1e-3 / qlo)
    p0 = [math.log(1.0 / inv_tls), math.log(q_other0), math.log(math.sqrt(pos.min() * pos.max()))]
    if fit_beta:
        p0.append(beta)

    def resid(p):
        b = p[3] if fit_beta else beta
        m = tls_quality_factor(n, math.exp(p[0]), math.exp(p[1]), math.exp(p[2]), b)
        return q / m - 1.0

    best = None
    for ln_nsat in np.linspace(math.log(pos.min()), math.log(pos.max()), 7):
        start = list(p0)
        start[2] = ln_nsat
        sol = optimize.least_squares(resid, start, method="lm", xtol=1e-14, ftol=1e-14, max_nfev=2000)
        if best is None or sol.cost < best.cost:
            best = sol
    if not np.all(np.isfinite(best.x)) or best.status <= 0:
        raise FitError("TLS fit did not converge", {"message": best.message})
    cov = covariance_from_jacobian(best.jac, best.fun, len(best.x))
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    vals = [math.exp(best.x[0]), math.exp(best.x[1]), math.exp(best.x[2])]
    params = {"Q_TLS": vals[0], "Q_other": vals[1], "n_sat": vals[2],
              "beta": float(best.x[3]) if fit_beta else float(beta)}
    errors = {"Q_TLS": vals[0] * sd[0], "Q_other": vals[1] * sd[1], "n_sat": vals[2] * sd[2],
              "beta": float(sd[3]) if fit_beta else 0.0}
    return FitResult(params, errors, float(np.linalg.norm(best.fun)), len(n) - len(best.x))

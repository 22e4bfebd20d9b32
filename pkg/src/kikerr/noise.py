"""Telegraph switching and energy ringdown analysis of time series."""

import math

import numpy as np
from scipy import optimize

from .errors import DomainError, FitError
from .fitresult import FitResult, covariance_from_jacobian

MIN_EFFECTIVE_SAMPLES = 20


def telegraph_series(tau, duration, dt, rng=None, levels=(-1.0, 1.0)):
    """Two-level random telegraph signal whose autocorrelation is exp(-|t|/tau).

    Each dwell is exponential with mean 2 tau (switching rate 1 / (2 tau)).
    """
    if not (tau > 0 and dt > 0 and duration > dt):
        raise DomainError("tau, dt and duration must be positive with duration > dt")
    rng = np.random.default_rng(rng)
    n = int(round(duration / dt))
    p = -math.expm1(-dt / (2.0 * tau))
    state = np.cumsum(rng.random(n) < p) % 2
    if rng.random() < 0.5:
        state = 1 - state
    lo, hi = levels
    return np.where(state == 1, hi, lo).astype(float)


def autocorrelation(x):
    """Mean-subtracted autocorrelation with biased (1/N) normalization, r[0] = 1."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = len(x)
    spec = np.fft.rfft(x, 2 * n)
    r = np.fft.irfft(spec * np.conj(spec), 2 * n)[:n] / n
    if r[0] <= 0:
        raise FitError("series has no variance")
    return r / r[0]


def telegraph_tau(series, dt, window_fraction=0.5):
    """Decay constant of the autocorrelation, exp(-|t|/tau).

    Fits a single exponential over short lags: up to ``window_fraction`` of the
    first 1/e crossing (at least 3 lags), capped where fewer than
    MIN_EFFECTIVE_SAMPLES correlation times remain in the overlap. Reports
    the raw tau and, for a symmetric telegraph, the mean dwell time 2 tau.
    """
    x = np.asarray(series, dtype=float)
    if len(x) < 8:
        raise FitError("series too short")
    if np.ptp(x) == 0:
        raise FitError("constant series: autocorrelation is flat")
    r = autocorrelation(x)
    below = np.flatnonzero(r < math.exp(-1.0))
    if len(below) == 0:
        raise FitError("autocorrelation never decays below 1/e")
    i_e = int(below[0])
    tau0 = max(i_e, 1) * dt
    m = max(int(window_fraction * i_e) + 1, 3)
    lags = np.arange(len(r)) * dt
    eff = (len(x) - np.arange(len(r))) * dt / (2.0 * tau0)
    cap = int(np.flatnonzero(eff >= MIN_EFFECTIVE_SAMPLES)[-1]) + 1 if eff[0] >= MIN_EFFECTIVE_SAMPLES else 3
    m = max(min(m, cap), 3)
    t, y = lags[:m], r[:m]

    def resid(p):
        return np.exp(-t / p[0]) - y

    sol = optimize.least_squares(resid, [tau0], bounds=([1e-3 * dt], [np.inf]), xtol=1e-14, ftol=1e-14)
    if not sol.success:
        raise FitError("exponential fit failed", {"message": sol.message})
    tau = float(sol.x[0])
    cov = covariance_from_jacobian(sol.jac, sol.fun, 1)
    unresolved = i_e <= 1 or tau < 2.0 * dt
    return FitResult({"tau": tau}, {"tau": float(math.sqrt(max(cov[0, 0], 0.0)))},
                     float(np.linalg.norm(sol.fun)), m - 1,
                     {"dwell_time": 2.0 * tau, "switching_rate": 1.0 / (2.0 * tau),
                      "window_lags": m, "unresolved": bool(unresolved)})


def ringdown_series(t1, times, amplitude=1.0, noise=0.0, rng=None):
    """Energy envelope A exp(-t / T1) plus optional Gaussian noise (relative to A)."""
    t = np.asarray(times, dtype=float)
    y = amplitude * np.exp(-t / t1)
    if noise > 0:
        y = y + noise * amplitude * np.random.default_rng(rng).standard_normal(len(t))
    return y


def ringdown_t1(times, energy):
    """Exponential energy-decay fit; linewidth is 1 / (2 pi T1)."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(energy, dtype=float)
    if len(t) < 8 or t.shape != y.shape:
        raise FitError("need at least 8 matching samples")
    pos = y > 0
    if pos.sum() < 3:
        raise FitError("envelope must be positive")
    slope, icpt = np.polyfit(t[pos], np.log(y[pos]), 1, w=np.sqrt(y[pos]))
    if not slope < 0:
        raise FitError("trace does not decay")
    t1_0 = -1.0 / slope
    t0 = t[0]

    def resid(p):
        return p[0] * np.exp(-(t - t0) / p[1]) - y

    sol = optimize.least_squares(resid, [math.exp(icpt + slope * t0), t1_0], method="lm",
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15)
    amp, t1 = sol.x
    if not (t1 > 0 and np.isfinite(t1)):
        raise FitError("decay time fit failed", {"message": sol.message})
    cov = covariance_from_jacobian(sol.jac, sol.fun, 2)
    t1_err = float(math.sqrt(max(cov[1, 1], 0.0)))
    lw = linewidth_from_t1(t1)
    return FitResult({"T1": float(t1), "linewidth": lw, "amplitude": float(amp)},
                     {"T1": t1_err, "linewidth": lw * t1_err / t1,
                      "amplitude": float(math.sqrt(max(cov[0, 0], 0.0)))},
                     float(np.linalg.norm(sol.fun)), len(t) - 2)


def linewidth_from_t1(t1):
    """1 / (2 pi T1) in Hz."""
    if not t1 > 0:
        raise DomainError("T1 must be > 0")
    return 1.0 / (2.0 * math.pi * t1)


def dephasing_bound(steady_linewidth, t1):
    """Linewidth left over for dephasing once energy decay is accounted for."""
    residual = steady_linewidth - linewidth_from_t1(t1)
    return {"steady_linewidth_hz": steady_linewidth, "energy_decay_linewidth_hz": linewidth_from_t1(t1),
            "dephasing_residual_hz": residual}

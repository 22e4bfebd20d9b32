"""Output-gain thermometry and input-line attenuation bookkeeping."""

import math
import warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import units as u
from .errors import DomainError, FitError, FitWarning
from .fitresult import FitResult

DB_STEP = Decimal("0.1")


@dataclass(frozen=True)
class CalibrationRow:
    """One line of an attenuation table; dB values kept as exact decimals."""

    frequency: Decimal
    s_io: Decimal
    g_c: Decimal
    g_c_err: Decimal
    a_in: Decimal
    a_in_err: Decimal

    @classmethod
    def from_strings(cls, *fields):
        return cls(*(Decimal(str(x)) for x in fields))

    @property
    def frequency_hz(self):
        return float(self.frequency) * u.GHZ

    def identity_holds(self):
        return line_attenuation_exact(self.s_io, self.g_c) == self.a_in

    def to_dict(self):
        return {"frequency_GHz": str(self.frequency), "S_IO_dB": str(self.s_io),
                "G_C_dB": str(self.g_c), "G_C_err_dB": str(self.g_c_err),
                "A_IN_dB": str(self.a_in), "A_IN_err_dB": str(self.a_in_err)}


# measured net transmission, output gain and input attenuation (dB)
_TABLE = [
    ("4.4", "-5.5", "68.3", "0.4", "73.8", "0.4"),
    ("6.30", "-11.50", "64.6", "0.1", "76.1", "0.1"),
    ("6.56", "-11.95", "64.5", "0.4", "76.5", "0.4"),
    ("7.03", "-13.95", "63.6", "0.6", "77.6", "0.6"),
    ("7.70", "-16.90", "62.9", "0.3", "79.8", "0.3"),
    ("8.07", "-18.30", "61.4", "0.3", "79.7", "0.3"),
]

CALIBRATION_TEMPERATURES = (0.73, 0.84, 0.95, 1.05)


def calibration_table():
    return [CalibrationRow.from_strings(*r) for r in _TABLE]


def line_attenuation(s_io_db, g_c_db):
    """Input attenuation as a positive dB number: A_IN = G_C - S_IO."""
    return g_c_db - s_io_db


def line_attenuation_exact(s_io_db, g_c_db, step=DB_STEP):
    """Decimal A_IN = G_C - S_IO rounded half-up to the table resolution."""
    diff = Decimal(str(g_c_db)) - Decimal(str(s_io_db))
    return diff.quantize(step, rounding=ROUND_HALF_UP)


def attenuation_at(frequency, table=None):
    """(A_IN, sigma) in dB at ``frequency`` (Hz), interpolating between rows."""
    rows = sorted(table or calibration_table(), key=lambda r: r.frequency)
    fs = np.array([r.frequency_hz for r in rows])
    for r in rows:
        if math.isclose(r.frequency_hz, frequency, rel_tol=1e-9):
            return float(r.a_in), float(r.a_in_err)
    if not fs[0] <= frequency <= fs[-1]:
        raise DomainError("frequency outside the calibrated range")
    a = np.interp(frequency, fs, [float(r.a_in) for r in rows])
    e = np.interp(frequency, fs, [float(r.a_in_err) for r in rows])
    return float(a), float(e)


def bose_einstein_factor(frequency, temperature):
    """eta = x / (exp(x) - 1) with x = h nu / kB T; tends to 1 classically."""
    if temperature <= 0:
        return 0.0
    x = u.h * frequency / (u.k_B * temperature)
    if x < 1e-8:
        return 1.0 - 0.5 * x
    return x / math.expm1(x)


def thermal_noise_power(temperature, gain, t_hemt, bandwidth, frequency, quantum=True):
    """P_OUT = dnu kB G (eta T_MXC + T_HEMT) in watts (gain linear)."""
    eta = bose_einstein_factor(frequency, temperature) if quantum else 1.0
    return bandwidth * u.k_B * gain * (eta * temperature + t_hemt)


def calibrate_output_gain(temperatures, powers, bandwidth, frequency, quantum=True):
    """Output-line gain from Johnson noise of a heated termination.

    The coldest point is taken as the HEMT-dominated baseline. Each hotter
    point gives G_i = (P_i - P_base) / (dnu kB (eta_i T_i - eta_b T_b)); the
    result is the mean and sample standard deviation of G_i in dB. A straight
    line through all points is reported alongside as a cross-check.
    """
    T = np.asarray(temperatures, dtype=float)
    P = np.asarray(powers, dtype=float)
    if T.shape != P.shape:
        raise DomainError("temperatures and powers differ in length")
    if len(T) < 3:
        raise FitError("need a baseline and at least two heated points")
    if not bandwidth > 0:
        raise DomainError("bandwidth must be > 0")
    order = np.argsort(T)
    T, P = T[order], P[order]
    teff = np.array([(bose_einstein_factor(frequency, t) if quantum else 1.0) * t for t in T])
    kb_bw = bandwidth * u.k_B
    dt = teff[1:] - teff[0]
    if np.any(dt <= 0):
        raise FitError("heated points must be warmer than the baseline")
    g_i = (P[1:] - P[0]) / (kb_bw * dt)
    if np.any(g_i <= 0):
        raise FitError("output power does not increase with temperature")
    g_db = 10.0 * np.log10(g_i)
    g_mean = float(np.mean(g_db))
    g_std = float(np.std(g_db, ddof=1)) if len(g_db) > 1 else 0.0
    g_lin = 10.0 ** (g_mean / 10.0)
    t_hemt = float(P[0] / (kb_bw * g_lin) - teff[0])

    slope, intercept = np.polyfit(teff, P, 1)
    reg_gain = slope / kb_bw
    flags = []
    if t_hemt < 0:
        flags.append("negative_T_HEMT")
        warnings.warn("fitted HEMT noise temperature is negative", FitWarning, stacklevel=2)
    extras = {"per_point_gain_dB": g_db.tolist(),
              "regression_gain_dB": float(10.0 * np.log10(reg_gain)) if reg_gain > 0 else float("nan"),
              "regression_T_HEMT": float(intercept / slope) if slope != 0 else float("nan"),
              "flags": flags}
    return FitResult({"G_C_dB": g_mean, "T_HEMT": t_hemt}, {"G_C_dB": g_std, "T_HEMT": float("nan")},
                     float(np.linalg.norm(g_db - g_mean)), len(g_db) - 1, extras)

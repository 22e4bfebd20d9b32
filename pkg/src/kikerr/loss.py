"""Dissipation budget: quasiparticles, radiation into a package mode, TLS.

Geometry conventions for the radiative channel: the chip lies in a plane
normal to the box z axis. The two capacitor pads occupy a < |x| < b in that
plane and extend over ``pad_length`` along y; the quasi-static pad field lives
in the (x, z) cross-section and has no y component.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipk

from . import units as u
from .errors import DomainError, PreconditionError

# --- quasiparticle loss -------------------------------------------------------


@dataclass(frozen=True)
class QpEnvironment:
    """Excess quasiparticle density (m^-3) and pair density of states (J^-1 m^-3)."""

    qp_density: float
    pair_dos: float

    def __post_init__(self):
        if self.qp_density < 0 or self.pair_dos < 0:
            raise DomainError("qp_density and pair_dos must be >= 0")

    @classmethod
    def from_lab_units(cls, n_qp_per_um3, dos_per_ev_um3):
        return cls(n_qp_per_um3 / u.UM3, dos_per_ev_um3 * u.PER_EV_UM3)


def qp_loss(alpha, frequency, gap, env):
    """Quasiparticle decay rate Gamma_qp / 2 pi in Hz.

    Gamma_qp = (alpha w / pi) sqrt(2 Delta / hbar w) n_qp / (D Delta).
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must be in (0, 1]")
    if not (frequency > 0 and gap > 0):
        raise DomainError("frequency and gap must be > 0")
    if env.qp_density == 0:
        return 0.0
    if not env.pair_dos > 0:
        raise DomainError("pair_dos must be > 0")
    w = u.TWO_PI * frequency
    rate = alpha * w / math.pi * math.sqrt(2.0 * gap / (u.hbar * w)) * env.qp_density / (env.pair_dos * gap)
    return rate / u.TWO_PI


def shared_pad_participation(frequency, reference_frequency=8.5e9, reference_alpha=0.85):
    """Kinetic fraction for wires sharing one pad design.

    Identical pads give a fixed geometric inductance Lg and capacitance C, so
    alpha = 1 - Lg (2 pi f)^2 C = 1 - (1 - alpha_ref) (f / f_ref)^2.
    """
    x = (1.0 - reference_alpha) * (np.asarray(frequency, dtype=float) / reference_frequency) ** 2
    alpha = 1.0 - x
    if np.any(alpha <= 0):
        raise DomainError("frequency too high for the reference pad inductance")
    return alpha if np.ndim(alpha) else float(alpha)


# --- coplanar pad field -------------------------------------------------------


@dataclass(frozen=True)
class PadGeometry:
    """Two coplanar pads separated by ``gap``; all lengths in metres."""

    gap: float = 1e-6
    pad_width: float = 755e-6
    pad_length: float = 755e-6
    substrate_permittivity: float = 11.7
    substrate_thickness: float = 500e-6

    def __post_init__(self):
        if not self.gap > 0:
            raise DomainError("gap must be > 0")
        if not (self.pad_width > 0 and self.pad_length > 0):
            raise DomainError("pad dimensions must be > 0")
        if self.substrate_permittivity < 1:
            raise DomainError("substrate permittivity must be >= 1")

    @property
    def inner(self):
        return 0.5 * self.gap

    @property
    def outer(self):
        return 0.5 * self.gap + self.pad_width

    @property
    def modulus(self):
        return self.inner / self.outer

    @property
    def capacitance_per_length(self):
        k = self.modulus
        ratio = ellipk(1.0 - k * k) / ellipk(k * k)
        return u.epsilon_0 * 0.5 * (1.0 + self.substrate_permittivity) * ratio

    @property
    def capacitance(self):
        return self.capacitance_per_length * self.pad_length


@dataclass
class PadFieldMap:
    """Pad field sampled on an (x, z) grid.

    ``ex``/``ez`` are in V/m for the pad ``voltage``. ``ar_x``/``ar_z`` are the
    dimensionless amplitudes normalized to the gap-centre field and
    ``mode_volume`` is V_r such that E = sqrt(hbar w / 2 eps0 V_r) a_r at the
    zero-point voltage.
    """

    geometry: PadGeometry
    frequency: float
    x: np.ndarray
    z: np.ndarray
    ex: np.ndarray
    ez: np.ndarray
    ar_x: np.ndarray
    ar_z: np.ndarray
    mode_volume: float
    voltage: float
    center_field: float
    on_conductor: np.ndarray = field(repr=False, default=None)

    @property
    def magnitude(self):
        return np.hypot(self.ex, self.ez)

    @property
    def flagged(self):
        return bool(np.any(self.on_conductor))


def zero_point_voltage(geometry, frequency):
    """Pad voltage carrying hbar w / 2 of electric zero-point energy."""
    return math.sqrt(u.hbar * u.TWO_PI * frequency / (2.0 * geometry.capacitance))


def pad_field(geometry, x, z, voltage):
    """Quasi-static field of two thin coplanar pads at +/- voltage/2.

    Conformal map: dPhi/dzeta = C0 / (sqrt(a^2 - zeta^2) sqrt(b^2 - zeta^2))
    with C0 = V b / (2 K(a/b)). Returns (ex, ez, on_conductor); points lying
    on a pad get the limiting value from above the chip and are flagged.
    """
    a, b = geometry.inner, geometry.outer
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    x, z = np.broadcast_arrays(x, z)
    on_pad = (z == 0) & (np.abs(x) >= a) & (np.abs(x) <= b)
    c0 = voltage * b / (2.0 * ellipk(geometry.modulus ** 2))
    zz = np.maximum(np.abs(z), 1e-15 * b)
    zeta = x + 1j * zz
    # factored square roots keep Im(zeta) exact and stay on the principal branch
    root_a = np.sqrt(a - zeta) * np.sqrt(a + zeta)
    root_b = np.sqrt(b - zeta) * np.sqrt(b + zeta)
    dphi = c0 / (root_a * root_b)
    ex = -dphi.real
    ez = dphi.imag * np.where(z < 0, -1.0, 1.0)
    return ex, ez, on_pad


def coplanar_pad_field(geometry, x, z, frequency, voltage=None):
    """Sample the pad field on the grid spanned by 1-D ``x`` and ``z``.

    Uses the zero-point voltage unless ``voltage`` is given; the normalized
    amplitudes and ``mode_volume`` do not depend on that choice.
    """
    if not frequency > 0:
        raise DomainError("frequency must be > 0")
    v = zero_point_voltage(geometry, frequency) if voltage is None else float(voltage)
    if v == 0:
        raise DomainError("pad voltage must be non-zero")
    X, Z = np.meshgrid(np.atleast_1d(x), np.atleast_1d(z), indexing="ij")
    ex, ez, flag = pad_field(geometry, X, Z, v)
    if np.any(flag):
        warnings.warn("grid points on a pad surface: limiting field values used", stacklevel=2)
    ec = abs(float(pad_field(geometry, 0.0, 0.0, v)[0]))
    # V_r = int eps |a_r|^2 dV = C V^2 / (eps0 Ec^2), independent of V
    vr = geometry.capacitance * v * v / (u.epsilon_0 * ec * ec)
    return PadFieldMap(geometry, frequency, np.atleast_1d(x), np.atleast_1d(z), ex, ez,
                       ex / ec, ez / ec, vr, v, ec, flag)


def graded_grid(lo, hi, points, n, smallest=1e-10):
    """Nodes on [lo, hi] geometrically clustered around each of ``points``.

    The cluster centres themselves are skipped so that edge singularities are
    never sampled directly.
    """
    steps = np.geomspace(smallest, hi - lo, n)
    nodes = [np.array([lo, hi])]
    for p in points:
        nodes.append(p - steps)
        nodes.append(p + steps)
    out = np.unique(np.concatenate(nodes))
    return out[(out >= lo) & (out <= hi)]


def pad_field_energy(geometry, frequency, extent=50.0, n=200):
    """Electric energy int eps eps0 |E|^2 dV at the zero-point voltage.

    Integrated over |x|, |z| < extent * outer half-width with the dielectric
    filling z < 0. Should approach hbar w / 2.
    """
    a, b = geometry.inner, geometry.outer
    r = extent * b
    xs = graded_grid(-r, r, [-b, -a, 0.0, a, b], n)
    zs = graded_grid(-r, r, [0.0], n)
    v = zero_point_voltage(geometry, frequency)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    ex, ez, _ = pad_field(geometry, X, Z, v)
    eps = np.where(Z < 0, geometry.substrate_permittivity, 1.0)
    dens = u.epsilon_0 * eps * (ex * ex + ez * ez)
    return float(np.trapezoid(np.trapezoid(dens, zs, axis=1), xs)) * geometry.pad_length


# --- box modes ------------------------------------------------------------------


def te_mode_frequency(dims, indices):
    """Empty rectangular-cavity frequency (c/2) sqrt(sum (m_i/L_i)^2)."""
    return 0.5 * u.c * math.sqrt(sum((m / L) ** 2 for m, L in zip(indices, dims)))


@dataclass(frozen=True)
class BoxMode:
    """TE_mnp mode (about z) of a rectangular box of size (lx, ly, lz)."""

    frequency: float
    quality_factor: float
    dims: tuple = (10e-3, 10e-3, 18.69e-3)
    indices: tuple = (0, 1, 1)

    def __post_init__(self):
        if not (self.frequency > 0 and self.quality_factor > 0):
            raise DomainError("box frequency and Q must be > 0")
        if any(L <= 0 for L in self.dims):
            raise DomainError("box dimensions must be > 0")
        m, n, p = self.indices
        if p < 1 or (m == 0 and n == 0) or min(self.indices) < 0:
            raise DomainError(f"TE{m}{n}{p} is not a valid TE mode")

    @classmethod
    def for_frequency(cls, frequency, quality_factor, lx=10e-3, ly=10e-3, indices=(0, 1, 1)):
        """Choose lz so that the requested mode lands on ``frequency``."""
        m, n, p = indices
        rest = (2.0 * frequency / u.c) ** 2 - (m / lx) ** 2 - (n / ly) ** 2
        if rest <= 0:
            raise DomainError("frequency below cutoff for the given lx, ly")
        return cls(frequency, quality_factor, (lx, ly, p / math.sqrt(rest)), tuple(indices))

    @property
    def linewidth(self):
        return self.frequency / self.quality_factor

    @property
    def geometric_frequency(self):
        return te_mode_frequency(self.dims, self.indices)

    @property
    def _amplitudes(self):
        (lx, ly, _), (m, n, _) = self.dims, self.indices
        A, B = n * math.pi / ly, m * math.pi / lx
        return A, B, max(A, B)

    @property
    def mode_volume(self):
        """int |a_b|^2 dV with a_b peaking at 1."""
        (lx, ly, lz), (m, n, _) = self.dims, self.indices
        A, B, N = self._amplitudes

        def cos2(k, L):
            return L if k == 0 else 0.5 * L

        def sin2(k, L):
            return 0.0 if k == 0 else 0.5 * L

        return (A * A * cos2(m, lx) * sin2(n, ly) + B * B * sin2(m, lx) * cos2(n, ly)) * 0.5 * lz / N ** 2


def box_mode_field(box, x, y, z):
    """Normalized amplitude (a_x, a_y, a_z) at box coordinates (origin at a corner)."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    lx, ly, lz = box.dims
    inside = (x >= 0) & (x <= lx) & (y >= 0) & (y <= ly) & (z >= 0) & (z <= lz)
    if not np.all(inside):
        raise DomainError("position outside the box")
    m, n, p = box.indices
    A, B, N = box._amplitudes
    kx, ky, kz = m * math.pi / lx, n * math.pi / ly, p * math.pi / lz
    sz = np.sin(kz * z)
    ax = A / N * np.cos(kx * x) * np.sin(ky * y) * sz
    ay = -B / N * np.sin(kx * x) * np.cos(ky * y) * sz
    return ax, ay, np.zeros_like(ax)


# --- coupling and Purcell -----------------------------------------------------


def _overlap(geometry, box, position, n):
    """int eps |a_r . a_b| dV over the box, pad field cut off beyond the pad length."""
    lx, ly, lz = box.dims
    x0, y0, z0 = position
    a, b = geometry.inner, geometry.outer
    h = geometry.substrate_thickness
    xs = graded_grid(-x0, lx - x0, [-b, -a, 0.0, a, b], n)
    zs = graded_grid(-z0, lz - z0, [0.0, -h], n)
    half = 0.5 * geometry.pad_length
    ys = np.linspace(max(-half, -y0), min(half, ly - y0), 2 * n + 1)
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    ec = abs(float(pad_field(geometry, 0.0, 0.0, 1.0)[0]))
    ex, ez, _ = pad_field(geometry, X, Z, 1.0)
    rx, rz = ex / ec, ez / ec
    eps = np.where((Z < 0) & (Z > -h), geometry.substrate_permittivity, 1.0)
    # separable box field: a_b(x, y, z) = (Ax cx(x) sy(y), Ay sx(x) cy(y), 0) sz(z)
    m, nn, p = box.indices
    A, B, N = box._amplitudes
    kx, ky, kz = m * math.pi / lx, nn * math.pi / ly, p * math.pi / lz
    sz = np.sin(kz * (Z + z0))
    cx, sx = np.cos(kx * (X + x0)), np.sin(kx * (X + x0))
    Y = ys + y0
    sy, cy = np.sin(ky * Y), np.cos(ky * Y)
    # the pad field has no y component, so only a_bx contributes
    if A == 0:
        return 0.0
    g2 = eps * np.abs(rx * A / N * cx * sz)
    plane = np.trapezoid(np.trapezoid(g2, zs, axis=1), xs)
    return float(plane * np.trapezoid(np.abs(sy), ys))


def coupling_rate(pad, box, frequency, position=None, rtol=0.01, n=100, max_refinements=5):
    """Resonator-box coupling g / 2 pi in Hz from the field overlap integral.

    hbar g = sqrt(hbar w_r / 2 eps0 V_r) sqrt(hbar w_b / 2 eps0 V_b) eps0 int eps |a_r . a_b| dV.
    ``pad`` is a PadGeometry or PadFieldMap; ``position`` is the gap centre in
    box coordinates (box centre by default). The graded integration grid is
    doubled until successive results agree to ``rtol``.
    """
    if isinstance(pad, PadFieldMap):
        centre = abs(float(pad_field(pad.geometry, 0.0, 0.0, pad.voltage)[0]))
        if not math.isclose(centre, pad.center_field, rel_tol=1e-9):
            raise PreconditionError("pad field map is not normalized to its gap-centre field")
        geometry = pad.geometry
    else:
        geometry = pad
    if not frequency > 0:
        raise DomainError("frequency must be > 0")
    if position is None:
        position = tuple(0.5 * L for L in box.dims)
    vr = coplanar_pad_field(geometry, 0.0, 0.0, frequency).mode_volume
    vb = box.mode_volume
    prev = _overlap(geometry, box, position, n)
    for _ in range(max_refinements):
        n *= 2
        cur = _overlap(geometry, box, position, n)
        if cur == prev or abs(cur - prev) <= rtol * abs(cur):
            prev = cur
            break
        prev = cur
    else:
        warnings.warn("overlap integral did not reach the requested tolerance", stacklevel=2)
    wr, wb = u.TWO_PI * frequency, u.TWO_PI * box.frequency
    er = math.sqrt(u.hbar * wr / (2.0 * u.epsilon_0 * vr))
    eb = math.sqrt(u.hbar * wb / (2.0 * u.epsilon_0 * vb))
    g = er * eb * u.epsilon_0 * prev / u.hbar
    return g / u.TWO_PI


def purcell_loss(g, kappa, detuning):
    """Far-detuned Purcell rate kappa g^2 / Delta^2 (all in Hz)."""
    if detuning == 0:
        raise DomainError("detuning must be non-zero")
    d = abs(detuning)
    if d < 5.0 * max(kappa, abs(g)):
        warnings.warn("detuning is not much larger than kappa and g", stacklevel=2)
    return kappa * g * g / (d * d)


# --- budget -------------------------------------------------------------------


@dataclass
class LossBudget:
    frequency: float
    channels: dict
    observed_linewidth: float = None

    def __post_init__(self):
        for k, v in self.channels.items():
            if not v >= 0:
                raise DomainError(f"channel {k!r} must have rate >= 0")

    @property
    def total(self):
        return float(sum(self.channels.values()))

    @property
    def total_q(self):
        tot = self.total
        return math.inf if tot == 0 else self.frequency / tot

    def q(self, channel):
        g = self.channels[channel]
        return math.inf if g == 0 else self.frequency / g

    @property
    def residual(self):
        """Observed linewidth not covered by the listed channels."""
        if self.observed_linewidth is None:
            return None
        return self.observed_linewidth - self.total

    @property
    def unexplained(self):
        """True when the listed channels cover less than half the observed linewidth."""
        r = self.residual
        return r is not None and r > self.total

    def to_dict(self):
        def q_json(q):
            return None if math.isinf(q) else q

        out = {name: {"gamma_hz": g, "q": q_json(self.q(name))} for name, g in self.channels.items()}
        out["total"] = {"gamma_hz": self.total, "q": q_json(self.total_q)}
        out["frequency_hz"] = self.frequency
        if self.observed_linewidth is not None:
            out["observed_linewidth_hz"] = self.observed_linewidth
            out["residual_hz"] = self.residual
            out["unexplained_residual"] = self.unexplained
        return out


def assemble_budget(channels, frequency, observed_linewidth=None):
    """Collect per-channel decay rates (Hz) into a LossBudget."""
    if not frequency > 0:
        raise DomainError("frequency must be > 0")
    return LossBudget(frequency, {k: float(v) for k, v in dict(channels).items()}, observed_linewidth)

"""Circuit model of a nanowire kinetic-inductance Kerr resonator.

Chain: material + wire geometry -> wire inductance and scaling current ->
lumped LC circuit -> zero-point current -> Kerr shift per photon.

All rates are ordinary frequencies in Hz (the ``X/2pi`` of the usual angular
quantities); factors of 2pi only appear inside formulas.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import units as u
from .errors import ConfigError, DomainError, FitError
from .fitresult import FitResult

log = logging.getLogger(__name__)

GAP_RATIO = 1.76  # Delta_0 / (k_B Tc)


@dataclass(frozen=True)
class MaterialSpec:
    """Superconducting film properties, SI units.

    ``normal_resistivity`` and ``dos_fermi`` may be omitted when the measured
    ``sheet_inductance`` / ``scaling_current_density`` are supplied instead.
    ``dos_fermi`` is the single-spin density of states N0 in 1/(J m^3);
    ``pair_density`` is D(E_F) in the same units.
    """

    critical_temperature: float
    film_thickness: float
    normal_resistivity: float = None
    dos_fermi: float = None
    pair_density: float = None
    sheet_inductance: float = None
    scaling_current_density: float = None

    def __post_init__(self):
        if not self.critical_temperature > 0:
            raise ConfigError("critical_temperature must be > 0", "critical_temperature")
        if not self.film_thickness > 0:
            raise ConfigError("film_thickness must be > 0", "film_thickness")
        for name in ("normal_resistivity", "dos_fermi", "pair_density",
                     "sheet_inductance", "scaling_current_density"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be > 0 when given", name)

    @classmethod
    def from_lab_units(cls, Tc, thickness_nm, rho_n_uohm_cm=None, N0_per_eV_um3=None,
                       D_per_eV_um3=None, Ls_pH_sq=None, Jstar_MA_cm2=None):
        def conv(x, factor):
            return None if x is None else x * factor

        return cls(
            critical_temperature=Tc,
            film_thickness=thickness_nm * u.NM,
            normal_resistivity=conv(rho_n_uohm_cm, u.UOHM_CM),
            dos_fermi=conv(N0_per_eV_um3, u.PER_EV_UM3),
            pair_density=conv(D_per_eV_um3, u.PER_EV_UM3),
            sheet_inductance=conv(Ls_pH_sq, u.PH),
            scaling_current_density=conv(Jstar_MA_cm2, u.MA_PER_CM2),
        )

    @property
    def gap(self):
        return gap_from_tc(self.critical_temperature)


@dataclass(frozen=True)
class WireGeometry:
    width: float
    length: float
    thickness: float

    def __post_init__(self):
        if self.width <= 0 or self.thickness <= 0:
            raise ConfigError("wire width and thickness must be > 0", "wire")
        if self.length < 0:
            raise ConfigError("wire length must be >= 0", "wire.length")

    @property
    def volume(self):
        return self.width * self.length * self.thickness

    @property
    def squares(self):
        return self.length / self.width


@dataclass(frozen=True)
class ResonatorDesign:
    material: MaterialSpec
    wire: WireGeometry
    capacitance: float
    pad_inductance: float = 0.0
    external_coupling: float = 0.0

    def __post_init__(self):
        if not self.capacitance > 0:
            raise ConfigError("capacitance must be > 0", "capacitance")
        if self.pad_inductance < 0:
            raise ConfigError("pad_inductance must be >= 0", "pad_inductance")
        if self.external_coupling < 0:
            raise ConfigError("external_coupling must be >= 0", "external_coupling")


@dataclass(frozen=True)
class DerivedCircuit:
    wire_inductance: float
    total_inductance: float
    capacitance: float
    resonance_frequency: float
    zero_point_current: float
    scaling_current: float
    participation: float
    kerr_shift: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def omega(self):
        return u.TWO_PI * self.resonance_frequency

    def to_dict(self):
        d = {
            "wire_inductance_H": self.wire_inductance,
            "total_inductance_H": self.total_inductance,
            "capacitance_F": self.capacitance,
            "resonance_frequency_Hz": self.resonance_frequency,
            "zero_point_current_A": self.zero_point_current,
            "scaling_current_A": self.scaling_current,
            "participation": self.participation,
            "kerr_shift_Hz": self.kerr_shift,
        }
        d["diagnostics"] = dict(self.diagnostics)
        return d


@dataclass(frozen=True)
class KerrVolumePoint:
    """One (V, K) measurement in lab units: um^3 and kHz."""

    volume: float
    kerr: float
    kerr_uncertainty: float = 0.0

    def __post_init__(self):
        if not (self.volume > 0 and self.kerr > 0):
            raise ConfigError("KerrVolumePoint needs V > 0 and K > 0")


def gap_from_tc(Tc):
    """Zero-temperature BCS gap 1.76 k_B Tc in joules."""
    if Tc < 0:
        raise DomainError("Tc must be >= 0")
    return GAP_RATIO * u.k_B * Tc


def scaling_current_density_from_material(material):
    """J* = sqrt(pi N0 Delta0^3 / (hbar rho_n)) in A/m^2."""
    if material.dos_fermi is None or material.normal_resistivity is None:
        raise ConfigError("first-principles J* needs dos_fermi and normal_resistivity",
                          "dos_fermi" if material.dos_fermi is None else "normal_resistivity")
    d0 = material.gap
    return math.sqrt(math.pi * material.dos_fermi * d0 ** 3 / (u.hbar * material.normal_resistivity))


def scaling_current(material, wire):
    """Nonlinearity scaling current I* = J* w t.

    A measured J* takes precedence over the value derived from N0, rho_n, Tc.
    """
    if material.scaling_current_density is not None:
        jstar = material.scaling_current_density
        try:
            ratio = jstar / scaling_current_density_from_material(material)
            log.debug("measured/derived J* ratio = %.3f", ratio)
        except ConfigError:
            pass
    else:
        try:
            jstar = scaling_current_density_from_material(material)
        except ConfigError as exc:
            raise ConfigError("material needs scaling_current_density or (dos_fermi, "
                              "normal_resistivity)", exc.field) from None
    return jstar * wire.width * wire.thickness


def sheet_inductance_from_material(material):
    """Kinetic sheet inductance hbar rho_n / (pi Delta0 t), H per square."""
    if material.normal_resistivity is None:
        raise ConfigError("normal_resistivity required", "normal_resistivity")
    return u.hbar * material.normal_resistivity / (math.pi * material.gap * material.film_thickness)


def wire_inductance(material, wire):
    """Kinetic inductance of the nanowire.

    Uses the measured sheet inductance when available (Ls * l / w), otherwise
    hbar (rho_n / pi Delta0) (l / w t).
    """
    if material.sheet_inductance is not None:
        lw = material.sheet_inductance * wire.squares
        if material.normal_resistivity is not None:
            alt = sheet_inductance_from_material(material) * wire.length / wire.width
            log.debug("wire inductance: measured-Ls %.4g H, rho_n route %.4g H", lw, alt)
        return lw
    if material.normal_resistivity is None:
        raise ConfigError("material needs sheet_inductance or normal_resistivity",
                          "sheet_inductance")
    return u.hbar * material.normal_resistivity * wire.length / (
        math.pi * material.gap * wire.width * wire.thickness)


def material_consistency(material, wire=None):
    """Measured-vs-derived ratios for Ls and J* when both routes exist."""
    out = {}
    if material.sheet_inductance is not None and material.normal_resistivity is not None:
        out["sheet_inductance_ratio"] = (material.sheet_inductance
                                         / sheet_inductance_from_material(material))
    if (material.scaling_current_density is not None and material.dos_fermi is not None
            and material.normal_resistivity is not None):
        out["scaling_current_density_ratio"] = (material.scaling_current_density
                                                / scaling_current_density_from_material(material))
    return out


def kerr_shift(circuit, scaling_current):
    """K = (3/2) omega (Lw/L) (I_zpf/I*)^2, returned in Hz."""
    if not scaling_current > 0:
        raise DomainError("scaling current must be > 0")
    return (1.5 * circuit.resonance_frequency * circuit.participation
            * (circuit.zero_point_current / scaling_current) ** 2)


def kerr_shift_geometric(material, wire, frequency, alpha):
    """K = (3/4) hbar omega^2 / (N0 Delta0^2) * alpha^2 / V, returned in Hz.

    ``frequency`` is the ordinary resonance frequency in Hz.
    """
    if not 0 < alpha <= 1:
        raise DomainError("participation must be in (0, 1]")
    if material.dos_fermi is None:
        raise ConfigError("geometric Kerr formula needs dos_fermi", "dos_fermi")
    vol = wire.volume
    if vol <= 0:
        raise DomainError("wire volume must be > 0")
    omega = u.TWO_PI * frequency
    k_ang = 0.75 * u.hbar * omega ** 2 / (material.dos_fermi * material.gap ** 2) * alpha ** 2 / vol
    return k_ang / u.TWO_PI


def derive_circuit(design):
    """Fill every DerivedCircuit quantity for a design."""
    mat, wire = design.material, design.wire
    lw = wire_inductance(mat, wire)
    L = lw + design.pad_inductance
    C = design.capacitance
    if not (L > 0 and C > 0):
        raise DomainError("total inductance and capacitance must be > 0")
    omega = 1.0 / math.sqrt(L * C)
    i_zpf = math.sqrt(u.hbar * omega / (2.0 * L))
    i_star = scaling_current(mat, wire)
    alpha = lw / L
    diag = material_consistency(mat)
    circ = DerivedCircuit(
        wire_inductance=lw,
        total_inductance=L,
        capacitance=C,
        resonance_frequency=omega / u.TWO_PI,
        zero_point_current=i_zpf,
        scaling_current=i_star,
        participation=alpha,
        kerr_shift=0.0,
        diagnostics=diag,
    )
    return replace(circ, kerr_shift=kerr_shift(circ, i_star))


def capacitance_for_frequency(design, frequency):
    """Shunt capacitance that puts the design's resonance at ``frequency``."""
    L = wire_inductance(design.material, design.wire) + design.pad_inductance
    return 1.0 / ((u.TWO_PI * frequency) ** 2 * L)


def with_frequency(design, frequency):
    """Same wire and pads, capacitance retuned for ``frequency``."""
    return replace(design, capacitance=capacitance_for_frequency(design, frequency))


def with_participation(design, alpha):
    """Set pad inductance so that Lw/(Lw+Lp) equals ``alpha``."""
    if not 0 < alpha <= 1:
        raise DomainError("participation must be in (0, 1]")
    lw = wire_inductance(design.material, design.wire)
    return replace(design, pad_inductance=lw * (1.0 - alpha) / alpha)


def kerr_cross_check(design, circuit=None):
    """Compare the circuit route and the volume route for the same design.

    The two agree identically when Lw and I* both come from (N0, rho_n, Tc).
    """
    circuit = circuit or derive_circuit(design)
    out = {"kerr_circuit_Hz": circuit.kerr_shift}
    try:
        kg = kerr_shift_geometric(design.material, design.wire,
                                  circuit.resonance_frequency, circuit.participation)
    except ConfigError:
        out["kerr_geometric_Hz"] = None
        out["relative_difference"] = None
        return out
    out["kerr_geometric_Hz"] = kg
    out["relative_difference"] = (circuit.kerr_shift - kg) / kg
    return out


def fit_inverse_volume(points):
    """Least-squares ``a`` in K = a / V (unweighted, K space).

    ``points`` are KerrVolumePoint in um^3 / kHz; ``a`` comes back in
    kHz um^3. A single point gives a = K V with the point's own uncertainty
    propagated.
    """
    pts = list(points)
    if not pts:
        raise FitError("no points to fit")
    V = np.array([p.volume for p in pts], dtype=float)
    K = np.array([p.kerr for p in pts], dtype=float)
    x = 1.0 / V
    sxx = float(np.sum(x * x))
    a = float(np.sum(K * x) / sxx)
    resid = K - a * x
    if len(pts) == 1:
        err = pts[0].kerr_uncertainty * pts[0].volume
    else:
        s2 = float(np.sum(resid ** 2)) / (len(pts) - 1)
        err = math.sqrt(s2 / sxx)
    return FitResult(params={"a": a}, errors={"a": err},
                     residual_norm=float(np.linalg.norm(resid)), dof=len(pts) - 1)


def cross_kerr(k_a, k_b):
    """Cross-Kerr estimate 2 sqrt(K_a K_b)."""
    if k_a < 0 or k_b < 0:
        raise DomainError("Kerr shifts must be >= 0")
    return 2.0 * math.sqrt(k_a * k_b)


def scale_kerr_to_frequency(kerr, f_from, f_to):
    """Quadratic frequency scaling of K at fixed participation and volume."""
    return kerr * (f_to / f_from) ** 2

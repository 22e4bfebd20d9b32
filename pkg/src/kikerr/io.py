"""Config loading, CSV/JSON emission and run manifests."""

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import units as u
from .core import MaterialSpec, ResonatorDesign, WireGeometry, capacitance_for_frequency, with_participation
from .errors import ConfigError
from .fitresult import _plain
from .fitting import MeasurementTrace

CONFIG_DIR_ENV = "KIKERR_CONFIG_DIR"


def resolve_config_path(path):
    """Find ``path`` as given, then under $KIKERR_CONFIG_DIR, then among bundled configs."""
    p = Path(path)
    if p.is_file():
        return p
    candidates = []
    env = os.environ.get(CONFIG_DIR_ENV)
    if env:
        candidates.append(Path(env) / p)
    candidates.append(Path(__file__).parent / "configs" / p)
    for c in candidates:
        if c.is_file():
            return c
    raise ConfigError(f"config file not found: {path}", "config")


def load_config(path):
    p = resolve_config_path(path)
    try:
        with open(p, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}", "config") from exc
    cfg.setdefault("_source", str(p))
    return cfg


def config_hash(cfg):
    body = {k: v for k, v in cfg.items() if not k.startswith("_")}
    blob = json.dumps(body, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _get(section, key, name, required=True, default=None):
    if key in section:
        v = section[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{name}.{key} must be a number", f"{name}.{key}")
        return float(v)
    if required:
        raise ConfigError(f"missing required field {name}.{key}", f"{name}.{key}")
    return default


def section(cfg, name, required=True):
    s = cfg.get(name)
    if s is None:
        if required:
            raise ConfigError(f"missing section [{name}]", name)
        return {}
    if not isinstance(s, dict):
        raise ConfigError(f"[{name}] must be a table", name)
    return s


def material_from_config(cfg):
    m = section(cfg, "material")
    return MaterialSpec.from_lab_units(
        Tc=_get(m, "Tc_K", "material"),
        thickness_nm=_get(m, "thickness_nm", "material"),
        rho_n_uohm_cm=_get(m, "rho_n_uohm_cm", "material", False),
        N0_per_eV_um3=_get(m, "N0_per_eV_um3", "material", False),
        D_per_eV_um3=_get(m, "D_per_eV_um3", "material", False),
        Ls_pH_sq=_get(m, "Ls_pH_sq", "material", False),
        Jstar_MA_cm2=_get(m, "Jstar_MA_cm2", "material", False),
    )


def design_from_values(material, width_nm, length_nm, capacitance_pF=None, frequency_GHz=None,
                       pad_inductance_pH=0.0, participation=None):
    """Design from lab-unit numbers; frequency retunes C, participation sets Lp."""
    wire = WireGeometry(width_nm * u.NM, length_nm * u.NM, material.film_thickness)
    c = 1.0 if capacitance_pF is None else capacitance_pF * u.PF
    design = ResonatorDesign(material, wire, c, (pad_inductance_pH or 0.0) * u.PH)
    if participation is not None:
        design = with_participation(design, participation)
    if frequency_GHz is not None:
        design = replace(design, capacitance=capacitance_for_frequency(design, frequency_GHz * u.GHZ))
    elif capacitance_pF is None:
        raise ConfigError("give circuit.capacitance_pF or circuit.frequency_GHz", "circuit.capacitance_pF")
    return design


def design_values_from_config(cfg):
    w = section(cfg, "wire")
    c = section(cfg, "circuit")
    return {
        "width_nm": _get(w, "width_nm", "wire"),
        "length_nm": _get(w, "length_nm", "wire"),
        "capacitance_pF": _get(c, "capacitance_pF", "circuit", False),
        "frequency_GHz": _get(c, "frequency_GHz", "circuit", False),
        "pad_inductance_pH": _get(c, "pad_inductance_pH", "circuit", False, 0.0),
        "participation": _get(c, "participation", "circuit", False),
    }


def design_from_config(cfg):
    return design_from_values(material_from_config(cfg), **design_values_from_config(cfg))


# --- output -----------------------------------------------------------------------


def _finite_or_none(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _finite_or_none(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_finite_or_none(x) for x in v]
    return v


def write_json(path, obj):
    """Deterministic JSON: sorted keys, non-finite numbers as null."""
    text = json.dumps(_finite_or_none(_plain(obj)), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")
    return Path(path)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def write_csv(path, header, rows):
    """Comma-separated, '.' decimal, mandatory header row."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_cell(v) for v in r])
    return Path(path)


def read_csv_columns(path, required):
    """Read a headed CSV into float arrays keyed by column name."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", "input") from exc
    if not rows:
        raise ConfigError(f"{path} is empty", "input")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in header]
    if missing:
        raise ConfigError(f"{path} lacks column(s) {missing}", "input")
    cols = {h: [] for h in header}
    for lineno, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != len(header):
            raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields", "input")
        for h, v in zip(header, r):
            try:
                cols[h].append(float(v))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: non-numeric value {v!r}", "input") from exc
    return {h: np.array(v) for h, v in cols.items()}


def read_trace_csv(path):
    """Trace from {frequency_hz | time_s} plus (re, im) or value columns."""
    try:
        with open(path, newline="") as fh:
            header = [h.strip() for h in next(csv.reader(fh), [])]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", "input") from exc
    if "frequency_hz" in header:
        axis, kind = "frequency_hz", "frequency_sweep"
    elif "time_s" in header:
        axis, kind = "time_s", "time_series"
    else:
        raise ConfigError(f"{path} needs a frequency_hz or time_s column", "input")
    if "re" in header and "im" in header:
        cols = read_csv_columns(path, [axis, "re", "im"])
        values = cols["re"] + 1j * cols["im"]
    elif "value" in header:
        cols = read_csv_columns(path, [axis, "value"])
        values = cols["value"]
    else:
        raise ConfigError(f"{path} needs re/im or value columns", "input")
    try:
        return MeasurementTrace(kind, cols[axis], values)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}", "input") from exc


def write_trace_csv(path, trace):
    axis = "frequency_hz" if trace.kind == "frequency_sweep" else "time_s"
    if np.iscomplexobj(trace.values):
        rows = zip(trace.axis, trace.values.real, trace.values.imag)
        return write_csv(path, [axis, "re", "im"], rows)
    return write_csv(path, [axis, "value"], zip(trace.axis, trace.values))


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    version: str
    command: str
    config_hash: str
    started: str = field(default_factory=_now)
    finished: str = None
    outputs: dict = field(default_factory=dict)

    def record(self, path):
        self.outputs[Path(path).name] = sha256_file(path)

    def write(self, out_dir):
        self.finished = _now()
        return write_json(Path(out_dir) / "manifest.json", {
            "version": self.version, "command": self.command, "config_hash": self.config_hash,
            "started": self.started, "finished": self.finished, "outputs": dict(sorted(self.outputs.items())),
        })

"""Command-line front end.

Every subcommand reads one TOML config, writes CSV/JSON into ``--out`` and
finishes with a manifest of output checksums. Exit codes: 0 success, 2 input
error, 3 fit or numerical failure.
"""

import argparse
import itertools
import logging
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import calibration as cal
from . import core
from . import duffing as dm
from . import fitting as fit
from . import io
from . import loss
from . import mattis_bardeen as mb
from . import noise
from . import units as u
from .errors import ConfigError, DomainError, FitError, KikerrError, PreconditionError

log = logging.getLogger("kikerr")

EXIT_OK, EXIT_INPUT, EXIT_FIT = 0, 2, 3
SWEEP_PARAMETERS = ("width_nm", "length_nm", "capacitance_pF", "frequency_GHz", "participation")


def _num(sec, key, name, default=None):
    required = default is None
    return io._get(sec, key, name, required, default)


# --- design / sweep ---------------------------------------------------------------


def design_report(design, circuit=None):
    circuit = circuit or core.derive_circuit(design)
    rep = circuit.to_dict()
    rep["kerr_shift_kHz"] = circuit.kerr_shift / u.KHZ
    rep["wire_volume_um3"] = design.wire.volume / u.UM3
    rep["cross_check"] = core.kerr_cross_check(design, circuit)
    return rep


def cmd_design(cfg, out, args):
    design = io.design_from_config(cfg)
    rep = design_report(design)
    return [io.write_json(out / "design.json", rep)]


def _axis_values(ax):
    name = ax.get("parameter")
    if name not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}", "sweep.axes.parameter")
    lo, hi = _num(ax, "min", "sweep.axes"), _num(ax, "max", "sweep.axes")
    count = int(_num(ax, "count", "sweep.axes"))
    if count < 1:
        raise ConfigError("sweep count must be >= 1", "sweep.axes.count")
    scale = ax.get("scale", "linear")
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigError("log axes need positive bounds", "sweep.axes.min")
        vals = np.geomspace(lo, hi, count)
    elif scale == "linear":
        vals = np.linspace(lo, hi, count)
    else:
        raise ConfigError("scale must be linear or log", "sweep.axes.scale")
    return name, [float(v) for v in vals]


SWEEP_COLUMNS = ["width_nm", "length_nm", "volume_um3", "capacitance_pF", "frequency_Hz",
                 "participation", "kerr_Hz", "kerr_geometric_Hz", "finite"]


def _sweep_point(task):
    material, values = task
    try:
        design = io.design_from_values(material, **values)
        c = core.derive_circuit(design)
        kg = core.kerr_cross_check(design, c)["kerr_geometric_Hz"]
        row = [values["width_nm"], values["length_nm"], design.wire.volume / u.UM3,
               design.capacitance / u.PF, c.resonance_frequency, c.participation, c.kerr_shift,
               float("nan") if kg is None else kg]
    except (KikerrError, ValueError, ZeroDivisionError, OverflowError):
        row = [values["width_nm"], values["length_nm"]] + [float("nan")] * 6
    finite = all(math.isfinite(v) for v in row[:7])
    return row + [finite]


def cmd_sweep(cfg, out, args):
    material = io.material_from_config(cfg)
    base = io.design_values_from_config(cfg)
    axes = io.section(cfg, "sweep").get("axes", [])
    if not axes:
        raise ConfigError("sweep needs at least one [[sweep.axes]] entry", "sweep.axes")
    grids = [_axis_values(a) for a in axes]
    names = [g[0] for g in grids]
    tasks = []
    for combo in itertools.product(*(g[1] for g in grids)):
        vals = dict(base)
        vals.update(zip(names, combo))
        if "capacitance_pF" in names:
            vals["frequency_GHz"] = None
        tasks.append((material, vals))
    workers = max(1, args.workers)
    if workers == 1 or len(tasks) == 1:
        rows = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    header = [f"axis_{n}" for n in names] + SWEEP_COLUMNS
    table = [list(combo) + row for combo, row in zip(itertools.product(*(g[1] for g in grids)), rows)]
    bad = sum(1 for r in rows if not r[-1])
    if bad:
        log.warning("%d sweep point(s) gave non-finite results", bad)
    return [io.write_csv(out / "sweep.csv", header, table)]


# --- nonlinear response -------------------------------------------------------------


def _cavity(cfg):
    c = io.section(cfg, "cavity")
    return dm.KerrCavity(_num(c, "f0_GHz", "cavity") * u.GHZ, _num(c, "kerr_kHz", "cavity") * u.KHZ,
                         _num(c, "internal_linewidth_kHz", "cavity") * u.KHZ,
                         _num(c, "external_linewidth_kHz", "cavity") * u.KHZ)


def cmd_duffing(cfg, out, args):
    cav = _cavity(cfg)
    d = io.section(cfg, "drive")
    kap = cav.total_linewidth
    if "power_dBm" in d:
        power = u.dbm_to_watt(_num(d, "power_dBm", "drive"))
    else:
        power = _num(d, "power_over_critical", "drive") * dm.critical_drive_power(cav)
    lo = _num(d, "detuning_min_linewidths", "drive", -4.0)
    hi = _num(d, "detuning_max_linewidths", "drive", 2.0)
    count = int(_num(d, "count", "drive", 601.0))
    freqs = cav.resonance_frequency + np.linspace(lo, hi, count) * kap
    rows = dm.response_sweep(cav, freqs, power)
    paths = [io.write_csv(out / "duffing.csv", ["frequency_hz", "re_s11", "im_s11", "n_c", "branch_id"], rows)]
    bistable = sorted({r[0] for r in rows if r[4] == 2})
    side = {
        "n_crit": dm.bifurcation_threshold(cav.kerr, kap),
        "critical_power_W": dm.critical_drive_power(cav),
        "drive_power_W": power,
        "bistable": bool(bistable),
        "bistable_window_Hz": [bistable[0], bistable[-1]] if bistable else None,
        "cavity": {"f0_Hz": cav.resonance_frequency, "kerr_Hz": cav.kerr,
                   "internal_linewidth_Hz": cav.internal_linewidth,
                   "external_linewidth_Hz": cav.external_linewidth},
    }
    paths.append(io.write_json(out / "duffing.json", side))
    return paths


def cmd_two_tone(cfg, out, args):
    cav = _cavity(cfg)
    p = io.section(cfg, "pump")
    detuning = _num(p, "detuning_MHz", "pump") * u.MHZ
    powers = p.get("source_powers_dBm")
    if not powers:
        raise ConfigError("pump.source_powers_dBm must be a non-empty list", "pump.source_powers_dBm")
    f_pump = cav.resonance_frequency + detuning
    if "attenuation_dB" in p:
        att, att_err = _num(p, "attenuation_dB", "pump"), _num(p, "attenuation_err_dB", "pump", 0.0)
    else:
        att, att_err = cal.attenuation_at(_num(p, "calibration_frequency_GHz", "pump",
                                               cav.resonance_frequency / u.GHZ) * u.GHZ)
    noise_frac = _num(p, "noise", "pump", 0.0)
    rng = np.random.default_rng(int(_num(p, "seed", "pump", 0.0)))
    probe = cav.resonance_frequency + np.linspace(-3, 3, 61) * cav.total_linewidth
    rows, n_all, shifts = [], [], []
    for pw in powers:
        drive = dm.DriveConfig(f_pump, u.dbm_to_watt(float(pw) - att), detuning)
        res = dm.two_tone_response(cav, drive, probe)
        shift = res.shifted_frequency - cav.resonance_frequency
        if noise_frac > 0:
            shift += noise_frac * abs(shift) * rng.standard_normal()
        rows.append((float(pw), res.pump_photons, shift))
        n_all.append(res.pump_photons)
        shifts.append(shift)
    paths = [io.write_csv(out / "two_tone.csv", ["source_power_dBm", "n_pump", "shift_hz"], rows)]
    k = fit.extract_kerr(n_all, shifts, attenuation_uncertainty_db=att_err)
    rep = k.to_dict()
    rep["attenuation_dB"] = att
    rep["pump_frequency_Hz"] = f_pump
    paths.append(io.write_json(out / "two_tone.json", rep))
    return paths


# --- fits ----------------------------------------------------------------------------


def _mb_fit(path, sec, out):
    cols = io.read_csv_columns(path, ["temperature_K", "f0_Hz"])
    shifts, ref = mb.shifts_from_frequencies(cols["temperature_K"], cols["f0_Hz"])
    alpha = _num(sec, "alpha", "fit")
    curve = mb.FreqShiftCurve(cols["temperature_K"], shifts, alpha, ref)
    res = mb.fit_tc(curve, tc_guess=sec.get("tc_guess_K"), fit_offset=bool(sec.get("fit_offset", False)))
    model = mb.frequency_shift_curve(curve.temperatures, alpha, res["Tc"], ref)
    if "offset" in res.params:
        model = model + res["offset"]
    rows = zip(curve.temperatures, shifts, model, shifts - model)
    p1 = io.write_csv(out / "mb_curve.csv", ["temperature_K", "shift", "model", "residual"], rows)
    rep = res.to_dict()
    rep["reference_frequency_Hz"] = ref
    return [io.write_json(out / "mb_fit.json", rep), p1]


def cmd_mb_fit(cfg, out, args):
    sec = io.section(cfg, "fit")
    return _mb_fit(_input_path(cfg, sec), sec, out)


def _input_path(cfg, sec):
    if "input" not in sec:
        raise ConfigError("missing input path", "fit.input")
    p = Path(sec["input"])
    if not p.is_absolute():
        p = Path(cfg.get("_source", ".")).parent / p
    return p


def cmd_fit(cfg, out, args):
    sec = io.section(cfg, "fit")
    kind = sec.get("kind")
    if kind == "tc":
        return _mb_fit(_input_path(cfg, sec), sec, out)
    path = _input_path(cfg, sec)
    if kind == "resonance":
        trace = io.read_trace_csv(path)
        r = fit.fit_resonance(trace)
        model = fit.reflection_model(trace.axis, r.f0, r.qi, r.qc, r.amplitude, r.slope, r.delay,
                                     reference=r.extras["reference_frequency"])
        resid = trace.values - model
        p1 = io.write_csv(out / "residuals.csv", ["frequency_hz", "re", "im"],
                          zip(trace.axis, resid.real, resid.imag))
        return [io.write_json(out / "fit.json", r.to_fit_result().to_dict()), p1]
    if kind == "sheet":
        cols = io.read_csv_columns(path, ["length_m", "f0_Hz"])
        r = fit.fit_sheet_inductance(cols["length_m"], cols["f0_Hz"], _num(sec, "capacitance_F", "fit"),
                                     _num(sec, "width_m", "fit"))
        pred = 1.0 / (r.extras["slope"] * cols["length_m"] + r["intercept"])
        p1 = io.write_csv(out / "residuals.csv", ["length_m", "inv_f0_sq", "residual"],
                          zip(cols["length_m"], 1 / cols["f0_Hz"] ** 2, 1 / cols["f0_Hz"] ** 2 - pred))
        return [io.write_json(out / "fit.json", r.to_dict()), p1]
    if kind == "kerr":
        cols = io.read_csv_columns(path, ["n_pump", "shift_hz"])
        r = fit.extract_kerr(cols["n_pump"], cols["shift_hz"], intercept=bool(sec.get("intercept", True)),
                             attenuation_uncertainty_db=_num(sec, "attenuation_err_dB", "fit", 0.0))
        model = r.extras["slope"] * cols["n_pump"] + r.params.get("intercept", 0.0)
        p1 = io.write_csv(out / "residuals.csv", ["n_pump", "shift_hz", "residual"],
                          zip(cols["n_pump"], cols["shift_hz"], cols["shift_hz"] - model))
        return [io.write_json(out / "fit.json", r.to_dict()), p1]
    if kind == "tls":
        cols = io.read_csv_columns(path, ["n_c", "Qi"])
        r = fit.fit_tls_saturation(cols["n_c"], cols["Qi"], beta=_num(sec, "beta", "fit", 0.5),
                                   fit_beta=bool(sec.get("fit_beta", False)))
        model = fit.tls_quality_factor(cols["n_c"], r["Q_TLS"], r["Q_other"], r["n_sat"], r["beta"])
        p1 = io.write_csv(out / "residuals.csv", ["n_c", "Qi", "residual"],
                          zip(cols["n_c"], cols["Qi"], cols["Qi"] - model))
        return [io.write_json(out / "fit.json", r.to_dict()), p1]
    raise ConfigError("fit.kind must be resonance, tc, sheet, kerr or tls", "fit.kind")


# --- loss ----------------------------------------------------------------------------


def cmd_loss(cfg, out, args):
    sec = io.section(cfg, "loss")
    f0 = _num(sec, "f0_GHz", "loss") * u.GHZ
    channels = {}
    qp = io.section(cfg, "quasiparticles", required=False)
    if qp:
        tc = _num(qp, "Tc_K", "quasiparticles")
        env = loss.QpEnvironment.from_lab_units(_num(qp, "n_qp_per_um3", "quasiparticles"),
                                                _num(qp, "D_per_eV_um3", "quasiparticles"))
        alpha = qp.get("alpha", "shared_pad")
        if alpha == "shared_pad":
            alpha = loss.shared_pad_participation(f0)
        elif not isinstance(alpha, (int, float)):
            raise ConfigError("quasiparticles.alpha must be a number or 'shared_pad'", "quasiparticles.alpha")
        channels["quasiparticle"] = loss.qp_loss(float(alpha), f0, core.gap_from_tc(tc), env)
    rad = io.section(cfg, "radiation", required=False)
    if rad:
        fb = _num(rad, "box_frequency_GHz", "radiation") * u.GHZ
        if "kappa_MHz" in rad:
            kappa = _num(rad, "kappa_MHz", "radiation") * u.MHZ
            qb = fb / kappa
        else:
            qb = _num(rad, "box_q", "radiation")
            kappa = fb / qb
        if "g_MHz" in rad:
            g = _num(rad, "g_MHz", "radiation") * u.MHZ
        else:
            box = loss.BoxMode.for_frequency(fb, qb, _num(rad, "box_x_mm", "radiation", 10.0) * 1e-3,
                                             _num(rad, "box_y_mm", "radiation", 10.0) * 1e-3)
            pads = loss.PadGeometry(gap=_num(rad, "gap_um", "radiation", 1.0) * u.UM,
                                    pad_width=_num(rad, "pad_width_um", "radiation", 755.0) * u.UM,
                                    pad_length=_num(rad, "pad_length_um", "radiation", 755.0) * u.UM)
            g = loss.coupling_rate(pads, box, f0, rtol=args.tolerance or 0.01)
        detuning = _num(rad, "detuning_GHz", "radiation", (fb - f0) / u.GHZ) * u.GHZ
        channels["radiation"] = loss.purcell_loss(g, kappa, detuning)
    tls = io.section(cfg, "tls", required=False)
    if tls:
        channels["tls"] = _num(tls, "gamma_kHz", "tls") * u.KHZ
    observed = sec.get("observed_linewidth_kHz")
    budget = loss.assemble_budget(channels, f0, None if observed is None else float(observed) * u.KHZ)
    return [io.write_json(out / "loss.json", budget.to_dict())]


# --- calibration ----------------------------------------------------------------------


def cmd_calibrate(cfg, out, args):
    sec = io.section(cfg, "calibration")
    f = _num(sec, "frequency_GHz", "calibration") * u.GHZ
    bw = _num(sec, "bandwidth_Hz", "calibration")
    temps = sec.get("temperatures_K")
    if "powers_W" in sec:
        powers = sec["powers_W"]
    elif "synthetic_gain_dB" in sec:
        g = 10 ** (_num(sec, "synthetic_gain_dB", "calibration") / 10)
        th = _num(sec, "synthetic_T_HEMT_K", "calibration", 3.0)
        powers = [cal.thermal_noise_power(t, g, th, bw, f) for t in temps]
    else:
        raise ConfigError("give calibration.powers_W or calibration.synthetic_gain_dB", "calibration.powers_W")
    if not temps or len(temps) != len(powers):
        raise ConfigError("temperatures_K and powers must be equal-length lists", "calibration.temperatures_K")
    res = cal.calibrate_output_gain(temps, powers, bw, f)
    rep = res.to_dict()
    if "s_io_dB" in sec:
        rep["A_IN_dB"] = cal.line_attenuation(_num(sec, "s_io_dB", "calibration"), res["G_C_dB"])
    table = cal.calibration_table()
    rows = [(str(r.frequency), str(r.s_io), str(r.g_c), str(r.g_c_err), str(r.a_in), str(r.a_in_err),
             r.identity_holds()) for r in table]
    p1 = io.write_csv(out / "attenuation_table.csv",
                      ["frequency_GHz", "S_IO_dB", "G_C_dB", "G_C_err_dB", "A_IN_dB", "A_IN_err_dB",
                       "identity_holds"], rows)
    return [io.write_json(out / "calibrate.json", rep), p1]


# --- time series -----------------------------------------------------------------------


def _series(cfg, sec, synth):
    if "input" in sec:
        tr = io.read_trace_csv(_input_path(cfg, sec))
        if tr.kind != "time_series":
            raise ConfigError("expected a time_s column", "input")
        return tr.axis, np.asarray(tr.values, dtype=float)
    return synth()


def cmd_telegraph(cfg, out, args):
    sec = io.section(cfg, "telegraph")

    def synth():
        tau = _num(sec, "tau_s", "telegraph")
        dt = _num(sec, "dt_s", "telegraph", tau / 20)
        dur = _num(sec, "duration_s", "telegraph", 1000 * tau)
        x = noise.telegraph_series(tau, dur, dt, rng=int(_num(sec, "seed", "telegraph", 0.0)))
        return np.arange(len(x)) * dt, x

    t, x = _series(cfg, sec, synth)
    dt = float(np.median(np.diff(t)))
    res = noise.telegraph_tau(x, dt)
    r = noise.autocorrelation(x)
    m = min(len(r), 4 * max(res.extras["window_lags"], 10))
    lags = np.arange(m) * dt
    p1 = io.write_csv(out / "autocorrelation.csv", ["lag_s", "acf", "model"],
                      zip(lags, r[:m], np.exp(-lags / res["tau"])))
    return [io.write_json(out / "telegraph.json", res.to_dict()), p1]


def cmd_ringdown(cfg, out, args):
    sec = io.section(cfg, "ringdown")

    def synth():
        t1 = _num(sec, "t1_us", "ringdown") * 1e-6
        t = np.linspace(0, 8 * t1, int(_num(sec, "count", "ringdown", 400.0)))
        return t, noise.ringdown_series(t1, t, noise=_num(sec, "noise", "ringdown", 0.0),
                                        rng=int(_num(sec, "seed", "ringdown", 0.0)))

    t, y = _series(cfg, sec, synth)
    res = noise.ringdown_t1(t, y)
    rep = res.to_dict()
    if "steady_linewidth_kHz" in sec:
        rep["dephasing"] = noise.dephasing_bound(_num(sec, "steady_linewidth_kHz", "ringdown") * u.KHZ,
                                                 res["T1"])
    return [io.write_json(out / "ringdown.json", rep)]


COMMANDS = {
    "design": cmd_design, "sweep": cmd_sweep, "duffing": cmd_duffing, "two-tone": cmd_two_tone,
    "mb-fit": cmd_mb_fit, "loss": cmd_loss, "calibrate": cmd_calibrate, "fit": cmd_fit,
    "telegraph": cmd_telegraph, "ringdown": cmd_ringdown,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="kikerr", description="Kinetic-inductance Kerr resonator toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML config (also searched in $KIKERR_CONFIG_DIR)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel workers for sweeps")
        p.add_argument("--tolerance", type=float, default=None, help="numerical tolerance override")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = io.load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = io.RunManifest(__version__, args.command, io.config_hash(cfg))
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            paths = COMMANDS[args.command](cfg, out, args)
        for p in paths:
            manifest.record(p)
        manifest.write(out)
    except (ConfigError, DomainError, PreconditionError, OSError) as exc:
        field = getattr(exc, "field", None)
        print(f"input error{f' [{field}]' if field else ''}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FitError, FloatingPointError, ArithmeticError) as exc:
        print(f"fit/numerical failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

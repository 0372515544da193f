"""Reproducible experiment runner.

Subcommands map one-to-one onto module entry points:

    fas             flux / cone-probability comparison over a radius list
    outstate        outgoing momentum representation of a packet
    resonance-scan  threshold classification along a coupling sweep
    decay-check     large-k decay exponents of the scattered spectral term
    jk-residue      low-energy pole extraction for a resonant potential

Configuration is a single JSON file validated strictly (unknown keys are
rejected, error messages name the offending dotted key path).  Outputs are
deterministic: re-running a config reproduces byte-identical JSON except for
the ``timestamp`` field.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FasError, NumericalFailureError
from .fluxfas import ConeSurface, fas_verify, flux_series
from .pointmodel import (
    PointInteraction,
    WavePacket,
    decay_profile,
    outgoing_state_point,
    project_ac,
    spectral_norm,
)
from .quadrature import make_graded_grid

SCHEMA_VERSION = 1

log = logging.getLogger("fasbench")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_ALLOWED = {
    "": {"model", "packet", "cone", "radii", "time", "numerics", "outputs",
         "scan", "decay", "jk"},
    "model": {"kind", "gamma", "family", "b", "depth", "width", "path",
              "ikebe_n", "eps_decay", "c0", "r0_decay", "scale"},
    "packet": {"kind", "sigma", "shell", "boost", "project"},
    "cone": {"axis", "theta"},
    "time": {"t1", "t2"},
    "numerics": {"k_max", "n_panels", "panel_order", "grading", "workers"},
    "outputs": {"directory", "formats"},
    "scan": {"lambda_min", "lambda_max", "step"},
    "decay": {"orders"},
    "jk": {"k_min", "k_max", "n"},
}


def _reject_unknown(section: dict, path: str):
    allowed = _ALLOWED.get(path, set())
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key", key=f"{path + '.' if path else ''}{key}")


@dataclass
class ExperimentConfig:
    """Validated experiment description with defaults resolved."""

    raw: dict
    model: dict
    packet: dict
    cone: dict
    radii: list
    t1: float
    t2: object
    numerics: dict
    outputs: dict
    scan: dict | None = None
    decay: dict | None = None
    jk: dict | None = None

    def effective_dict(self) -> dict:
        return {
            "model": self.model,
            "packet": self.packet,
            "cone": self.cone,
            "radii": self.radii,
            "time": {"t1": self.t1, "t2": self.t2},
            "numerics": self.numerics,
            "outputs": self.outputs,
            **({"scan": self.scan} if self.scan else {}),
            **({"decay": self.decay} if self.decay else {}),
            **({"jk": self.jk} if self.jk else {}),
        }


def _need(section: dict, key: str, path: str):
    if key not in section:
        raise ConfigError("missing key", key=f"{path}.{key}" if path else key)
    return section[key]


def _check_num(value, key, lo=None, hi=None, kind=float):
    try:
        v = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected {kind.__name__}", key=key)
    if lo is not None and v < lo:
        raise ConfigError(f"value {v} below minimum {lo}", key=key)
    if hi is not None and v > hi:
        raise ConfigError(f"value {v} above maximum {hi}", key=key)
    return v


def load_config(path: str, base_dir: Path | None = None) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}", key="config")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", key="config")
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be an object", key="config")
    _reject_unknown(raw, "")

    model = dict(_need(raw, "model", ""))
    _reject_unknown(model, "model")
    kind = _need(model, "kind", "model")
    if kind == "point":
        gamma = _need(model, "gamma", "model")
        if gamma in ("inf", "+inf", "Infinity"):
            model["gamma"] = math.inf
        else:
            model["gamma"] = _check_num(gamma, "model.gamma")
    elif kind == "potential":
        family = _need(model, "family", "model")
        if family == "bargmann":
            model["b"] = _check_num(_need(model, "b", "model"), "model.b", lo=1e-12)
        elif family == "gaussian_well":
            model["depth"] = _check_num(_need(model, "depth", "model"), "model.depth", lo=0)
            model["width"] = _check_num(_need(model, "width", "model"), "model.width", lo=1e-12)
        elif family == "table":
            tbl = Path(_need(model, "path", "model"))
            if not tbl.is_absolute() and base_dir is not None:
                tbl = base_dir / tbl
            if not tbl.exists():
                raise ConfigError(f"potential table not found: {tbl}", key="model.path")
            model["path"] = str(tbl)
            model["ikebe_n"] = _check_num(_need(model, "ikebe_n", "model"),
                                          "model.ikebe_n", lo=1, kind=int)
        else:
            raise ConfigError(f"unknown potential family {family!r}", key="model.family")
        model["scale"] = _check_num(model.get("scale", 1.0), "model.scale")
    else:
        raise ConfigError(f"unknown model kind {kind!r}", key="model.kind")

    packet = dict(raw.get("packet", {"kind": "gaussian", "sigma": 1.0}))
    _reject_unknown(packet, "packet")
    if packet.get("kind", "gaussian") != "gaussian":
        raise ConfigError("only gaussian packets are supported", key="packet.kind")
    packet["kind"] = "gaussian"
    packet["sigma"] = _check_num(packet.get("sigma", 1.0), "packet.sigma", lo=1e-6)
    packet["shell"] = _check_num(packet.get("shell", 0.0), "packet.shell", lo=0.0)
    packet["boost"] = _check_num(packet.get("boost", 0.0), "packet.boost")
    packet["project"] = bool(packet.get("project", True))

    cone = dict(raw.get("cone", {"axis": [0.0, 0.0, 1.0], "theta": math.pi}))
    _reject_unknown(cone, "cone")
    axis = cone.get("axis", [0.0, 0.0, 1.0])
    if (not isinstance(axis, (list, tuple))) or len(axis) != 3:
        raise ConfigError("axis must be a 3-vector", key="cone.axis")
    nrm = math.sqrt(sum(float(a) ** 2 for a in axis))
    if nrm == 0:
        raise ConfigError("axis must be nonzero", key="cone.axis")
    cone["axis"] = [float(a) / nrm for a in axis]
    cone["theta"] = _check_num(cone.get("theta", math.pi), "cone.theta",
                               lo=1e-9, hi=math.pi)

    radii = raw.get("radii", [20.0, 40.0, 80.0])
    if not isinstance(radii, list) or not radii:
        raise ConfigError("radii must be a non-empty list", key="radii")
    radii = [_check_num(R, "radii", lo=1e-6) for R in radii]

    tsec = dict(raw.get("time", {"t1": 0.0, "t2": 400.0}))
    _reject_unknown(tsec, "time")
    t1 = _check_num(tsec.get("t1", 0.0), "time.t1", lo=0.0)
    t2_raw = tsec.get("t2", 400.0)
    if isinstance(t2_raw, list):
        if len(t2_raw) != len(radii):
            raise ConfigError("t2 list must match radii length", key="time.t2")
        t2 = [_check_num(v, "time.t2", lo=t1 + 1e-12) for v in t2_raw]
    else:
        t2 = _check_num(t2_raw, "time.t2", lo=t1 + 1e-12)

    numerics = dict(raw.get("numerics", {}))
    _reject_unknown(numerics, "numerics")
    numerics["k_max"] = (None if numerics.get("k_max") in (None, "auto")
                         else _check_num(numerics["k_max"], "numerics.k_max", lo=0.1))
    numerics["n_panels"] = _check_num(numerics.get("n_panels", 56), "numerics.n_panels",
                                      lo=4, kind=int)
    numerics["panel_order"] = _check_num(numerics.get("panel_order", 8),
                                         "numerics.panel_order", lo=2, hi=16, kind=int)
    numerics["grading"] = _check_num(numerics.get("grading", 2.0), "numerics.grading",
                                     lo=1.0, hi=4.0)
    numerics["workers"] = _check_num(numerics.get("workers", 1), "numerics.workers",
                                     lo=1, kind=int)

    outputs = dict(raw.get("outputs", {}))
    _reject_unknown(outputs, "outputs")
    outputs["directory"] = str(outputs.get("directory", "out"))
    formats = outputs.get("formats", ["json", "csv"])
    if not isinstance(formats, list) or any(f not in ("json", "csv", "plot") for f in formats):
        raise ConfigError("formats must be a list drawn from json/csv/plot", key="outputs.formats")
    outputs["formats"] = formats

    scan = raw.get("scan")
    if scan is not None:
        scan = dict(scan)
        _reject_unknown(scan, "scan")
        scan["lambda_min"] = _check_num(_need(scan, "lambda_min", "scan"), "scan.lambda_min", lo=0)
        scan["lambda_max"] = _check_num(_need(scan, "lambda_max", "scan"), "scan.lambda_max", lo=0)
        scan["step"] = _check_num(_need(scan, "step", "scan"), "scan.step", lo=1e-6)
        if scan["lambda_max"] <= scan["lambda_min"]:
            raise ConfigError("lambda_max must exceed lambda_min", key="scan.lambda_max")

    decay = raw.get("decay")
    if decay is not None:
        decay = dict(decay)
        _reject_unknown(decay, "decay")
        orders = decay.get("orders", [0, 1, 2])
        if not isinstance(orders, list) or any(int(o) != o or o < 0 or o > 5 for o in orders):
            raise ConfigError("orders must be integers in [0, 5]", key="decay.orders")
        decay["orders"] = [int(o) for o in orders]

    jk = raw.get("jk")
    if jk is not None:
        jk = dict(jk)
        _reject_unknown(jk, "jk")
        jk["k_min"] = _check_num(jk.get("k_min", 1e-3), "jk.k_min", lo=1e-6)
        jk["k_max"] = _check_num(jk.get("k_max", 0.1), "jk.k_max", hi=0.1)
        jk["n"] = _check_num(jk.get("n", 7), "jk.n", lo=5, kind=int)
        if jk["k_max"] <= jk["k_min"]:
            raise ConfigError("k_max must exceed k_min", key="jk.k_max")

    return ExperimentConfig(raw=raw, model=model, packet=packet, cone=cone,
                            radii=radii, t1=t1, t2=t2, numerics=numerics,
                            outputs=outputs, scan=scan, decay=decay, jk=jk)


# ---------------------------------------------------------------------------
# model assembly
# ---------------------------------------------------------------------------

def _build_model(cfg: ExperimentConfig):
    m = cfg.model
    if m["kind"] == "point":
        return PointInteraction(m["gamma"])
    from .lsradial import (bargmann_potential, gaussian_well, scaled_potential,
                           tabulated_potential)
    if m["family"] == "bargmann":
        V = bargmann_potential(m["b"])
    elif m["family"] == "gaussian_well":
        V = gaussian_well(m["depth"], m["width"])
    else:
        data = np.loadtxt(m["path"])
        V = tabulated_potential(data[:, 0], data[:, 1], ikebe_n=m["ikebe_n"],
                                eps_decay=m.get("eps_decay", 1.0),
                                c0=m.get("c0"), r0_decay=m.get("r0_decay", 1.0))
    if m.get("scale", 1.0) != 1.0:
        V = scaled_potential(V, m["scale"])
    return V


def _build_packet(cfg: ExperimentConfig, model) -> WavePacket:
    p = cfg.packet
    packet = WavePacket.gaussian(p["sigma"], shell=p["shell"], boost=p["boost"])
    if isinstance(model, PointInteraction) and model.has_bound_state and p["project"]:
        packet = project_ac(packet, model)
    return packet


def _build_grid(cfg: ExperimentConfig, packet: WavePacket):
    n = cfg.numerics
    if n["k_max"] is None:
        return None
    return make_graded_grid(n["k_max"], n["n_panels"], n["panel_order"], n["grading"])


def _outgoing_state(cfg: ExperimentConfig, model, packet):
    grid = _build_grid(cfg, packet)
    if isinstance(model, PointInteraction):
        return outgoing_state_point(packet, model, grid=grid) if grid is not None \
            else outgoing_state_point(packet, model)
    from .lsradial import outgoing_state_potential
    return outgoing_state_potential(model, packet, grid=grid) if grid is not None \
        else outgoing_state_potential(model, packet)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_json(path: Path, payload: dict):
    doc = {"schema_version": SCHEMA_VERSION, "timestamp": time.strftime(
        "%Y-%m-%dT%H:%M:%SZ", time.gmtime()), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def emit_plotdata(report_dict: dict, target: Path, spec=None, model=None):
    """Gnuplot-ready two/three-column files from a report dictionary.

    Empty reports produce a warning and no files.
    """
    entries = report_dict.get("entries") or report_dict.get("rows") or []
    if not entries and spec is None:
        log.warning("empty report: no plot data written")
        return []
    written = []
    target.mkdir(parents=True, exist_ok=True)
    if entries and "rhs" in report_dict:   # FAS report
        conv = target / "convergence.dat"
        with conv.open("w") as fh:
            fh.write("# R  rel_error  lhs_total  rhs\n")
            for e in entries:
                fh.write(f"{e['R']:.6g} {e['rel_error']:.10e} "
                         f"{e['lhs_total']:.10e} {e['rhs']:.10e}\n")
        written.append(conv)
    if spec is not None:
        sp = target / "spectrum.dat"
        with sp.open("w") as fh:
            fh.write("# k  |psi_hat_out|  |r|/k\n")
            rr = abs(spec.r)
            for k, v in zip(spec.grid.nodes, spec.psi_hat):
                ref = rr / k if rr > 0 else 0.0
                fh.write(f"{k:.10e} {abs(v):.10e} {ref:.10e}\n")
        written.append(sp)
    if model is not None and not isinstance(model, PointInteraction):
        from .lsradial import solve_radial
        ph = target / "phase_shift.dat"
        with ph.open("w") as fh:
            fh.write("# k  delta0\n")
            for k in np.geomspace(0.01, 10.0, 60):
                fh.write(f"{k:.10e} {solve_radial(model, float(k), 0).delta:.10e}\n")
        written.append(ph)
    return written


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_fas(cfg: ExperimentConfig, out: Path) -> int:
    model = _build_model(cfg)
    packet = _build_packet(cfg, model)
    spec = _outgoing_state(cfg, model, packet)
    cone = ConeSurface(axis=tuple(cfg.cone["axis"]), theta=cfg.cone["theta"])
    report = fas_verify(model, packet, cone, cfg.radii, cfg.t1, cfg.t2,
                        spec=spec, workers=cfg.numerics["workers"])
    doc = report.to_json_dict()
    doc["config"] = cfg.effective_dict()
    _write_json(out / "fas_report.json", {"results": doc})
    state = spec.evolver()
    if "csv" in cfg.outputs["formats"]:
        t2s = cfg.t2 if isinstance(cfg.t2, list) else [cfg.t2] * len(cfg.radii)
        for R, t2r in zip(sorted(cfg.radii), t2s):
            series = flux_series(state, float(R), cone, cfg.t1, float(t2r), n=160)
            pth = out / f"flux_R{R:g}.csv"
            with pth.open("w") as fh:
                fh.write("t,flux,cumulative\n")
                for t, f, c in zip(series.times, series.flux, series.cumulative):
                    fh.write(f"{t:.10e},{f:.10e},{c:.10e}\n")
    if "plot" in cfg.outputs["formats"]:
        emit_plotdata(doc, out / "plot", spec=spec, model=model)
    for e in report.entries:
        print(f"R={e.R:g}: lhs={e.lhs_total:.6f} rhs={e.rhs:.6f} "
              f"rel_error={e.rel_error:.3e} cross={e.lhs_abs_cross:.3e}")
    return 0


def _cmd_outstate(cfg: ExperimentConfig, out: Path) -> int:
    model = _build_model(cfg)
    packet = _build_packet(cfg, model)
    spec = _outgoing_state(cfg, model, packet)
    norm = spectral_norm(spec)
    doc = {
        "model": cfg.model,
        "r_singular": [spec.r.real, spec.r.imag],
        "laurent_c": [spec.c.real, spec.c.imag],
        "spectral_norm": norm,
        "k_max": spec.grid.k_max,
        "n_nodes": int(spec.grid.nodes.size),
        "config": cfg.effective_dict(),
    }
    _write_json(out / "outstate.json", {"results": doc})
    if "csv" in cfg.outputs["formats"]:
        pth = out / "spectrum.csv"
        with pth.open("w") as fh:
            fh.write("k,re,im,abs,f1_abs\n")
            for k, v, f1 in zip(spec.grid.nodes, spec.psi_hat, spec.f1):
                fh.write(f"{k:.10e},{v.real:.10e},{v.imag:.10e},{abs(v):.10e},{abs(f1):.10e}\n")
    if "plot" in cfg.outputs["formats"]:
        emit_plotdata({"entries": [], "rhs": None}, out / "plot", spec=spec, model=model)
    print(f"outgoing state: |r|={abs(spec.r):.6f} norm={norm:.8f} nodes={spec.grid.nodes.size}")
    return 0


def _cmd_resonance_scan(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.scan is None:
        raise ConfigError("resonance-scan requires a scan section", key="scan")
    model = _build_model(cfg)
    if isinstance(model, PointInteraction):
        raise ConfigError("resonance-scan requires a potential model", key="model.kind")
    from .lsradial import classification_scan
    lams = np.arange(cfg.scan["lambda_min"], cfg.scan["lambda_max"] + 1e-12,
                     cfg.scan["step"])
    rows, lam_crit = classification_scan(model, lams)
    doc = {"rows": rows, "lambda_critical": lam_crit, "config": cfg.effective_dict()}
    _write_json(out / "resonance_scan.json", {"results": doc})
    if "csv" in cfg.outputs["formats"]:
        with (out / "resonance_scan.csv").open("w") as fh:
            fh.write("lambda,classification,a,b,ratio,discriminant\n")
            for row in rows:
                fh.write(f"{row['lambda']:.6f},{row['classification']},"
                         f"{row['a']:.10e},{row['b']:.10e},{row['ratio']:.4e},"
                         f"{row['discriminant']:.10e}\n")
    for row in rows:
        print(f"lambda={row['lambda']:.3f}: {row['classification']}")
    print(f"critical coupling: {lam_crit}")
    return 0


def _cmd_decay_check(cfg: ExperimentConfig, out: Path) -> int:
    model = _build_model(cfg)
    if not isinstance(model, PointInteraction):
        raise ConfigError("decay-check runs on the point model", key="model.kind")
    packet = _build_packet(cfg, model)
    spec = outgoing_state_point(packet, model)
    orders = (cfg.decay or {"orders": [0, 1, 2]})["orders"]
    fit = decay_profile(spec, orders=tuple(orders))
    doc = {
        "orders": list(fit.orders),
        "slopes": {str(m): fit.slopes.get(m) for m in fit.orders} if fit.has_scattered_part else {},
        "constants": {str(m): fit.constants.get(m) for m in fit.orders} if fit.has_scattered_part else {},
        "k_window": list(fit.k_window),
        "has_scattered_part": fit.has_scattered_part,
        "config": cfg.effective_dict(),
    }
    _write_json(out / "decay_check.json", {"results": doc})
    if not fit.has_scattered_part:
        print("free model: no scattered spectral term")
    else:
        for m in fit.orders:
            print(f"order {m}: slope {fit.slopes[m]:+.3f} (target {-(3 + m)})")
    return 0


def _cmd_jk_residue(cfg: ExperimentConfig, out: Path) -> int:
    model = _build_model(cfg)
    if isinstance(model, PointInteraction):
        raise ConfigError("jk-residue requires a potential model", key="model.kind")
    from .lsradial import jk_residue_extract, zero_energy_solve
    prof = zero_energy_solve(model, 0)
    if prof.classification != "resonance":
        raise NumericalFailureError(
            f"potential classifies as {prof.classification}; no pole to extract",
            where="jk-residue",
        )
    jkc = cfg.jk or {"k_min": 1e-3, "k_max": 0.1, "n": 7}
    k_seq = np.geomspace(jkc["k_max"], jkc["k_min"], int(jkc["n"]))
    res = jk_residue_extract(model, prof, k_seq)
    doc = {
        "k_seq": [float(k) for k in res.k_seq],
        "sup_deviation": res.sup_deviation,
        "remainder_norms": [float(v) for v in res.remainder_norms],
        "rho_norms": [float(v) for v in res.rho_norms],
        "extrapolation_order": res.extrapolation_order,
        "config": cfg.effective_dict(),
    }
    _write_json(out / "jk_residue.json", {"results": doc})
    for k, rn in zip(res.k_seq, res.remainder_norms):
        print(f"k={k:.4e}: |k eta - r0 psi_res|_sup = {rn:.4e}")
    print(f"extrapolated sup deviation: {res.sup_deviation:.4e}")
    return 0


_COMMANDS = {
    "fas": _cmd_fas,
    "outstate": _cmd_outstate,
    "resonance-scan": _cmd_resonance_scan,
    "decay-check": _cmd_decay_check,
    "jk-residue": _cmd_jk_residue,
}


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fasbench",
        description="flux-across-surfaces verification workbench",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker count (overrides config)")
    args = parser.parse_args(argv)

    level = os.environ.get("FAS_LOG_LEVEL", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING))

    try:
        cfg = load_config(args.config, base_dir=Path(args.config).resolve().parent)
        if args.workers is not None:
            cfg.numerics["workers"] = max(1, args.workers)
        out = Path(args.out) if args.out else Path(cfg.outputs["directory"])
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error at {exc.key}: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        where = f" in {exc.where}" if exc.where else ""
        print(f"numerical failure{where}: {exc}", file=sys.stderr)
        return 3
    except FasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

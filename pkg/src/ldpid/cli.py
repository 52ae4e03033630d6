"""Command-line front end.

Every command writes into an output directory together with a single
``manifest.json`` that records the resolved inputs; ``ldpid replay`` reruns
a manifest into another directory and regenerates identical files.

Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cases import CASES, get_case
from .config import controller_from_record, load_kv, plant_from_record, spec_from_record
from .fracseries import expand_fk
from .lti import NoCrossoverError, log_grid, loop_response, margins
from .sim import (SimConfig, StepInput, metrics, simulate, simulate_2dof_amigo,
                  write_metrics_json, write_trace_csv)
from .tuning import tune_frequency, tune_integral

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    pass


# -- helpers ----------------------------------------------------------------

def _write_json(path: Path, obj) -> Path:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return clean(v.item())
        return v

    path.write_text(json.dumps(clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def _write_manifest(out: Path, command: str, config: dict, files, seed=None) -> Path:
    return _write_json(out / "manifest.json", {
        "command": command,
        "config": config,
        "seed": seed,
        "files": sorted(str(f.name) for f in files),
        "version": __version__,
    })


def _read_record(path, what):
    try:
        return load_kv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} config {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"bad {what} config {path}: {exc}") from None


def _fmt(v: float) -> str:
    return repr(float(v))


def bode_table(controller, plant, omegas):
    """Rows ``(omega, |L| dB, arg L deg, |S| dB, |T| dB)`` and the loop margins."""
    resp = loop_response(controller, plant, omegas)
    S = np.abs(resp.sensitivity())
    Tc = np.abs(resp.complementary())
    with np.errstate(divide="ignore"):
        cols = (resp.omegas, resp.magnitude_db, resp.phase_deg, 20 * np.log10(S), 20 * np.log10(Tc))
    try:
        mg = margins(resp)
    except NoCrossoverError:
        mg = None
    return np.column_stack(cols), mg, resp


def write_bode_csv(rows, path: Path) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "L_dB", "L_deg", "S_dB", "T_dB"])
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _margin_record(mg):
    if mg is None:
        return {"omega_c": None, "phase_margin": None, "multiple_crossings": None}
    return {"omega_c": mg.omega_c, "phase_margin": mg.phase_margin, "multiple_crossings": mg.multiple}


# -- commands ---------------------------------------------------------------

def run_coeffs(cfg: dict, out: Path):
    series = expand_fk(cfg["order"], cfg["M"])
    path = out / "coeffs.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "f_k"])
        for k, v in enumerate(series.values):
            w.writerow([k, _fmt(v)])
    return [path], None


def run_bode(cfg: dict, out: Path):
    plant = plant_from_record(cfg["plant"])
    ctrl = controller_from_record(cfg["controller"])
    rows, mg, _ = bode_table(ctrl, plant, log_grid(cfg["lo"], cfg["hi"], cfg["points"]))
    files = [write_bode_csv(rows, out / "bode.csv"),
             _write_json(out / "margins.json", _margin_record(mg))]
    if mg is None:
        print("omega_c: absent  phase_margin: absent")
    else:
        print(f"omega_c: {mg.omega_c:.6g} rad/s  phase_margin: {mg.phase_margin:.4g} deg"
              + ("  (multiple crossings)" if mg.multiple else ""))
    return files, None


def _sim_config(cfg: dict) -> SimConfig:
    return SimConfig(T=cfg["T"], duration=cfg["duration"], substeps=cfg["substeps"],
                     reference=StepInput(cfg["reference"], 0.0),
                     disturbance=StepInput(cfg["disturbance"], cfg["disturbance_time"]))


def run_simulate(cfg: dict, out: Path):
    plant = plant_from_record(cfg["plant"])
    ctrl = controller_from_record(cfg["controller"])
    scfg = _sim_config(cfg)
    trace = simulate(plant, ctrl, scfg)
    m = metrics(trace, scfg)
    files = [write_trace_csv(trace, out / "trace.csv"), write_metrics_json(m, out / "metrics.json")]
    print(json.dumps({k: v for k, v in m.to_record().items()}, default=str))
    return files, None


def run_tune_frequency(cfg: dict, out: Path):
    plant = plant_from_record(cfg["plant"])
    spec = spec_from_record(cfg["spec"])
    res = tune_frequency(plant, spec)
    files = [_write_json(out / "result.json", res.to_record())]
    print(json.dumps({"objective": res.objective, "converged": res.converged,
                      "controller": res.controller.to_record()}))
    if not math.isfinite(res.objective):
        raise NumericalFailure("no finite objective found")
    return files, spec.seed


def run_tune_integral(cfg: dict, out: Path):
    plant = plant_from_record(cfg["plant"])
    scfg = _sim_config(cfg)
    bounds = {k: tuple(v) for k, v in cfg.get("bounds", {}).items()}
    res = tune_integral(plant, cfg["index"], scfg, cfg["M"], cfg["T"], bounds=bounds,
                        seed=cfg["seed"], budget=cfg["budget"])
    files = [_write_json(out / "result.json", res.to_record())]
    print(json.dumps({"objective": res.objective, "converged": res.converged,
                      "controller": res.controller.to_record()}))
    if not res.constraint_report["closed_loop_stable"]:
        raise NumericalFailure("every candidate diverged")
    return files, cfg["seed"]


def _example_trace(tag, trace, scfg, out, files, summary):
    files.append(write_trace_csv(trace, out / f"trace_{tag}.csv"))
    m = metrics(trace, scfg)
    files.append(write_metrics_json(m, out / f"metrics_{tag}.json"))
    summary[tag] = m.to_record()


def run_example(cfg: dict, out: Path):
    case = get_case(cfg["n"])
    files, summary = [], {"example": case.number, "title": case.title, "T": case.T, "notes": case.notes}
    grid = log_grid(1e-5, 1e3, 2000)
    if case.number == 1:
        ctrl = case.controllers["ldpid"]
        rows, mg, _ = bode_table(ctrl, case.plant, grid)
        files.append(write_bode_csv(rows, out / "bode_ldpid.csv"))
        summary["margins_ldpid"] = _margin_record(mg)
        for K, plant in case.plants.items():
            _example_trace(f"ldpid_K{K}", simulate(plant, ctrl, case.scenario), case.scenario, out, files, summary)
    elif case.number == 2:
        rows, mg, _ = bode_table(case.controllers["pid"], case.plant, grid)
        files.append(write_bode_csv(rows, out / "bode_pid.csv"))
        summary["margins_pid"] = _margin_record(mg)
        for tag in ("ldpid", "tustin_pid"):
            _example_trace(tag, simulate(case.plant, case.controllers[tag], case.scenario),
                           case.scenario, out, files, summary)
    elif case.number == 3:
        _example_trace("ldpd", simulate(case.plant, case.controllers["ldpd"], case.scenario),
                       case.scenario, out, files, summary)
    elif case.number == 4:
        _example_trace("ldpid", simulate(case.plant, case.controllers["ldpid"], case.scenario),
                       case.scenario, out, files, summary)
        _example_trace("amigo", simulate_2dof_amigo(case.plant, case.controllers["amigo"], case.scenario),
                       case.scenario, out, files, summary)
    elif case.number == 5:
        for tag in ("pid", "ldpid"):
            rows, mg, _ = bode_table(case.controllers[tag], case.plant, log_grid(1e-3, 1e2, 2000))
            files.append(write_bode_csv(rows, out / f"bode_{tag}.csv"))
            summary[f"margins_{tag}"] = _margin_record(mg)
    files.append(_write_json(out / "summary.json", summary))
    print(json.dumps(summary, default=str, indent=1))
    return files, None


RUNNERS = {
    "coeffs": run_coeffs,
    "bode": run_bode,
    "simulate": run_simulate,
    "tune-frequency": run_tune_frequency,
    "tune-integral": run_tune_integral,
    "example": run_example,
}


# -- argument handling --------------------------------------------------------

def _resolve(args) -> dict:
    """Turn parsed arguments into a self-contained config (no file paths)."""
    cmd = args.command
    if cmd == "coeffs":
        return {"order": args.order, "M": args.M}
    if cmd == "example":
        return {"n": args.n}
    cfg = {"plant": _read_record(args.plant, "plant")}
    if cmd in ("bode", "simulate"):
        cfg["controller"] = _read_record(args.controller, "controller")
    if cmd == "bode":
        cfg.update(lo=args.lo, hi=args.hi, points=args.points)
    if cmd in ("simulate", "tune-integral"):
        T = args.T
        if T is None and cmd == "simulate":
            T = cfg["controller"].get("T")
        if T is None:
            raise ConfigError("--T is required")
        cfg.update(T=float(T), duration=args.duration, substeps=args.substeps, reference=args.reference,
                   disturbance=args.disturbance, disturbance_time=args.disturbance_time)
    if cmd == "tune-frequency":
        spec = _read_record(args.spec, "spec")
        for key in ("seed", "budget", "T", "M"):
            val = getattr(args, key)
            if val is not None:
                spec[key] = val
        cfg["spec"] = spec
    if cmd == "tune-integral":
        if args.M is None:
            raise ConfigError("--M is required")
        cfg.update(index=args.index, M=args.M, seed=args.seed or 0, budget=args.budget or 1000)
        if args.spec:
            spec = _read_record(args.spec, "bounds")
            cfg["bounds"] = {k[: -len("_bounds")]: v for k, v in spec.items() if k.endswith("_bounds")}
    return cfg


def execute(command: str, cfg: dict, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    files, seed = RUNNERS[command](cfg, out)
    files.append(_write_manifest(out, command, cfg, files, seed))
    return files


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ldpid", description="Long-memory discrete PID workbench")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def with_out(sp):
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        return sp

    c = with_out(sub.add_parser("coeffs", help="dump f_k(order), k = 0..M"))
    c.add_argument("--order", type=float, required=True)
    c.add_argument("--M", type=int, required=True)

    b = with_out(sub.add_parser("bode", help="loop, S and T frequency data"))
    b.add_argument("--plant", required=True)
    b.add_argument("--controller", required=True)
    b.add_argument("--lo", type=float, default=1e-5)
    b.add_argument("--hi", type=float, default=1e3)
    b.add_argument("--points", type=int, default=2000)

    def sim_args(sp):
        sp.add_argument("--T", type=float)
        sp.add_argument("--duration", type=float, default=100.0)
        sp.add_argument("--substeps", type=int, default=10)
        sp.add_argument("--reference", type=float, default=1.0)
        sp.add_argument("--disturbance", type=float, default=0.0)
        sp.add_argument("--disturbance-time", type=float, default=0.0)

    s = with_out(sub.add_parser("simulate", help="closed-loop step response"))
    s.add_argument("--plant", required=True)
    s.add_argument("--controller", required=True)
    sim_args(s)

    tf = with_out(sub.add_parser("tune-frequency", help="frequency-domain constrained tuning"))
    tf.add_argument("--plant", required=True)
    tf.add_argument("--spec", required=True)
    tf.add_argument("--seed", type=int)
    tf.add_argument("--budget", type=int)
    tf.add_argument("--T", type=float)
    tf.add_argument("--M", type=int)

    ti = with_out(sub.add_parser("tune-integral", help="IAE/ISE minimization"))
    ti.add_argument("--plant", required=True)
    ti.add_argument("--spec", help="optional file with <name>_bounds entries")
    ti.add_argument("--index", choices=("IAE", "ISE"), default="IAE")
    ti.add_argument("--M", type=int)
    ti.add_argument("--seed", type=int)
    ti.add_argument("--budget", type=int)
    sim_args(ti)

    e = with_out(sub.add_parser("example", help="reproduce a benchmark example"))
    e.add_argument("n", type=int, choices=CASES)

    r = with_out(sub.add_parser("replay", help="rerun a manifest"))
    r.add_argument("manifest", type=Path)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            try:
                man = json.loads(args.manifest.read_text())
                command, cfg = man["command"], man["config"]
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"unreadable manifest: {exc}") from None
            if command not in RUNNERS:
                raise ConfigError(f"unknown command {command!r} in manifest")
        else:
            command, cfg = args.command, _resolve(args)
        execute(command, cfg, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Flat ``key = value`` config files for plants, controllers and tuning specs.

One entry per line or separated by ``;``; ``#`` starts a comment. Values are
numbers, bracketed lists ``[a, b, ...]`` or bare words.
"""
from __future__ import annotations

import re
from pathlib import Path

from .controller import DiscreteController, LdpidController, tustin_pid
from .lti import ContinuousFopid, ContinuousPlant
from .tuning import PARAM_NAMES, TuningSpec

__all__ = [
    "parse_kv",
    "format_kv",
    "load_kv",
    "plant_from_record",
    "controller_from_record",
    "spec_from_record",
    "load_plant",
    "load_controller",
    "load_spec",
]

_ENTRY = re.compile(r"^([A-Za-z_][\w.]*)\s*[=:]\s*(.*)$")


def _value(raw: str):
    raw = raw.strip()
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ValueError(f"unterminated list {raw!r}")
        body = raw[1:-1].replace(",", " ").split()
        return [float(v) for v in body]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        for part in line.split(";"):
            part = part.strip()
            if not part:
                continue
            m = _ENTRY.match(part)
            if not m:
                raise ValueError(f"line {lineno}: expected key = value, got {part!r}")
            out[m.group(1)] = _value(m.group(2))
    return out


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_kv(rec: dict) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in rec.items())


def load_kv(path) -> dict:
    return parse_kv(Path(path).read_text())


def plant_from_record(rec: dict) -> ContinuousPlant:
    try:
        num, den = rec["num"], rec["den"]
    except KeyError as exc:
        raise ValueError(f"plant config missing {exc.args[0]!r}") from None
    num = num if isinstance(num, list) else [num]
    den = den if isinstance(den, list) else [den]
    return ContinuousPlant(tuple(num), tuple(den), float(rec.get("delay", 0.0)))


def controller_from_record(rec: dict):
    """Build a controller from its record; ``type`` picks the family.

    ``ldpid`` (default): Kp, Kd, Ki, mu, lambda, M, T. ``fopid``: continuous
    kp, ki, kd, lambda, mu. ``tustin_pid``: kp, ki, kd, omega_c, T.
    ``discrete``: b, a, T.
    """
    kind = str(rec.get("type", "ldpid")).lower()
    if kind == "ldpid":
        missing = {"Kp", "M", "T"} - rec.keys()
        if missing:
            raise ValueError(f"ldpid config missing {sorted(missing)}")
        return LdpidController.from_record(rec)
    if kind == "fopid":
        return ContinuousFopid(kp=float(rec.get("kp", 0.0)), ki=float(rec.get("ki", 0.0)),
                               kd=float(rec.get("kd", 0.0)), lam=float(rec.get("lambda", 1.0)),
                               mu=float(rec.get("mu", 1.0)))
    if kind == "tustin_pid":
        return tustin_pid(float(rec.get("kp", 0.0)), float(rec.get("ki", 0.0)), float(rec.get("kd", 0.0)),
                          float(rec["omega_c"]), float(rec["T"]))
    if kind == "discrete":
        return DiscreteController(tuple(rec["b"]), tuple(rec["a"]), float(rec["T"]))
    raise ValueError(f"unknown controller type {kind!r}")


def spec_from_record(rec: dict) -> TuningSpec:
    bounds = {}
    for name in PARAM_NAMES:
        key = f"{name}_bounds"
        if key in rec:
            lo, hi = rec[key]
            bounds[name] = (lo, hi)
    required = ("omega_c", "phi_m", "A", "omega_t", "B", "omega_s", "M", "T")
    missing = [k for k in required if k not in rec]
    if missing:
        raise ValueError(f"tuning spec missing {missing}")
    extra = {}
    for key in ("seed", "budget", "grid_points"):
        if key in rec:
            extra[key] = int(rec[key])
    return TuningSpec(omega_c=float(rec["omega_c"]), phi_m=float(rec["phi_m"]), A=float(rec["A"]),
                      omega_t=float(rec["omega_t"]), B=float(rec["B"]), omega_s=float(rec["omega_s"]),
                      M=int(rec["M"]), T=float(rec["T"]), bounds=bounds, **extra)


def spec_to_record(spec: TuningSpec) -> dict:
    rec = spec.to_record()
    bounds = rec.pop("bounds")
    rec.update({f"{k}_bounds": v for k, v in bounds.items()})
    return rec


def load_plant(path) -> ContinuousPlant:
    return plant_from_record(load_kv(path))


def load_controller(path):
    return controller_from_record(load_kv(path))


def load_spec(path) -> TuningSpec:
    return spec_from_record(load_kv(path))

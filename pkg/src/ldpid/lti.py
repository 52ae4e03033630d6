"""Continuous plants with dead time, FOPID controllers and loop analysis."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "PoleHitError",
    "NoCrossoverError",
    "GridCoverageError",
    "ContinuousPlant",
    "ContinuousFopid",
    "FrequencyResponse",
    "Margins",
    "SensitivityReport",
    "plant_freq",
    "fopid_freq",
    "log_grid",
    "loop_response",
    "margins",
    "sensitivity_bounds_check",
    "routh_stable",
    "parse_plant",
    "format_plant",
]

DEFAULT_RANGE = (1e-5, 1e3)
DEFAULT_POINTS = 2000


class PoleHitError(ZeroDivisionError):
    """Frequency lands exactly on an imaginary-axis pole."""


class NoCrossoverError(ValueError):
    pass


class GridCoverageError(ValueError):
    pass


def _trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nz = np.flatnonzero(c)
    return c[nz[0]:] if nz.size else np.zeros(1)


@dataclass(frozen=True)
class ContinuousPlant:
    """Rational transfer function ``num(s)/den(s) * exp(-delay*s)``.

    Coefficients are in descending powers of ``s``.
    """

    num: tuple
    den: tuple
    delay: float = 0.0

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if not den.any():
            raise ValueError("denominator is identically zero")
        if num.size > den.size:
            raise ValueError("plant must be proper: deg(num) <= deg(den)")
        if not self.delay >= 0:
            raise ValueError(f"delay must be non-negative, got {self.delay!r}")
        object.__setattr__(self, "num", tuple(num.tolist()))
        object.__setattr__(self, "den", tuple(den.tolist()))
        object.__setattr__(self, "delay", float(self.delay))

    @property
    def order(self) -> int:
        return len(self.den) - 1

    @property
    def dc_gain(self) -> float:
        if self.den[-1] == 0:
            return math.inf
        return self.num[-1] / self.den[-1]

    def poles(self) -> np.ndarray:
        return np.roots(self.den)

    def freq(self, omega):
        return plant_freq(self, omega)


@dataclass(frozen=True)
class ContinuousFopid:
    """``kp + ki s**-lambda + kd s**mu``; ``lam = mu = 1`` is classical PID."""

    kp: float
    ki: float = 0.0
    kd: float = 0.0
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.lam < 0 or self.mu < 0:
            raise ValueError("fractional orders must be non-negative")

    def freq(self, omega):
        return fopid_freq(self, omega)


def plant_freq(plant: ContinuousPlant, omega):
    """``P(j omega)`` including the dead-time factor."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("frequencies must be positive")
    s = 1j * omega
    den = np.polyval(plant.den, s)
    if np.any(den == 0):
        raise PoleHitError(f"omega hits an imaginary-axis pole of {plant.den}")
    out = np.polyval(plant.num, s) / den
    if plant.delay:
        out = out * np.exp(-s * plant.delay)
    return out[()] if out.ndim == 0 else out


def fopid_freq(c: ContinuousFopid, omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("frequencies must be positive")
    s = 1j * omega
    # principal branch: (j w)**a = w**a * exp(j a pi / 2)
    out = c.kp + c.ki * s ** (-c.lam) + c.kd * s ** c.mu
    return out[()] if out.ndim == 0 else out


def log_grid(lo: float = DEFAULT_RANGE[0], hi: float = DEFAULT_RANGE[1], points: int = DEFAULT_POINTS) -> np.ndarray:
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    return np.logspace(math.log10(lo), math.log10(hi), int(points))


@dataclass
class FrequencyResponse:
    """Sampled loop response; ``func`` (optional) lets margins refine roots."""

    omegas: np.ndarray
    values: np.ndarray
    func: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.omegas = np.asarray(self.omegas, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.omegas.shape != self.values.shape or self.omegas.ndim != 1:
            raise ValueError("omegas and values must be 1-D arrays of equal length")
        if np.any(self.omegas <= 0) or np.any(np.diff(self.omegas) <= 0):
            raise ValueError("omegas must be positive and strictly increasing")

    @classmethod
    def from_function(cls, func, omegas=None) -> "FrequencyResponse":
        omegas = log_grid() if omegas is None else np.asarray(omegas, dtype=float)
        return cls(omegas, func(omegas), func)

    @property
    def magnitude_db(self) -> np.ndarray:
        return 20 * np.log10(np.abs(self.values))

    @property
    def phase_deg(self) -> np.ndarray:
        """Phase unwrapped along the grid, starting on the principal branch."""
        return np.degrees(np.unwrap(np.angle(self.values)))

    def sensitivity(self) -> np.ndarray:
        return 1.0 / (1.0 + self.values)

    def complementary(self) -> np.ndarray:
        return self.values / (1.0 + self.values)

    def __mul__(self, other: "FrequencyResponse") -> "FrequencyResponse":
        if not np.array_equal(self.omegas, other.omegas):
            raise ValueError("grids differ")
        func = None
        if self.func is not None and other.func is not None:
            f, g = self.func, other.func
            func = lambda w: f(w) * g(w)  # noqa: E731
        return FrequencyResponse(self.omegas, self.values * other.values, func)


def loop_response(controller, plant: ContinuousPlant, omegas=None) -> FrequencyResponse:
    """Open loop ``C * P`` for any controller exposing ``freq(omega)``."""

    def func(w):
        return controller.freq(w) * plant_freq(plant, w)

    return FrequencyResponse.from_function(func, omegas)


@dataclass(frozen=True)
class Margins:
    omega_c: float
    phase_margin: float
    multiple: bool = False
    crossings: tuple = ()


def _refine_crossing(func, lo: float, hi: float, iters: int = 60) -> float:
    """Bisection in log-frequency on ``|L| - 1`` (sign change assumed)."""
    f_lo = abs(func(np.array([lo]))[0]) - 1.0
    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        m = 0.5 * (a + b)
        f_m = abs(func(np.array([math.exp(m)]))[0]) - 1.0
        if (f_m > 0) == (f_lo > 0):
            a, f_lo = m, f_m
        else:
            b = m
        if b - a < 1e-15:
            break
    return math.exp(0.5 * (a + b))


def margins(resp: FrequencyResponse) -> Margins:
    """Gain crossover and phase margin (degrees) of an open-loop response.

    The lowest-frequency 0 dB crossing is used; ``multiple`` flags further
    crossings. Phase is unwrapped along the grid and then evaluated at the
    refined crossover, so the margin reads ``180 + arg L`` on that branch.
    """
    mag = np.abs(resp.values)
    above = mag >= 1.0
    idx = np.flatnonzero(above[:-1] != above[1:])
    if idx.size == 0:
        raise NoCrossoverError("no 0 dB crossing inside the frequency grid")
    i = int(idx[0])
    w_lo, w_hi = resp.omegas[i], resp.omegas[i + 1]
    if resp.func is not None:
        wc = _refine_crossing(resp.func, w_lo, w_hi)
        val = complex(resp.func(np.array([wc]))[0])
    else:
        # linear interpolation of log|L| against log(omega)
        m_lo, m_hi = math.log(mag[i]), math.log(mag[i + 1])
        t = m_lo / (m_lo - m_hi)
        wc = math.exp(math.log(w_lo) + t * (math.log(w_hi) - math.log(w_lo)))
        val = resp.values[i] + t * (resp.values[i + 1] - resp.values[i])
    phase = np.unwrap(np.angle(resp.values))
    ph = math.atan2(val.imag, val.real)
    # carry the grid's branch over to the refined point
    ph += 2 * math.pi * round((phase[i] - ph) / (2 * math.pi))
    pm = 180.0 + math.degrees(ph)
    crossings = tuple(float(resp.omegas[j]) for j in idx)
    return Margins(omega_c=float(wc), phase_margin=float(pm), multiple=idx.size > 1, crossings=crossings)


@dataclass(frozen=True)
class SensitivityReport:
    noise_ok: bool
    dist_ok: bool
    worst_T_dB: float
    worst_S_dB: float


def _db(x):
    with np.errstate(divide="ignore"):
        return 20 * np.log10(x)


def sensitivity_bounds_check(resp: FrequencyResponse, A: float, omega_t: float, B: float, omega_s: float) -> SensitivityReport:
    """Check ``|T| <= A`` dB for ``w >= omega_t`` and ``|S| <= B`` dB for ``w <= omega_s``."""
    w = resp.omegas
    if w[0] > omega_s / 10 * (1 + 1e-9) or w[-1] < omega_t * 10 * (1 - 1e-9):
        raise GridCoverageError(
            f"grid [{w[0]:g}, {w[-1]:g}] must cover [{omega_s / 10:g}, {10 * omega_t:g}]"
        )
    T_db = _db(np.abs(resp.complementary()[w >= omega_t]))
    S_db = _db(np.abs(resp.sensitivity()[w <= omega_s]))
    worst_T = float(T_db.max()) if T_db.size else -math.inf
    worst_S = float(S_db.max()) if S_db.size else -math.inf
    return SensitivityReport(worst_T <= A, worst_S <= B, worst_T, worst_S)


def routh_stable(den) -> bool:
    """True iff every root of ``den`` lies in the open left half-plane.

    Uses companion-matrix eigenvalues (``numpy.roots``); a root on the
    imaginary axis counts as unstable.
    """
    den = np.atleast_1d(np.asarray(den, dtype=float))
    if den.size < 2:
        raise ValueError("polynomial degree must be at least 1")
    if den[0] == 0:
        raise ValueError("leading coefficient is zero")
    roots = np.roots(den)
    scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
    return bool(np.all(roots.real < -1e-12 * scale))


_PLANT_FIELD = re.compile(r"^\s*(num|den|delay)\s*=\s*(.+?)\s*$")


def parse_plant(text: str) -> ContinuousPlant:
    """Parse ``"num=[...]; den=[...]; delay=L"`` (``;`` or newlines separate fields)."""
    fields = {}
    for part in re.split(r"[;\n]", text):
        part = part.split("#", 1)[0]
        if not part.strip():
            continue
        m = _PLANT_FIELD.match(part)
        if not m:
            raise ValueError(f"cannot parse plant field {part.strip()!r}")
        key, raw = m.groups()
        if key == "delay":
            fields[key] = float(raw)
        else:
            raw = raw.strip()
            if not (raw.startswith("[") and raw.endswith("]")):
                raise ValueError(f"{key} must be a bracketed list, got {raw!r}")
            fields[key] = [float(v) for v in raw[1:-1].replace(",", " ").split()]
    missing = {"num", "den"} - fields.keys()
    if missing:
        raise ValueError(f"plant spec missing {sorted(missing)}")
    return ContinuousPlant(tuple(fields["num"]), tuple(fields["den"]), fields.get("delay", 0.0))


def format_plant(plant: ContinuousPlant) -> str:
    def fmt(c):
        return "[" + ", ".join(repr(float(v)) for v in c) + "]"

    return f"num={fmt(plant.num)}; den={fmt(plant.den)}; delay={plant.delay!r}"


"""Hybrid closed-loop simulation: sampled controller, ZOH, continuous plant.

The rational part of the plant is discretized exactly (zero-order hold) on a
fine grid ``h = T / substeps``; the dead time is a transport buffer of
``round(delay / h)`` fine samples. The controller samples ``e = r - y`` every
``T`` and its output is held until the next sample. A load disturbance is
added at the plant input, ahead of the dead time.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .lti import ContinuousPlant

__all__ = [
    "StepInput",
    "SimConfig",
    "StepTrace",
    "StepMetrics",
    "Amigo2Dof",
    "discretize_plant",
    "simulate",
    "simulate_2dof_amigo",
    "metrics",
    "write_trace_csv",
    "write_metrics_json",
]

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class StepInput:
    amplitude: float = 0.0
    time: float = 0.0

    def at(self, t):
        return np.where(np.asarray(t) >= self.time, self.amplitude, 0.0)


@dataclass(frozen=True)
class SimConfig:
    T: float
    duration: float
    substeps: int = 10
    reference: StepInput = field(default_factory=lambda: StepInput(1.0, 0.0))
    disturbance: StepInput = field(default_factory=StepInput)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("substeps must be an integer >= 1")
        object.__setattr__(self, "substeps", int(self.substeps))

    @property
    def h(self) -> float:
        return self.T / self.substeps

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.h)) + 1

    def to_record(self) -> dict:
        return asdict(self)


@dataclass
class StepTrace:
    times: np.ndarray
    r: np.ndarray
    y: np.ndarray
    u: np.ndarray
    e: np.ndarray
    diverged: bool = False

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class StepMetrics:
    iae: float
    ise: float
    overshoot: float
    rise_time: float
    settling_time: float
    steady_state_error: float
    diverged: bool = False

    def to_record(self) -> dict:
        return asdict(self)


def discretize_plant(plant: ContinuousPlant, h: float):
    """Exact ZOH state-space matrices ``(Ad, Bd, C, D)`` at step ``h``."""
    num = np.array(plant.num, dtype=float)
    den = np.array(plant.den, dtype=float)
    if len(den) == 1:
        return np.zeros((0, 0)), np.zeros(0), np.zeros(0), float(num[-1] / den[0])
    A, B, C, D = signal.tf2ss(num, den)
    Ad, Bd, Cd, Dd, _ = signal.cont2discrete((A, B, C, D), h, method="zoh")
    return Ad, Bd[:, 0].copy(), Cd[0].copy(), float(Dd[0, 0])


def _delay_samples(delay: float, h: float) -> int:
    n = delay / h
    nd = int(round(n))
    if abs(n - nd) > 1e-9 * max(1.0, n):
        warnings.warn(f"dead time {delay} s is not a multiple of h={h}; rounded to {nd * h} s", stacklevel=3)
    return nd


def _run(plant: ContinuousPlant, cfg: SimConfig, control, every: int) -> StepTrace:
    """Shared fine-grid loop; ``control(i, r_i, y_i)`` is called every ``every`` steps."""
    h = cfg.h
    n = cfg.n_samples
    Ad, Bd, Cp, Dp = discretize_plant(plant, h)
    nd = _delay_samples(plant.delay, h)
    t = np.arange(n) * h
    r = cfg.reference.at(t).astype(float)
    d = cfg.disturbance.at(t).astype(float)
    y = np.zeros(n)
    u = np.zeros(n)
    w = np.zeros(n)  # plant input ahead of the dead time
    scale = max(abs(cfg.reference.amplitude), abs(cfg.disturbance.amplitude))
    limit = DIVERGENCE_FACTOR * scale if scale > 0 else math.inf

    x = np.zeros(Ad.shape[0])
    stateful = Ad.shape[0] > 0
    v_prev = 0.0
    u_hold = 0.0
    diverged = False
    last = n
    for i in range(n):
        if nd > 0:
            v = w[i - nd] if i >= nd else 0.0
            yi = (Cp @ x if stateful else 0.0) + Dp * v
        else:
            # no dead time: a feedthrough term would close an algebraic loop,
            # so read the output just before this instant's input update
            yi = (Cp @ x if stateful else 0.0) + Dp * v_prev
        y[i] = yi
        if i % every == 0:
            u_hold = control(i, r[i], yi)
        u[i] = u_hold
        w[i] = u_hold + d[i]
        if nd == 0:
            v = w[i]
        if stateful:
            x = Ad @ x + Bd * v
        v_prev = v
        if not abs(yi) <= limit:
            diverged = True
            last = i + 1
            break
    sl = slice(0, last)
    return StepTrace(t[sl], r[sl], y[sl], u[sl], (r - y)[sl], diverged)


def simulate(plant: ContinuousPlant, controller, cfg: SimConfig) -> StepTrace:
    """Closed-loop run with a sampled controller.

    ``controller`` must provide ``initial_state()`` and ``step(state, e)``;
    :class:`~ldpid.controller.LdpidController` and
    :class:`~ldpid.controller.DiscreteController` both do. Runs stop early
    and are flagged ``diverged`` once ``|y|`` exceeds ``1e6`` times the input
    amplitude.
    """
    ctrl_T = getattr(controller, "T", cfg.T)
    if not math.isclose(ctrl_T, cfg.T, rel_tol=1e-12):
        raise ValueError(f"controller T={ctrl_T} differs from simulation T={cfg.T}")
    state = controller.initial_state()
    step = controller.step

    def control(i, ri, yi):
        return step(state, ri - yi)

    return _run(plant, cfg, control, cfg.substeps)


@dataclass(frozen=True)
class Amigo2Dof:
    """Two-degree-of-freedom PID acting on a filtered measurement.

    ``u = k (r - yf) + ki * integral(r - yf) - kd * d(yf)/dt`` with
    ``yf = y / (1 + Tf s)**2``.
    """

    k: float
    ki: float
    kd: float
    Tf: float

    def state_space(self):
        """Continuous ``(A, B, C, D)``; inputs ``[r, y]``, states ``[yf, yf', z]``."""
        Tf2 = self.Tf**2
        A = np.array([[0.0, 1.0, 0.0],
                      [-1.0 / Tf2, -2.0 * self.Tf / Tf2, 0.0],
                      [-1.0, 0.0, 0.0]])
        B = np.array([[0.0, 0.0],
                      [0.0, 1.0 / Tf2],
                      [1.0, 0.0]])
        C = np.array([[-self.k, -self.kd, self.ki]])
        D = np.array([[self.k, 0.0]])
        return A, B, C, D


def simulate_2dof_amigo(plant: ContinuousPlant, params: Amigo2Dof, cfg: SimConfig) -> StepTrace:
    """Closed loop with the continuous 2-DOF law, ZOH-integrated on the fine grid."""
    A, B, C, D = params.state_space()
    Ad, Bd, Cd, Dd, _ = signal.cont2discrete((A, B, C, D), cfg.h, method="zoh")
    xc = np.zeros(3)
    c_row, d_row = Cd[0], Dd[0]

    def control(i, ri, yi):
        nonlocal xc
        inp = np.array([ri, yi])
        ui = float(c_row @ xc + d_row @ inp)
        xc = Ad @ xc + Bd @ inp
        return ui

    return _run(plant, cfg, control, 1)


def _trapz(values, dx):
    if values.size < 2:
        return 0.0
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def metrics(trace: StepTrace, cfg: SimConfig) -> StepMetrics:
    """Integral indices and step-response figures of a reference-step run.

    IAE/ISE use the trapezoid rule on the fine grid over ``[0, duration]``.
    Overshoot is the peak excursion past the reference in percent, rise time
    spans 10 % to 90 % of the step, settling time is the last exit from a
    +/-2 % band; all times are measured from the reference step. When a
    nonzero disturbance steps in after the reference, the step figures only
    look at the window before it.
    """
    if trace.diverged:
        nan = math.nan
        return StepMetrics(math.inf, math.inf, nan, nan, nan, nan, True)
    h = cfg.h
    iae = _trapz(np.abs(trace.e), h)
    ise = _trapz(trace.e**2, h)
    ref = cfg.reference
    amp = ref.amplitude
    after = trace.times >= ref.time
    dist = cfg.disturbance
    if dist.amplitude != 0 and dist.time > ref.time:
        after &= trace.times < dist.time
    t_rel = trace.times[after] - ref.time
    y_rel = trace.y[after]
    sse = float(trace.r[-1] - trace.y[-1])
    if amp == 0 or t_rel.size == 0:
        return StepMetrics(iae, ise, 0.0, math.nan, math.nan, sse, False)
    yn = y_rel / amp
    overshoot = max(0.0, float(yn.max()) - 1.0) * 100.0

    def first_cross(level):
        idx = np.flatnonzero(yn >= level)
        if idx.size == 0:
            return math.nan
        j = int(idx[0])
        if j == 0:
            return float(t_rel[0])
        # linear interpolation between samples
        y0, y1 = yn[j - 1], yn[j]
        return float(t_rel[j - 1] + (level - y0) / (y1 - y0) * (t_rel[j] - t_rel[j - 1]))

    rise = first_cross(0.9) - first_cross(0.1)
    outside = np.flatnonzero(np.abs(yn - 1.0) > 0.02)
    if outside.size == 0:
        settling = 0.0
    elif outside[-1] == yn.size - 1:
        settling = math.nan
    else:
        settling = float(t_rel[outside[-1] + 1])
    return StepMetrics(iae, ise, overshoot, rise, settling, sse, False)


def write_trace_csv(trace: StepTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "r", "e", "u", "y"])
        for row in zip(trace.times, trace.r, trace.e, trace.u, trace.y):
            writer.writerow([repr(float(v)) for v in row])
    return path


def write_metrics_json(m: StepMetrics, path) -> Path:
    path = Path(path)
    rec = {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in m.to_record().items()}
    path.write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    return path

"""Tuning of LDPID gains and orders for a fixed memory length ``M``.

Two objectives share one seeded, derivative-free optimizer:

* frequency-domain design: hit ``|L(j wc)| = 1`` while meeting the phase
  margin, flat-phase (iso-damping), noise and disturbance conditions through
  exterior penalties;
* integral-index design: minimize IAE or ISE of a simulated scenario, with
  divergent candidates priced at a large finite penalty.

The optimizer is a real-coded genetic algorithm. Its defaults (population
50, 10 % elitism, binary tournaments, BLX-0.5 crossover, Gaussian mutation
at 5 % of the range shrinking by 1 % per generation) are this package's
choices.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .controller import LdpidController
from .lti import ContinuousPlant, log_grid, plant_freq
from .sim import SimConfig, metrics, simulate

__all__ = [
    "PARAM_NAMES",
    "DEFAULT_BOUNDS",
    "GAOptions",
    "OptimizeResult",
    "optimizer",
    "PenaltyWeights",
    "TuningSpec",
    "TuningResult",
    "FrequencyObjective",
    "constraint_report",
    "tune_frequency",
    "tune_integral",
]

PARAM_NAMES = ("Kp", "Kd", "Ki", "mu", "lambda")
DEFAULT_BOUNDS = {
    "Kp": (0.0, 10.0),
    "Kd": (0.0, 10.0),
    "Ki": (0.0, 1.0),
    "mu": (0.0, 2.0),
    "lambda": (-0.5, 2.0),
}
DIVERGENCE_PENALTY = 1e6


# ---------------------------------------------------------------------------
# optimizer


@dataclass(frozen=True)
class GAOptions:
    population: int = 50
    elite_fraction: float = 0.1
    tournament: int = 2
    blend_alpha: float = 0.5
    mutation_scale: float = 0.05
    mutation_decay: float = 0.99
    patience: int = 100
    tol: float = 1e-12
    polish: bool = True


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    evaluations: int
    generations: int
    converged: bool
    history: list = field(default_factory=list)


def _as_bounds(bounds) -> np.ndarray:
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 2 or b.shape[1] != 2:
        raise ValueError("bounds must be a sequence of (low, high) pairs")
    if not np.all(np.isfinite(b)):
        raise ValueError("bounds must be finite")
    if np.any(b[:, 0] > b[:, 1]):
        raise ValueError("empty bound interval")
    return b


def optimizer(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[Sequence[float]],
    seed: int = 0,
    budget: int = 10_000,
    options: GAOptions = GAOptions(),
    initial: Optional[Sequence[Sequence[float]]] = None,
    map_fn: Callable = map,
) -> OptimizeResult:
    """Minimize ``objective`` over a box with a seeded genetic algorithm.

    The population search runs until ``budget`` evaluations are spent or the
    best value stalls for ``options.patience`` generations (``converged``).
    After a stall, and if ``options.polish`` is set, the remaining budget goes
    to a bounded Nelder-Mead descent from the incumbent. All random draws of
    a generation happen before any of its evaluations, so a larger budget
    replays the smaller run exactly and the best value is non-increasing in
    ``budget``.

    ``map_fn`` may be an executor's ``map`` for concurrent evaluation; results
    are consumed in candidate order so output does not depend on it.
    """
    b = _as_bounds(bounds)
    if budget < 1:
        raise ValueError("budget must be positive")
    lo, hi = b[:, 0], b[:, 1]
    span = hi - lo
    dim = lo.size
    rng = np.random.default_rng(seed)
    pop_size = max(2, int(options.population))
    n_elite = max(1, int(round(options.elite_fraction * pop_size)))

    def evaluate(X):
        return np.array(list(map_fn(objective, list(X))), dtype=float)

    pop = lo + rng.random((pop_size, dim)) * span
    if initial is not None:
        init = np.clip(np.atleast_2d(np.asarray(initial, dtype=float)), lo, hi)[:pop_size]
        pop[: init.shape[0]] = init
    n0 = min(pop_size, budget)
    pop = pop[:n0]
    fit = evaluate(pop)
    fit = np.where(np.isnan(fit), np.inf, fit)
    evals = n0

    best_i = int(np.argmin(fit))
    best_x, best_f = pop[best_i].copy(), float(fit[best_i])
    history = [best_f]
    sigma = options.mutation_scale * span
    stall = 0
    gen = 0
    converged = False
    while evals < budget:
        gen += 1
        order = np.argsort(fit, kind="stable")
        elite_idx = order[:n_elite]
        n_child = pop_size - n_elite

        def pick():
            cand = rng.integers(0, pop.shape[0], size=options.tournament)
            return cand[np.argmin(fit[cand])]

        parents = np.array([[pick(), pick()] for _ in range(n_child)])
        p1, p2 = pop[parents[:, 0]], pop[parents[:, 1]]
        a = options.blend_alpha
        u = rng.random((n_child, dim)) * (1 + 2 * a) - a
        children = p1 + u * (p2 - p1)
        children += rng.standard_normal((n_child, dim)) * sigma
        children = np.clip(children, lo, hi)
        sigma = sigma * options.mutation_decay

        k = min(n_child, budget - evals)
        child_fit = evaluate(children[:k])
        child_fit = np.where(np.isnan(child_fit), np.inf, child_fit)
        evals += k
        pop = np.vstack([pop[elite_idx], children[:k]])
        fit = np.concatenate([fit[elite_idx], child_fit])

        i = int(np.argmin(fit))
        if fit[i] < best_f - options.tol * max(1.0, abs(best_f)):
            best_x, best_f = pop[i].copy(), float(fit[i])
            stall = 0
        else:
            if fit[i] < best_f:
                best_x, best_f = pop[i].copy(), float(fit[i])
            stall += 1
        history.append(best_f)
        if stall >= options.patience:
            converged = True
            break
    if converged and options.polish and evals < budget:
        x, f, used = _polish(objective, best_x, best_f, b, budget - evals)
        evals += used
        if f < best_f:
            best_x, best_f = x, f
            history.append(best_f)
    return OptimizeResult(best_x, best_f, evals, gen, converged, history)


class _BudgetSpent(Exception):
    pass


def _polish(objective, x0, f0, bounds, budget):
    """Bounded Nelder-Mead from ``x0`` with a hard evaluation cap."""
    best = [np.array(x0, dtype=float), float(f0)]
    used = 0

    def counted(x):
        nonlocal used
        if used >= budget:
            raise _BudgetSpent
        used += 1
        x = np.clip(x, bounds[:, 0], bounds[:, 1])
        f = float(objective(x))
        if not math.isfinite(f):
            f = math.inf
        if f < best[1]:
            best[0], best[1] = x.copy(), f
        return f if math.isfinite(f) else 1e300

    span = bounds[:, 1] - bounds[:, 0]
    simplex = [np.array(x0, dtype=float)]
    for i in range(x0.size):
        v = np.array(x0, dtype=float)
        step = 0.05 * span[i] if span[i] > 0 else 0.0
        v[i] = v[i] - step if v[i] + step > bounds[i, 1] else v[i] + step
        simplex.append(v)
    try:
        optimize.minimize(counted, x0, method="Nelder-Mead", bounds=bounds,
                          options={"initial_simplex": np.array(simplex), "maxfev": budget,
                                   "xatol": 1e-12, "fatol": 1e-15})
    except _BudgetSpent:
        pass
    return best[0], best[1], used


# ---------------------------------------------------------------------------
# specifications and results


@dataclass(frozen=True)
class PenaltyWeights:
    """Exterior-penalty weights; equality terms are quadratic outside a dead band.

    ``phase`` is per rad**2 and ``inequality`` per dB of violation. ``flat``
    weighs the squared phase slope on a log-frequency axis,
    ``(omega_c * d(arg L)/d omega)**2`` (rad**2); at ``omega_c = 1`` this is the
    plain derivative, elsewhere it keeps the weight independent of the
    frequency scale. ``flat_tol`` is in the same (rad) units.
    """

    phase: float = 10.0
    flat: float = 1e4
    inequality: float = 1.0
    phase_tol_deg: float = 0.5
    flat_tol: float = 0.0


@dataclass(frozen=True)
class TuningSpec:
    omega_c: float
    phi_m: float
    A: float
    omega_t: float
    B: float
    omega_s: float
    M: int
    T: float
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    seed: int = 0
    budget: int = 20_000
    grid_points: int = 2000

    def __post_init__(self):
        if not self.omega_s < self.omega_c < self.omega_t:
            raise ValueError("need omega_s < omega_c < omega_t")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if self.M < 0 or self.T <= 0:
            raise ValueError("need M >= 0 and T > 0")
        merged = dict(DEFAULT_BOUNDS)
        merged.update({k: tuple(map(float, v)) for k, v in self.bounds.items()})
        unknown = set(merged) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown bound names {sorted(unknown)}")
        _as_bounds([merged[k] for k in PARAM_NAMES])
        object.__setattr__(self, "bounds", merged)

    def bounds_array(self) -> np.ndarray:
        return np.array([self.bounds[k] for k in PARAM_NAMES])

    def grid(self) -> np.ndarray:
        return log_grid(min(1e-5, self.omega_s / 10), max(1e3, 10 * self.omega_t), self.grid_points)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["bounds"] = {k: list(v) for k, v in self.bounds.items()}
        return rec


@dataclass
class TuningResult:
    controller: LdpidController
    objective: float
    constraint_report: dict
    evaluations: int
    converged: bool

    def to_record(self) -> dict:
        return {
            "controller": self.controller.to_record(),
            "objective": self.objective,
            "constraint_report": self.constraint_report,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }


def _controller(x, M, T) -> LdpidController:
    Kp, Kd, Ki, mu, lam = (float(v) for v in x)
    return LdpidController(Kp=Kp, Kd=Kd, Ki=Ki, mu=mu, lam=lam, M=M, T=T)


# ---------------------------------------------------------------------------
# frequency-domain method


class FrequencyObjective:
    """Penalized crossover residual for one plant/spec pair.

    Holds the plant response on the check grid so each candidate only
    evaluates the controller.
    """

    FD_STEP = 1e-3

    def __init__(self, plant: ContinuousPlant, spec: TuningSpec, weights: PenaltyWeights = PenaltyWeights()):
        self.plant = plant
        self.spec = spec
        self.weights = weights
        w = spec.grid()
        self.high = w >= spec.omega_t
        self.low = w <= spec.omega_s
        self.grid = w
        self.P_grid = plant_freq(plant, w)
        wc = spec.omega_c
        self.w_point = np.array([wc, wc * (1 - self.FD_STEP), wc * (1 + self.FD_STEP)])
        self.P_point = plant_freq(plant, self.w_point)

    def residuals(self, c: LdpidController) -> dict:
        spec = self.spec
        L3 = c.freq(self.w_point) * self.P_point
        Lc = L3[0]
        target = math.radians(spec.phi_m) - math.pi
        phase_err = math.remainder(math.atan2(Lc.imag, Lc.real) - target, 2 * math.pi)
        dphi = math.atan2((L3[2] / L3[1]).imag, (L3[2] / L3[1]).real)
        slope = dphi / (self.w_point[2] - self.w_point[1])
        L = c.freq(self.grid) * self.P_grid
        with np.errstate(divide="ignore"):
            t_db = 20 * np.log10(np.abs(L[self.high] / (1 + L[self.high])))
            s_db = 20 * np.log10(np.abs(1 / (1 + L[self.low])))
        return {
            "gain_crossover": abs(Lc) - 1.0,
            "phase_margin_rad": phase_err,
            "flat_phase": slope,
            "noise_attenuation_dB": float(t_db.max()) - spec.A,
            "disturbance_rejection_dB": float(s_db.max()) - spec.B,
        }

    def penalized(self, res: dict) -> float:
        w = self.weights
        ph = max(0.0, abs(res["phase_margin_rad"]) - math.radians(w.phase_tol_deg))
        fl = max(0.0, abs(res["flat_phase"]) * self.spec.omega_c - w.flat_tol)
        ineq = max(0.0, res["noise_attenuation_dB"]) + max(0.0, res["disturbance_rejection_dB"])
        return abs(res["gain_crossover"]) + w.phase * ph**2 + w.flat * fl**2 + w.inequality * ineq

    def __call__(self, x) -> float:
        try:
            res = self.residuals(_controller(x, self.spec.M, self.spec.T))
        except (ZeroDivisionError, ValueError, FloatingPointError):
            return math.inf
        val = self.penalized(res)
        return val if math.isfinite(val) else math.inf


def constraint_report(plant: ContinuousPlant, spec: TuningSpec, controller: LdpidController,
                      weights: PenaltyWeights = PenaltyWeights()) -> dict:
    """Signed residuals of all five design conditions (<= 0 or ~0 means met)."""
    return FrequencyObjective(plant, spec, weights).residuals(controller)


def tune_frequency(plant: ContinuousPlant, spec: TuningSpec, weights: PenaltyWeights = PenaltyWeights(),
                   options: GAOptions = GAOptions(), map_fn: Callable = map) -> TuningResult:
    obj = FrequencyObjective(plant, spec, weights)
    opt = optimizer(obj, spec.bounds_array(), seed=spec.seed, budget=spec.budget, options=options, map_fn=map_fn)
    ctrl = _controller(opt.x, spec.M, spec.T)
    report = obj.residuals(ctrl)
    crossing = abs(report["gain_crossover"]) < 1.0
    return TuningResult(ctrl, float(obj.penalized(report)), report, opt.evaluations,
                        bool(opt.converged and crossing))


# ---------------------------------------------------------------------------
# integral-index method


class IntegralObjective:
    def __init__(self, plant: ContinuousPlant, index: str, scenario: SimConfig, M: int, T: float):
        index = index.upper()
        if index not in ("IAE", "ISE"):
            raise ValueError(f"index must be IAE or ISE, got {index!r}")
        if not math.isclose(scenario.T, T):
            raise ValueError("scenario sampling period differs from T")
        self.plant, self.index, self.scenario, self.M, self.T = plant, index, scenario, M, T

    def evaluate(self, c: LdpidController):
        m = metrics(simulate(self.plant, c, self.scenario), self.scenario)
        if m.diverged:
            return DIVERGENCE_PENALTY, m
        val = m.iae if self.index == "IAE" else m.ise
        return (val if math.isfinite(val) and val < DIVERGENCE_PENALTY else DIVERGENCE_PENALTY), m

    def __call__(self, x) -> float:
        return self.evaluate(_controller(x, self.M, self.T))[0]


def tune_integral(plant: ContinuousPlant, index: str, scenario: SimConfig, M: int, T: float,
                  bounds: Optional[dict] = None, seed: int = 0, budget: int = 1000,
                  options: GAOptions = GAOptions(), map_fn: Callable = map) -> TuningResult:
    """Minimize a simulated integral index; divergence is penalized, not fatal."""
    merged = dict(DEFAULT_BOUNDS)
    merged.update(bounds or {})
    b = _as_bounds([merged[k] for k in PARAM_NAMES])
    obj = IntegralObjective(plant, index, scenario, M, T)
    opt = optimizer(obj, b, seed=seed, budget=budget, options=options, map_fn=map_fn)
    ctrl = _controller(opt.x, M, T)
    value, m = obj.evaluate(ctrl)
    stable = value < DIVERGENCE_PENALTY
    report = {"closed_loop_stable": stable, "iae": m.iae, "ise": m.ise, "diverged": m.diverged}
    return TuningResult(ctrl, float(value), report, opt.evaluations, bool(opt.converged and stable))

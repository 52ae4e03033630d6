"""Power-series weights for discretized fractional operators.

The controller memory weights are the Maclaurin coefficients of
``((1 - w) / (1 + w)) ** order`` with ``w = z**-1`` (prewarped Tustin map,
causal branch). They are computed as the Cauchy product of two binomial
series, each generated by a multiplicative recurrence, so large memory
lengths (thousands of taps) cost one FFT-free convolution.

Precision note: everything is float64. For ``M`` above roughly 1e3 combined
with ``|order| > 2`` the coefficients grow like ``k**(|order| - 1)`` and the
convolution may accumulate relative error beyond 1e-9.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "SeriesKind",
    "CoefficientSeries",
    "BackwardDiffWeights",
    "binomial_series",
    "expand_fk",
    "custom_series",
    "backward_diff_weights",
    "prewarp_alpha",
]


class SeriesKind(str, Enum):
    DERIVATIVE = "derivative-series"
    INTEGRAL = "integral-series"


@dataclass(frozen=True)
class CoefficientSeries:
    """Truncated weights ``f_0 .. f_M`` for a given order."""

    order: float
    values: np.ndarray
    kind: SeriesKind = SeriesKind.DERIVATIVE

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("series needs at least one coefficient")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def M(self) -> int:
        return self.values.size - 1

    def __len__(self) -> int:
        return self.values.size

    def evaluate(self, w):
        """Partial sum ``sum_k f_k w**k`` (Horner), vectorized over ``w``."""
        w = np.asarray(w)
        acc = np.zeros_like(w, dtype=np.result_type(w, float))
        for c in self.values[::-1]:
            acc = acc * w + c
        return acc


@dataclass(frozen=True)
class BackwardDiffWeights:
    """One-sided derivative stencil; ``weights[k]`` multiplies ``e[i - k]``."""

    n: int
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    def apply(self, samples, T: float) -> float:
        """Derivative estimate at the newest sample.

        ``samples`` is ordered oldest first and must hold at least ``n + 1``
        values; only the last ``n + 1`` are used.
        """
        samples = np.asarray(samples, dtype=float)
        if samples.size < self.n + 1:
            raise ValueError(f"need {self.n + 1} samples, got {samples.size}")
        recent = samples[::-1][: self.n + 1]
        return float(self.weights @ recent) / T


def binomial_series(exponent: float, M: int, sign: float = -1.0) -> np.ndarray:
    """Coefficients of ``(1 + sign*w) ** exponent`` up to ``w**M``."""
    k = np.arange(1, M + 1, dtype=float)
    ratios = sign * (exponent - k + 1.0) / k
    out = np.empty(M + 1)
    out[0] = 1.0
    out[1:] = np.cumprod(ratios)
    return out


def _check_order(order) -> float:
    order = float(order)
    if not math.isfinite(order):
        raise ValueError(f"series order must be finite, got {order!r}")
    return order


def _check_M(M) -> int:
    if isinstance(M, bool) or int(M) != M or M < 0:
        raise ValueError(f"M must be a non-negative integer, got {M!r}")
    return int(M)


def expand_fk(order: float, M: int, kind: SeriesKind = SeriesKind.DERIVATIVE) -> CoefficientSeries:
    """Maclaurin coefficients of ``((1 - w)/(1 + w)) ** order`` up to ``w**M``.

    Parameters
    ----------
    order : float
        Exponent; ``mu`` for the derivative term, ``1 - lambda`` for the
        integral term. Any finite real is accepted.
    M : int
        Memory length; ``M + 1`` coefficients are returned.
    kind : SeriesKind
        Tag recording which controller term the series feeds.

    Returns
    -------
    CoefficientSeries
    """
    order = _check_order(order)
    M = _check_M(M)
    numer = binomial_series(order, M, sign=-1.0)
    denom = binomial_series(-order, M, sign=+1.0)
    values = np.convolve(numer, denom)[: M + 1]
    return CoefficientSeries(order=order, values=values, kind=SeriesKind(kind))


def custom_series(values, kind: SeriesKind = SeriesKind.DERIVATIVE, order: float = math.nan) -> CoefficientSeries:
    """Wrap user-supplied weights (e.g. an alternating-sign family).

    No structural property is enforced beyond ``values[0] == 1`` being
    recommended; the caller owns the choice.
    """
    return CoefficientSeries(order=order, values=np.asarray(values, dtype=float), kind=SeriesKind(kind))


def backward_diff_weights(n: int) -> BackwardDiffWeights:
    """Backward-difference derivative stencil with ``O(T**n)`` error.

    ``weights[0]`` is the n-th harmonic number, ``weights[1] = -n`` and the
    rest follow ``g_k = -g_{k-1} (k - 1)(n - k + 1) / k**2``.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"stencil order must be a positive integer, got {n!r}")
    n = int(n)
    g = np.empty(n + 1)
    g[0] = math.fsum(1.0 / j for j in range(1, n + 1))
    g[1] = -float(n)
    for k in range(2, n + 1):
        g[k] = -g[k - 1] * (k - 1) * (n - k + 1) / k**2
    return BackwardDiffWeights(n=n, weights=g)


def prewarp_alpha(omega_c: float, T: float) -> float:
    """Prewarped bilinear factor ``omega_c / tan(omega_c * T / 2)``.

    Raises ``ValueError`` unless ``T > 0`` and ``0 < omega_c < pi / T``.
    """
    if not T > 0:
        raise ValueError(f"sampling period must be positive, got {T!r}")
    if not 0 < omega_c < math.pi / T:
        raise ValueError(
            f"omega_c={omega_c!r} outside (0, pi/T={math.pi / T:.6g}); tan singularity"
        )
    return omega_c / math.tan(omega_c * T / 2.0)

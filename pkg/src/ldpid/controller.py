"""M-th order long-memory discrete PID (LDPID) controller.

Transfer function in ``z``::

    C(z) = Kp + Kd * sum_k fd_k z**-k
              + Ki * (1 + z**-1)/(1 - z**-1) * sum_k fi_k z**-k

with ``fd = expand_fk(mu, M)`` and ``fi = expand_fk(1 - lam, M)``. Clearing
the ``(1 - z**-1)`` denominator gives the streaming recursion used by
:meth:`LdpidController.step`; note the integral increments use the *sum*
``e[n-k] + e[n-k-1]``, which is what the pole at ``z = 1`` requires.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fracseries import CoefficientSeries, SeriesKind, expand_fk, prewarp_alpha

__all__ = [
    "IntegralPoleError",
    "LdpidController",
    "ControllerState",
    "DiscreteController",
    "FilterState",
    "ldpid_freq",
    "step",
    "from_fopid",
    "tustin_pid",
    "cost_per_step",
]


_POLE_TOL = 1e-12


class IntegralPoleError(ZeroDivisionError):
    """Evaluation at ``z = 1``, the pole of the integral term."""


def _z_inverse(omega, T):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("frequencies must be positive")
    return np.exp(-1j * omega * T)


def _poly_z(coeffs, zinv):
    """``sum_k coeffs[k] * zinv**k`` by Horner."""
    acc = np.zeros_like(zinv)
    for c in coeffs[::-1]:
        acc = acc * zinv + c
    return acc


@dataclass
class ControllerState:
    """Error history ``history[k] = e[n-1-k]`` (length ``M + 2``) and ``u[n-1]``."""

    history: np.ndarray
    u_prev: float = 0.0

    @classmethod
    def zeros(cls, M: int) -> "ControllerState":
        return cls(np.zeros(M + 2), 0.0)

    def reset(self) -> None:
        self.history[:] = 0.0
        self.u_prev = 0.0


@dataclass(frozen=True)
class LdpidController:
    """Immutable LDPID parameter set with derived coefficient arrays.

    ``lam`` is the integral order; the integral series is evaluated at
    ``1 - lam``. Use :meth:`from_series_orders` when a controller is given
    in terms of the two printed series orders.
    """

    Kp: float
    Kd: float
    Ki: float
    mu: float
    lam: float
    M: int
    T: float
    fd: CoefficientSeries = field(init=False, repr=False, compare=False)
    fi: CoefficientSeries = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 0:
            raise ValueError(f"M must be a non-negative integer, got {self.M!r}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        for name in ("Kp", "Kd", "Ki", "mu", "lam", "T"):
            object.__setattr__(self, name, float(getattr(self, name)))
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "fd", expand_fk(self.mu, self.M, SeriesKind.DERIVATIVE))
        object.__setattr__(self, "fi", expand_fk(1.0 - self.lam, self.M, SeriesKind.INTEGRAL))
        # gains folded into the weights ahead of time
        kd_w = self.Kd * self.fd.values
        ki_w = self.Ki * self.fi.values
        kd_w.setflags(write=False)
        ki_w.setflags(write=False)
        object.__setattr__(self, "_kd_w", kd_w)
        object.__setattr__(self, "_ki_w", ki_w)

    @classmethod
    def from_series_orders(cls, Kp, Kd, deriv_order, Ki, integral_order, M, T) -> "LdpidController":
        """Build from ``Kp + Kd sum f_k(deriv_order) ... + Ki ... sum f_k(integral_order)``."""
        return cls(Kp=Kp, Kd=Kd, Ki=Ki, mu=deriv_order, lam=1.0 - integral_order, M=M, T=T)

    @property
    def integral_order(self) -> float:
        return 1.0 - self.lam

    # -- frequency domain -------------------------------------------------
    def freq(self, omega):
        return ldpid_freq(self, omega)

    def transfer_function(self):
        """``(b, a)`` in ascending powers of ``z**-1``."""
        M = self.M
        b = np.zeros(M + 2)
        b[0] += self.Kp
        b[1] -= self.Kp
        b[: M + 1] += self._kd_w
        b[1:] -= self._kd_w
        b[: M + 1] += self._ki_w
        b[1:] += self._ki_w
        return b, np.array([1.0, -1.0])

    # -- time domain ------------------------------------------------------
    def initial_state(self) -> ControllerState:
        return ControllerState.zeros(self.M)

    def step(self, state: ControllerState, e_n: float) -> float:
        """Advance one sample and return ``u[n]``.

        Multiplications: one for ``Kp``, ``M + 1`` per series.
        """
        h = state.history
        h[1:] = h[:-1]
        h[0] = e_n
        # h now holds e[n], e[n-1], ..., e[n-M-1]
        diff = h[:-1] - h[1:]
        summ = h[:-1] + h[1:]
        u = state.u_prev + self.Kp * diff[0] + self._kd_w @ diff + self._ki_w @ summ
        u = float(u)
        state.u_prev = u
        return u

    def run(self, errors) -> np.ndarray:
        """Stream a whole error sequence from rest."""
        state = self.initial_state()
        return np.array([self.step(state, e) for e in np.asarray(errors, dtype=float)])

    # -- serialization ----------------------------------------------------
    def to_record(self) -> dict:
        return {"type": "ldpid", "Kp": self.Kp, "Kd": self.Kd, "Ki": self.Ki,
                "mu": self.mu, "lambda": self.lam, "M": self.M, "T": self.T}

    @classmethod
    def from_record(cls, rec: dict) -> "LdpidController":
        return cls(Kp=float(rec["Kp"]), Kd=float(rec.get("Kd", 0.0)), Ki=float(rec.get("Ki", 0.0)),
                   mu=float(rec.get("mu", 1.0)), lam=float(rec.get("lambda", 1.0)),
                   M=int(float(rec["M"])), T=float(rec["T"]))

    def with_params(self, **changes) -> "LdpidController":
        rec = dict(Kp=self.Kp, Kd=self.Kd, Ki=self.Ki, mu=self.mu, lam=self.lam, M=self.M, T=self.T)
        rec.update(changes)
        return LdpidController(**rec)


def ldpid_freq(c: LdpidController, omega):
    """``C(e^{j omega T})``; vectorized over ``omega``.

    Above Nyquist the value is the periodic image of the sampled response
    (ideal C/D and D/C converters), which is what loop-shaping checks on a
    wide grid need. ``z = 1`` raises :class:`IntegralPoleError` when
    ``Ki != 0``.
    """
    zinv = _z_inverse(omega, c.T)
    out = c.Kp + c.Kd * _poly_z(c.fd.values, zinv)
    if c.Ki != 0.0:
        one_minus = 1.0 - zinv
        # exp(-j 2 pi k) is only approximately 1 in floating point
        if np.any(np.abs(one_minus) < _POLE_TOL):
            raise IntegralPoleError("z = 1 is a pole of the integral term")
        out = out + c.Ki * (1.0 + zinv) / one_minus * _poly_z(c.fi.values, zinv)
    return out[()] if np.ndim(out) == 0 else out


def step(c: LdpidController, state: ControllerState, e_n: float) -> float:
    return c.step(state, e_n)


def from_fopid(kp, ki, kd, lam, mu, omega_c, T, M) -> LdpidController:
    """Map FOPID gains through the prewarp factor.

    Only a starting point: once the hold and truncation are in the loop the
    two controllers no longer behave alike, so tune the result directly.
    """
    alpha = prewarp_alpha(omega_c, T)
    return LdpidController(Kp=kp, Kd=kd * alpha**mu, Ki=ki * alpha ** (-lam), mu=mu, lam=lam, M=M, T=T)


def cost_per_step(M: int) -> dict:
    """Arithmetic per sample.

    ``quoted_mults`` is the ``2M + 6`` figure quoted for the non-minimal
    recursion, ``derived_mults`` the ``2(M + 1) + 1`` tally it is derived
    from; the two disagree and are reported side by side. ``mults``/``adds``
    count what :meth:`LdpidController.step` performs.
    """
    if M < 0:
        raise ValueError("M must be non-negative")
    return {
        "quoted_mults": 2 * M + 6,
        "derived_mults": 2 * M + 3,
        "quoted_adds": 2 * M + 6,
        "mults": 2 * M + 3,
        # (M+1) differences, (M+1) sums, 2*M inside the dots, 3 accumulations
        "adds": 4 * M + 5,
    }


@dataclass
class FilterState:
    z: np.ndarray


@dataclass(frozen=True)
class DiscreteController:
    """Rational controller ``b(z^-1)/a(z^-1)`` sampled every ``T`` seconds."""

    b: tuple
    a: tuple
    T: float

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if a[0] == 0:
            raise ValueError("a[0] must be non-zero")
        if not self.T > 0:
            raise ValueError("T must be positive")
        b, a = b / a[0], a / a[0]
        n = max(b.size, a.size)
        object.__setattr__(self, "b", tuple(np.pad(b, (0, n - b.size)).tolist()))
        object.__setattr__(self, "a", tuple(np.pad(a, (0, n - a.size)).tolist()))

    def freq(self, omega):
        zinv = _z_inverse(omega, self.T)
        den = _poly_z(np.array(self.a), zinv)
        if np.any(np.abs(den) < _POLE_TOL):
            raise IntegralPoleError("evaluation on a unit-circle pole")
        out = _poly_z(np.array(self.b), zinv) / den
        return out[()] if np.ndim(out) == 0 else out

    def initial_state(self) -> FilterState:
        return FilterState(np.zeros(len(self.a) - 1))

    def step(self, state: FilterState, e_n: float) -> float:
        # transposed direct form II
        b, a, z = self.b, self.a, state.z
        u = b[0] * e_n + (z[0] if z.size else 0.0)
        for i in range(z.size - 1):
            z[i] = z[i + 1] + b[i + 1] * e_n - a[i + 1] * u
        if z.size:
            z[-1] = b[-1] * e_n - a[-1] * u
        return float(u)

    def to_record(self) -> dict:
        return {"type": "discrete", "b": list(self.b), "a": list(self.a), "T": self.T}


def tustin_pid(kp: float, ki: float, kd: float, omega_c: float, T: float) -> DiscreteController:
    """Prewarped bilinear discretization of ``kp + ki/s + kd s``."""
    alpha = prewarp_alpha(omega_c, T)
    ki_d, kd_d = ki / alpha, kd * alpha
    # common denominator (1 - z^-1)(1 + z^-1) = 1 - z^-2
    b = (kp * np.array([1.0, 0.0, -1.0])
         + ki_d * np.array([1.0, 2.0, 1.0])
         + kd_d * np.array([1.0, -2.0, 1.0]))
    return DiscreteController(tuple(b), (1.0, 0.0, -1.0), T)

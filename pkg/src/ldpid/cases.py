"""The five benchmark loops: plants, published controllers and scenarios.

Where a sampling period was never published it is fixed here and marked
``(assumed)``; those values are part of the reproduction, not of the
controllers themselves.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .controller import LdpidController, tustin_pid
from .lti import ContinuousFopid, ContinuousPlant
from .sim import Amigo2Dof, SimConfig, StepInput
from .tuning import TuningSpec

__all__ = ["Case", "CASES", "get_case"]


@dataclass(frozen=True)
class Case:
    number: int
    title: str
    plant: ContinuousPlant
    T: float
    controllers: dict = field(default_factory=dict)
    scenario: SimConfig | None = None
    spec: TuningSpec | None = None
    plants: dict = field(default_factory=dict)
    notes: str = ""


def _ex1() -> Case:
    T = 1.0  # (assumed)
    plants = {K: ContinuousPlant((K,), (433.33, 1.0), 50.0) for K in (2.75, 3.13, 3.75)}
    ctrl = LdpidController.from_series_orders(3.059, 0.384, 1.228, 0.059, 0.45, 15, T)
    spec = TuningSpec(omega_c=0.008, phi_m=60.0, A=-20.0, omega_t=10.0, B=-20.0, omega_s=0.001,
                      M=15, T=T, bounds={"Kp": (0.0, 5.0), "Kd": (0.0, 10.0), "Ki": (0.0, 0.2)},
                      seed=0, budget=20_000)
    return Case(1, "FOPTD process with uncertain gain", plants[3.13], T, {"ldpid": ctrl},
                SimConfig(T=T, duration=3000.0), spec, plants,
                "T=1 s assumed; gain varies in [2.75, 3.75]")


def _ex2() -> Case:
    T = 0.1
    plant = ContinuousPlant((2.0,), (10.0, 1.0), 3.0)
    pid = ContinuousFopid(kp=1.1, ki=0.1, kd=0.4)
    return Case(2, "FOPTD process, discretized PID versus LDPID", plant, T, {
        "pid": pid,
        "tustin_pid": tustin_pid(1.1, 0.1, 0.4, omega_c=0.21, T=T),
        "ldpid": LdpidController.from_series_orders(2.8, 1.5, 1.03, 0.004, -0.1, 5, T),
    }, SimConfig(T=T, duration=100.0))


def _ex3() -> Case:
    T = 0.05  # (assumed)
    plant = ContinuousPlant((-4.906, -0.5884, 335.17), (1.0, 0.55437, 139.6, 27.91, 0.0), 0.0)
    ldpd = LdpidController(Kp=0.3, Kd=0.5, Ki=0.0, mu=0.8, lam=1.0, M=5, T=T)
    return Case(3, "non-minimum-phase flexible arm, LDPD", plant, T, {"ldpd": ldpd},
                SimConfig(T=T, duration=60.0), notes="T=0.05 s assumed")


def _ex4() -> Case:
    T = 0.005  # (assumed)
    plant = ContinuousPlant((1.0,), (0.0025, 0.1, 1.0), 1.0)
    return Case(4, "LDPID versus AMIGO 2-DOF PID", plant, T, {
        "ldpid": LdpidController.from_series_orders(0.5, 0.15, 1.15, 7e-4, -0.2, 15, T),
        "amigo": Amigo2Dof(k=0.242, ki=0.515, kd=0.032, Tf=0.1),
    }, SimConfig(T=T, duration=30.0, disturbance=StepInput(1.0, 10.0)),
        notes="T=5 ms assumed; unit load disturbance at t=10 s")


def _ex5() -> Case:
    T = 0.1
    plant = ContinuousPlant((32.0,), (425.0, 1.0), 0.0)
    spec = TuningSpec(omega_c=1.0, phi_m=75.0, A=-20.0, omega_t=10.0, B=-20.0, omega_s=0.1,
                      M=5, T=T, seed=0, budget=20_000)
    return Case(5, "heating box, nominal model", plant, T, {
        "pid": ContinuousFopid(kp=7.937, ki=1.187, kd=-0.935),
        "ldpid": LdpidController.from_series_orders(7.109, 0.711, 0.077, 0.750, 0.415, 5, T),
    }, SimConfig(T=T, duration=20.0), spec, notes="nominal plant 32/(1+425 s)")


_BUILDERS = {1: _ex1, 2: _ex2, 3: _ex3, 4: _ex4, 5: _ex5}
CASES = tuple(_BUILDERS)


def get_case(n: int) -> Case:
    try:
        return _BUILDERS[int(n)]()
    except KeyError:
        raise ValueError(f"no example {n}; choose from {CASES}") from None

"""Lumped-parameter surrogate of a no-insulation HTS pancake coil.

Two state components: the azimuthal (inductive) coil current ``I_theta``
and one lumped temperature ``T``.  The source current splits between the
superconducting azimuthal path and the radial turn-to-turn contact path,
which is what delays the magnetic field of a no-insulation winding.  The
HTS path carries the strongly nonlinear power-law resistivity, so driving
the coil near its critical current produces a partial quench with current
redistribution and a pronounced temperature transient.

A scalar linear test problem with the closed-form solution
``u(t) = u0 * exp(rate * t)`` is included as a verification oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import Problem, State, as_state

__all__ = [
    "CoilParams",
    "RampSchedule",
    "hts_resistivity",
    "critical_current_density",
    "source_current",
    "coil_rhs",
    "axial_field",
    "linear_test_rhs",
    "CoilProblem",
    "LinearTestProblem",
    "DEFAULT_RAMP",
]

# Relative floor on J_c(T) so the power law stays finite above T_c.
JC_REL_FLOOR = 1e-6


@dataclass(frozen=True)
class CoilParams:
    """Physical constants of the coil surrogate.

    Attributes
    ----------
    e_c : critical electric field (V/m)
    j_c0 : critical current density at ``t_op`` and zero field (A/m^2)
    n : power-law index (dimensionless)
    t_c : critical temperature (K)
    t_op : operating/bath temperature (K)
    inductance : azimuthal loop inductance (H)
    r_contact : lumped turn-to-turn plus terminal contact resistance (Ohm)
    a_hts : HTS cross-section (m^2)
    length : effective conductor length (m)
    heat_capacity : lumped heat capacity, held constant (J/K)
    cooling : lumped cooling conductance to the bath (W/K)
    field_constant : central axial flux density per ampere of I_theta (T/A)
    """

    e_c: float = 1e-4
    j_c0: float = 1.2e8
    n: float = 25.0
    t_c: float = 92.0
    t_op: float = 77.0
    inductance: float = 2e-3
    r_contact: float = 2e-4
    a_hts: float = 1e-6
    length: float = 1.0
    heat_capacity: float = 2.0
    cooling: float = 0.25
    field_constant: float = 1e-3

    def __post_init__(self):
        for name in (
            "e_c",
            "j_c0",
            "n",
            "t_c",
            "t_op",
            "inductance",
            "r_contact",
            "a_hts",
            "length",
            "heat_capacity",
            "cooling",
            "field_constant",
        ):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"CoilParams.{name} must be strictly positive")
        if self.n < 1.0:
            raise ValueError("power-law index n must be >= 1")
        if not self.t_c > self.t_op:
            raise ValueError("critical temperature must exceed operating temperature")


@dataclass(frozen=True)
class RampSchedule:
    """Piecewise-linear source current.

    ``segments`` is a list of ``(t_end, i_end)`` breakpoints; the current
    runs linearly from (0 s, 0 A) through each breakpoint and is held
    constant after the last one.
    """

    segments: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        segs = tuple((float(t), float(i)) for t, i in self.segments)
        prev = 0.0
        for t_end, _ in segs:
            if t_end <= prev:
                raise ValueError("ramp breakpoint times must be strictly increasing and > 0")
            prev = t_end
        object.__setattr__(self, "segments", segs)

    @property
    def breakpoint_times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.segments)


# Ramp that drives the default coil past its critical current: 140 A
# plateau vs. 120 A critical at 77 K, so a partial quench develops on the
# plateau (peak near 81 K) and recovers during the ramp-down.
DEFAULT_RAMP = RampSchedule(((50.0, 140.0), (150.0, 140.0), (200.0, 0.0)))


def hts_resistivity(j: float, j_c: float, e_c: float, n: float) -> float:
    """Power-law resistivity ``(e_c/j_c) * (|j|/j_c)**(n-1)`` in Ohm*m.

    Overflow of the power term yields ``inf`` (the caller's finiteness
    checks treat that as a failed evaluation, not a crash).
    """
    if j_c <= 0.0:
        raise ValueError("critical current density must be positive (critical surface collapsed)")
    p = n - 1.0
    if p == 0.0:
        return e_c / j_c
    with np.errstate(over="ignore"):
        return float((e_c / j_c) * np.float64(abs(j) / j_c) ** p)


def critical_current_density(t: float, params: CoilParams) -> float:
    """Linear-in-temperature J_c with a relative floor above T_c (A/m^2)."""
    frac = (params.t_c - t) / (params.t_c - params.t_op)
    frac = min(1.0, max(JC_REL_FLOOR, frac))
    return params.j_c0 * frac


def source_current(t: float, ramp: RampSchedule) -> float:
    """Piecewise-linear source current (A); constant after the last breakpoint."""
    t_prev, i_prev = 0.0, 0.0
    for t_end, i_end in ramp.segments:
        if t <= t_end:
            return i_prev + (i_end - i_prev) * (t - t_prev) / (t_end - t_prev)
        t_prev, i_prev = t_end, i_end
    return i_prev


def coil_rhs(t: float, s: State, params: CoilParams, ramp: RampSchedule) -> np.ndarray:
    """Time derivative of ``[I_theta, T]`` for the coil surrogate."""
    i_theta = float(s[0])
    temp = float(s[1])
    i_radial = source_current(t, ramp) - i_theta

    j = i_theta / params.a_hts
    j_c = critical_current_density(temp, params)
    r_hts = hts_resistivity(j, j_c, params.e_c, params.n) * params.length / params.a_hts

    di_theta = (params.r_contact * i_radial - r_hts * i_theta) / params.inductance
    p_contact = params.r_contact * i_radial * i_radial
    p_hts = r_hts * i_theta * i_theta
    d_temp = (p_contact + p_hts - params.cooling * (temp - params.t_op)) / params.heat_capacity
    return np.array([di_theta, d_temp])


def axial_field(s: State, params: CoilParams) -> float:
    """Central axial flux density B_z = field_constant * I_theta (T)."""
    return params.field_constant * float(s[0])


def linear_test_rhs(t: float, s: State, rate: float) -> np.ndarray:
    """Derivative of the linear test system: ``rate * s`` componentwise."""
    return rate * np.asarray(s, dtype=float)


class CoilProblem(Problem):
    """The coil surrogate packaged behind the abstract problem interface."""

    def __init__(self, params: CoilParams | None = None, ramp: RampSchedule | None = None):
        self.params = params if params is not None else CoilParams()
        self.ramp = ramp if ramp is not None else DEFAULT_RAMP

    @property
    def dimension(self) -> int:
        return 2

    @property
    def component_names(self) -> tuple[str, ...]:
        return ("I_theta_A", "T_K")

    def rhs(self, t: float, u: State) -> np.ndarray:
        return coil_rhs(t, u, self.params, self.ramp)

    def max_temperature(self, u: State) -> float:
        return float(u[1])

    def initial_state(self) -> State:
        return as_state([0.0, self.params.t_op])

    def forced_event_times(self, t_a: float, t_b: float) -> list[float]:
        return [t for t in self.ramp.breakpoint_times if t_a < t < t_b]

    def source_current(self, t: float) -> float:
        return source_current(t, self.ramp)

    def axial_field(self, u: State) -> float:
        return axial_field(u, self.params)


class LinearTestProblem(Problem):
    """``d_t u = rate * u`` with exact solution ``u0 * exp(rate * t)``.

    All components are treated as temperature-like so the max-temperature
    convergence machinery is exercised unchanged.
    """

    def __init__(self, rate: float = -1.0, u0=(1.0,)):
        self.rate = float(rate)
        self._u0 = as_state(u0)

    @property
    def dimension(self) -> int:
        return self._u0.size

    @property
    def component_names(self) -> tuple[str, ...]:
        return tuple(f"u_{i}" for i in range(self._u0.size))

    def rhs(self, t: float, u: State) -> np.ndarray:
        return linear_test_rhs(t, u, self.rate)

    def max_temperature(self, u: State) -> float:
        return float(np.max(u))

    def initial_state(self) -> State:
        return self._u0

    def exact(self, t: float) -> np.ndarray:
        return self._u0 * math.exp(self.rate * t)

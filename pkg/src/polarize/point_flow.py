"""Gradient-flow dynamics of parties lumped at single ideology points.

Each party climbs its own expected-vote share: ``dy_i/dt = k dV_i/dy_i``.
For two parties the phase portrait is a pitchfork: below a critical
tolerance/spread ratio the origin is unstable and a mirror pair of
polarized equilibria attracts; above it the origin is the unique,
stable equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsensusRegimeError, DivergenceError
from .kernels import ModelParams, own_gradients

__all__ = [
    "EquilibriumReport",
    "PointTrajectory",
    "critical_ratio",
    "polarized_equilibrium",
    "classify_equilibria",
    "integrate_point_flow",
    "step_halving_gap",
]

# Eigenvalue real parts inside this band are reported as inconclusive.
STABILITY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class PointTrajectory:
    """Time grid and per-party positions along an integrated flow."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), n_parties)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class EquilibriumReport:
    """Equilibria with numerical stability tags, plus regime bookkeeping."""

    equilibria: tuple  # ((positions, tag), ...), tag in {stable, unstable, inconclusive}
    critical_ratio: float
    regime: str  # "polarized" or "consensus"


_CRITICAL_RATIO_CACHE: float | None = None


def _ratio_polynomial(x: float) -> float:
    x2 = x * x
    return ((3.0 * x2 + 5.0) * x2 - 3.0) * x2 - 1.0


def critical_ratio() -> float:
    """The tolerance/spread ratio at which polarization disappears.

    Unique positive root of ``3 x^6 + 5 x^4 - 3 x^2 - 1``, located by
    bisection on (0, 2) to 1e-12: the polynomial is -1 at 0 and 259 at 2.
    Parties polarize exactly when ``sigma / sigma0`` is below this value
    (approximately 0.807).
    """
    global _CRITICAL_RATIO_CACHE
    if _CRITICAL_RATIO_CACHE is None:
        lo, hi = 0.0, 2.0
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if _ratio_polynomial(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        _CRITICAL_RATIO_CACHE = 0.5 * (lo + hi)
    return _CRITICAL_RATIO_CACHE


def polarized_equilibrium(params: ModelParams) -> float:
    """Positive polarized equilibrium position for two parties.

    Solves the stationarity condition of the two-party flow:

        y* = sigma * sqrt(v1/v2 * ln(v1^3 / (4 sigma^4 v2)))

    with ``v1 = sigma^2 + sigma0^2`` and ``v2 = sigma^2 + 2 sigma0^2``.
    The mirror state ``(y*, -y*)`` (either sign) is stationary.  Raises
    `ConsensusRegimeError` when the logarithm's argument is at most 1,
    i.e. when only the consensus equilibrium at 0 exists.
    """
    if params.n_parties != 2:
        raise ValueError("the polarized equilibrium formula applies to two parties")
    s2 = params.sigma**2
    v1 = s2 + params.sigma0**2
    v2 = s2 + 2.0 * params.sigma0**2
    argument = v1**3 / (4.0 * s2 * s2 * v2)
    if argument <= 1.0:
        raise ConsensusRegimeError(
            f"no polarized equilibrium: sigma/sigma0 = {params.sigma / params.sigma0:.6g} "
            f"is not below the critical ratio {critical_ratio():.6g}; "
            "the consensus equilibrium at position 0 is the only one"
        )
    return params.sigma * math.sqrt(v1 / v2 * math.log(argument))


def _velocity(positions: np.ndarray, params: ModelParams) -> np.ndarray:
    return params.k * own_gradients(positions, params)


def _stability_tag(positions: np.ndarray, params: ModelParams, h: float = 1e-6) -> str:
    n = params.n_parties
    jac = np.empty((n, n))
    for j in range(n):
        bump = np.zeros(n)
        bump[j] = h
        jac[:, j] = (_velocity(positions + bump, params) - _velocity(positions - bump, params)) / (
            2.0 * h
        )
    real_parts = np.linalg.eigvals(jac).real
    if np.all(real_parts < -STABILITY_THRESHOLD):
        return "stable"
    if np.any(real_parts > STABILITY_THRESHOLD):
        return "unstable"
    return "inconclusive"


def classify_equilibria(params: ModelParams) -> EquilibriumReport:
    """Two-party equilibria with numerically determined stability.

    Polarized regime: the origin (unstable) plus the mirror pair at
    ``(+-y*, -+y*)`` (stable).  Consensus regime: the origin alone,
    stable.  Stability comes from the eigenvalues of a central-difference
    Jacobian of the velocity field, not from the analytic criterion.
    """
    if params.n_parties != 2:
        raise ValueError("equilibrium classification is implemented for two parties")
    crit = critical_ratio()
    ratio = params.sigma / params.sigma0
    regime = "polarized" if ratio < crit else "consensus"
    states = [np.zeros(2)]
    if regime == "polarized":
        ystar = polarized_equilibrium(params)
        states.append(np.array([ystar, -ystar]))
        states.append(np.array([-ystar, ystar]))
    tagged = tuple((state, _stability_tag(state, params)) for state in states)
    return EquilibriumReport(equilibria=tagged, critical_ratio=crit, regime=regime)


def integrate_point_flow(
    initial,
    params: ModelParams,
    dt: float = 0.01,
    steps: int = 1000,
    method: str = "euler",
) -> PointTrajectory:
    """Integrate the point-party gradient flow from a joint initial state.

    Forward Euler by default (``y <- y + dt * k * grad``); ``method="rk4"``
    selects the classical fourth-order rule.  Deterministic; raises
    `DivergenceError` naming the step if the state leaves finite range.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps!r}")
    if method not in ("euler", "rk4"):
        raise ValueError(f"unknown integration method {method!r}")
    y = np.asarray(initial, dtype=float).copy()
    if y.shape != (params.n_parties,) or not np.all(np.isfinite(y)):
        raise ValueError("initial state must hold one finite position per party")
    states = np.empty((steps + 1, params.n_parties))
    states[0] = y
    for i in range(1, steps + 1):
        if method == "euler":
            y = y + dt * _velocity(y, params)
        else:
            k1 = _velocity(y, params)
            k2 = _velocity(y + 0.5 * dt * k1, params)
            k3 = _velocity(y + 0.5 * dt * k2, params)
            k4 = _velocity(y + dt * k3, params)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"point flow diverged at step {i}", step=i)
        states[i] = y
    times = np.arange(steps + 1, dtype=float) * dt
    return PointTrajectory(times=times, states=states)


def step_halving_gap(initial, params: ModelParams, dt: float, steps: int) -> float:
    """Largest final-state change when the step size is halved.

    Accuracy guard for a chosen ``dt``: integrates with ``dt`` and with
    ``dt/2`` to the same final time and returns the max absolute
    difference of the final states.
    """
    coarse = integrate_point_flow(initial, params, dt, steps)
    fine = integrate_point_flow(initial, params, dt / 2.0, 2 * steps)
    return float(np.max(np.abs(coarse.final - fine.final)))

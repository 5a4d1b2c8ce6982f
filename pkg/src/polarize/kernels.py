"""Satisficing vote kernels and their closed-form voter averages.

A voter at ideology ``x`` is satisfied with a party at ``y`` with
probability ``exp(-(x - y)^2 / (2 sigma^2))``.  Voters satisfied with
exactly one party vote for it; voters satisfied with several break the
tie uniformly at random (two-party case) or, in the three-party case,
vote only when satisfied with exactly one party or with all three.
Averaging the resulting vote probability over a zero-mean Gaussian
public with standard deviation ``sigma0`` gives each party's expected
vote share as a finite sum of Gaussian product integrals, which this
module evaluates in closed form together with its ideology gradient.

An independent quadrature oracle (`oracle_expected_votes`) checks the
closed forms numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.special import roots_hermite

__all__ = [
    "ModelParams",
    "QuadratureSpec",
    "satisficing",
    "vote_probability",
    "expected_votes_point",
    "grad_expected_votes",
    "oracle_expected_votes",
]


@dataclass(frozen=True)
class ModelParams:
    """Model constants: public spread, voter tolerance, flow speed, party count.

    sigma0
        Standard deviation of the public's ideology distribution
        (ideology units).
    sigma
        Voter tolerance: width of the satisficing kernel (ideology units).
    k
        Speed constant of the gradient flow (ideology units^2 per time unit).
    n_parties
        Number of competing parties (>= 2).  Two and three parties use the
        reference vote kernels; larger counts use the generic uniform
        tie-break kernel.
    """

    sigma0: float
    sigma: float
    k: float
    n_parties: int = 2

    def __post_init__(self):
        for name in ("sigma0", "sigma", "k"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
        if not isinstance(self.n_parties, int) or self.n_parties < 2:
            raise ValueError(f"n_parties must be an integer >= 2, got {self.n_parties!r}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature rule for the voter-average oracle.

    ``gauss-hermite`` integrates against the Gaussian public directly;
    ``trapezoid`` uses a uniform grid on a truncated interval of
    +-10 sigma0 around the public mean.  Oracle-grade comparisons should
    use at least 64 Gauss-Hermite nodes.
    """

    node_count: int = 64
    scheme: str = "gauss-hermite"

    def __post_init__(self):
        if not isinstance(self.node_count, int) or self.node_count < 1:
            raise ValueError(f"node_count must be a positive integer, got {self.node_count!r}")
        if self.scheme not in ("gauss-hermite", "trapezoid"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")


@lru_cache(maxsize=None)
def tie_break_terms(n_parties: int, party_index: int) -> tuple[tuple[tuple[int, ...], float], ...]:
    """Subset expansion of party ``party_index``'s vote probability.

    Returns ``((subset, coeff), ...)`` such that the probability of a
    voter choosing the party is ``sum(coeff * prod(s_j for j in subset))``
    where ``s_j`` is the voter's satisfaction with party ``j``.  Every
    subset contains ``party_index``.

    Two parties: sole satisfaction plus half the two-way tie, i.e.
    coefficients ``{i}: 1, {i, j}: -1/2``.  Three parties: the reference
    kernel intentionally omits pairwise-tie terms (voters satisfied with
    exactly two parties abstain), giving ``{i}: 1, {i, j}: -1, all: 4/3``.
    Four or more parties: the uniform tie-break over every satisfaction
    subset, which collapses to ``coeff(U) = (-1)^(|U|+1) / |U|``.
    """
    if party_index < 0 or party_index >= n_parties:
        raise ValueError(f"party_index {party_index} out of range for {n_parties} parties")
    others = [j for j in range(n_parties) if j != party_index]
    if n_parties == 3:
        terms = [((party_index,), 1.0)]
        terms += [(tuple(sorted((party_index, j))), -1.0) for j in others]
        terms.append(((0, 1, 2), 4.0 / 3.0))
        return tuple(terms)
    terms = []
    for size in range(n_parties):
        for combo in combinations(others, size):
            subset = tuple(sorted((party_index,) + combo))
            coeff = (-1.0) ** size / (size + 1)
            terms.append((subset, coeff))
    return tuple(terms)


def satisficing(d, sigma: float):
    """Probability that a voter at distance ``d`` is satisfied with a party.

    Vectorized over ``d``.  Equals 1 at zero distance and decays as a
    Gaussian with scale ``sigma``.
    """
    if sigma <= 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be finite and positive, got {sigma!r}")
    d = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("distances must be finite and non-negative")
    out = np.exp(-(d * d) / (2.0 * sigma * sigma))
    return float(out) if out.ndim == 0 else out


def _as_positions(positions, n_parties: int) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if pos.shape != (n_parties,):
        raise ValueError(f"expected {n_parties} positions, got shape {pos.shape}")
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions must be finite")
    return pos


def vote_probability(x, positions, params: ModelParams, party_index: int):
    """Probability that a voter at ``x`` votes for the given party.

    Vectorized over ``x``.  Symmetric under relabeling of parties
    together with their positions.
    """
    pos = _as_positions(positions, params.n_parties)
    terms = tie_break_terms(params.n_parties, party_index)
    x = np.asarray(x, dtype=float)
    sat = [satisficing(np.abs(x - pos[j]), params.sigma) for j in range(params.n_parties)]
    total = 0.0
    for subset, coeff in terms:
        prod = sat[subset[0]]
        for j in subset[1:]:
            prod = prod * sat[j]
        total = total + coeff * prod
    return float(total) if np.ndim(total) == 0 else total


def _product_average(params: ModelParams, ys: list, grad_index: int | None = None):
    """Gaussian-public average of a product of satisficing kernels.

    ``ys`` holds one (broadcastable) position array per kernel in the
    product.  Returns ``G = E_rho[prod_j s(|x - y_j|)]`` in closed form:
    with ``m`` kernels, pooled variance ``v = sigma^2 + m sigma0^2``,
    subset mean ``ybar`` and spread ``ss = sum (y_j - ybar)^2``,

        G = sigma / sqrt(v) * exp(-ss / (2 sigma^2) - m ybar^2 / (2 v)).

    With ``grad_index`` set, returns the derivative of ``G`` with respect
    to that entry of ``ys`` instead:

        dG/dy_g = G * (-(y_g - ybar) / sigma^2 - ybar / v).
    """
    m = len(ys)
    s2 = params.sigma * params.sigma
    pooled = s2 + m * params.sigma0 * params.sigma0
    total = ys[0]
    for y in ys[1:]:
        total = total + y
    ybar = total / m
    spread = 0.0
    for y in ys:
        dev = y - ybar
        spread = spread + dev * dev
    g = (params.sigma / np.sqrt(pooled)) * np.exp(
        -spread / (2.0 * s2) - m * (ybar * ybar) / (2.0 * pooled)
    )
    if grad_index is None:
        return g
    return g * (-(ys[grad_index] - ybar) / s2 - ybar / pooled)


def expected_votes_point(positions, params: ModelParams, party_index: int) -> float:
    """Expected vote share of one party, parties lumped at point positions.

    Closed-form Gaussian average of `vote_probability` over the public
    distribution; always in (0, 1) for finite positions.
    """
    pos = _as_positions(positions, params.n_parties)
    total = 0.0
    for subset, coeff in tie_break_terms(params.n_parties, party_index):
        total = total + coeff * _product_average(params, [pos[j] for j in subset])
    return float(total)


def grad_expected_votes(positions, params: ModelParams, party_index: int) -> float:
    """Derivative of `expected_votes_point` in the party's own position."""
    pos = _as_positions(positions, params.n_parties)
    total = 0.0
    for subset, coeff in tie_break_terms(params.n_parties, party_index):
        total = total + coeff * _product_average(
            params, [pos[j] for j in subset], grad_index=subset.index(party_index)
        )
    return float(total)


def own_gradients(positions, params: ModelParams) -> np.ndarray:
    """Vector of each party's own-position vote gradient at a joint state."""
    pos = _as_positions(positions, params.n_parties)
    out = np.empty(params.n_parties)
    for i in range(params.n_parties):
        total = 0.0
        for subset, coeff in tie_break_terms(params.n_parties, i):
            total = total + coeff * _product_average(
                params, [pos[j] for j in subset], grad_index=subset.index(i)
            )
        out[i] = total
    return out


@lru_cache(maxsize=32)
def gauss_hermite_nodes(node_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes and probabilists' weights for a unit Gaussian.

    Returned as ``(u, w)`` with ``sum(w) == 1``; integrate ``f`` against a
    Gaussian of standard deviation ``s`` as ``sum(w * f(s * u))``.
    """
    raw_u, raw_w = roots_hermite(node_count)
    u = math.sqrt(2.0) * raw_u
    w = raw_w / math.sqrt(math.pi)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def oracle_expected_votes(
    positions, params: ModelParams, party_index: int, quad: QuadratureSpec = QuadratureSpec()
) -> float:
    """Quadrature check of `expected_votes_point`; never used in the flow.

    Integrates ``vote_probability`` against the Gaussian public with the
    requested rule.  At 64 or more Gauss-Hermite nodes the result agrees
    with the closed form to well below 1e-8 for two parties at moderate
    positions; narrow integrands (three-party products, small tolerance)
    need proportionally more nodes.
    """
    pos = _as_positions(positions, params.n_parties)
    if quad.scheme == "gauss-hermite":
        u, w = gauss_hermite_nodes(quad.node_count)
        x = params.sigma0 * u
        return float(np.sum(w * vote_probability(x, pos, params, party_index)))
    half_width = 10.0 * params.sigma0
    x = np.linspace(-half_width, half_width, quad.node_count)
    density = np.exp(-(x * x) / (2.0 * params.sigma0**2)) / (
        math.sqrt(2.0 * math.pi) * params.sigma0
    )
    return float(np.trapezoid(density * vote_probability(x, pos, params, party_index), x))

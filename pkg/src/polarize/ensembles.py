"""Particle-ensemble dynamics of full ideological distributions.

Each party is a uniformly weighted cloud of particles (candidates).  A
particle's velocity is the party's point-model vote gradient averaged
over every tuple of opponent particles, and one time step pushes every
particle of every party simultaneously by ``tau * k * velocity``.

Pair interactions are always evaluated with the exact closed-form
kernels, O(N*M) per party pair.  Interaction terms coupling three or
more parties cost O(N*M*L...) exactly; because the opponent averages
factor under the voter integral, those terms can instead be evaluated
spectrally -- a Gauss-Hermite quadrature of the averaged satisfaction
fields -- at O((N+M+L)*Q) with node count chosen for accuracy at or
below 1e-12.  The ``method`` argument selects ``"exact"``,
``"spectral"``, or ``"auto"`` (exact up to 1e6 interaction tuples).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .kernels import ModelParams, _product_average, gauss_hermite_nodes, tie_break_terms
from .metrics import w2

__all__ = [
    "ParticleEnsemble",
    "PartyInit",
    "InitSpec",
    "EnsembleTrajectory",
    "sample_initial",
    "wasserstein_gradient",
    "step",
    "simulate",
    "vote_shares",
]

# Largest interaction-tuple count evaluated exactly under method="auto".
EXACT_TUPLE_LIMIT = 1_000_000
# Chunk size (grid cells) for exact many-body grids.
_CHUNK_CELLS = 1 << 22
# Spectral node-count rule and its hard cap.
_SPECTRAL_MIN_NODES = 192
_SPECTRAL_MAX_NODES = 4096
# Early-termination rule: displacements this small, this many steps in a row.
DISPLACEMENT_TOL = 1e-10
QUIET_STEPS = 10


@dataclass(frozen=True)
class ParticleEnsemble:
    """A party's ideological distribution as equally weighted particles."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).copy()
        if pos.ndim != 1 or pos.size == 0:
            raise ValueError("an ensemble needs a non-empty 1-D array of positions")
        if not np.all(np.isfinite(pos)):
            raise ValueError("ensemble positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def size(self) -> int:
        return self.positions.size

    @classmethod
    def dirac(cls, position: float, count: int = 1) -> "ParticleEnsemble":
        return cls(np.full(count, float(position)))


@dataclass(frozen=True)
class PartyInit:
    """How to draw one party's initial ensemble.

    ``kind`` is one of ``truncated-gaussian`` (mean/std/lo/hi/count),
    ``gaussian`` (mean/std/count), ``dirac`` (mean/count), or
    ``explicit`` (positions passed through unchanged).  A per-party
    ``seed`` overrides the run-level seed stream.
    """

    kind: str
    mean: float = 0.0
    std: float | None = None
    lo: float | None = None
    hi: float | None = None
    count: int | None = None
    positions: tuple[float, ...] | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("truncated-gaussian", "gaussian", "dirac", "explicit"):
            raise ValueError(f"unknown initial-distribution kind {self.kind!r}")
        if self.kind == "explicit":
            if not self.positions:
                raise ValueError("explicit initialization needs at least one position")
            if not all(math.isfinite(p) for p in self.positions):
                raise ValueError("explicit positions must be finite")
            return
        if self.count is None or self.count < 1:
            raise ValueError("particle count must be a positive integer")
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")
        if self.kind in ("truncated-gaussian", "gaussian"):
            if self.std is None or not (self.std > 0 and math.isfinite(self.std)):
                raise ValueError("stochastic initialization needs std > 0")
        if self.kind == "truncated-gaussian":
            if self.lo is None or self.hi is None or not (self.lo < self.hi):
                raise ValueError("truncation needs bounds with lo < hi")


@dataclass(frozen=True)
class InitSpec:
    """Initial ensembles for every party plus the run-level seed."""

    parties: tuple[PartyInit, ...]
    seed: int = 0

    def __post_init__(self):
        if len(self.parties) == 0:
            raise ValueError("need at least one party")
        object.__setattr__(self, "parties", tuple(self.parties))


@dataclass(frozen=True)
class EnsembleTrajectory:
    """Recorded snapshots of a simulation plus per-snapshot diagnostics.

    Every diagnostic is recomputable from ``snapshots`` alone; the
    ``w2_matrix`` holds pairwise inter-party distances, and
    ``order_preserved`` flags whether each party's particle ranking still
    matches its initial ranking.
    """

    step_indices: np.ndarray
    times: np.ndarray
    snapshots: tuple  # per record: tuple of ParticleEnsemble, one per party
    means: np.ndarray  # (records, n_parties)
    stds: np.ndarray
    vote_shares: np.ndarray
    abstention: np.ndarray  # (records,)
    w2_matrix: np.ndarray  # (records, n_parties, n_parties)
    order_preserved: np.ndarray  # (records, n_parties), bool
    steps_run: int
    early_stopped: bool

    @property
    def final(self) -> tuple:
        return self.snapshots[-1]


def _party_rng(spec: InitSpec, index: int) -> np.random.Generator:
    party = spec.parties[index]
    if party.seed is not None:
        return np.random.default_rng(party.seed)
    return np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(index,)))


def _sample_truncated(rng, mean, std, lo, hi, count) -> np.ndarray:
    out = np.empty(0)
    for _ in range(10_000):
        draw = rng.normal(mean, std, size=max(count, 128))
        keep = draw[(draw > lo) & (draw < hi)]
        out = np.concatenate([out, keep])
        if out.size >= count:
            return out[:count]
    raise ValueError(
        f"truncation interval ({lo}, {hi}) accepts almost no mass of "
        f"Normal({mean}, {std}^2); rejection sampling gave up"
    )


def sample_initial(spec: InitSpec) -> list[ParticleEnsemble]:
    """Draw the initial ensembles; identical output for identical specs.

    Truncated Gaussians are sampled by rejection, keeping accepted draws
    in generation order, so the result is a pure function of the seed.
    """
    ensembles = []
    for index, party in enumerate(spec.parties):
        if party.kind == "explicit":
            ensembles.append(ParticleEnsemble(np.asarray(party.positions, dtype=float)))
            continue
        if party.kind == "dirac":
            ensembles.append(ParticleEnsemble.dirac(party.mean, party.count))
            continue
        rng = _party_rng(spec, index)
        if party.kind == "gaussian":
            ensembles.append(ParticleEnsemble(rng.normal(party.mean, party.std, party.count)))
        else:
            ensembles.append(
                ParticleEnsemble(
                    _sample_truncated(rng, party.mean, party.std, party.lo, party.hi, party.count)
                )
            )
    return ensembles


def _spectral_node_count(params: ModelParams) -> int:
    needed = max(_SPECTRAL_MIN_NODES, math.ceil(48.0 * (params.sigma0 / params.sigma) ** 2))
    if needed > _SPECTRAL_MAX_NODES:
        raise ValueError(
            f"spectral interaction evaluation would need {needed} quadrature nodes "
            f"(tolerance sigma={params.sigma!r} is too narrow relative to sigma0); "
            'use method="exact"'
        )
    return needed


def _satisfaction_fields(positions: list[np.ndarray], params: ModelParams):
    """Ensemble-averaged satisfaction of a voter grid with every party."""
    node_count = _spectral_node_count(params)
    u, weights = gauss_hermite_nodes(node_count)
    x = params.sigma0 * u
    inv2s2 = 1.0 / (2.0 * params.sigma * params.sigma)
    fields = []
    for pos in positions:
        gap = x[:, None] - pos[None, :]
        fields.append(np.exp(-(gap * gap) * inv2s2).mean(axis=1))
    return x, weights, fields


def _exact_term_grad(params: ModelParams, subset, own_index, positions) -> np.ndarray:
    """Opponent-averaged own-gradient of one interaction term, exact grids."""
    own = positions[own_index]
    n = own.size
    if len(subset) == 1:
        return _product_average(params, [own], grad_index=0)
    # Own particles always take axis 0 and opponents the trailing axes, so
    # the opponent reduction uses the same (pairwise) summation for every
    # party and mirrored inputs yield exactly mirrored velocities.
    ndim = len(subset)
    views = []
    opponent_axis = 1
    for j in subset:
        shape = [1] * ndim
        if j == own_index:
            shape[0] = -1
        else:
            shape[opponent_axis] = -1
            opponent_axis += 1
        views.append((j, shape))
    reduce_axes = tuple(range(1, ndim))
    own_position_in_subset = subset.index(own_index)
    cells = int(np.prod([positions[j].size for j in subset if j != own_index]))
    block = max(1, _CHUNK_CELLS // cells)
    out = np.empty(n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        ys = []
        for j, shape in views:
            if j == own_index:
                ys.append(own[start:stop].reshape(shape))
            else:
                ys.append(positions[j].reshape(shape))
        grid = _product_average(params, ys, grad_index=own_position_in_subset)
        out[start:stop] = grid.mean(axis=reduce_axes).reshape(-1)
    return out


def _exact_term_value(params: ModelParams, subset, positions) -> float:
    """Full ensemble average of one interaction term, exact grids."""
    arrays = [positions[j] for j in subset]
    if len(arrays) == 1:
        return float(_product_average(params, arrays).mean())
    lead = arrays[0]
    rest = arrays[1:]
    cells = int(np.prod([a.size for a in rest]))
    block = max(1, _CHUNK_CELLS // cells)
    ndim = len(arrays)
    total = 0.0
    count = lead.size * cells
    for start in range(0, lead.size, block):
        stop = min(start + block, lead.size)
        ys = [lead[start:stop].reshape([-1] + [1] * (ndim - 1))]
        for pos_axis, arr in enumerate(rest, start=1):
            shape = [1] * ndim
            shape[pos_axis] = -1
            ys.append(arr.reshape(shape))
        total += float(_product_average(params, ys).sum())
    return total / count


def _spectral_term_grad(params, subset, own_index, positions, spectral) -> np.ndarray:
    x, weights, fields = spectral
    own = positions[own_index]
    profile = weights.copy()
    for j in subset:
        if j != own_index:
            profile = profile * fields[j]
    gap = x[:, None] - own[None, :]
    inv_s2 = 1.0 / (params.sigma * params.sigma)
    sat = np.exp(-(gap * gap) * (0.5 * inv_s2))
    return (profile[:, None] * sat * gap * inv_s2).sum(axis=0)


def _spectral_term_value(subset, spectral) -> float:
    x, weights, fields = spectral
    profile = weights.copy()
    for j in subset:
        profile = profile * fields[j]
    return float(profile.sum())


def _coerce_ensembles(ensembles, params: ModelParams) -> list[np.ndarray]:
    if len(ensembles) != params.n_parties:
        raise ValueError(f"expected {params.n_parties} ensembles, got {len(ensembles)}")
    out = []
    for e in ensembles:
        pos = e.positions if isinstance(e, ParticleEnsemble) else ParticleEnsemble(e).positions
        out.append(pos)
    return out


def _resolve_method(method: str, params: ModelParams, positions: list[np.ndarray]) -> str:
    if method not in ("auto", "exact", "spectral"):
        raise ValueError(f"unknown interaction method {method!r}")
    if method != "auto":
        return method
    worst = 0
    for i in range(params.n_parties):
        for subset, _ in tie_break_terms(params.n_parties, i):
            if len(subset) >= 3:
                tuples = int(np.prod([positions[j].size for j in subset]))
                worst = max(worst, tuples)
    return "exact" if worst <= EXACT_TUPLE_LIMIT else "spectral"


def _gradient_average(positions, params: ModelParams, party_index: int, resolved: str, spectral):
    acc = np.zeros(positions[party_index].size)
    for subset, coeff in tie_break_terms(params.n_parties, party_index):
        if len(subset) <= 2 or resolved == "exact":
            term = _exact_term_grad(params, subset, party_index, positions)
        else:
            term = _spectral_term_grad(params, subset, party_index, positions, spectral)
        acc = acc + coeff * term
    return acc


def _velocities(positions: list[np.ndarray], params: ModelParams, method: str) -> list[np.ndarray]:
    resolved = _resolve_method(method, params, positions)
    spectral = None
    if resolved == "spectral" and params.n_parties >= 3:
        spectral = _satisfaction_fields(positions, params)
    return [
        params.k * _gradient_average(positions, params, i, resolved, spectral)
        for i in range(params.n_parties)
    ]


def wasserstein_gradient(ensembles, params: ModelParams, party_index: int, method: str = "auto"):
    """Steepest-ascent direction of one party's vote share, per particle.

    For a particle at ``y`` this is the point-model vote gradient averaged
    over all opponent particle tuples.  The flow-speed constant ``k`` is
    applied by `step`, not here, so with single-particle opponents the
    result equals `grad_expected_votes` at that tuple.
    """
    positions = _coerce_ensembles(ensembles, params)
    if party_index < 0 or party_index >= params.n_parties:
        raise ValueError(f"party_index {party_index} out of range")
    resolved = _resolve_method(method, params, positions)
    spectral = None
    if resolved == "spectral" and params.n_parties >= 3:
        spectral = _satisfaction_fields(positions, params)
    return _gradient_average(positions, params, party_index, resolved, spectral)


def step(ensembles, params: ModelParams, tau: float, method: str = "auto"):
    """One pushforward step: move every particle by ``tau * k * velocity``.

    All parties move simultaneously from the pre-step state.  Raises
    `DivergenceError` if any particle leaves finite range.
    """
    if tau <= 0 or not math.isfinite(tau):
        raise ValueError(f"tau must be finite and positive, got {tau!r}")
    positions = _coerce_ensembles(ensembles, params)
    velocities = _velocities(positions, params, method)
    moved = []
    for pos, vel in zip(positions, velocities):
        new = pos + tau * vel
        if not np.all(np.isfinite(new)):
            raise DivergenceError("ensemble step produced non-finite positions")
        moved.append(ParticleEnsemble(new))
    return moved


def vote_shares(ensembles, params: ModelParams, method: str = "auto"):
    """Expected vote share per party plus the abstaining remainder.

    Each share averages the point-model expected votes over every
    particle tuple (own ensemble included); abstention is one minus the
    total share.
    """
    positions = _coerce_ensembles(ensembles, params)
    resolved = _resolve_method(method, params, positions)
    spectral = None
    values: dict[tuple[int, ...], float] = {}  # a subset's average is party-independent
    shares = np.empty(params.n_parties)
    for i in range(params.n_parties):
        total = 0.0
        for subset, coeff in tie_break_terms(params.n_parties, i):
            if subset not in values:
                if len(subset) <= 2 or resolved == "exact":
                    values[subset] = _exact_term_value(params, subset, positions)
                else:
                    if spectral is None:
                        spectral = _satisfaction_fields(positions, params)
                    values[subset] = _spectral_term_value(subset, spectral)
            total += coeff * values[subset]
        shares[i] = total
    return shares, float(1.0 - shares.sum())


def _ranks(pos: np.ndarray) -> np.ndarray:
    return np.argsort(pos, kind="stable")


def simulate(
    init,
    params: ModelParams,
    tau: float = 0.05,
    steps: int = 1000,
    record_every: int = 1,
    method: str = "auto",
    early_stop: bool = True,
) -> EnsembleTrajectory:
    """Run the ensemble flow and record snapshots with diagnostics.

    ``init`` is either an `InitSpec` (sampled here, deterministically per
    seed) or a ready list of ensembles.  Snapshots are recorded at step 0,
    every ``record_every`` steps, and at the last executed step.  With
    ``early_stop`` the run ends once the largest particle displacement
    stays below 1e-10 for 10 consecutive steps.
    """
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps!r}")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every!r}")
    if tau <= 0 or not math.isfinite(tau):
        raise ValueError(f"tau must be finite and positive, got {tau!r}")
    if isinstance(init, InitSpec):
        if len(init.parties) != params.n_parties:
            raise ValueError(
                f"init spec has {len(init.parties)} parties, model has {params.n_parties}"
            )
        current = sample_initial(init)
    else:
        current = [
            e if isinstance(e, ParticleEnsemble) else ParticleEnsemble(e) for e in init
        ]
        if len(current) != params.n_parties:
            raise ValueError(f"expected {params.n_parties} ensembles, got {len(current)}")
    initial_ranks = [_ranks(e.positions) for e in current]

    recorded_steps = [0]
    snapshots = [tuple(current)]
    quiet = 0
    early_stopped = False
    steps_run = 0
    for index in range(1, steps + 1):
        positions = [e.positions for e in current]
        velocities = _velocities(positions, params, method)
        moved = []
        displacement = 0.0
        for pos, vel in zip(positions, velocities):
            shift = tau * vel
            new = pos + shift
            if not np.all(np.isfinite(new)):
                raise DivergenceError(f"simulation diverged at step {index}", step=index)
            if shift.size:
                displacement = max(displacement, float(np.max(np.abs(shift))))
            moved.append(ParticleEnsemble(new))
        current = moved
        steps_run = index
        quiet = quiet + 1 if displacement < DISPLACEMENT_TOL else 0
        stopping = early_stop and quiet >= QUIET_STEPS
        if index % record_every == 0 or index == steps or stopping:
            recorded_steps.append(index)
            snapshots.append(tuple(current))
        if stopping:
            early_stopped = True
            break

    records = len(snapshots)
    n = params.n_parties
    means = np.empty((records, n))
    stds = np.empty((records, n))
    shares = np.empty((records, n))
    abstention = np.empty(records)
    w2_matrix = np.zeros((records, n, n))
    order_ok = np.empty((records, n), dtype=bool)
    for r, snap in enumerate(snapshots):
        for i, ensemble in enumerate(snap):
            means[r, i] = np.mean(ensemble.positions)
            stds[r, i] = np.std(ensemble.positions)
            order_ok[r, i] = bool(np.array_equal(_ranks(ensemble.positions), initial_ranks[i]))
        for i in range(n):
            for j in range(i + 1, n):
                dist = w2(snap[i], snap[j])
                w2_matrix[r, i, j] = dist
                w2_matrix[r, j, i] = dist
        shares[r], abstention[r] = vote_shares(snap, params, method)

    return EnsembleTrajectory(
        step_indices=np.asarray(recorded_steps, dtype=int),
        times=np.asarray(recorded_steps, dtype=float) * tau,
        snapshots=tuple(snapshots),
        means=means,
        stds=stds,
        vote_shares=shares,
        abstention=abstention,
        w2_matrix=w2_matrix,
        order_preserved=order_ok,
        steps_run=steps_run,
        early_stopped=early_stopped,
    )

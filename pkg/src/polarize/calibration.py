"""Fit the flow-speed and tolerance constants to observed trajectories.

Observations are per-period, per-party collections of candidate ideology
scores.  A candidate ``(k, sigma)`` is scored by simulating the particle
flow from the first observed period and accumulating squared
Wasserstein-2 distances to the observations at every later period:

    objective = (1/T) * sum_{t=1..T} sum_i W2(observed_i(t), model_i(t))^2

The search is a coarse log-spaced grid over the parameter box followed
by a Nelder-Mead refinement (in log space) from the best grid point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .ensembles import ParticleEnsemble, simulate
from .errors import DataFormatError, DivergenceError, FitError
from .kernels import ModelParams
from .metrics import w2

__all__ = [
    "ObservedTrajectory",
    "SimAlignment",
    "SearchSpec",
    "FitResult",
    "load_observed",
    "objective",
    "fit",
    "synthesize_observed",
    "write_observed_csv",
]


@dataclass(frozen=True)
class ObservedTrajectory:
    """Per-period, per-party ensembles of observed ideology scores.

    Periods are sorted ascending and parties lexicographically, so the
    trajectory is independent of input row order.
    """

    periods: tuple[int, ...]
    parties: tuple[str, ...]
    ensembles: tuple  # ensembles[period_index][party_index] -> ParticleEnsemble

    def __post_init__(self):
        if len(self.periods) < 1:
            raise ValueError("need at least one period")
        if len(self.parties) < 2:
            raise ValueError("need at least two parties")
        if list(self.periods) != sorted(self.periods):
            raise ValueError("periods must be sorted ascending")

    @property
    def n_periods(self) -> int:
        return len(self.periods)


@dataclass(frozen=True)
class SimAlignment:
    """How simulated steps line up with observed periods.

    One consecutive observed period corresponds to ``steps_per_period``
    pushforward steps of size ``tau``.  ``init_mode`` chooses whether the
    simulation starts from the raw first-period ensembles or from
    Gaussian resamples matching their mean and standard deviation.
    ``collapse_to_means`` reduces every ensemble to a single particle at
    its mean, turning the objective into squared mean error (the
    point-model fitting mode).
    """

    sigma0: float = 0.93
    steps_per_period: int = 1
    tau: float = 1.0
    method: str = "auto"
    init_mode: str = "raw"  # "raw" or "gaussian"
    resample_count: int | None = None
    resample_seed: int = 0
    collapse_to_means: bool = False

    def __post_init__(self):
        if self.sigma0 <= 0 or not math.isfinite(self.sigma0):
            raise ValueError("sigma0 must be finite and positive")
        if self.steps_per_period < 1:
            raise ValueError("steps_per_period must be >= 1")
        if self.tau <= 0 or not math.isfinite(self.tau):
            raise ValueError("tau must be finite and positive")
        if self.init_mode not in ("raw", "gaussian"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass(frozen=True)
class SearchSpec:
    """Search box and budget for `fit`.

    ``grid_points`` log-spaced values per axis seed the coarse stage; the
    Nelder-Mead stage uses reflection 1, expansion 2, contraction 0.5 and
    shrink 0.5, stopping when the simplex objective spread drops below
    ``fatol`` or after ``max_evaluations`` refinement evaluations.
    """

    k_bounds: tuple[float, float] = (1e-3, 10.0)
    sigma_bounds: tuple[float, float] = (0.05, 3.0)
    grid_points: int = 8
    max_evaluations: int = 500
    fatol: float = 1e-10
    simplex_step: float = 0.1  # initial simplex edge, in log10 units

    def __post_init__(self):
        for name, (lo, hi) in (("k_bounds", self.k_bounds), ("sigma_bounds", self.sigma_bounds)):
            if not (0 < lo < hi) or not math.isfinite(hi):
                raise ValueError(f"{name} must be a positive, ordered, finite interval")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.max_evaluations < 3:
            raise ValueError("max_evaluations must allow at least one simplex")


@dataclass(frozen=True)
class FitResult:
    """Calibrated constants with the achieved objective and search metadata."""

    k: float
    sigma: float
    objective: float
    evaluations: int
    converged: bool


def load_observed(path) -> ObservedTrajectory:
    """Read a ``period,party,score`` CSV into an observed trajectory.

    The header is mandatory; every row holds an integer period label, a
    party name, and one candidate's decimal ideology score.  Rows may
    appear in any order.  Raises `DataFormatError` naming the offending
    row on schema violations, or when some period is missing a party
    that other periods have.
    """
    rows: dict[int, dict[str, list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty file, expected a period,party,score header")
        if [h.strip().lower() for h in header] != ["period", "party", "score"]:
            raise DataFormatError(f"{path}: row 1: header must be 'period,party,score'")
        for number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataFormatError(f"{path}: row {number}: expected 3 columns, got {len(row)}")
            try:
                period = int(row[0].strip())
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {number}: period {row[0]!r} is not an integer"
                ) from None
            party = row[1].strip()
            if not party:
                raise DataFormatError(f"{path}: row {number}: empty party name")
            try:
                score = float(row[2].strip())
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {number}: score {row[2]!r} is not a number"
                ) from None
            if not math.isfinite(score):
                raise DataFormatError(f"{path}: row {number}: score must be finite")
            rows.setdefault(period, {}).setdefault(party, []).append(score)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    periods = tuple(sorted(rows))
    parties = tuple(sorted({party for by_party in rows.values() for party in by_party}))
    if len(parties) < 2:
        raise DataFormatError(f"{path}: need at least two parties, found {list(parties)}")
    ensembles = []
    for period in periods:
        row_parties = rows[period]
        missing = [party for party in parties if party not in row_parties]
        if missing:
            raise DataFormatError(f"{path}: period {period} is missing parties {missing}")
        ensembles.append(
            tuple(ParticleEnsemble(np.sort(row_parties[party])) for party in parties)
        )
    return ObservedTrajectory(periods=periods, parties=parties, ensembles=tuple(ensembles))


def _prepared(observed: ObservedTrajectory, align: SimAlignment):
    """Initial ensembles and per-period comparison targets under the alignment."""
    comparisons = observed.ensembles
    if align.collapse_to_means:
        comparisons = tuple(
            tuple(ParticleEnsemble.dirac(float(np.mean(e.positions))) for e in snap)
            for snap in comparisons
        )
    initial = list(comparisons[0])
    if align.init_mode == "gaussian" and not align.collapse_to_means:
        resampled = []
        for index, ensemble in enumerate(observed.ensembles[0]):
            rng = np.random.default_rng(
                np.random.SeedSequence(align.resample_seed, spawn_key=(index,))
            )
            count = align.resample_count or ensemble.size
            mean = float(np.mean(ensemble.positions))
            std = float(np.std(ensemble.positions))
            if std <= 0:
                resampled.append(ParticleEnsemble.dirac(mean, count))
            else:
                resampled.append(ParticleEnsemble(rng.normal(mean, std, count)))
        initial = resampled
    return initial, comparisons


def objective(
    candidate_k: float,
    candidate_sigma: float,
    observed: ObservedTrajectory,
    align: SimAlignment = SimAlignment(),
) -> float:
    """Mean squared Wasserstein-2 trajectory misfit of a candidate pair.

    Simulates from the first observed period with the candidate constants
    and sums squared distances to the observations at every later period.
    Raises `FitError` on fewer than two periods and re-raises simulation
    divergences with the candidate attached.
    """
    if candidate_k <= 0 or candidate_sigma <= 0:
        raise ValueError("candidate parameters must be positive")
    if observed.n_periods < 2:
        raise FitError("calibration needs at least 2 observed periods")
    params = ModelParams(
        sigma0=align.sigma0,
        sigma=candidate_sigma,
        k=candidate_k,
        n_parties=len(observed.parties),
    )
    initial, comparisons = _prepared(observed, align)
    total_steps = (observed.n_periods - 1) * align.steps_per_period
    try:
        run = simulate(
            initial,
            params,
            tau=align.tau,
            steps=total_steps,
            record_every=align.steps_per_period,
            method=align.method,
            early_stop=False,
        )
    except DivergenceError as err:
        raise DivergenceError(
            f"simulation diverged at k={candidate_k!r}, sigma={candidate_sigma!r}: {err}",
            step=err.step,
        ) from err
    total = 0.0
    for t in range(1, observed.n_periods):
        snap = run.snapshots[t]
        for i in range(len(observed.parties)):
            dist = w2(comparisons[t][i], snap[i])
            total += dist * dist
    return total / (observed.n_periods - 1)


def _nelder_mead(func, x0, step, fatol, max_evaluations):
    """Deterministic Nelder-Mead on R^2.

    Coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5.
    Stops when the simplex objective spread drops below ``fatol`` or the
    evaluation budget is reached (checked per iteration, so an iteration
    in progress may finish).
    """
    points = [
        np.array(x0, dtype=float),
        np.array(x0, dtype=float) + np.array([step, 0.0]),
        np.array(x0, dtype=float) + np.array([0.0, step]),
    ]
    values = [func(p) for p in points]
    evaluations = 3
    converged = False
    while True:
        order = sorted(range(3), key=lambda i: values[i])
        points = [points[i] for i in order]
        values = [values[i] for i in order]
        spread = values[2] - values[0]
        if spread < fatol:
            converged = True
            break
        if evaluations >= max_evaluations:
            break
        centroid = 0.5 * (points[0] + points[1])
        reflected = centroid + (centroid - points[2])
        f_reflected = func(reflected)
        evaluations += 1
        if f_reflected < values[0]:
            expanded = centroid + 2.0 * (centroid - points[2])
            f_expanded = func(expanded)
            evaluations += 1
            if f_expanded < f_reflected:
                points[2], values[2] = expanded, f_expanded
            else:
                points[2], values[2] = reflected, f_reflected
        elif f_reflected < values[1]:
            points[2], values[2] = reflected, f_reflected
        else:
            if f_reflected < values[2]:
                contracted = centroid + 0.5 * (reflected - centroid)
            else:
                contracted = centroid + 0.5 * (points[2] - centroid)
            f_contracted = func(contracted)
            evaluations += 1
            if f_contracted < min(f_reflected, values[2]):
                points[2], values[2] = contracted, f_contracted
            else:
                for i in (1, 2):
                    points[i] = points[0] + 0.5 * (points[i] - points[0])
                    values[i] = func(points[i])
                    evaluations += 1
    best = int(np.argmin(values))
    return points[best], values[best], evaluations, converged


def fit(
    observed: ObservedTrajectory,
    align: SimAlignment = SimAlignment(),
    search: SearchSpec = SearchSpec(),
) -> FitResult:
    """Two-stage deterministic search for the best ``(k, sigma)`` pair.

    Stage one evaluates the objective on a log-spaced grid over the
    search box; stage two refines from the best grid point with
    Nelder-Mead in log10 space, treating points outside the box as
    infinitely bad, so the result never leaves the bounds.  Raises
    `FitError` when every grid evaluation fails.
    """
    if observed.n_periods < 2:
        raise FitError("calibration needs at least 2 observed periods")
    k_lo, k_hi = search.k_bounds
    s_lo, s_hi = search.sigma_bounds
    k_grid = np.geomspace(k_lo, k_hi, search.grid_points)
    s_grid = np.geomspace(s_lo, s_hi, search.grid_points)
    failures = []
    best_value = math.inf
    best_pair = None
    grid_evaluations = 0
    for k in k_grid:
        for sigma in s_grid:
            grid_evaluations += 1
            try:
                value = objective(float(k), float(sigma), observed, align)
            except DivergenceError as err:
                failures.append(str(err))
                continue
            if value < best_value:
                best_value = value
                best_pair = (float(k), float(sigma))
    if best_pair is None:
        detail = "; ".join(failures[:3])
        raise FitError(f"every grid evaluation failed ({grid_evaluations} attempts): {detail}")

    log_lo = np.log10([k_lo, s_lo])
    log_hi = np.log10([k_hi, s_hi])
    cache: dict[tuple[float, float], float] = {}

    def boxed(x):
        key = (float(x[0]), float(x[1]))
        if key in cache:
            return cache[key]
        if np.any(x < log_lo) or np.any(x > log_hi):
            value = math.inf
        else:
            try:
                value = objective(10.0 ** x[0], 10.0 ** x[1], observed, align)
            except DivergenceError:
                value = math.inf
        cache[key] = value
        return value

    x0 = np.log10(best_pair)
    best_x, best_f, nm_evaluations, converged = _nelder_mead(
        boxed, x0, search.simplex_step, search.fatol, search.max_evaluations
    )
    if best_f <= best_value:
        k_best, s_best = 10.0 ** best_x[0], 10.0 ** best_x[1]
        value_best = best_f
    else:
        k_best, s_best = best_pair
        value_best = best_value
    return FitResult(
        k=float(k_best),
        sigma=float(s_best),
        objective=float(value_best),
        evaluations=grid_evaluations + nm_evaluations,
        converged=converged,
    )


def synthesize_observed(
    initial,
    params: ModelParams,
    align: SimAlignment,
    n_periods: int,
    first_period: int = 0,
    parties: tuple[str, ...] | None = None,
) -> ObservedTrajectory:
    """Generate a synthetic observed trajectory with the simulator itself.

    Useful for recovery experiments: data produced here is fit perfectly
    by the generating parameters under the same alignment.
    """
    if n_periods < 2:
        raise ValueError("need at least two periods")
    run = simulate(
        initial,
        params,
        tau=align.tau,
        steps=(n_periods - 1) * align.steps_per_period,
        record_every=align.steps_per_period,
        method=align.method,
        early_stop=False,
    )
    if parties is None:
        parties = tuple(f"P{i + 1}" for i in range(params.n_parties))
    ensembles = tuple(
        tuple(ParticleEnsemble(np.sort(e.positions)) for e in snap) for snap in run.snapshots
    )
    periods = tuple(first_period + t for t in range(n_periods))
    return ObservedTrajectory(periods=periods, parties=parties, ensembles=ensembles)


def write_observed_csv(observed: ObservedTrajectory, path) -> None:
    """Write a trajectory back out in the ``period,party,score`` schema."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["period", "party", "score"])
        for t, period in enumerate(observed.periods):
            for i, party in enumerate(observed.parties):
                for score in observed.ensembles[t][i].positions:
                    writer.writerow([period, party, repr(float(score))])

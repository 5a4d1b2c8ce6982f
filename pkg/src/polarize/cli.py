"""Command-line front end: simulate, equilibria, fit, distance.

Run configurations are flat ``key = value`` text files with ``#``
comments; unknown keys are rejected.  All floating-point output uses the
shortest round-trip decimal representation, so repeated runs of the same
configuration produce byte-identical files.

Exit codes: 0 success, 1 input/configuration error, 2 simulation
divergence, 3 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .calibration import SearchSpec, SimAlignment, fit, load_observed
from .ensembles import InitSpec, ParticleEnsemble, PartyInit, simulate
from .errors import ConfigError, DataFormatError, DivergenceError, FitError
from .kernels import ModelParams
from .metrics import summarize, w2
from .point_flow import classify_equilibria, polarized_equilibrium

__all__ = ["main"]

# Disclose proximity to the bifurcation within this margin of sigma/sigma0.
NEAR_CRITICAL_MARGIN = 1e-3


def _fmt(value: float) -> str:
    """Shortest decimal that round-trips to the same float."""
    return repr(float(value))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _read_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    entries: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{path}: line {number}: empty key or value")
        if key in entries:
            raise ConfigError(f"{path}: line {number}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _take(entries, key, convert, default=None, required=False):
    if key not in entries:
        if required:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    raw = entries.pop(key)
    try:
        return convert(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r} has invalid value {raw!r}") from None


def _parse_party(entries, index: int) -> PartyInit:
    prefix = f"party{index}."
    kind = _take(entries, prefix + "init", str, required=True)
    seed = _take(entries, prefix + "seed", int)
    if kind == "explicit":
        raw = _take(entries, prefix + "positions", str, required=True)
        positions = tuple(float(chunk) for chunk in raw.split(",") if chunk.strip())
        return PartyInit(kind=kind, positions=positions, seed=seed)
    mean = _take(entries, prefix + "mean", float, required=True)
    count = _take(entries, prefix + "count", int, required=True)
    if kind == "dirac":
        return PartyInit(kind=kind, mean=mean, count=count, seed=seed)
    std = _take(entries, prefix + "std", float, required=True)
    if kind == "gaussian":
        return PartyInit(kind=kind, mean=mean, std=std, count=count, seed=seed)
    lo = _take(entries, prefix + "lo", float, required=True)
    hi = _take(entries, prefix + "hi", float, required=True)
    return PartyInit(kind=kind, mean=mean, std=std, lo=lo, hi=hi, count=count, seed=seed)


def _reject_unknown(entries, path):
    if entries:
        unknown = ", ".join(sorted(entries))
        raise ConfigError(f"{path}: unknown config keys: {unknown}")


def _load_run_config(path, seed_override=None):
    entries = _read_config(path)
    sigma0 = _take(entries, "sigma0", float, required=True)
    sigma = _take(entries, "sigma", float, required=True)
    k = _take(entries, "k", float, required=True)
    n_parties = _take(entries, "n_parties", int, required=True)
    tau = _take(entries, "tau", float, required=True)
    steps = _take(entries, "steps", int, required=True)
    record_every = _take(entries, "record_every", int, default=1)
    seed = _take(entries, "seed", int, default=0)
    method = _take(entries, "interaction", str, default="auto")
    out_dir = _take(entries, "out_dir", str)
    try:
        params = ModelParams(sigma0=sigma0, sigma=sigma, k=k, n_parties=n_parties)
        parties = tuple(_parse_party(entries, i) for i in range(1, n_parties + 1))
        init = InitSpec(parties=parties, seed=seed_override if seed_override is not None else seed)
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None
    _reject_unknown(entries, path)
    return params, init, tau, steps, record_every, method, out_dir


def _write_trajectory_csv(path, trajectory):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "time", "party", "particle_index", "position"])
        for r, step_index in enumerate(trajectory.step_indices):
            time = trajectory.times[r]
            for party, ensemble in enumerate(trajectory.snapshots[r], start=1):
                for p, position in enumerate(ensemble.positions):
                    writer.writerow([int(step_index), _fmt(time), party, p, _fmt(position)])


def _write_diagnostics_csv(path, trajectory, n_parties):
    pair_columns = [
        (i, j) for i in range(1, n_parties + 1) for j in range(i + 1, n_parties + 1)
    ]
    header = ["step", "time", "party", "mean", "std", "vote_share", "abstention"]
    header += [f"w2_{i}_{j}" for i, j in pair_columns]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for r, step_index in enumerate(trajectory.step_indices):
            for party in range(1, n_parties + 1):
                row = [
                    int(step_index),
                    _fmt(trajectory.times[r]),
                    party,
                    _fmt(trajectory.means[r, party - 1]),
                    _fmt(trajectory.stds[r, party - 1]),
                    _fmt(trajectory.vote_shares[r, party - 1]),
                    _fmt(trajectory.abstention[r]),
                ]
                row += [_fmt(trajectory.w2_matrix[r, i - 1, j - 1]) for i, j in pair_columns]
                writer.writerow(row)


def _cmd_simulate(args) -> int:
    params, init, tau, steps, record_every, method, cfg_out = _load_run_config(
        args.config, seed_override=args.seed
    )
    out_dir = Path(args.out or cfg_out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    trajectory = simulate(
        init, params, tau=tau, steps=steps, record_every=record_every, method=method
    )
    _write_trajectory_csv(out_dir / "trajectory.csv", trajectory)
    _write_diagnostics_csv(out_dir / "diagnostics.csv", trajectory, params.n_parties)
    last = -1
    summary = {
        "steps_run": int(trajectory.steps_run),
        "final_time": float(trajectory.times[last]),
        "early_stopped": bool(trajectory.early_stopped),
        "means": [float(v) for v in trajectory.means[last]],
        "stds": [float(v) for v in trajectory.stds[last]],
        "vote_shares": [float(v) for v in trajectory.vote_shares[last]],
        "abstention": float(trajectory.abstention[last]),
        "w2": {
            f"w2_{i + 1}_{j + 1}": float(trajectory.w2_matrix[last, i, j])
            for i in range(params.n_parties)
            for j in range(i + 1, params.n_parties)
        },
    }
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        pairs = " ".join(f"{name}={_fmt(value)}" for name, value in summary["w2"].items())
        print(
            f"final: step={summary['steps_run']} time={_fmt(summary['final_time'])} "
            f"{pairs} abstention={_fmt(summary['abstention'])} "
            f"means={[round(m, 6) for m in summary['means']]} "
            f"stds={[round(s, 6) for s in summary['stds']]}"
        )
    return 0


def _cmd_equilibria(args) -> int:
    sigma, sigma0 = args.sigma, args.sigma0
    if sigma <= 0 or sigma0 <= 0:
        raise ConfigError("sigma and sigma0 must both be positive")
    params = ModelParams(sigma0=sigma0, sigma=sigma, k=1.0, n_parties=2)
    report = classify_equilibria(params)
    ratio = sigma / sigma0
    near_critical = abs(ratio - report.critical_ratio) < NEAR_CRITICAL_MARGIN
    payload = {
        "sigma": sigma,
        "sigma0": sigma0,
        "ratio": ratio,
        "critical_ratio": report.critical_ratio,
        "regime": report.regime,
        "near_critical": near_critical,
        "equilibria": [
            {"positions": [float(v) for v in state], "stability": tag}
            for state, tag in report.equilibria
        ],
    }
    if report.regime == "polarized":
        payload["polarized_position"] = polarized_equilibrium(params)
    if args.json:
        print(json.dumps(payload, sort_keys=True))
        return 0
    print(f"regime: {report.regime}")
    print(f"sigma/sigma0 = {_fmt(ratio)}  critical ratio = {_fmt(report.critical_ratio)}")
    if near_critical:
        print("note: ratio is within 0.001 of the critical ratio; regime is borderline")
    for state, tag in report.equilibria:
        coords = ", ".join(_fmt(v) for v in state)
        print(f"equilibrium ({coords}): {tag}")
    return 0


def _load_fit_config(path):
    if path is None:
        return SimAlignment(), SearchSpec()
    entries = _read_config(path)
    mode = _take(entries, "mode", str, default="ensemble")
    if mode not in ("ensemble", "point"):
        raise ConfigError(f"{path}: mode must be 'ensemble' or 'point', got {mode!r}")
    try:
        align = SimAlignment(
            sigma0=_take(entries, "sigma0", float, default=0.93),
            steps_per_period=_take(entries, "steps_per_period", int, default=1),
            tau=_take(entries, "tau", float, default=1.0),
            method=_take(entries, "interaction", str, default="auto"),
            init_mode=_take(entries, "init", str, default="raw"),
            resample_count=_take(entries, "resample_count", int),
            resample_seed=_take(entries, "resample_seed", int, default=0),
            collapse_to_means=(mode == "point"),
        )
        search = SearchSpec(
            k_bounds=(
                _take(entries, "k_min", float, default=1e-3),
                _take(entries, "k_max", float, default=10.0),
            ),
            sigma_bounds=(
                _take(entries, "sigma_min", float, default=0.05),
                _take(entries, "sigma_max", float, default=3.0),
            ),
            grid_points=_take(entries, "grid_points", int, default=8),
            max_evaluations=_take(entries, "max_evals", int, default=500),
            fatol=_take(entries, "fatol", float, default=1e-10),
            simplex_step=_take(entries, "simplex_step", float, default=0.1),
        )
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None
    _reject_unknown(entries, path)
    return align, search


def _cmd_fit(args) -> int:
    observed = load_observed(args.data)
    align, search = _load_fit_config(args.config)
    if args.seed is not None:
        align = dataclasses.replace(align, resample_seed=args.seed)
    result = fit(observed, align, search)
    print(
        json.dumps(
            {
                "k": result.k,
                "sigma": result.sigma,
                "objective": result.objective,
                "evaluations": result.evaluations,
                "converged": result.converged,
            },
            sort_keys=True,
        )
    )
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    params = ModelParams(
        sigma0=align.sigma0, sigma=result.sigma, k=result.k, n_parties=len(observed.parties)
    )
    from .calibration import _prepared  # fitted-trajectory replay uses the same alignment

    initial, comparisons = _prepared(observed, align)
    run = simulate(
        initial,
        params,
        tau=align.tau,
        steps=(observed.n_periods - 1) * align.steps_per_period,
        record_every=align.steps_per_period,
        method=align.method,
        early_stop=False,
    )
    _write_trajectory_csv(out_dir / "fitted_trajectory.csv", run)
    with open(out_dir / "fit_comparison.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["period", "party", "observed_mean", "observed_std", "model_mean", "model_std", "w2"]
        )
        for t, period in enumerate(observed.periods):
            for i, party in enumerate(observed.parties):
                obs = summarize(comparisons[t][i])
                model = summarize(run.snapshots[t][i])
                writer.writerow(
                    [
                        period,
                        party,
                        _fmt(obs.mean),
                        _fmt(obs.std),
                        _fmt(model.mean),
                        _fmt(model.std),
                        _fmt(w2(comparisons[t][i], run.snapshots[t][i])),
                    ]
                )
    return 0


def _read_positions_file(path, selector):
    if selector is not None:
        observed = load_observed(path)
        period_raw, _, party = selector.partition(":")
        try:
            period = int(period_raw)
        except ValueError:
            raise ConfigError(f"selector {selector!r} must look like PERIOD:PARTY") from None
        if not party:
            raise ConfigError(f"selector {selector!r} must look like PERIOD:PARTY")
        if period not in observed.periods:
            raise DataFormatError(f"{path}: no period {period}")
        if party not in observed.parties:
            raise DataFormatError(f"{path}: no party {party!r}")
        t = observed.periods.index(period)
        i = observed.parties.index(party)
        return observed.ensembles[t][i]
    values = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise DataFormatError(f"cannot read {path}: {err}") from None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise DataFormatError(f"{path}: line {number}: {line!r} is not a number") from None
    if not values:
        raise DataFormatError(f"{path}: no positions found")
    return ParticleEnsemble(np.asarray(values))


def _cmd_distance(args) -> int:
    a = _read_positions_file(args.file_a, args.select_a)
    b = _read_positions_file(args.file_b, args.select_b)
    distance = w2(a, b)
    text = np.format_float_positional(
        distance, precision=12, unique=False, fractional=False, trim="k"
    )
    if args.json:
        print(json.dumps({"w2": distance, "formatted": text}))
    else:
        print(text)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="polarize",
        description="Simulate satisficing-vote party dynamics, full distributions included.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a particle simulation from a config file")
    p_sim.add_argument("--config", required=True, help="flat key=value run configuration")
    p_sim.add_argument("--out", help="output directory (default: config out_dir or cwd)")
    p_sim.add_argument("--seed", type=int, help="override the config seed")
    p_sim.add_argument("--json", action="store_true", help="print the summary as JSON")
    p_sim.add_argument(
        "--threads",
        type=int,
        default=1,
        help="reserved; results never depend on thread count",
    )
    p_sim.set_defaults(func=_cmd_simulate)

    p_eq = sub.add_parser("equilibria", help="report equilibria and regime for two parties")
    p_eq.add_argument("sigma", type=float, help="voter tolerance")
    p_eq.add_argument("sigma0", type=float, help="public ideology standard deviation")
    p_eq.add_argument("--json", action="store_true")
    p_eq.set_defaults(func=_cmd_equilibria)

    p_fit = sub.add_parser("fit", help="calibrate k and sigma against a period,party,score CSV")
    p_fit.add_argument("data", help="observed trajectory CSV")
    p_fit.add_argument("--config", help="flat key=value fit configuration (optional)")
    p_fit.add_argument("--out", help="directory for fitted-model comparison files")
    p_fit.add_argument("--seed", type=int, help="override the resample seed (gaussian init mode)")
    p_fit.add_argument("--json", action="store_true", help="(result is always JSON)")
    p_fit.add_argument("--threads", type=int, default=1, help="reserved")
    p_fit.set_defaults(func=_cmd_fit)

    p_dist = sub.add_parser("distance", help="Wasserstein-2 distance between two samples")
    p_dist.add_argument("file_a", help="positions file (one number per line) or dataset CSV")
    p_dist.add_argument("file_b", help="positions file (one number per line) or dataset CSV")
    p_dist.add_argument("--select-a", help="PERIOD:PARTY slice when file_a is a dataset CSV")
    p_dist.add_argument("--select-b", help="PERIOD:PARTY slice when file_b is a dataset CSV")
    p_dist.add_argument("--json", action="store_true")
    p_dist.set_defaults(func=_cmd_distance)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
            raise ConfigError("--threads must be >= 1")
        return args.func(args)
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FitError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ConfigError, DataFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line behavior: exit codes, file outputs, determinism."""

import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from polarize import ModelParams, ParticleEnsemble, vote_shares, w2
from polarize.cli import main

REPO = Path(__file__).resolve().parent.parent

SMALL_CONFIG = """\
sigma0 = 0.93
sigma = 0.6
k = 0.5
n_parties = 2
tau = 0.05
steps = 30
record_every = 10
seed = 11

party1.init = truncated-gaussian
party1.mean = -0.25
party1.std = 0.15
party1.lo = -0.8
party1.hi = 0.0
party1.count = 25

party2.init = truncated-gaussian
party2.mean = 0.25
party2.std = 0.15
party2.lo = 0.0
party2.hi = 0.8
party2.count = 25
"""


def write_config(tmp_path, text=SMALL_CONFIG, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestSimulateCommand:
    def test_writes_outputs_and_summary(self, tmp_path, capsys):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "trajectory.csv").exists()
        assert (out / "diagnostics.csv").exists()
        printed = capsys.readouterr().out
        assert printed.startswith("final:") and "w2_1_2=" in printed

    def test_json_summary(self, tmp_path, capsys):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(config), "--out", str(out), "--json"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["steps_run"] == 30
        assert "w2_1_2" in summary["w2"]

    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        config = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(config), "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(config), "--out", str(out_b)]) == 0
        capsys.readouterr()
        for name in ("trajectory.csv", "diagnostics.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_override_changes_output(self, tmp_path, capsys):
        config = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(config), "--out", str(out_a)]) == 0
        assert (
            main(["simulate", "--config", str(config), "--out", str(out_b), "--seed", "99"]) == 0
        )
        capsys.readouterr()
        assert (out_a / "trajectory.csv").read_bytes() != (out_b / "trajectory.csv").read_bytes()

    def test_diagnostics_recomputable_from_trajectory(self, tmp_path, capsys):
        # Independent recomputation: parse the particle positions back and
        # rebuild every diagnostics column from scratch.
        config = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
        capsys.readouterr()
        by_step: dict[int, dict[int, list[float]]] = {}
        with open(out / "trajectory.csv", newline="") as handle:
            for row in csv.DictReader(handle):
                by_step.setdefault(int(row["step"]), {}).setdefault(
                    int(row["party"]), []
                ).append(float(row["position"]))
        params = ModelParams(sigma0=0.93, sigma=0.6, k=0.5)
        with open(out / "diagnostics.csv", newline="") as handle:
            for row in csv.DictReader(handle):
                particles = by_step[int(row["step"])]
                ensembles = [ParticleEnsemble(particles[i]) for i in (1, 2)]
                party = int(row["party"])
                positions = np.array(particles[party])
                assert abs(float(row["mean"]) - positions.mean()) <= 1e-12
                assert abs(float(row["std"]) - positions.std()) <= 1e-12
                assert abs(float(row["w2_1_2"]) - w2(ensembles[0], ensembles[1])) <= 1e-12
                shares, abstention = vote_shares(ensembles, params)
                assert abs(float(row["vote_share"]) - shares[party - 1]) <= 1e-12
                assert abs(float(row["abstention"]) - abstention) <= 1e-12

    def test_invalid_sigma_exits_1(self, tmp_path, capsys):
        config = write_config(tmp_path, SMALL_CONFIG.replace("sigma = 0.6", "sigma = -0.6"))
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "o")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_key_exits_1(self, tmp_path, capsys):
        config = write_config(tmp_path, SMALL_CONFIG + "\nwarp_speed = 9\n")
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "o")]) == 1
        assert "unknown config keys" in capsys.readouterr().err

    def test_missing_config_exits_1(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 1
        capsys.readouterr()

    def test_divergence_exits_2(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            SMALL_CONFIG.replace("k = 0.5", "k = 1e308").replace("tau = 0.05", "tau = 1e8"),
        )
        with np.errstate(over="ignore", invalid="ignore"):
            code = main(["simulate", "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "diverged" in capsys.readouterr().err

    def test_bundled_configs_parse(self):
        from polarize.cli import _load_run_config

        for name in (
            "paper_nominal.cfg",
            "paper_nominal_n100.cfg",
            "consensus.cfg",
            "three_party.cfg",
        ):
            params, init, tau, steps, record_every, method, out_dir = _load_run_config(
                REPO / "configs" / name
            )
            assert params.sigma0 == 0.93 and tau == 0.05


class TestEquilibriaCommand:
    def test_polarized(self, capsys):
        assert main(["equilibria", "0.6", "0.93", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["regime"] == "polarized"
        assert payload["polarized_position"] == pytest.approx(0.3339480, abs=1e-6)
        assert len(payload["equilibria"]) == 3
        stabilities = {
            tuple(round(v, 5) for v in item["positions"]): item["stability"]
            for item in payload["equilibria"]
        }
        assert stabilities[(0.0, 0.0)] == "unstable"

    def test_consensus(self, capsys):
        assert main(["equilibria", "1.0", "0.93", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["regime"] == "consensus"
        assert len(payload["equilibria"]) == 1
        assert payload["equilibria"][0]["stability"] == "stable"

    def test_near_critical_disclosure(self, capsys):
        sigma = 0.807 * 0.93
        assert main(["equilibria", str(sigma), "0.93", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["near_critical"] is True
        assert payload["critical_ratio"] == pytest.approx(0.80738, abs=5e-5)

    def test_human_output_mentions_critical_ratio(self, capsys):
        assert main(["equilibria", "0.6", "0.93"]) == 0
        out = capsys.readouterr().out
        assert "critical ratio" in out and "polarized" in out

    def test_invalid_input_exits_1(self, capsys):
        assert main(["equilibria", "-0.5", "0.93"]) == 1
        capsys.readouterr()


class TestDistanceCommand:
    def write_positions(self, path, values):
        path.write_text("\n".join(str(v) for v in values) + "\n", encoding="utf-8")
        return path

    def test_identical_files(self, tmp_path, capsys):
        a = self.write_positions(tmp_path / "a.txt", [0.1, -0.4, 0.7])
        assert main(["distance", str(a), str(a)]) == 0
        assert float(capsys.readouterr().out.strip()) == 0.0

    def test_sorted_coupling_value(self, tmp_path, capsys):
        a = self.write_positions(tmp_path / "a.txt", [0.0, 1.0])
        b = self.write_positions(tmp_path / "b.txt", [2.0, 3.0])
        assert main(["distance", str(a), str(b)]) == 0
        out = capsys.readouterr().out.strip()
        assert float(out) == pytest.approx(2.0, abs=1e-12)
        assert out == "2.00000000000"  # 12 significant digits

    def test_unequal_sizes_quantile_coupling(self, tmp_path, capsys):
        a = self.write_positions(tmp_path / "a.txt", [0.0])
        b = self.write_positions(tmp_path / "b.txt", [-1.0, 1.0])
        assert main(["distance", str(a), str(b)]) == 0
        assert float(capsys.readouterr().out.strip()) == pytest.approx(1.0, abs=1e-12)

    def test_dataset_slices(self, tmp_path, capsys):
        data = tmp_path / "scores.csv"
        data.write_text(
            "period,party,score\n1861,D,-0.2\n1861,D,-0.4\n1861,R,0.3\n1861,R,0.5\n",
            encoding="utf-8",
        )
        code = main(
            [
                "distance",
                str(data),
                str(data),
                "--select-a",
                "1861:D",
                "--select-b",
                "1861:R",
            ]
        )
        assert code == 0
        expected = math.sqrt(((0.3 - -0.4) ** 2 + (0.5 - -0.2) ** 2) / 2)
        assert float(capsys.readouterr().out.strip()) == pytest.approx(expected, abs=1e-12)

    def test_missing_file_exits_1(self, tmp_path, capsys):
        a = self.write_positions(tmp_path / "a.txt", [0.0])
        assert main(["distance", str(a), str(tmp_path / "gone.txt")]) == 1
        capsys.readouterr()

    def test_garbage_content_exits_1(self, tmp_path, capsys):
        a = self.write_positions(tmp_path / "a.txt", [0.0])
        bad = tmp_path / "bad.txt"
        bad.write_text("zero point five\n", encoding="utf-8")
        assert main(["distance", str(a), str(bad)]) == 1
        capsys.readouterr()


FIT_CONFIG = """\
sigma0 = 0.93
steps_per_period = 1
tau = 1.0
k_min = 0.05
k_max = 2.0
sigma_min = 0.2
sigma_max = 1.5
grid_points = 5
max_evals = 200
"""


class TestFitCommand:
    def make_dataset(self, tmp_path, n_periods=8, count=60):
        from polarize import (
            InitSpec,
            PartyInit,
            SimAlignment,
            sample_initial,
            synthesize_observed,
            write_observed_csv,
        )

        init = sample_initial(
            InitSpec(
                parties=(
                    PartyInit(
                        kind="truncated-gaussian",
                        mean=-0.25,
                        std=0.15,
                        lo=-0.8,
                        hi=0.0,
                        count=count,
                    ),
                    PartyInit(
                        kind="truncated-gaussian",
                        mean=0.25,
                        std=0.15,
                        lo=0.0,
                        hi=0.8,
                        count=count,
                    ),
                ),
                seed=5,
            )
        )
        observed = synthesize_observed(
            init,
            ModelParams(sigma0=0.93, sigma=0.6, k=0.5),
            SimAlignment(sigma0=0.93, steps_per_period=1, tau=1.0),
            n_periods,
            first_period=1861,
            parties=("D", "R"),
        )
        target = tmp_path / "observed.csv"
        write_observed_csv(observed, target)
        return target

    def test_recovers_generating_parameters(self, tmp_path, capsys):
        data = self.make_dataset(tmp_path)
        config = tmp_path / "fit.cfg"
        config.write_text(FIT_CONFIG, encoding="utf-8")
        out = tmp_path / "fitout"
        code = main(["fit", str(data), "--config", str(config), "--out", str(out)])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert abs(result["k"] - 0.5) / 0.5 <= 0.05
        assert abs(result["sigma"] - 0.6) / 0.6 <= 0.05
        assert (out / "fitted_trajectory.csv").exists()
        assert (out / "fit_comparison.csv").exists()
        with open(out / "fit_comparison.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 8 * 2

    def test_malformed_csv_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("period,party,score\n1861,D,not-a-number\n", encoding="utf-8")
        assert main(["fit", str(bad)]) == 1
        assert "row 2" in capsys.readouterr().err

    def test_single_period_exits_3(self, tmp_path, capsys):
        single = tmp_path / "single.csv"
        single.write_text("period,party,score\n1861,D,-0.2\n1861,R,0.3\n", encoding="utf-8")
        assert main(["fit", str(single)]) == 3
        assert "2 observed periods" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["polarimetry"]) == 1
        capsys.readouterr()

    def test_bad_threads_exits_1(self, tmp_path, capsys):
        config = write_config(tmp_path)
        assert main(["simulate", "--config", str(config), "--threads", "0"]) == 1
        capsys.readouterr()

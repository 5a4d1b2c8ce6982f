"""Point-model equilibria, bifurcation, and trajectory behavior."""

import numpy as np
import pytest

from polarize import (
    ConsensusRegimeError,
    DivergenceError,
    ModelParams,
    classify_equilibria,
    critical_ratio,
    expected_votes_point,
    grad_expected_votes,
    integrate_point_flow,
    polarized_equilibrium,
    step_halving_gap,
)
from polarize.point_flow import _ratio_polynomial

NOMINAL = ModelParams(sigma0=0.93, sigma=0.6, k=0.5)
TOLERANT = ModelParams(sigma0=0.93, sigma=1.0, k=0.5)


class TestCriticalRatio:
    def test_reported_value(self):
        assert critical_ratio() == pytest.approx(0.807, abs=5e-4)

    def test_polynomial_residual(self):
        assert abs(_ratio_polynomial(critical_ratio())) <= 1e-10

    def test_bracket(self):
        # Direct sign change pins the root inside (0.80, 0.81).
        assert _ratio_polynomial(0.80) < 0 < _ratio_polynomial(0.81)
        assert 0.80 < critical_ratio() < 0.81


class TestPolarizedEquilibrium:
    def test_nominal_value(self):
        # Frozen from direct evaluation of the equilibrium formula; the
        # doubled value matches the reported long-run inter-party distance.
        ystar = polarized_equilibrium(NOMINAL)
        assert ystar == pytest.approx(0.3339480, abs=1e-6)
        assert 0.66 <= 2 * ystar <= 0.68

    def test_is_stationary(self):
        ystar = polarized_equilibrium(NOMINAL)
        assert abs(grad_expected_votes([ystar, -ystar], NOMINAL, 0)) <= 1e-10

    def test_consensus_regime_raises(self):
        params = ModelParams(sigma0=0.93, sigma=0.8, k=0.5)
        assert params.sigma / params.sigma0 > critical_ratio()
        with pytest.raises(ConsensusRegimeError):
            polarized_equilibrium(params)


class TestClassifyEquilibria:
    def test_polarized_regime(self):
        report = classify_equilibria(NOMINAL)
        assert report.regime == "polarized"
        assert len(report.equilibria) == 3
        tags = {tuple(np.round(state, 6)): tag for state, tag in report.equilibria}
        ystar = round(polarized_equilibrium(NOMINAL), 6)
        assert tags[(0.0, 0.0)] == "unstable"
        assert tags[(ystar, -ystar)] == "stable"
        assert tags[(-ystar, ystar)] == "stable"

    def test_consensus_regime(self):
        report = classify_equilibria(TOLERANT)
        assert report.regime == "consensus"
        assert len(report.equilibria) == 1
        state, tag = report.equilibria[0]
        assert np.allclose(state, 0.0)
        assert tag == "stable"

    def test_mirror_symmetry(self):
        report = classify_equilibria(NOMINAL)
        asymmetric = [state for state, _ in report.equilibria if abs(state[0]) > 1e-12]
        assert np.allclose(asymmetric[0], -asymmetric[1])

    def test_regime_boundary_is_critical_ratio(self):
        report = classify_equilibria(NOMINAL)
        assert (NOMINAL.sigma / NOMINAL.sigma0 < report.critical_ratio) == (
            report.regime == "polarized"
        )


class TestIntegration:
    def test_converges_to_polarized_equilibrium(self):
        ystar = polarized_equilibrium(NOMINAL)
        trajectory = integrate_point_flow([-0.25, 0.25], NOMINAL, dt=0.01, steps=12000)
        assert np.max(np.abs(trajectory.final - [-ystar, ystar])) <= 1e-4

    def test_mirrored_start_reaches_mirrored_equilibrium(self):
        ystar = polarized_equilibrium(NOMINAL)
        trajectory = integrate_point_flow([0.25, -0.25], NOMINAL, dt=0.01, steps=12000)
        assert np.max(np.abs(trajectory.final - [ystar, -ystar])) <= 1e-4

    def test_origin_is_invariant(self):
        trajectory = integrate_point_flow([0.0, 0.0], NOMINAL, dt=0.01, steps=100)
        assert np.all(trajectory.states == 0.0)

    def test_consensus_collapse(self):
        trajectory = integrate_point_flow([-0.25, 0.25], TOLERANT, dt=0.01, steps=20000)
        assert np.max(np.abs(trajectory.final)) <= 1e-3

    def test_mirror_commutes_exactly(self):
        # The flow commutes with (y1, y2) -> (-y2, -y1) including round-off.
        forward = integrate_point_flow([-0.31, 0.22], NOMINAL, dt=0.02, steps=400)
        mirrored = integrate_point_flow([-0.22, 0.31], NOMINAL, dt=0.02, steps=400)
        assert np.array_equal(forward.states, -mirrored.states[:, ::-1])

    def test_single_euler_step_is_ascent(self):
        trajectory = integrate_point_flow([-0.25, 0.25], NOMINAL, dt=0.01, steps=500)
        for t in range(0, 500, 50):
            before = trajectory.states[t]
            after = trajectory.states[t + 1]
            frozen_opponent = [after[0], before[1]]
            assert expected_votes_point(frozen_opponent, NOMINAL, 0) >= expected_votes_point(
                before, NOMINAL, 0
            ) - 1e-14
            frozen_own = [before[0], after[1]]
            assert expected_votes_point(frozen_own, NOMINAL, 1) >= expected_votes_point(
                before, NOMINAL, 1
            ) - 1e-14

    def test_stability_tags_match_long_run_behavior(self):
        report = classify_equilibria(NOMINAL)
        for state, tag in report.equilibria:
            perturbed = np.array(state) + np.array([1e-3, -1.2e-3])
            final = integrate_point_flow(perturbed, NOMINAL, dt=0.02, steps=8000).final
            drifted = np.max(np.abs(final - state))
            if tag == "stable":
                assert drifted <= 1e-4
            else:
                assert drifted > 1e-2

    def test_rk4_agrees_with_small_euler(self):
        euler = integrate_point_flow([-0.25, 0.25], NOMINAL, dt=0.001, steps=2000)
        rk4 = integrate_point_flow([-0.25, 0.25], NOMINAL, dt=0.01, steps=200, method="rk4")
        assert np.max(np.abs(euler.final - rk4.final)) <= 1e-6

    def test_step_halving_guard(self):
        # At the convergence horizon the halving gap collapses; mid-transit
        # the default step carries a few-1e-6 of first-order Euler error.
        assert step_halving_gap([-0.25, 0.25], NOMINAL, dt=0.01, steps=12000) <= 1e-6
        assert step_halving_gap([-0.25, 0.25], NOMINAL, dt=0.01, steps=3000) <= 1e-5

    def test_three_party_flow_runs(self):
        params = ModelParams(sigma0=0.93, sigma=0.6, k=0.5, n_parties=3)
        trajectory = integrate_point_flow([-0.25, 0.25, 0.0], params, dt=0.05, steps=2000)
        final = trajectory.final
        assert final[0] < -0.5 and final[1] > 0.5 and abs(final[2]) < 0.1

    def test_divergence_reports_step(self):
        crazy = ModelParams(sigma0=0.93, sigma=0.6, k=1e308)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceError) as failure:
                integrate_point_flow([-0.25, 0.25], crazy, dt=1e6, steps=50)
        assert failure.value.step is not None

    def test_input_validation(self):
        with pytest.raises(ValueError):
            integrate_point_flow([0.0], NOMINAL, dt=0.01, steps=10)
        with pytest.raises(ValueError):
            integrate_point_flow([0.0, 0.0], NOMINAL, dt=-0.01, steps=10)
        with pytest.raises(ValueError):
            integrate_point_flow([0.0, 0.0], NOMINAL, dt=0.01, steps=10, method="leapfrog")

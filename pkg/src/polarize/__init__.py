"""Satisficing-vote party dynamics over full ideological distributions.

Parties are probability distributions on a one-dimensional ideology
axis, represented as particle ensembles.  Each party climbs the gradient
of its expected vote share under a satisficing electorate; the library
evaluates the vote kernels in closed form, integrates the point and
ensemble flows, measures polarization with exact 1-D Wasserstein-2
distances, and calibrates the flow constants against observed
trajectories.
"""

from .calibration import (
    FitResult,
    ObservedTrajectory,
    SearchSpec,
    SimAlignment,
    fit,
    load_observed,
    objective,
    synthesize_observed,
    write_observed_csv,
)
from .ensembles import (
    EnsembleTrajectory,
    InitSpec,
    ParticleEnsemble,
    PartyInit,
    sample_initial,
    simulate,
    step,
    vote_shares,
    wasserstein_gradient,
)
from .errors import (
    ConfigError,
    ConsensusRegimeError,
    DataFormatError,
    DivergenceError,
    FitError,
)
from .kernels import (
    ModelParams,
    QuadratureSpec,
    expected_votes_point,
    grad_expected_votes,
    oracle_expected_votes,
    satisficing,
    vote_probability,
)
from .metrics import DiagnosticSummary, summarize, w2, w2_to_dirac
from .point_flow import (
    EquilibriumReport,
    PointTrajectory,
    classify_equilibria,
    critical_ratio,
    integrate_point_flow,
    polarized_equilibrium,
    step_halving_gap,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConsensusRegimeError",
    "DataFormatError",
    "DiagnosticSummary",
    "DivergenceError",
    "EnsembleTrajectory",
    "EquilibriumReport",
    "FitError",
    "FitResult",
    "InitSpec",
    "ModelParams",
    "ObservedTrajectory",
    "ParticleEnsemble",
    "PartyInit",
    "PointTrajectory",
    "QuadratureSpec",
    "SearchSpec",
    "SimAlignment",
    "classify_equilibria",
    "critical_ratio",
    "expected_votes_point",
    "fit",
    "grad_expected_votes",
    "integrate_point_flow",
    "load_observed",
    "objective",
    "oracle_expected_votes",
    "polarized_equilibrium",
    "sample_initial",
    "satisficing",
    "simulate",
    "step",
    "step_halving_gap",
    "summarize",
    "synthesize_observed",
    "vote_probability",
    "vote_shares",
    "w2",
    "w2_to_dirac",
    "wasserstein_gradient",
    "write_observed_csv",
]

"""Simulation and verification toolkit for supercritical branching processes in random environment."""

from .config import ConfigError, ScenarioConfig, parse_config, serialize
from .empirical import (
    bootstrap_wasserstein,
    fit_rate,
    ks_to_normal,
    nonuniform_profile,
    tail_freq,
    wasserstein_to_normal,
)
from .environment import ConditionReport, EnvironmentModel, XMoments
from .gaussian import Phi, Phi_inv, phi, quantile_expansion, tail_sandwich
from .inference import (
    KappaSchedule,
    bernstein_bounds,
    ci_mu,
    ci_Zn,
    coverage_experiment,
    fit_bernstein_c,
    harmonic_moment_estimate,
    kappa_check,
    theorem22_bound,
)
from .offspring import ApproximateSum, Geometric1, OffspringLaw, ShiftedPoisson, TwoPoint, law_from_dict
from .oracle import OracleRefusal, exact_distribution_logZ, exact_wasserstein
from .rng import Stream, derive_key
from .simulator import (
    BACKEND,
    EmpiricalSample,
    ResourceLimitError,
    Trajectory,
    replicate_trajectory,
    run_replications,
    simulate_final,
    simulate_path,
)

__version__ = "0.1.0"

"""Zeno steering by frequent measurements or unitary pulses.

Simulates steering a quantum system along a path of subspaces generated by
a time-dependent Hermitian ``K(t)``, either by projective measurements onto
rotated subspaces or by unitary pulses with rotated eigenspaces, and checks
the results against rigorous finite-``N`` error bounds.
"""

from .bounds import BoundInputs, epsilon, lambert_w0, required_measurement_rate, success_bound
from .errors import (
    InvariantViolation,
    PreconditionError,
    ScenarioError,
    ValidationError,
    ZenoSteerError,
)
from .measure_steer import (
    MonteCarloConfig,
    all_success_probability,
    branch_enumeration,
    final_projection_probability,
    run_measurement_study,
    sample_trajectories,
)
from .pulse_steer import (
    apply_pulse_sequence,
    pulse_sequence,
    run_pulse_study,
    theorem2_residual,
    zeno_limit_operator,
)
from .scenario import GeneratorSchedule, NoiseModel, SteeringScenario, load_scenario, parse_scenario
from .spectral import SpectralDecomposition, decompose_unitary

__version__ = "0.1.0"

__all__ = [
    "BoundInputs", "epsilon", "lambert_w0", "required_measurement_rate", "success_bound",
    "InvariantViolation", "PreconditionError", "ScenarioError", "ValidationError", "ZenoSteerError",
    "MonteCarloConfig", "all_success_probability", "branch_enumeration",
    "final_projection_probability", "run_measurement_study", "sample_trajectories",
    "apply_pulse_sequence", "pulse_sequence", "run_pulse_study", "theorem2_residual",
    "zeno_limit_operator",
    "GeneratorSchedule", "NoiseModel", "SteeringScenario", "load_scenario", "parse_scenario",
    "SpectralDecomposition", "decompose_unitary",
    "__version__",
]

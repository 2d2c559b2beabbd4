"""Open-loop Nash equilibria of two-player LQ stochastic difference games on scenario trees."""
from .errors import (
    AssumptionViolated,
    DimensionMismatch,
    IndefiniteHessian,
    InvalidSpec,
    LevelMismatch,
    MomentViolation,
    NonAdaptedProcess,
    OracleTooLarge,
    ShapeMismatch,
    SingularUpsilon,
    StochLQError,
)
from .filtration import ScenarioTree, TreeProcess, Weight, build_tree, cond_expect
from .game import (
    CertificationReport,
    Trajectory,
    certify,
    certify_controls,
    closed_loop_check,
    cost,
    cost_homogeneous,
    duality_identity_gap,
    explicit_controls,
    gateaux,
    simulate_feedback,
    simulate_forward,
    solve_adjoints,
    stationarity_residuals,
)
from .model import ControlPair, Dims, GameSpec, generate_random, make_spec, validate, zero_noise_reduction
from .oracle import assemble_quadratic, best_response, nash_gap
from .riccati import RiccatiSolution, extract_fgh, solve_backward

__version__ = "0.1.0"

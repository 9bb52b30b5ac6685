"""Mean curvature flow laboratory: arrival times, rescaled graphs and decay estimates."""
from .arrival import (
    ArrivalControls,
    ArrivalField,
    CartesianGrid,
    asymptotic_residual,
    ball_arrival_exact,
    solve_arrival,
)
from .config import ExperimentConfig, preset
from .estimates import (
    DecayFit,
    NonlinearRemainder,
    VerificationReport,
    check_quadratic_bound,
    decay_fit,
    nonlinear_remainder,
    rmcf_rhs,
    unique_continuation_certificate,
    verify_duhamel,
    verify_key_inequality,
    verify_sup_bound,
)
from .flow import (
    ConvexityError,
    FlowControls,
    FlowTrajectory,
    StepSizeError,
    SupportFunction,
    circle,
    curvature_from_support,
    ellipse,
    extinction_estimates,
    perturbed_circle,
    run_to_extinction,
    step_flow,
)
from .pipeline import run_pipeline, sweep
from .rescale import (
    GraphSnapshot,
    GraphTrajectory,
    StarShapeError,
    build_graph_trajectory,
    decay_exponent_map,
    expansion_order,
    extract_graph,
    rescale_snapshot,
)
from .spectral import (
    AliasingError,
    ModeSpectrum,
    SpectralCoeffs,
    SphereGrid,
    analyze,
    laplace_beltrami,
    mode_spectrum,
    project_tail,
    sobolev_norm,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "AliasingError",
    "ArrivalControls",
    "ArrivalField",
    "CartesianGrid",
    "ConvexityError",
    "DecayFit",
    "ExperimentConfig",
    "FlowControls",
    "FlowTrajectory",
    "GraphSnapshot",
    "GraphTrajectory",
    "ModeSpectrum",
    "NonlinearRemainder",
    "SpectralCoeffs",
    "SphereGrid",
    "StarShapeError",
    "StepSizeError",
    "SupportFunction",
    "VerificationReport",
    "analyze",
    "asymptotic_residual",
    "ball_arrival_exact",
    "build_graph_trajectory",
    "check_quadratic_bound",
    "circle",
    "curvature_from_support",
    "decay_exponent_map",
    "decay_fit",
    "ellipse",
    "expansion_order",
    "extinction_estimates",
    "extract_graph",
    "laplace_beltrami",
    "mode_spectrum",
    "nonlinear_remainder",
    "perturbed_circle",
    "preset",
    "project_tail",
    "rescale_snapshot",
    "rmcf_rhs",
    "run_pipeline",
    "run_to_extinction",
    "sobolev_norm",
    "solve_arrival",
    "step_flow",
    "sweep",
    "synthesize",
    "unique_continuation_certificate",
    "verify_duhamel",
    "verify_key_inequality",
    "verify_sup_bound",
]


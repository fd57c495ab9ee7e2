"""Numerical geodesic analysis on chart-based affine and semi-Riemannian models.

Shooting (the exponential map with typed termination), its differential via
the linearized geodesic equation, conjugate-point scans, two-point connection
by path lifting, and empirical probes for properness, disprisonment,
pseudoconvexity, convexity, and the polar-map identities.
"""
from .errors import (
    ConfigError, DegenerateMetric, DomainEscape, GeoError, LinearizationFailure,
    NoConvergence, NoOracle, NotTimelike, OutOfChart, StepSizeUnderflow,
    UnknownModel,
)
from .manifold import (
    ChartDomain, ManifoldModel, ScalarField, Tangent, VectorField,
    auxiliary_riemannian, causal_class, christoffel_eval, embedding_point,
    inner, metric_eval, orthonormal_frame,
)
from .models import list_models, model_registry
from .geodesic import (
    GeodesicPath, IntegratorConfig, Termination, energy, energy_drift, exp,
    integrate_geodesic, oracle_geodesic, oracle_geodesic_embedding,
)
from .jacobi import (
    ConjugateLocusSample, DifferentialFrame, VariationalPath,
    conjugate_locus_sample, dexp_matrix, first_conjugate_time,
    integrate_variational, normalize_direction,
)
from .connect import (
    ConnectConfig, LiftOutcome, connect, connect_report, local_log,
    render_report,
)
from .probes import (
    ProbeConfig, ProbeCurveFamily, ProbeVerdict, convex_check,
    disprisonment_probe, gauss_lemma_check, hyperboloid_sweep_family,
    polyline_family, pseudoconvexity_probe, radial_ray_family, spiral_family,
    weak_properness_probe,
)
from .config import load_model_config, model_from_config_text

__version__ = "0.1.0"

__all__ = [
    "GeoError", "OutOfChart", "DegenerateMetric", "UnknownModel", "NotTimelike",
    "NoOracle", "StepSizeUnderflow", "DomainEscape", "LinearizationFailure",
    "NoConvergence", "ConfigError",
    "ChartDomain", "ManifoldModel", "Tangent", "ScalarField", "VectorField",
    "metric_eval", "christoffel_eval", "inner", "causal_class",
    "auxiliary_riemannian", "embedding_point", "orthonormal_frame",
    "model_registry", "list_models",
    "IntegratorConfig", "Termination", "GeodesicPath", "integrate_geodesic",
    "exp", "oracle_geodesic", "oracle_geodesic_embedding", "energy",
    "energy_drift",
    "DifferentialFrame", "VariationalPath", "ConjugateLocusSample",
    "dexp_matrix", "integrate_variational", "first_conjugate_time",
    "conjugate_locus_sample", "normalize_direction",
    "ConnectConfig", "LiftOutcome", "local_log", "connect", "connect_report",
    "render_report",
    "ProbeConfig", "ProbeCurveFamily", "ProbeVerdict", "weak_properness_probe",
    "disprisonment_probe", "pseudoconvexity_probe", "convex_check",
    "gauss_lemma_check", "radial_ray_family", "spiral_family",
    "hyperboloid_sweep_family", "polyline_family",
    "load_model_config", "model_from_config_text",
    "__version__",
]

"""Certified log-Sobolev constants for Gibbs measures ``exp(-V)`` on a grid.

Two routes to a constant: ``2/kappa`` when ``Hess V >= kappa > 0``, and a
Lyapunov-function chain under a curvature lower bound ``-K``.  A converse
construction recovers a Lyapunov function from a known LSI.
"""

from .certify import (CertificationReport, ConstantChain, build_pipeline, certify, certify_logconcave,
                      constant_chain, lsi_ratio, oracle_lsi_lower_bound)
from .config import ConfigError, RunConfig, load_config, parse_config
from .converse import (IndefiniteOperatorError, ResidualError, coercivity_check, scan_herbst_exponent,
                       schroedinger_potential, solve_lyapunov_from_lsi)
from .discretization import (Generator, Grid, WeightedMeasure, build_generator, build_grid, build_measure,
                             dirichlet_form, entropy, variance)
from .flow import FlowTrace, flow_table, theta_bounds, trace_phi, trace_psi
from .lyapunov import LyapunovCertificate, LyapunovError, fit_lyapunov_exponential, verify_lyapunov
from .potentials import (CurvatureBound, PotentialError, PotentialSpec, curvature_lower_bound, make_potential,
                         squared_distance)
from .reports import CheckReport
from .semigroup_checks import check_gradient_commutation, check_harnack, check_pt_upper
from .spectral import SpectralDecomposition, SpectralError, decompose, heat_apply, spectral_gap

__version__ = "0.1.0"

__all__ = [
    "CertificationReport",
    "CheckReport",
    "ConfigError",
    "ConstantChain",
    "CurvatureBound",
    "FlowTrace",
    "Generator",
    "Grid",
    "IndefiniteOperatorError",
    "LyapunovCertificate",
    "LyapunovError",
    "PotentialError",
    "PotentialSpec",
    "ResidualError",
    "RunConfig",
    "SpectralDecomposition",
    "SpectralError",
    "WeightedMeasure",
    "build_generator",
    "build_grid",
    "build_measure",
    "build_pipeline",
    "certify",
    "certify_logconcave",
    "check_gradient_commutation",
    "check_harnack",
    "check_pt_upper",
    "coercivity_check",
    "constant_chain",
    "curvature_lower_bound",
    "decompose",
    "dirichlet_form",
    "entropy",
    "fit_lyapunov_exponential",
    "flow_table",
    "heat_apply",
    "load_config",
    "lsi_ratio",
    "make_potential",
    "oracle_lsi_lower_bound",
    "parse_config",
    "scan_herbst_exponent",
    "schroedinger_potential",
    "solve_lyapunov_from_lsi",
    "spectral_gap",
    "squared_distance",
    "theta_bounds",
    "trace_phi",
    "trace_psi",
    "variance",
    "verify_lyapunov",
]

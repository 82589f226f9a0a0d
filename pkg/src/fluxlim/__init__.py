"""Flux-limited chemotaxis-Stokes solver for a coral fertilization model, with an audit layer."""
from .errors import (
    BlowUpError,
    CFLError,
    ConfigError,
    FluxlimError,
    NonFiniteError,
    PositivityError,
    SolverError,
)
from .grid import GridSpec, ScalarField, StateSnapshot, VectorField, grad_linf, integrate, lp_norm
from .sensitivity import FluxLimiter
from .fluid import Potential
from .integrator import SchemeConfig, run, step
from .diagnostics import AuditTolerances, DiagRecord, audit, equilibrium_targets, record

__version__ = "0.1.0"

"""Numerical lab for a nonlinear solenoid attractor.

Construction of a perturbed doubling map with prescribed periodic-orbit
Lyapunov exponents, the associated solid-torus attractor, its symbolic
coding and transfer-operator thermodynamics, twisted-operator contraction
and non-concentration experiments, and direct measurement of Fourier decay
of equilibrium states.
"""

__version__ = "0.1.0"

from .circle_map import (
    PerturbationSpec,
    coefficient_table,
    linear_spec,
    verify_lattice,
)

__all__ = [
    "PerturbationSpec",
    "coefficient_table",
    "linear_spec",
    "verify_lattice",
    "__version__",
]

"""Gauss-Bonnet numerics for conformal metrics with iterated-log singularities.

Modules
-------
logcalc   iterated logarithms of the radius and their closed-form calculus
terms     catalog of conformal-factor terms with exact log-polar jets
metric    singular profiles, conformal patches, curvature densities and flux
quad      adaptive Gauss-Kronrod and periodic rules with log-chain substitutions
ladders   shrinking-radius flux and Dirichlet-energy ladders
surface   punctured sphere/torus assembly and the Gauss-Bonnet defect
sks       local special Kahler models with a meromorphic cubic form
config    JSON run configuration
cli       ``logbonnet`` command line entry point
"""

from .errors import DomainError, QuadratureError, ValidationError
from .metric import ConformalPatchMetric, SingularProfile
from .quad import QuadResult
from .sks import SKModel
from .surface import GaussBonnetReport, PunctureSpec, SurfaceSpec, build_surface, gauss_bonnet_defect

__version__ = "0.1.0"

__all__ = [
    "ConformalPatchMetric",
    "DomainError",
    "GaussBonnetReport",
    "PunctureSpec",
    "QuadResult",
    "QuadratureError",
    "SKModel",
    "SingularProfile",
    "SurfaceSpec",
    "ValidationError",
    "build_surface",
    "gauss_bonnet_defect",
]

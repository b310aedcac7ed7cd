"""Bishop discs attached to real hypersurfaces in almost complex C^2.

Layers, bottom up:

* ``grid``: polar disc grid, boundary circle grid, differentiation.
* ``operators``: Cauchy-Green transform and its boundary calculus.
* ``structures``: almost complex structures as conjugate-linear
  deformation fields, coordinate changes, normalization.
* ``hypersurfaces``: defining functions, Levi form evaluation.
* ``bishop``: the nonlinear boundary problem for attached discs.
* ``linearized``: the linearized problem, resolvents, transversality
  diagnostics.
* ``cli``: command line entry points.
"""
from ._backend import get_backend
from .grid import BoundaryFn, BoundaryGrid, DiscFn, DiscGrid, Point2C
from .structures import (AField, CoordinateChange, JStructure, a_from_j,
                         dilate, j_from_a, jholo_residual,
                         normalize_along_disc, structure_family, transform_a)
from .hypersurfaces import (Hypersurface, hypersurface_family,
                            levi_determinant, levi_form_bracket,
                            levi_form_disc)
from .bishop import (BishopDisc, BoundaryData, disc_family, local_disc,
                     solve_bishop, transversality)
from .linearized import (LinearizedCoefficients, Perturbation, assemble,
                         evaluation_rank, resolvent_apply, solve_rh,
                         tangency_diagnostic)

__version__ = "0.1.0"

__all__ = [
    "BoundaryFn", "BoundaryGrid", "DiscFn", "DiscGrid", "Point2C",
    "AField", "CoordinateChange", "JStructure", "a_from_j", "j_from_a",
    "transform_a", "normalize_along_disc", "dilate", "jholo_residual",
    "structure_family", "Hypersurface", "hypersurface_family",
    "levi_determinant", "levi_form_bracket", "levi_form_disc",
    "BishopDisc", "BoundaryData", "solve_bishop", "local_disc",
    "transversality", "disc_family", "LinearizedCoefficients",
    "Perturbation", "assemble", "solve_rh", "resolvent_apply",
    "tangency_diagnostic", "evaluation_rank", "get_backend",
    "__version__",
]

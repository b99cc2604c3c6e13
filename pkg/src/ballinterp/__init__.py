"""Interpolating sequences for weighted Bergman and Hardy spaces on the unit ball.

Submodules:

- ``geometry``: Moebius automorphisms and the pseudo-hyperbolic metric
- ``quadrature``: sphere and weighted ball rules, closed-form moments
- ``functions``: function objects, polynomials and B^p_alpha norms
- ``kernels``: reproducing kernels and the isometries T_a
- ``gleason``: solvers for f = sum_k g_k (phi_a)_k
- ``interpolation``: minimum-norm interpolation and the Drury basis
- ``amar``: the interpolating vector function B and its local factorization
- ``carleson``: window and embedding diagnostics for atomic measures
- ``smooth``: the smooth interpolating extension F and its dbar forms
- ``cli``: batch front-end
"""
__version__ = "0.1.0"

from .functions import Fun, Poly, SpaceParams
from .geometry import moebius, pseudo_distance, rho
from .interpolation import PointSeq, TargetSeq, drury_extension, min_norm_interpolant
from .kernels import KernelParams

__all__ = ["Fun", "KernelParams", "PointSeq", "Poly", "SpaceParams", "TargetSeq",
           "drury_extension", "min_norm_interpolant", "moebius", "pseudo_distance", "rho",
           "__version__"]

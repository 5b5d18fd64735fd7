"""Isoperimetric problems with density: profiles, variations, symmetrization, spectra."""

from .density import DensityModel, RadialDensity, Region1D, classify_shape, density_from_spec
from .line1d import ProfileResult, brute_force_profile, solve_profile
from .spectral import GridDomain, faber_krahn_compare, lambda1
from .symmetrize import ColumnarSet, converge_to_ball, hsiang_reflect, steiner_symmetrize

__version__ = "0.1.0"

__all__ = [
    "DensityModel",
    "RadialDensity",
    "Region1D",
    "classify_shape",
    "density_from_spec",
    "ProfileResult",
    "solve_profile",
    "brute_force_profile",
    "ColumnarSet",
    "steiner_symmetrize",
    "hsiang_reflect",
    "converge_to_ball",
    "GridDomain",
    "lambda1",
    "faber_krahn_compare",
]

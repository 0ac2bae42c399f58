"""Finite-range decompositions of the fractional lattice resolvent on a torus."""

from .decomposition import (
    AlphaScaleKernel,
    CoarseDecomposition,
    Decomposition,
    TorusRemainder,
    assemble,
    build_piece,
    build_remainder,
    coarse_grain,
    exact_torus_resolvent,
    mass_derivative,
    rescaled_view,
)
from .lattice import MultiIndex, TorusField, TorusSpec, WindowKernel, forward_diff, norms, periodize, range_of
from .spectral import QuadratureRule, ScalingExponents, SpectralParams, integrate_rho, rho, rho_dm2, stieltjes_check
from .verify import VerificationReport, run_suite
from .walk import BlockSchedule, block_symbol, build_block_kernel, tail_symbol

__version__ = "0.1.0"

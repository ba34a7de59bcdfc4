"""Exact asymptotic expansions of Ricci-flat ALE metrics in harmonic coordinates."""
from .metric import MetricExpansion, SeedData, run_bootstrap, symbolic_residual
from .poly import HarmonicPoly, Poly, harmonic_decompose
from .poisson import solve_expansion, solve_term
from .terms import Expansion, Term, exp_diff, exp_laplacian, exp_mul

__all__ = [
    "Expansion",
    "HarmonicPoly",
    "MetricExpansion",
    "Poly",
    "SeedData",
    "Term",
    "exp_diff",
    "exp_laplacian",
    "exp_mul",
    "harmonic_decompose",
    "run_bootstrap",
    "solve_expansion",
    "solve_term",
    "symbolic_residual",
]

"""Stochastic porous media equations with multivalued diffusivity in 1-D.

Modules: :mod:`graphs` (monotone graphs and their regularizations),
:mod:`hspace` (grid, Laplacian, H^-1 norms), :mod:`noise` (finite-mode
multiplicative noise), :mod:`solver` (implicit time stepping),
:mod:`extinction` (extinction bounds and ensembles), :mod:`cli`.
"""
from .graphs import (CoerciveSign, GraphSpec, Heaviside, Interval, LipschitzSpec, PowerSign,
                     Sign, Stefan, eval_graph, minimal_section, regularized, resolvent,
                     smoothed_sign, yosida)
from .hspace import Field, Grid, estimate_gamma, hminus1_norm, lp_norm
from .kernels import BACKEND
from .noise import NoiseModel, RngStream, cn_constant
from .solver import SolverConfig, Trajectory, implicit_step, integrate_trajectory

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CoerciveSign", "Field", "GraphSpec", "Grid", "Heaviside", "Interval",
    "LipschitzSpec", "NoiseModel", "PowerSign", "RngStream", "Sign", "SolverConfig", "Stefan",
    "Trajectory", "cn_constant", "estimate_gamma", "eval_graph", "hminus1_norm",
    "implicit_step", "integrate_trajectory", "lp_norm", "minimal_section", "regularized",
    "resolvent", "smoothed_sign", "yosida",
]

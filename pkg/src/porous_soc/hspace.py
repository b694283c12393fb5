"""Discrete function spaces on (0, pi) with homogeneous Dirichlet data.

Fields live on the ``n`` interior nodes ``xi_i = i h``, ``h = pi / (n + 1)``.
The Dirichlet Laplacian ``A_h`` (positive convention) is diagonalized by the
type-I discrete sine transform with eigenvalues ``(4 / h^2) sin^2(k h / 2)``,
and the H^-1 inner product is ``h * <A_h^-1 f, g>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.fft import dst, idst
from scipy.linalg import solve_banded

__all__ = [
    "Grid",
    "Field",
    "SpectralCoeffs",
    "laplacian_apply",
    "dst_forward",
    "dst_inverse",
    "hminus1_norm",
    "hminus1_inner",
    "lp_norm",
    "green_diagonal",
    "estimate_gamma",
    "continuum_mode",
    "GAMMA_CONTINUUM",
]

# |delta_{pi/2}|_{L^1} / |delta_{pi/2}|_{-1} = 1 / sqrt(pi / 4)
GAMMA_CONTINUUM = 2.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 interior nodes, got {self.n!r}")

    @property
    def h(self) -> float:
        return math.pi / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.n + 1)
        return (4.0 / self.h**2) * np.sin(k * self.h / 2.0) ** 2

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n))

    def field(self, values) -> "Field":
        return Field(self, np.asarray(values, dtype=float))


@dataclass(frozen=True)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"field has shape {v.shape}, grid expects ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return Field(self.grid, self.values + _values(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _values(other))

    def __mul__(self, c):
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


@dataclass(frozen=True)
class SpectralCoeffs:
    grid: Grid
    coeffs: np.ndarray


def continuum_mode(grid: Grid, k: int) -> Field:
    """``sqrt(2/pi) sin(k xi)`` sampled on the grid (L^2-normalized)."""
    return Field(grid, math.sqrt(2.0 / math.pi) * np.sin(k * grid.nodes))


def laplacian_apply(f: Field) -> Field:
    """``A_h f`` with zero ghost values at both ends."""
    v = f.values
    padded = np.concatenate(([0.0], v, [0.0]))
    out = (2.0 * v - padded[:-2] - padded[2:]) / f.grid.h**2
    return Field(f.grid, out)


def dst_forward(f: Field) -> SpectralCoeffs:
    """Orthonormal DST-I; Parseval holds in the plain Euclidean sum."""
    return SpectralCoeffs(f.grid, dst(f.values, type=1, norm="ortho"))


def dst_inverse(c: SpectralCoeffs) -> Field:
    return Field(c.grid, idst(c.coeffs, type=1, norm="ortho"))


def _solve_laplacian(grid: Grid, rhs: np.ndarray) -> np.ndarray:
    n, h2 = grid.n, grid.h**2
    ab = np.empty((3, n))
    ab[0] = -1.0 / h2
    ab[1] = 2.0 / h2
    ab[2] = -1.0 / h2
    return solve_banded((1, 1), ab, rhs)


def hminus1_inner(f: Field, g: Field, method: str = "spectral") -> float:
    if method == "spectral":
        cf = dst_forward(f).coeffs
        cg = dst_forward(g).coeffs
        return float(f.grid.h * np.sum(cf * cg / f.grid.eigenvalues))
    if method == "direct":
        return float(f.grid.h * np.dot(_solve_laplacian(f.grid, f.values), g.values))
    raise ValueError(f"unknown method {method!r}")


def hminus1_norm(f: Field, method: str = "spectral") -> float:
    """``sqrt(h <A_h^-1 f, f>)``; ``method`` is ``"spectral"`` or ``"direct"``."""
    return math.sqrt(max(hminus1_inner(f, f, method), 0.0))


def lp_norm(f: Field, p: float = 2.0) -> float:
    v = np.abs(f.values)
    if p == math.inf:
        return float(v.max(initial=0.0))
    if not p >= 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p!r}")
    return float((f.grid.h * np.sum(v**p)) ** (1.0 / p))


def green_diagonal(grid: Grid) -> np.ndarray:
    """``G_h(xi_i, xi_i)``, the H^-1 norm squared of a unit point mass at ``xi_i``.

    For the three-point Laplacian the discrete Green function coincides with
    the continuum one at the nodes, ``xi (pi - xi) / pi``.
    """
    xi = grid.nodes
    return xi * (math.pi - xi) / math.pi


def _green(grid: Grid, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    a, b = np.minimum(i, j), np.maximum(i, j)
    xa, xb = grid.nodes[a], grid.nodes[b]
    return xa * (math.pi - xb) / math.pi


def estimate_gamma(n: int, refine: bool = True) -> float:
    """Discrete ``inf |x|_{L^1} / |x|_{-1}``.

    Candidates are unit point masses at every node. With ``refine`` the
    search also sweeps signed two-point combinations around the extremal
    node; by convexity of the H^-1 norm these never beat a single mass, and
    the returned value is the infimum over the whole candidate family.
    """
    grid = Grid(n)
    G = green_diagonal(grid)
    best = 1.0 / math.sqrt(G.max())
    if not refine:
        return best
    i0 = int(np.argmax(G))
    partners = np.arange(n)
    t = np.linspace(-1.0, 1.0, 41)
    wa = t[:, None]
    wb = (1.0 - np.abs(t))[:, None]
    Gij = _green(grid, np.full(n, i0), partners)[None, :]
    for sgn in (1.0, -1.0):
        q = wa**2 * G[i0] + 2.0 * sgn * wa * wb * Gij + wb**2 * G[None, :]
        best = min(best, 1.0 / math.sqrt(q.max()))
    return best

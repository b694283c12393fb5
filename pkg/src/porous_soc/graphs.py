"""Maximal monotone graphs on the real line and their regularizations.

A graph ``g`` maps a real ``r`` to a closed interval ``g(r)``; the interval is
degenerate except at the (finitely many) jump points, where the jump is
filled by the segment between the one-sided limits.

For a step size ``lam > 0`` the resolvent ``(1 + lam g)^-1`` is single valued
and non-expansive, and the Yosida approximation ``(x - resolvent(x)) / lam``
is a Lipschitz, nondecreasing selection of ``g`` evaluated at the resolvent.
Closed forms are used for the named families; anything else falls back to a
set-valued bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Sequence

import numpy as np

__all__ = [
    "GraphError",
    "ResolventError",
    "Interval",
    "LipschitzSpec",
    "GraphSpec",
    "Sign",
    "Heaviside",
    "Stefan",
    "PowerSign",
    "CoerciveSign",
    "eval_graph",
    "minimal_section",
    "resolvent",
    "bisect_resolvent",
    "power_root",
    "yosida",
    "smoothed_sign",
    "regularized",
    "check_growth",
    "graph_from_dict",
    "KIND_NAMES",
]

KIND_NAMES = ("sign", "heaviside", "stefan", "power_sign", "coercive_sign")

# kernel codes, see porous_soc._fallback
PWL_CODE = 0
KIND_CODES = {"power_sign": 1}

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


class GraphError(ValueError):
    """Invalid graph parameters or a non-finite argument."""


class ResolventError(ArithmeticError):
    """The bisection fallback failed to bracket or converge."""


def _check_finite(r: float) -> float:
    r = float(r)
    if not math.isfinite(r):
        raise GraphError(f"graph argument must be finite, got {r!r}")
    return r


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0.0 and math.isfinite(lam)):
        raise GraphError(f"regularization parameter must be positive, got {lam!r}")
    return lam


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; degenerate for single-valued points."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise GraphError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, v: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= v <= self.hi + tol

    def __contains__(self, v: float) -> bool:
        return self.contains(v)

    def shift(self, c: float) -> "Interval":
        return Interval(self.lo + c, self.hi + c)


@dataclass(frozen=True)
class LipschitzSpec:
    """Piecewise-linear Lipschitz function with slopes in ``[delta, L]``.

    The function interpolates ``values`` at ``knots`` and extends linearly
    with the end-segment slopes. It must vanish at 0.
    """

    knots: tuple[float, ...]
    values: tuple[float, ...]
    lipschitz_constant: float
    coercivity_delta: float

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if k.ndim != 1 or k.size < 2 or k.shape != v.shape:
            raise GraphError("need at least two knots with matching values")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(v))):
            raise GraphError("knots and values must be finite")
        if np.any(np.diff(k) <= 0):
            raise GraphError("knots must be strictly increasing")
        if not (0 < self.coercivity_delta <= self.lipschitz_constant < math.inf):
            raise GraphError("need 0 < delta <= lipschitz_constant < inf")
        slopes = np.diff(v) / np.diff(k)
        eps = 1e-12 * self.lipschitz_constant
        if np.any(slopes < self.coercivity_delta - eps) or np.any(
            slopes > self.lipschitz_constant + eps
        ):
            raise GraphError(
                f"segment slopes {slopes} outside [{self.coercivity_delta}, "
                f"{self.lipschitz_constant}]"
            )
        if abs(float(self(0.0))) > 1e-14 * max(1.0, float(np.max(np.abs(v)))):
            raise GraphError("the Lipschitz part must vanish at 0")

    @classmethod
    def linear(cls, slope: float) -> "LipschitzSpec":
        slope = float(slope)
        return cls((-1.0, 1.0), (-slope, slope), slope, slope)

    @classmethod
    def from_table(cls, knots: Sequence[float], values: Sequence[float]) -> "LipschitzSpec":
        k = np.asarray(knots, dtype=float)
        v = np.asarray(values, dtype=float)
        slopes = np.diff(v) / np.diff(k)
        return cls(tuple(k), tuple(v), float(slopes.max()), float(slopes.min()))

    @property
    def knot_array(self) -> np.ndarray:
        return np.asarray(self.knots, dtype=float)

    @property
    def value_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def _segment(self, r):
        k = self.knot_array
        j = np.searchsorted(k, r, side="right") - 1
        return np.clip(j, 0, k.size - 2)

    def __call__(self, r):
        k, v = self.knot_array, self.value_array
        j = self._segment(r)
        s = (v[j + 1] - v[j]) / (k[j + 1] - k[j])
        out = v[j] + s * (np.asarray(r, dtype=float) - k[j])
        return float(out) if np.ndim(out) == 0 else out

    def slope(self, r):
        """Right derivative."""
        k, v = self.knot_array, self.value_array
        j = self._segment(r)
        out = (v[j + 1] - v[j]) / (k[j + 1] - k[j])
        return float(out) if np.ndim(out) == 0 else out

    def solve_shifted(self, z: float, lam: float) -> float:
        """Return the ``y`` with ``y + lam * f(y) = z``."""
        k, v = self.knot_array, self.value_array
        zk = k + lam * v
        j = int(np.clip(np.searchsorted(zk, z, side="right") - 1, 0, k.size - 2))
        return float(k[j] + (z - zk[j]) * (k[j + 1] - k[j]) / (zk[j + 1] - zk[j]))


@dataclass(frozen=True)
class GraphSpec:
    """Base class for maximal monotone graphs ``R -> 2^R``.

    Subclasses provide ``eval`` and the growth metadata; closed-form
    resolvents override :meth:`resolvent`.
    """

    kind: ClassVar[str] = "generic"

    @property
    def growth_C(self) -> float:
        raise NotImplementedError

    @property
    def growth_m(self) -> float:
        return 1.0

    @property
    def jump_points(self) -> tuple[float, ...]:
        return ()

    @property
    def contains_origin(self) -> bool:
        return self.eval(0.0).contains(0.0)

    def eval(self, r: float) -> Interval:
        raise NotImplementedError

    def minimal_section(self, r: float) -> float:
        I = self.eval(r)
        if I.lo <= 0.0 <= I.hi:
            return 0.0
        return I.lo if I.lo > 0.0 else I.hi

    def resolvent(self, lam: float, x: float) -> float:
        return bisect_resolvent(self, lam, x)

    def regularized(self, lam: float, x: float) -> float:
        """The single-valued approximation used by the time stepper."""
        return (x - self.resolvent(lam, x)) / lam

    def kernel_breakpoints(self, lam: float) -> tuple[float, ...] | None:
        """Kinks of ``x -> regularized(lam, x)`` when it is piecewise linear."""
        return None

    def kernel_params(self) -> np.ndarray:
        return np.zeros(2)

    def kernel_spec(self, lam: float) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        """``(code, params, xs, ws)`` describing ``phi(x) = regularized(lam, x) + lam x``.

        Piecewise-linear maps become a breakpoint table with one extra node
        beyond each end fixing the extrapolation slopes. The origin is always
        a node so that ``phi(0)`` is reproduced exactly.
        """
        lam = _check_lam(lam)
        bps = self.kernel_breakpoints(lam)
        if bps is None:
            return (KIND_CODES[self.kind], np.ascontiguousarray(self.kernel_params(), dtype=float),
                    np.zeros(2), np.zeros(2))
        b = np.unique(np.asarray(bps + (0.0,), dtype=float))
        pad = max(1.0, float(np.abs(b).max()))
        xs = np.concatenate(([b[0] - pad], b, [b[-1] + pad]))
        ws = np.array([self.regularized(lam, v) + lam * v for v in xs])
        return PWL_CODE, np.zeros(2), xs, ws

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


def _positive(name: str, value: float, allow_zero: bool = False) -> float:
    value = float(value)
    ok = value >= 0.0 if allow_zero else value > 0.0
    if not (ok and math.isfinite(value)):
        raise GraphError(f"{name} must be {'nonnegative' if allow_zero else 'positive'}, got {value!r}")
    return value


@dataclass(frozen=True)
class Sign(GraphSpec):
    """``rho * sign(r)`` with ``sign(0) = [-1, 1]``."""

    rho: float = 1.0
    kind: ClassVar[str] = "sign"

    def __post_init__(self):
        _positive("rho", self.rho)

    @property
    def growth_C(self) -> float:
        return self.rho

    @property
    def jump_points(self):
        return (0.0,)

    def eval(self, r):
        r = _check_finite(r)
        if r > 0:
            return Interval.point(self.rho)
        if r < 0:
            return Interval.point(-self.rho)
        return Interval(-self.rho, self.rho)

    def resolvent(self, lam, x):
        # soft threshold at lam * rho
        lam, x = _check_lam(lam), _check_finite(x)
        return math.copysign(max(abs(x) - lam * self.rho, 0.0), x) if x != 0 else 0.0

    def kernel_breakpoints(self, lam):
        return (-lam * self.rho, lam * self.rho)

    def to_dict(self):
        return {"kind": self.kind, "rho": self.rho}


@dataclass(frozen=True)
class Heaviside(GraphSpec):
    """Filled Heaviside step plus an optional linear part ``slope * r``."""

    slope: float = 0.0
    kind: ClassVar[str] = "heaviside"

    def __post_init__(self):
        _positive("slope", self.slope, allow_zero=True)

    @property
    def growth_C(self):
        return max(1.0, self.slope)

    @property
    def jump_points(self):
        return (0.0,)

    def eval(self, r):
        r = _check_finite(r)
        if r > 0:
            return Interval.point(1.0 + self.slope * r)
        if r < 0:
            return Interval.point(self.slope * r)
        return Interval(0.0, 1.0)

    def resolvent(self, lam, x):
        # y(1 + lam s) = x below 0, flat on [0, lam], y(1 + lam s) + lam = x above
        lam, x = _check_lam(lam), _check_finite(x)
        q = 1.0 + lam * self.slope
        if x < 0:
            return x / q
        if x <= lam:
            return 0.0
        return (x - lam) / q

    def kernel_breakpoints(self, lam):
        return (0.0, lam)

    def to_dict(self):
        return {"kind": self.kind, "slope": self.slope}


@dataclass(frozen=True)
class Stefan(GraphSpec):
    """Two-phase graph with latent-heat jump ``[0, rho]`` at ``r = a``.

    Note that ``0`` is in the graph at ``0`` only when ``a == 0``.
    """

    a: float = 1.0
    rho: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    kind: ClassVar[str] = "stefan"

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise GraphError("a must be finite")
        _positive("rho", self.rho)
        _positive("alpha1", self.alpha1)
        _positive("alpha2", self.alpha2)

    @property
    def growth_C(self):
        amax = max(self.alpha1, self.alpha2)
        return amax * (1.0 + abs(self.a)) + self.rho

    @property
    def jump_points(self):
        return (self.a,)

    def eval(self, r):
        r = _check_finite(r)
        if r < self.a:
            return Interval.point(self.alpha1 * (r - self.a))
        if r > self.a:
            return Interval.point(self.alpha2 * (r - self.a) + self.rho)
        return Interval(0.0, self.rho)

    def resolvent(self, lam, x):
        lam, x = _check_lam(lam), _check_finite(x)
        a = self.a
        if x < a:
            return (x + lam * self.alpha1 * a) / (1.0 + lam * self.alpha1)
        if x <= a + lam * self.rho:
            return a
        return (x - lam * self.rho + lam * self.alpha2 * a) / (1.0 + lam * self.alpha2)

    def kernel_breakpoints(self, lam):
        return (self.a, self.a + lam * self.rho)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "rho": self.rho,
                "alpha1": self.alpha1, "alpha2": self.alpha2}


@dataclass(frozen=True)
class PowerSign(GraphSpec):
    """``coefficient * |r|**alpha * sign(r)``; continuous, resolvent by a scalar root solve."""

    alpha: float = 0.5
    coefficient: float = 1.0
    kind: ClassVar[str] = "power_sign"

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("coefficient", self.coefficient)

    @property
    def growth_C(self):
        return self.coefficient

    @property
    def growth_m(self):
        return max(1.0, self.alpha)

    def eval(self, r):
        r = _check_finite(r)
        return Interval.point(math.copysign(self.coefficient * abs(r) ** self.alpha, r) if r else 0.0)

    def resolvent(self, lam, x):
        # |y| solves t + lam c t^alpha = |x|; bisection loses relative accuracy
        # near 0 where the graph is infinitely steep
        lam, x = _check_lam(lam), _check_finite(x)
        if x == 0:
            return 0.0
        return math.copysign(power_root(abs(x), lam * self.coefficient, self.alpha), x)

    def kernel_params(self):
        return np.array([self.alpha, self.coefficient])

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "coefficient": self.coefficient}


@dataclass(frozen=True)
class CoerciveSign(GraphSpec):
    """``rho * sign(r) + tilde(r)`` with ``tilde`` Lipschitz and ``tilde' >= delta``.

    The time stepper regularizes only the sign part,
    ``rho * smoothed_sign(lam, r) + tilde(r)``, rather than taking the
    Yosida approximation of the whole graph. ``rho = 0`` gives a plain
    Lipschitz (possibly linear) diffusivity.
    """

    rho: float = 1.0
    tilde: LipschitzSpec = field(default_factory=lambda: LipschitzSpec.linear(0.1))
    kind: ClassVar[str] = "coercive_sign"

    def __post_init__(self):
        _positive("rho", self.rho, allow_zero=True)

    @property
    def delta(self) -> float:
        return self.tilde.coercivity_delta

    @property
    def growth_C(self):
        return max(self.rho, self.tilde.lipschitz_constant)

    @property
    def jump_points(self):
        return (0.0,) if self.rho > 0 else ()

    def eval(self, r):
        r = _check_finite(r)
        t = self.tilde(r)
        if r > 0:
            return Interval.point(self.rho + t)
        if r < 0:
            return Interval.point(-self.rho + t)
        return Interval(-self.rho, self.rho)

    def resolvent(self, lam, x):
        lam, x = _check_lam(lam), _check_finite(x)
        band = lam * self.rho
        if abs(x) <= band:
            return 0.0
        return self.tilde.solve_shifted(x - math.copysign(band, x), lam)

    def regularized(self, lam, x):
        return self.rho * smoothed_sign(lam, x) + self.tilde(x)

    def kernel_breakpoints(self, lam):
        return (-lam, lam) + tuple(self.tilde.knots)

    def to_dict(self):
        return {"kind": self.kind, "rho": self.rho,
                "knots": list(self.tilde.knots), "values": list(self.tilde.values)}


def eval_graph(g: GraphSpec, r: float) -> Interval:
    return g.eval(r)


def minimal_section(g: GraphSpec, r: float) -> float:
    return g.minimal_section(r)


def resolvent(g: GraphSpec, lam: float, x: float) -> float:
    """Unique ``y`` with ``x in y + lam * g(y)``."""
    return g.resolvent(lam, x)


def yosida(g: GraphSpec, lam: float, x: float) -> float:
    """Yosida approximation ``(x - resolvent(x)) / lam``."""
    lam, x = _check_lam(lam), _check_finite(x)
    return (x - g.resolvent(lam, x)) / lam


def regularized(g: GraphSpec, lam: float, x: float) -> float:
    """Approximation of ``g`` used in the drift: Yosida, or smoothed sign for
    :class:`CoerciveSign`."""
    lam, x = _check_lam(lam), _check_finite(x)
    return g.regularized(lam, x)


def smoothed_sign(lam: float, r: float) -> float:
    """Yosida approximation of ``sign``: ``clip(r / lam, -1, 1)``."""
    lam = _check_lam(lam)
    r = float(r)
    if r > lam:
        return 1.0
    if r < -lam:
        return -1.0
    return r / lam


def bisect_resolvent(g: GraphSpec, lam: float, x: float, tol: float = BISECT_TOL,
                     max_iter: int = BISECT_MAX_ITER) -> float:
    """Resolvent by bisection on the set-valued map ``y -> y + lam * g(y)``.

    ``tol`` bounds the bracket width relative to ``lam`` so that the derived
    Yosida value carries an absolute error of at most ``tol``.
    """
    lam, x = _check_lam(lam), _check_finite(x)
    bound = g.growth_C * (1.0 + abs(x) ** g.growth_m)
    lo, hi = x - lam * bound, x + lam * bound

    def below(y):  # y + lam*g(y) lies entirely below x
        return y + lam * g.eval(y).hi < x

    def above(y):
        return y + lam * g.eval(y).lo > x

    # graphs without 0 in g(0) may need a wider bracket
    for _ in range(64):
        if not above(lo) and not below(hi):
            break
        width = hi - lo
        if above(lo):
            lo -= width
        if below(hi):
            hi += width
    else:
        raise ResolventError(f"could not bracket resolvent at x={x}, lam={lam}")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * lam or mid == lo or mid == hi:
            return mid
        if above(mid):
            hi = mid
        elif below(mid):
            lo = mid
        else:
            return mid
    raise ResolventError(f"bisection did not converge in {max_iter} iterations (x={x}, lam={lam})")


def power_root(ax: float, k: float, alpha: float) -> float:
    """Root ``t >= 0`` of ``t + k t^alpha = ax`` for ``ax >= 0``.

    Newton started above the root of a convex increasing function decreases
    monotonically to it; the equation is convex in ``u = t^alpha`` when
    ``alpha < 1`` and in ``t`` when ``alpha > 1``.
    """
    if ax <= 0.0:
        return 0.0
    if alpha == 1.0:
        return ax / (1.0 + k)
    if alpha < 1.0:
        q = 1.0 / alpha
        u = min(ax / k, ax**alpha)
        for _ in range(200):
            g = u**q + k * u - ax
            if g <= 0:
                break
            step = g / (q * u ** (q - 1.0) + k)
            u -= step
            if step <= 4e-16 * u:
                break
        return u**q
    t = min(ax, (ax / k) ** (1.0 / alpha))
    for _ in range(200):
        g = t + k * t**alpha - ax
        if g <= 0:
            break
        step = g / (1.0 + k * alpha * t ** (alpha - 1.0))
        t -= step
        if step <= 4e-16 * t:
            break
    return t


def check_growth(g: GraphSpec, samples) -> bool:
    """Sampled check of ``sup |g(r)| <= C (1 + |r|^m)``."""
    for r in np.asarray(samples, dtype=float).ravel():
        I = g.eval(r)
        if max(abs(I.lo), abs(I.hi)) > g.growth_C * (1.0 + abs(r) ** g.growth_m) * (1 + 1e-12):
            return False
    return True


_FAMILIES = {
    "sign": lambda d: Sign(rho=d.get("rho", 1.0)),
    "heaviside": lambda d: Heaviside(slope=d.get("slope", 0.0)),
    "stefan": lambda d: Stefan(a=d.get("a", 1.0), rho=d.get("rho", 1.0),
                               alpha1=d.get("alpha1", 1.0), alpha2=d.get("alpha2", 1.0)),
    "power_sign": lambda d: PowerSign(alpha=d.get("alpha", 0.5),
                                      coefficient=d.get("coefficient", 1.0)),
}


def graph_from_dict(d: dict[str, Any]) -> GraphSpec:
    """Build a graph from ``{"kind": name, **params}``.

    ``coercive_sign`` accepts either ``delta`` (linear part ``delta * r``) or
    a ``knots``/``values`` table.
    """
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "coercive_sign":
        if "knots" in d:
            tilde = LipschitzSpec.from_table(d["knots"], d["values"])
        else:
            tilde = LipschitzSpec.linear(d.get("delta", 0.1))
        return CoerciveSign(rho=d.get("rho", 1.0), tilde=tilde)
    try:
        return _FAMILIES[kind](d)
    except KeyError:
        raise GraphError(f"unknown graph kind {kind!r}; expected one of "
                         f"{list(KIND_NAMES)}") from None

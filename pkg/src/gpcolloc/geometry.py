"""Domains, collocation point sets and boundary normals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .operators import LinearDiffOperator

__all__ = [
    "Domain",
    "Interval",
    "UnitDisk",
    "StarShaped",
    "BoundaryDatum",
    "Discretization",
    "GeometryError",
    "sample_interior",
    "sample_boundary",
    "outward_normal",
    "validate_discretization",
    "STRATEGIES",
]

BOUNDARY_TOL = 1e-12
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
STRATEGIES = ("equidistant", "sunflower", "uniform_random")


class GeometryError(ValueError):
    pass


class Domain:
    """Base class; subclasses define the boundary and point generators."""

    dim: int

    def contains(self, x) -> bool:
        """Strictly interior."""
        raise NotImplementedError

    def boundary_residual(self, x) -> float:
        """Signed distance-like residual of the boundary equation (0 on the boundary)."""
        raise NotImplementedError

    def on_boundary(self, x, tol: float = BOUNDARY_TOL) -> bool:
        return abs(self.boundary_residual(x)) <= tol

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def centroid(self) -> np.ndarray:
        lo, hi = self.bounding_box()
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Interval(Domain):
    a: float
    b: float
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.a < self.b:
            raise GeometryError(f"empty interval [{self.a}, {self.b}]")

    def contains(self, x) -> bool:
        x = float(np.ravel(x)[0])
        return self.a < x < self.b

    def boundary_residual(self, x) -> float:
        x = float(np.ravel(x)[0])
        return min(abs(x - self.a), abs(x - self.b))

    def bounding_box(self):
        return np.array([self.a]), np.array([self.b])

    @property
    def diameter(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class UnitDisk(Domain):
    dim: int = field(default=2, init=False)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return float(x[0] ** 2 + x[1] ** 2) < 1.0

    def boundary_residual(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(math.hypot(x[0], x[1]) - 1.0)

    def radius(self, theta: float) -> float:
        return 1.0

    def bounding_box(self):
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])

    @property
    def diameter(self) -> float:
        return 2.0

    def centroid(self) -> np.ndarray:
        return np.zeros(2)


@dataclass(frozen=True)
class StarShaped(Domain):
    """Region ``{ rho * r(theta) * (cos theta, sin theta) : 0 <= rho <= 1 }``.

    ``radius`` is an expression in ``x1``, read as the polar angle.
    """

    radius_source: str
    dim: int = field(default=2, init=False)
    _radius: ex.Expression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = ex.parse(self.radius_source)
        if ex.max_variable_index(e) > 1:
            raise GeometryError("star-shape radius may only depend on x1 (the angle)")
        object.__setattr__(self, "_radius", e)
        thetas = np.linspace(0.0, 2 * math.pi, 721)[:-1]
        if min(self.radius(t) for t in thetas) <= 0.0:
            raise GeometryError(f"radius {self.radius_source!r} is not positive on [0, 2pi)")

    def radius(self, theta: float) -> float:
        return ex.evaluate(self._radius, [math.fmod(theta, 2 * math.pi) % (2 * math.pi)])

    def _polar(self, x):
        x = np.asarray(x, dtype=float)
        theta = math.atan2(x[1], x[0]) % (2 * math.pi)
        return math.hypot(x[0], x[1]), theta

    def contains(self, x) -> bool:
        rho, theta = self._polar(x)
        return rho < self.radius(theta)

    def boundary_residual(self, x) -> float:
        rho, theta = self._polar(x)
        return rho - self.radius(theta)

    def point_at(self, theta: float) -> np.ndarray:
        r = self.radius(theta)
        return np.array([r * math.cos(theta), r * math.sin(theta)])

    def bounding_box(self):
        pts = np.array([self.point_at(t) for t in np.linspace(0, 2 * math.pi, 721)])
        return pts.min(axis=0), pts.max(axis=0)

    def centroid(self) -> np.ndarray:
        return np.zeros(2)


# --------------------------------------------------------------------------
# point sets


@dataclass(frozen=True)
class BoundaryDatum:
    """Observation ``B_j[u](x_j) = g_j`` at one boundary point."""

    point: np.ndarray
    operator: LinearDiffOperator
    value: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(-1))
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Discretization:
    interior: np.ndarray
    boundary: tuple[BoundaryDatum, ...] = ()

    def __post_init__(self):
        interior = np.asarray(self.interior, dtype=float)
        if interior.ndim == 1:
            interior = interior.reshape(-1, 1) if interior.size else interior.reshape(0, 1)
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "boundary", tuple(self.boundary))

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def boundary_points(self) -> np.ndarray:
        if not self.boundary:
            return np.zeros((0, self.interior.shape[1]))
        return np.array([b.point for b in self.boundary])


def sample_interior(
    dom: Domain, n: int, strategy: str = "sunflower", seed: int | None = None
) -> np.ndarray:
    """``n`` points strictly inside ``dom`` as an ``(n, dim)`` array."""
    if n < 1:
        raise GeometryError("need at least one interior point")
    if strategy == "equidistant":
        if not isinstance(dom, Interval):
            raise GeometryError("equidistant placement is only defined on intervals")
        j = np.arange(1, n + 1)
        return (dom.a + j * (dom.b - dom.a) / (n + 1)).reshape(-1, 1)
    if strategy == "sunflower":
        if dom.dim != 2:
            raise GeometryError("sunflower placement needs a 2-D domain")
        k = np.arange(1, n + 1)
        rho = np.sqrt((k - 0.5) / n)
        theta = np.mod(k * GOLDEN_ANGLE, 2 * math.pi)
        r = np.array([dom.radius(t) for t in theta])
        return np.column_stack([rho * r * np.cos(theta), rho * r * np.sin(theta)])
    if strategy == "uniform_random":
        rng = np.random.default_rng(seed)
        lo, hi = dom.bounding_box()
        out = []
        while len(out) < n:
            for p in rng.uniform(lo, hi, size=(4 * n, dom.dim)):
                if dom.contains(p) and not dom.on_boundary(p, 1e-9 * dom.diameter):
                    out.append(p)
                    if len(out) == n:
                        break
        return np.array(out)
    raise GeometryError(f"unknown strategy {strategy!r}")


def sample_boundary(dom: Domain, n: int) -> np.ndarray:
    """Boundary points equispaced in the boundary parameter (angle for 2-D)."""
    if isinstance(dom, Interval):
        if n != 2:
            raise GeometryError("an interval boundary has exactly two points")
        return np.array([[dom.a], [dom.b]])
    if n < 1:
        raise GeometryError("need at least one boundary point")
    theta = 2 * math.pi * np.arange(n) / n
    if isinstance(dom, StarShaped):
        return np.array([dom.point_at(t) for t in theta])
    return np.column_stack([np.cos(theta), np.sin(theta)])


def outward_normal(dom: Domain, x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if not dom.on_boundary(x, 1e-9):
        raise GeometryError(f"{x} is not on the boundary")
    if isinstance(dom, Interval):
        return np.array([-1.0 if abs(x[0] - dom.a) <= abs(x[0] - dom.b) else 1.0])
    if isinstance(dom, UnitDisk):
        return x / np.linalg.norm(x)
    if isinstance(dom, StarShaped):
        theta = math.atan2(x[1], x[0]) % (2 * math.pi)
        h = 1e-6
        dr = (dom.radius(theta + h) - dom.radius(theta - h)) / (2 * h)
        r = dom.radius(theta)
        tangent = np.array(
            [dr * math.cos(theta) - r * math.sin(theta), dr * math.sin(theta) + r * math.cos(theta)]
        )
        normal = np.array([tangent[1], -tangent[0]])
        return normal / np.linalg.norm(normal)
    raise GeometryError(f"no normal for {type(dom).__name__}")


def validate_discretization(dom: Domain, disc: Discretization) -> None:
    """Raise :class:`GeometryError` if ``disc`` breaks containment or spacing rules."""
    for p in disc.interior:
        if not dom.contains(p) or dom.on_boundary(p):
            raise GeometryError(f"interior point {p} is not strictly inside the domain")
    for b in disc.boundary:
        if not dom.on_boundary(b.point):
            raise GeometryError(
                f"boundary point {b.point} is off the boundary by {dom.boundary_residual(b.point):.3e}"
            )
    pts = np.vstack([disc.interior, disc.boundary_points])
    if len(pts) > 1:
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dist[np.diag_indices(len(pts))] = np.inf
        if dist.min() <= 1e-9 * dom.diameter:
            i, j = np.unravel_index(np.argmin(dist), dist.shape)
            raise GeometryError(f"points {pts[i]} and {pts[j]} coincide")

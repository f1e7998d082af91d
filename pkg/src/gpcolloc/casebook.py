"""Built-in benchmark problems and their reference solutions.

Four problems are available:

``heat1d``
    ``-(a u')' - u/2 = exp(-(x-2)^2)`` on ``[0, 3]`` with
    ``a(x) = atan(20 (x-1))/2 + 1``, ``u'(0) = 0`` and ``u(3) = 0``; ``s = 2``.
    The operator is given in expanded form
    ``-a u'' - a' u' - u/2`` with ``a'(x) = 10 / (1 + 400 (x-1)^2)``.
``disk_poisson``
    ``-lap u = 1`` on the unit disk, ``u = 0`` on the circle; ``s = 0.1``.
    Exact solution ``(1 - x1^2 - x2^2) / 4``.
``disk_gaussian_source``
    ``-lap u = 4 exp(-((R x1 - c1)^2 + (R x2 - c2)^2) / (2 w^2))`` on the unit
    disk with ``R = 0.3``, ``w = 0.025``, ``(c1, c2) = 0.6 R (cos 0.2, sin 0.2)``;
    ``s = 0.01``.
``star_gaussian_source``
    Same source family with ``R = 0.8``, ``(c1, c2) = R (cos pi/4, sin pi/4)``
    on a star-shaped domain; ``s = 0.2``, ``n_b = 20``.  The domain
    ``r(theta) = 1 + 0.3 cos(3 (theta - pi/4))`` is a stand-in with the
    source peak well inside it.  For ``n_i`` of 34 and 43 the lengthscale
    is fixed at 0.18 and 0.14; other sizes search the likelihood.

Only the first two have reference solutions (a finite-difference solve for
``heat1d``, the closed form for ``disk_poisson``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import linalg

from . import expr as ex
from .config import ProblemConfig, build_problem, resolve_problem
from .gp import ProblemSpec

__all__ = [
    "CASE_IDS",
    "CaseStudy",
    "CASES",
    "case_config",
    "build_case",
    "exact_disk_solution",
    "FDReference",
    "fd_solve_heat1d",
    "heat1d_coefficient",
    "oracle_function",
    "export_configs",
]

CASE_IDS = ("heat1d", "disk_poisson", "disk_gaussian_source", "star_gaussian_source")

_A = "0.5*atan(20*(x1-1))+1"
_DA = "10/(1+400*(x1-1)^2)"
_HEAT_SOURCE = "exp(-(x1-2)^2)"
_NEG_LAPLACIAN = [{"alpha": [2, 0], "coeff": "-1"}, {"alpha": [0, 2], "coeff": "-1"}]
_QUARTER_PI = repr(math.pi / 4)
STAR_RADIUS = f"1+0.3*cos(3*(x1-{_QUARTER_PI}))"


def _gaussian_source(R: str, c1: str, c2: str, width: str) -> str:
    return f"4*exp(-0.5*(({R}*x1-{c1})/{width})^2-0.5*(({R}*x2-{c2})/{width})^2)"


@dataclass(frozen=True)
class CaseStudy:
    id: str
    n_i: int
    n_b: int
    s: float
    document: dict  # everything but kernel/discretization
    fixed_ell: tuple[tuple[int, float], ...] = ()  # (n_i, ell) pairs used instead of a search

    def config(self, n_i: int | None = None, n_b: int | None = None, ell: float | None = None,
               strategy: str | None = None, seed: int | None = None) -> ProblemConfig:
        doc = json.loads(json.dumps(self.document))
        if ell is None:
            ell = dict(self.fixed_ell).get(self.n_i if n_i is None else int(n_i))
        doc["kernel"] = {"s": self.s, "ell": float(ell)} if ell is not None else {
            "s": self.s, "ell_search": dict(_SEARCH[self.id])}
        dim_default = "equidistant" if self.id == "heat1d" else "sunflower"
        doc["discretization"] = {
            "n_i": self.n_i if n_i is None else int(n_i),
            "n_b": self.n_b if n_b is None else int(n_b),
            "strategy": strategy or dim_default,
            "seed": seed,
        }
        return ProblemConfig.from_dict(doc)


_SEARCH = {
    "heat1d": {"min": 0.03, "max": 9.0, "count": 60, "log_spaced": True},
    "disk_poisson": {"min": 0.02, "max": 6.0, "count": 60, "log_spaced": True},
    "disk_gaussian_source": {"min": 0.02, "max": 6.0, "count": 60, "log_spaced": True},
    "star_gaussian_source": {"min": 0.02, "max": 6.0, "count": 60, "log_spaced": True},
}

CASES: dict[str, CaseStudy] = {
    "heat1d": CaseStudy(
        "heat1d", 20, 2, 2.0,
        {
            "name": "heat1d",
            "domain": {"kind": "interval", "params": {"a": 0.0, "b": 3.0}},
            "operator": {"terms": [
                {"alpha": [2], "coeff": f"-({_A})"},
                {"alpha": [1], "coeff": f"-{_DA}"},
                {"alpha": [0], "coeff": "-0.5"},
            ]},
            "source": _HEAT_SOURCE,
            "boundary": [
                {"where": "left", "operator": {"terms": [{"alpha": [1], "coeff": "1"}]}, "value": "0"},
                {"where": "right", "operator": {"kind": "dirichlet"}, "value": "0"},
            ],
            "oracle": {"fd": "heat1d"},
        },
    ),
    "disk_poisson": CaseStudy(
        "disk_poisson", 16, 5, 0.1,
        {
            "name": "disk_poisson",
            "domain": {"kind": "unit_disk", "params": {}},
            "operator": {"terms": _NEG_LAPLACIAN},
            "source": "1",
            "boundary": [{"where": "all", "operator": {"kind": "dirichlet"}, "value": "0"}],
            "oracle": {"exact": "(1-x1^2-x2^2)/4"},
        },
    ),
    "disk_gaussian_source": CaseStudy(
        "disk_gaussian_source", 50, 20, 0.01,
        {
            "name": "disk_gaussian_source",
            "domain": {"kind": "unit_disk", "params": {}},
            "operator": {"terms": _NEG_LAPLACIAN},
            "source": _gaussian_source("0.3", "0.6*0.3*cos(0.2)", "0.6*0.3*sin(0.2)", "0.025"),
            "boundary": [{"where": "all", "operator": {"kind": "dirichlet"}, "value": "0"}],
        },
    ),
    "star_gaussian_source": CaseStudy(
        "star_gaussian_source", 34, 20, 0.2,
        {
            "name": "star_gaussian_source",
            "domain": {"kind": "star", "params": {"radius": STAR_RADIUS}},
            "operator": {"terms": _NEG_LAPLACIAN},
            "source": _gaussian_source("0.8", f"0.8*cos({_QUARTER_PI})", f"0.8*sin({_QUARTER_PI})", "0.025"),
            "boundary": [{"where": "all", "operator": {"kind": "dirichlet"}, "value": "0"}],
        },
        # the source is narrower than the point spacing, so the evidence
        # keeps growing with ell; pin the lengthscale for the standard sizes
        fixed_ell=((34, 0.18), (43, 0.14)),
    ),
}


def _case(case_id: str) -> CaseStudy:
    try:
        return CASES[case_id]
    except KeyError:
        raise KeyError(f"unknown case {case_id!r}; choose from {', '.join(CASE_IDS)}") from None


def case_config(case_id: str, n_i: int | None = None, n_b: int | None = None,
                ell: float | None = None, **kw) -> ProblemConfig:
    return _case(case_id).config(n_i, n_b, ell, **kw)


def build_case(case_id: str, n_i: int | None = None, n_b: int | None = None,
               ell: float | None = None, **kw) -> ProblemSpec:
    """ProblemSpec for a named case; without ``ell`` the lengthscale is chosen by likelihood."""
    cfg = case_config(case_id, n_i, n_b, ell, **kw)
    if ell is not None:
        return build_problem(cfg)
    return resolve_problem(cfg)[0]


def exact_disk_solution(x) -> float:
    x = np.asarray(x, dtype=float)
    r2 = float(x[0] ** 2 + x[1] ** 2)
    if r2 > 1.0 + 1e-12:
        raise ValueError(f"{x} lies outside the unit disk")
    return (1.0 - r2) / 4.0


def heat1d_coefficient(x):
    return 0.5 * np.arctan(20.0 * (np.asarray(x, dtype=float) - 1.0)) + 1.0


@dataclass(frozen=True)
class FDReference:
    """Finite-difference solution of ``heat1d`` on a uniform grid of ``n`` intervals."""

    n: int
    x: np.ndarray
    u: np.ndarray
    source_scale: float = 1.0

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    def __call__(self, points) -> np.ndarray:
        return np.interp(np.asarray(points, dtype=float).reshape(-1), self.x, self.u)

    def neumann_residual(self) -> float:
        """Residual of the imposed row ``-3u_0 + 4u_1 - u_2 = 0``.

        Dividing by ``2h`` would turn this into the slope estimate, whose
        rounding error grows like ``1/h``.
        """
        return float(-3 * self.u[0] + 4 * self.u[1] - self.u[2])

    def residual(self) -> float:
        """Max-norm residual of the discrete equations, each row scaled by ``h^2``."""
        x, u, h = self.x, self.u, self.h
        a_half = heat1d_coefficient(0.5 * (x[:-1] + x[1:]))
        f = self.source_scale * np.exp(-(x[1:-1] - 2.0) ** 2)
        interior = (
            -a_half[:-1] * u[:-2] + (a_half[:-1] + a_half[1:]) * u[1:-1] - a_half[1:] * u[2:]
            - 0.5 * h * h * u[1:-1] - h * h * f
        )
        neumann = -3 * u[0] + 4 * u[1] - u[2]
        return float(max(np.max(np.abs(interior)), abs(neumann), abs(u[-1])))


def fd_solve_heat1d(n: int = 10_000, source_scale: float = 1.0) -> FDReference:
    """Conservative second-order finite differences for ``heat1d``.

    Interior rows use the flux form ``-(a_{j+1/2}(u_{j+1}-u_j) - a_{j-1/2}(u_j-u_{j-1}))/h^2``;
    ``u'(0) = 0`` uses the one-sided stencil ``(-3u_0 + 4u_1 - u_2)/(2h)``,
    folded into a tridiagonal row by eliminating ``u_2`` with the first
    interior equation.  ``u(3) = 0`` is imposed exactly.
    """
    if n < 16:
        raise ValueError("need at least 16 intervals")
    x = np.linspace(0.0, 3.0, n + 1)
    h = x[1] - x[0]
    a_half = heat1d_coefficient(0.5 * (x[:-1] + x[1:]))  # a at x_{j+1/2}, j = 0..n-1
    # unknowns u_0 .. u_{n-1}; rows scaled by h^2
    m = n
    lower = np.zeros(m)
    diag = np.zeros(m)
    upper = np.zeros(m)
    rhs = np.zeros(m)
    j = np.arange(1, m)
    lower[j] = -a_half[j - 1]
    diag[j] = a_half[j - 1] + a_half[j] - 0.5 * h * h
    upper[j] = -a_half[j]
    rhs[j] = h * h * source_scale * np.exp(-(x[j] - 2.0) ** 2)
    # row 0: -3u0 + 4u1 - u2 = 0 with u2 from row 1
    l1, d1, r1, f1 = lower[1], diag[1], upper[1], rhs[1]
    diag[0] = -3.0 + l1 / r1
    upper[0] = 4.0 + d1 / r1
    rhs[0] = f1 / r1

    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        u = linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
    except linalg.LinAlgError as exc:
        raise linalg.LinAlgError(f"finite-difference system is singular: {exc}") from None
    return FDReference(n, x, np.append(u, 0.0), source_scale)


def oracle_function(cfg: ProblemConfig, fd_n: int = 10_000) -> Callable[[np.ndarray], np.ndarray] | None:
    """Vectorized reference solution for ``cfg``, or None if it has none."""
    oracle = cfg.oracle
    if not oracle:
        return None
    if "exact" in oracle:
        e = ex.parse(oracle["exact"])
        return lambda pts: np.array([ex.evaluate(e, p) for p in np.atleast_2d(pts)])
    ref = fd_solve_heat1d(fd_n)
    return lambda pts: ref(np.asarray(pts)[:, 0])


def export_configs(directory: str | Path) -> list[Path]:
    """Write each case's default config to ``directory/<id>.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for cid in CASE_IDS:
        path = directory / f"{cid}.json"
        path.write_text(case_config(cid).dumps() + "\n", encoding="utf-8")
        out.append(path)
    return out

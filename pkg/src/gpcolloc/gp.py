"""Conditioning a Gaussian-process prior on PDE and boundary observations.

The observations are the linear functionals ``L[u](x_j) = f(x_j)`` at the
interior points and ``B_j[u](x_j) = g_j`` at the boundary points.  Everything
is jointly Gaussian, so the posterior over ``u`` is again a GP with

    mean(x)     = c(x)^T C^-1 y
    cov(x, x')  = c(x, x') - c(x)^T C^-1 c(x')

where ``C`` is the covariance of the observed functionals and ``c(x)`` is
the cross-covariance between ``u(x)`` and each of them.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import linalg

from . import expr as ex
from .geometry import BoundaryDatum, Discretization, Domain, validate_discretization
from .kernel import SEKernel
from .operators import (
    LinearDiffOperator,
    MultiIndex,
    check_boundary_order,
    coefficient_table,
    kernel_block,
)

__all__ = [
    "BoundaryDatum",
    "ProblemSpec",
    "AssembledSystem",
    "PosteriorField",
    "IllConditionedError",
    "NegativeVarianceError",
    "LengthscaleGrid",
    "assemble",
    "condition",
    "posterior_mean",
    "posterior_variance",
    "posterior_covariance",
    "log_marginal_likelihood",
    "select_lengthscale",
    "jittered_cholesky",
    "BASE_JITTER",
    "MAX_JITTER",
]

log = logging.getLogger(__name__)

BASE_JITTER = 1e-10
MAX_JITTER = 1e-4
SAFE_RCOND = 1e-8
REFINE_STEPS = 20
SYMMETRY_TOL = 1e-12


class IllConditionedError(np.linalg.LinAlgError):
    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter


class NegativeVarianceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """A linear boundary value problem together with its prior and collocation points."""

    domain: Domain
    interior_op: LinearDiffOperator
    source: ex.Expression
    discretization: Discretization
    kernel: SEKernel

    def __post_init__(self):
        d = self.kernel.dim
        if self.domain.dim != d or self.interior_op.dim != d:
            raise ValueError(
                f"dimension mismatch: domain {self.domain.dim}, operator "
                f"{self.interior_op.dim}, kernel {d}"
            )
        if self.discretization.n_interior and self.discretization.interior.shape[1] != d:
            raise ValueError("interior points have the wrong dimension")
        if ex.max_variable_index(self.source) > d:
            raise ValueError("source uses a coordinate beyond the problem dimension")
        for b in self.discretization.boundary:
            if b.point.shape != (d,):
                raise ValueError(f"boundary point {b.point} has the wrong dimension")
            check_boundary_order(self.interior_op, b.operator)

    @property
    def dim(self) -> int:
        return self.kernel.dim

    @property
    def n_observations(self) -> int:
        return self.discretization.n_interior + self.discretization.n_boundary

    def with_lengthscale(self, ell: float) -> "ProblemSpec":
        return replace(self, kernel=self.kernel.with_lengthscale(ell))

    def validate(self) -> None:
        """Check the geometric invariants of the point sets."""
        validate_discretization(self.domain, self.discretization)

    def observation_points(self) -> np.ndarray:
        disc = self.discretization
        return np.vstack([disc.interior.reshape(-1, self.dim), disc.boundary_points.reshape(-1, self.dim)])

    def observation_operators(self) -> list[LinearDiffOperator]:
        disc = self.discretization
        return [self.interior_op] * disc.n_interior + [b.operator for b in disc.boundary]

    def observation_values(self) -> np.ndarray:
        disc = self.discretization
        f = [ex.evaluate(self.source, x) for x in disc.interior]
        g = [b.value for b in disc.boundary]
        return np.array(f + g, dtype=float)


@dataclass(frozen=True)
class AssembledSystem:
    C: np.ndarray
    y: np.ndarray
    chol: np.ndarray
    jitter_used: float
    points: np.ndarray = field(repr=False)
    table: tuple[list[MultiIndex], np.ndarray] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.y)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """``(C + jitter I)^-1 rhs`` by two triangular solves."""
        return linalg.cho_solve((self.chol, True), rhs, check_finite=False)

    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))


def jittered_cholesky(
    C: np.ndarray, base: float = BASE_JITTER, maximum: float = MAX_JITTER
) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``C + jitter * I``.

    No jitter is added when ``C`` is safely positive definite (eigenvalue
    ratio at least ``SAFE_RCOND``).  Otherwise the jitter starts at
    ``base * max(diag C)`` and grows tenfold until the factorization succeeds
    or ``maximum * max(diag C)`` has been tried.
    """
    n = len(C)
    if n == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.max(np.diag(C)))
    if not scale > 0 or not np.all(np.isfinite(C)):
        raise IllConditionedError("covariance matrix has no positive diagonal", 0.0)
    eig = linalg.eigvalsh(C, check_finite=False)
    if eig[0] >= SAFE_RCOND * eig[-1]:
        try:
            return linalg.cholesky(C, lower=True, check_finite=False), 0.0
        except linalg.LinAlgError:
            pass
    rel = base
    while True:
        jitter = rel * scale
        try:
            L = linalg.cholesky(C + jitter * np.eye(n), lower=True, check_finite=False)
            if np.all(np.isfinite(L)):
                return L, jitter
        except linalg.LinAlgError:
            pass
        if rel >= maximum * (1 - 1e-9):
            raise IllConditionedError(
                f"Cholesky failed with jitter up to {jitter:.3e} (relative {rel:.0e})", jitter
            )
        log.debug("Cholesky failed with jitter %.3e, escalating", jitter)
        rel *= 10.0


def assemble(spec: ProblemSpec) -> AssembledSystem:
    """Build the observation covariance ``C`` and data ``y`` and factor ``C``."""
    points = spec.observation_points()
    table = coefficient_table(spec.observation_operators(), points) if len(points) else ([], np.zeros((0, 0)))
    C = kernel_block(spec.kernel, table, points, table, points)
    if len(C):
        asym = np.max(np.abs(C - C.T))
        if asym > SYMMETRY_TOL * np.max(np.abs(C)):
            raise AssertionError(f"assembled covariance is not symmetric ({asym:.3e})")
        C = 0.5 * (C + C.T)
    chol, jitter = jittered_cholesky(C)
    return AssembledSystem(
        C=C,
        y=spec.observation_values(),
        chol=chol,
        jitter_used=jitter,
        points=points,
        table=table,
    )


@dataclass(frozen=True)
class PosteriorField:
    """Posterior GP after conditioning on all observations of ``spec``."""

    spec: ProblemSpec
    system: AssembledSystem
    weights: np.ndarray

    @property
    def kernel(self) -> SEKernel:
        return self.spec.kernel

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x.reshape(-1, self.spec.dim)

    def cross_covariance(self, x, op: LinearDiffOperator | None = None) -> np.ndarray:
        """Rows ``Cov[A[u](x_t), obs_j]`` for each test point; ``A`` defaults to the identity."""
        X = self._points(x)
        op = op or LinearDiffOperator.identity(self.spec.dim)
        left = coefficient_table([op] * len(X), X)
        return kernel_block(self.kernel, left, X, self.system.table, self.system.points)

    def mean(self, x) -> np.ndarray:
        X = self._points(x)
        if self.system.size == 0:
            return np.zeros(len(X))
        return self.cross_covariance(X) @ self.weights

    def apply(self, op: LinearDiffOperator, x) -> np.ndarray:
        """``A[mean](x)``, computed from kernel derivatives (no finite differences)."""
        X = self._points(x)
        if self.system.size == 0:
            return np.zeros(len(X))
        return self.cross_covariance(X, op) @ self.weights

    def _whitened(self, X) -> np.ndarray:
        K = self.cross_covariance(X)
        return linalg.solve_triangular(self.system.chol, K.T, lower=True, check_finite=False)

    def covariance(self, x, xp) -> np.ndarray:
        """Posterior covariance matrix between point sets ``x`` and ``xp``."""
        X, XP = self._points(x), self._points(xp)
        prior = self.kernel.eval(X[:, None, :], XP[None, :, :])
        if self.system.size == 0:
            return prior
        return prior - self._whitened(X).T @ self._whitened(XP)

    def variance(self, x) -> np.ndarray:
        X = self._points(x)
        s2 = self.kernel.variance
        if self.system.size == 0:
            return np.full(len(X), s2)
        V = self._whitened(X)
        var = s2 - np.sum(V * V, axis=0)
        worst = var.min() if len(var) else 0.0
        if worst < -1e-10 * s2:
            raise NegativeVarianceError(
                f"posterior variance {worst:.3e} is negative beyond tolerance (s^2 = {s2:.3e})"
            )
        return np.maximum(var, 0.0)

    def std(self, x) -> np.ndarray:
        return np.sqrt(self.variance(x))


def _refined_weights(system: AssembledSystem) -> np.ndarray:
    """``C^-1 y`` by iterative refinement preconditioned with the jittered factor.

    The jittered solve alone leaves a residual ``jitter * w``; refinement
    removes it wherever the data allow and stops once the residual stalls.
    """
    w = system.solve(system.y)
    if system.jitter_used == 0.0:
        return w
    r = system.y - system.C @ w
    rnorm = np.max(np.abs(r))
    for _ in range(REFINE_STEPS):
        w_new = w + system.solve(r)
        r_new = system.y - system.C @ w_new
        new_norm = np.max(np.abs(r_new))
        if not new_norm < 0.5 * rnorm:
            if new_norm < rnorm:
                w = w_new
            break
        w, r, rnorm = w_new, r_new, new_norm
    return w


def condition(spec: ProblemSpec, system: AssembledSystem | None = None) -> PosteriorField:
    system = system if system is not None else assemble(spec)
    w = _refined_weights(system) if system.size else np.zeros(0)
    return PosteriorField(spec=spec, system=system, weights=w)


def posterior_mean(field: PosteriorField, x: Sequence[float]) -> float:
    return float(field.mean(x)[0])


def posterior_variance(field: PosteriorField, x: Sequence[float]) -> float:
    return float(field.variance(x)[0])


def posterior_covariance(field: PosteriorField, x: Sequence[float], xp: Sequence[float]) -> float:
    return float(field.covariance(x, xp)[0, 0])


def log_marginal_likelihood(spec: ProblemSpec, system: AssembledSystem | None = None) -> float:
    """Gaussian log evidence of the observed values under the prior."""
    system = system if system is not None else assemble(spec)
    n = system.size
    if n == 0:
        return 0.0
    alpha = system.solve(system.y)
    return float(-0.5 * system.y @ alpha - 0.5 * system.log_det() - 0.5 * n * math.log(2 * math.pi))


@dataclass(frozen=True)
class LengthscaleGrid:
    ell_min: float
    ell_max: float
    count: int = 40
    log_spaced: bool = True

    def __post_init__(self):
        if not 0 < self.ell_min <= self.ell_max:
            raise ValueError(f"need 0 < ell_min <= ell_max, got {self.ell_min}, {self.ell_max}")
        if self.count < 1:
            raise ValueError("grid needs at least one point")

    @classmethod
    def default_for(cls, domain: Domain) -> "LengthscaleGrid":
        d = domain.diameter
        return cls(d / 100.0, 3.0 * d, 40, True)

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.ell_min])
        if self.log_spaced:
            return np.geomspace(self.ell_min, self.ell_max, self.count)
        return np.linspace(self.ell_min, self.ell_max, self.count)


def select_lengthscale(
    spec: ProblemSpec, grid: LengthscaleGrid | Sequence[float]
) -> tuple[float, list[tuple[float, float]]]:
    """Exhaustive search over ``grid`` for the lengthscale maximizing the evidence.

    Returns the best lengthscale and the profile ``[(ell, L(ell) / max L)]``
    in grid order.  Grid points where assembly fails get likelihood zero.
    """
    ells = grid.values() if isinstance(grid, LengthscaleGrid) else np.asarray(grid, dtype=float)
    logliks = []
    for ell in ells:
        try:
            logliks.append(log_marginal_likelihood(spec.with_lengthscale(float(ell))))
        except (IllConditionedError, np.linalg.LinAlgError) as exc:
            log.info("lengthscale %.4g skipped: %s", ell, exc)
            logliks.append(-math.inf)
    logliks = np.array(logliks)
    if not np.any(np.isfinite(logliks)):
        raise IllConditionedError("assembly failed at every grid lengthscale", math.nan)
    best = int(np.argmax(logliks))
    top = logliks[best]
    profile = [(float(e), float(math.exp(v - top)) if np.isfinite(v) else 0.0) for e, v in zip(ells, logliks)]
    return float(ells[best]), profile

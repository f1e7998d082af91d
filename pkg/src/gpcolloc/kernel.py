"""Squared-exponential covariance and its closed-form mixed partial derivatives.

With ``t_r = (x_r - x'_r) / l_r`` and ``phi(t) = exp(-t^2 / 2)``::

    c(x, x') = s^2 * prod_r phi(t_r)

    d^a_x d^b_x' c = s^2 * prod_r (-1)^a_r * l_r^-(a_r + b_r) * He_{a_r+b_r}(t_r) * phi(t_r)

where ``He_n`` is the probabilists' Hermite polynomial.  Every covariance
between ``u`` and a linear functional of ``u`` reduces to sums of these terms.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

__all__ = ["SEKernel", "KernelOrderError", "MAX_ORDER_PER_COORDINATE", "hermite_he"]

MAX_ORDER_PER_COORDINATE = 8


class KernelOrderError(ValueError):
    pass


def hermite_he(n: int, t):
    """Probabilists' Hermite polynomial He_n evaluated elementwise at ``t``."""
    t = np.asarray(t, dtype=float)
    if n == 0:
        return np.ones_like(t)
    prev, cur = np.ones_like(t), t.copy()
    for k in range(1, n):
        prev, cur = cur, t * cur - k * prev
    return cur


@dataclass(frozen=True)
class SEKernel:
    """Stationary squared-exponential kernel.

    Parameters
    ----------
    s : float
        Signal strength; ``c(x, x) = s**2``.
    lengthscales : tuple of float
        One lengthscale per spatial dimension.
    """

    s: float
    lengthscales: tuple[float, ...]

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "s", float(self.s))
        if not self.s > 0:
            raise ValueError(f"signal strength must be positive, got {self.s}")
        if not 1 <= len(ls) <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(ls)}")
        if not all(v > 0 for v in ls):
            raise ValueError(f"lengthscales must be positive, got {ls}")

    @classmethod
    def isotropic(cls, s: float, ell: float, dim: int) -> "SEKernel":
        return cls(s, (float(ell),) * dim)

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    @property
    def variance(self) -> float:
        return self.s**2

    def with_lengthscale(self, ell: float) -> "SEKernel":
        """Same kernel with every lengthscale tied to ``ell``."""
        return replace(self, lengthscales=(float(ell),) * self.dim)

    def _scaled_diff(self, x, xp):
        x = np.asarray(x, dtype=float)
        xp = np.asarray(xp, dtype=float)
        if x.shape[-1] != self.dim or xp.shape[-1] != self.dim:
            raise ValueError(
                f"points must have trailing dimension {self.dim}, got {x.shape} and {xp.shape}"
            )
        return (x - xp) / np.asarray(self.lengthscales)

    def eval(self, x, xp):
        """``c(x, x')``; broadcasts over leading axes of ``x`` and ``xp``."""
        t = self._scaled_diff(x, xp)
        return self.s**2 * np.exp(-0.5 * np.sum(t * t, axis=-1))

    def eval_derivative(self, alpha: Sequence[int], beta: Sequence[int], x, xp):
        """``d^alpha`` w.r.t. ``x`` and ``d^beta`` w.r.t. ``x'`` of ``c(x, x')``.

        ``alpha`` and ``beta`` are multi-indices (length ``dim``).  Broadcasts
        like :meth:`eval`.
        """
        alpha = tuple(int(a) for a in alpha)
        beta = tuple(int(b) for b in beta)
        if len(alpha) != self.dim or len(beta) != self.dim:
            raise ValueError(f"multi-indices must have length {self.dim}")
        if min(alpha + beta) < 0:
            raise ValueError("multi-index components must be non-negative")
        t = self._scaled_diff(x, xp)
        out = self.s**2 * np.exp(-0.5 * np.sum(t * t, axis=-1))
        for r, (a, b) in enumerate(zip(alpha, beta)):
            n = a + b
            if n > MAX_ORDER_PER_COORDINATE:
                raise KernelOrderError(
                    f"derivative order {n} in coordinate {r + 1} exceeds {MAX_ORDER_PER_COORDINATE}"
                )
            if n == 0:
                continue
            sign = -1.0 if a % 2 else 1.0
            out = out * (sign * self.lengthscales[r] ** (-n)) * hermite_he(n, t[..., r])
        return out

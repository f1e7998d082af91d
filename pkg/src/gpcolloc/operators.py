"""Linear differential operators ``L[u] = sum_alpha L_alpha(x) d^alpha u``.

Operators are stored as a mapping from multi-index to coefficient expression.
Applying an operator pair to the kernel gives the covariance between two
linear functionals of a Gaussian process ``u``::

    Cov[A[u](x), B[u](x')] = sum_a sum_b A_a(x) B_b(x') d^a (d')^b c(x, x')
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import expr as ex
from .kernel import SEKernel

__all__ = [
    "MultiIndex",
    "OperatorTerm",
    "LinearDiffOperator",
    "BoundaryOrderWarning",
    "check_boundary_order",
    "apply_to_kernel",
    "coefficient_table",
    "kernel_block",
]

Coefficient = Union[ex.Expression, str, float, int]


def _as_expression(c: Coefficient) -> ex.Expression:
    if isinstance(c, str):
        return ex.parse(c)
    if isinstance(c, (int, float, np.floating, np.integer)):
        return ex.const(float(c))
    return c


@dataclass(frozen=True)
class MultiIndex:
    components: tuple[int, ...]

    def __post_init__(self):
        comps = tuple(int(a) for a in self.components)
        if not comps:
            raise ValueError("multi-index needs at least one component")
        if min(comps) < 0:
            raise ValueError(f"multi-index components must be non-negative: {comps}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, dim: int) -> "MultiIndex":
        return cls((0,) * dim)

    @classmethod
    def unit(cls, dim: int, r: int, k: int = 1) -> "MultiIndex":
        """``k``-th derivative in (zero-based) coordinate ``r``."""
        comps = [0] * dim
        comps[r] = k
        return cls(tuple(comps))

    @property
    def dim(self) -> int:
        return len(self.components)

    def order(self) -> int:
        return sum(self.components)

    def __iter__(self):
        return iter(self.components)

    def __repr__(self):
        return f"MultiIndex{self.components}"


@dataclass(frozen=True)
class OperatorTerm:
    alpha: MultiIndex
    coefficient: ex.Expression


class LinearDiffOperator:
    """Sum of coefficient-weighted partial derivatives.

    Terms sharing a multi-index are merged by adding their coefficient
    expressions.

    >>> lap = LinearDiffOperator.laplacian(2, scale=-1.0)
    >>> lap.order
    2
    """

    __slots__ = ("dim", "terms")

    def __init__(self, terms: Iterable[tuple[Sequence[int] | MultiIndex, Coefficient]], dim: int | None = None):
        merged: dict[MultiIndex, ex.Expression] = {}
        for alpha, coeff in terms:
            if not isinstance(alpha, MultiIndex):
                alpha = MultiIndex(tuple(alpha))
            c = _as_expression(coeff)
            if dim is None:
                dim = alpha.dim
            if alpha.dim != dim:
                raise ValueError(f"multi-index {alpha} does not match dimension {dim}")
            if alpha in merged:
                merged[alpha] = ex.add(merged[alpha], c)
            else:
                merged[alpha] = c
        if dim is None:
            raise ValueError("an operator without terms needs an explicit dimension")
        if not 1 <= dim <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {dim}")
        for e in merged.values():
            if ex.max_variable_index(e) > dim:
                raise ValueError(f"coefficient {ex.to_source(e)} uses a coordinate beyond x{dim}")
        self.dim = dim
        self.terms = tuple(OperatorTerm(a, c) for a, c in merged.items())

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls, dim: int) -> "LinearDiffOperator":
        return cls([(MultiIndex.zero(dim), 1.0)])

    @classmethod
    def partial(cls, alpha: Sequence[int], coeff: Coefficient = 1.0) -> "LinearDiffOperator":
        return cls([(MultiIndex(tuple(alpha)), coeff)])

    @classmethod
    def laplacian(cls, dim: int, scale: Coefficient = 1.0) -> "LinearDiffOperator":
        return cls([(MultiIndex.unit(dim, r, 2), scale) for r in range(dim)])

    @classmethod
    def directional(cls, direction: Sequence[float]) -> "LinearDiffOperator":
        """First derivative along a fixed vector (e.g. an outward normal)."""
        d = len(direction)
        return cls([(MultiIndex.unit(d, r), float(v)) for r, v in enumerate(direction)])

    @classmethod
    def from_mapping(cls, terms: Mapping[Sequence[int], Coefficient]) -> "LinearDiffOperator":
        return cls(list(terms.items()))

    # -- properties -------------------------------------------------------

    @property
    def order(self) -> int:
        return max((t.alpha.order() for t in self.terms), default=0)

    def alphas(self) -> list[MultiIndex]:
        return [t.alpha for t in self.terms]

    def coefficients_at(self, x: Sequence[float]) -> dict[MultiIndex, float]:
        return {t.alpha: ex.evaluate(t.coefficient, x) for t in self.terms}

    def __add__(self, other: "LinearDiffOperator") -> "LinearDiffOperator":
        if other.dim != self.dim:
            raise ValueError("cannot add operators of different dimension")
        return LinearDiffOperator(
            [(t.alpha, t.coefficient) for t in self.terms + other.terms], dim=self.dim
        )

    def scaled(self, factor: Coefficient) -> "LinearDiffOperator":
        f = _as_expression(factor)
        return LinearDiffOperator(
            [(t.alpha, ex.BinOp("*", f, t.coefficient)) for t in self.terms], dim=self.dim
        )

    def to_terms(self) -> list[dict]:
        """Plain-data form used by config files."""
        return [
            {"alpha": list(t.alpha.components), "coeff": ex.to_source(t.coefficient)}
            for t in self.terms
        ]

    def __eq__(self, other):
        if not isinstance(other, LinearDiffOperator):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, self.terms))

    def __repr__(self):
        body = " + ".join(
            f"[{ex.to_source(t.coefficient)}]*d{t.alpha.components}" for t in self.terms
        )
        return f"LinearDiffOperator({body or '0'})"


class BoundaryOrderWarning(UserWarning):
    pass


def check_boundary_order(interior: LinearDiffOperator, boundary: LinearDiffOperator) -> bool:
    """True when the boundary operator is at least one order below the interior one.

    A violation only warns; the solve can still proceed.
    """
    if interior.dim != boundary.dim:
        raise ValueError(
            f"interior operator is {interior.dim}-D but boundary operator is {boundary.dim}-D"
        )
    if boundary.order <= interior.order - 1:
        return True
    warnings.warn(
        f"boundary operator has order {boundary.order}, interior operator order {interior.order}",
        BoundaryOrderWarning,
        stacklevel=2,
    )
    return False


# --------------------------------------------------------------------------
# kernel application


def coefficient_table(
    ops: Sequence[LinearDiffOperator], points
) -> tuple[list[MultiIndex], np.ndarray]:
    """Union of multi-indices over ``ops`` and the coefficient matrix.

    Row ``i`` holds the coefficients of ``ops[i]`` evaluated at ``points[i]``
    (zero where that operator lacks the multi-index).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(ops) != len(points):
        raise ValueError("need one operator per point")
    index: dict[MultiIndex, int] = {}
    for op in ops:
        for a in op.alphas():
            index.setdefault(a, len(index))
    table = np.zeros((len(ops), len(index)))
    for i, (op, x) in enumerate(zip(ops, points)):
        for a, v in op.coefficients_at(x).items():
            table[i, index[a]] = v
    return list(index), table


def kernel_block(
    kernel: SEKernel,
    left: tuple[list[MultiIndex], np.ndarray],
    xl,
    right: tuple[list[MultiIndex], np.ndarray],
    xr,
) -> np.ndarray:
    """Matrix ``K[i, j] = Cov[A_i[u](xl_i), B_j[u](xr_j)]``.

    ``left`` and ``right`` come from :func:`coefficient_table`.
    """
    xl = np.atleast_2d(np.asarray(xl, dtype=float))
    xr = np.atleast_2d(np.asarray(xr, dtype=float))
    alphas, A = left
    betas, B = right
    out = np.zeros((len(xl), len(xr)))
    if len(xl) == 0 or len(xr) == 0:
        return out
    X, XP = xl[:, None, :], xr[None, :, :]
    for i, a in enumerate(alphas):
        wa = A[:, i]
        if not wa.any():
            continue
        for j, b in enumerate(betas):
            wb = B[:, j]
            if not wb.any():
                continue
            out += wa[:, None] * wb[None, :] * kernel.eval_derivative(a.components, b.components, X, XP)
    return out


def apply_to_kernel(
    op_a: LinearDiffOperator,
    op_b: LinearDiffOperator | None,
    kernel: SEKernel,
    x: Sequence[float],
    xp: Sequence[float],
) -> float:
    """``A B' [c](x, x')``: ``op_a`` acts on ``x``, ``op_b`` (if given) on ``x'``."""
    if op_a.dim != kernel.dim or (op_b is not None and op_b.dim != kernel.dim):
        raise ValueError("operator and kernel dimensions differ")
    if op_b is None:
        op_b = LinearDiffOperator.identity(kernel.dim)
    left = coefficient_table([op_a], [x])
    right = coefficient_table([op_b], [xp])
    return float(kernel_block(kernel, left, [x], right, [xp])[0, 0])

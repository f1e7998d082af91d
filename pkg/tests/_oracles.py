"""Independent reference computations used by the tests.

Nothing here calls the Hermite-polynomial path of ``gpcolloc.kernel``; the
kernel derivatives are approximated by nested central differences of the
plain formula, evaluated in 60-digit arithmetic so that high-order stencils
do not drown in cancellation.
"""
from __future__ import annotations

import itertools
from math import comb

import mpmath as mp
import numpy as np

DPS = 60
FD_STEP = 1e-4


def _stencil(n: int, h):
    """Offsets and weights of the n-th central difference with step h."""
    half = mp.mpf(n) / 2
    return [((half - k) * h, (-1) ** k * comb(n, k) / h**n) for k in range(n + 1)]


def _factor_fd(x, xp, ell, a: int, b: int, h):
    """Nested central difference of exp(-(x-x')^2 / (2 ell^2)): order a in x, b in x'."""
    total = mp.mpf(0)
    for ox, wx in _stencil(a, h):
        for oxp, wxp in _stencil(b, h):
            t = (x + ox - xp - oxp) / ell
            total += wx * wxp * mp.exp(-t * t / 2)
    return total


def se_derivative_fd(s, ells, alpha, beta, x, xp, h=FD_STEP):
    """Richardson-extrapolated nested central difference of the SE kernel.

    The tensor-product stencil applied to ``s^2 * prod_r k_r(x_r, x'_r)``
    factorizes over coordinates, so each coordinate's stencil is summed
    separately and the products are combined before extrapolation.
    """
    with mp.workdps(DPS):
        hs = (mp.mpf(h), mp.mpf(h) / 2)
        vals = []
        for step in hs:
            v = mp.mpf(s) ** 2
            for r in range(len(alpha)):
                v *= _factor_fd(mp.mpf(x[r]), mp.mpf(xp[r]), mp.mpf(ells[r]), alpha[r], beta[r], step)
            vals.append(v)
        return float((4 * vals[1] - vals[0]) / 3)


def se_kernel_mp(s, ells, x, xp) -> float:
    with mp.workdps(DPS):
        q = sum(((mp.mpf(a) - mp.mpf(b)) / mp.mpf(l)) ** 2 for a, b, l in zip(x, xp, ells))
        return float(mp.mpf(s) ** 2 * mp.exp(-q / 2))


def gaussian_conditional(joint_cov: np.ndarray, n_test: int, observed: np.ndarray):
    """Mean and covariance of the first ``n_test`` components given the rest.

    Uses a dense LU solve on the explicitly formed joint covariance.
    """
    K_tt = joint_cov[:n_test, :n_test]
    K_to = joint_cov[:n_test, n_test:]
    K_oo = joint_cov[n_test:, n_test:]
    mean = K_to @ np.linalg.solve(K_oo, observed)
    cov = K_tt - K_to @ np.linalg.solve(K_oo, K_to.T)
    return mean, cov


def se_derivative_fd_table(s, ells, x, xp, max_per_coord: int = 4, h=FD_STEP):
    """FD values for every (alpha, beta) with alpha_r + beta_r <= max_per_coord.

    Same numbers as :func:`se_derivative_fd`, sharing per-coordinate stencils.
    Returns ``{(alpha, beta): value}`` with tuple multi-indices.
    """
    d = len(x)
    pairs = [(a, b) for a in range(max_per_coord + 1) for b in range(max_per_coord + 1 - a)]
    with mp.workdps(DPS):
        steps = (mp.mpf(h), mp.mpf(h) / 2)
        factors = [
            [
                {ab: _factor_fd(mp.mpf(x[r]), mp.mpf(xp[r]), mp.mpf(ells[r]), ab[0], ab[1], step) for ab in pairs}
                for r in range(d)
            ]
            for step in steps
        ]
        s2 = mp.mpf(s) ** 2
        out = {}
        for combo in itertools.product(pairs, repeat=d):
            v = []
            for k in range(2):
                p = s2
                for r, ab in enumerate(combo):
                    p *= factors[k][r][ab]
                v.append(p)
            alpha = tuple(ab[0] for ab in combo)
            beta = tuple(ab[1] for ab in combo)
            out[(alpha, beta)] = float((4 * v[1] - v[0]) / 3)
        return out

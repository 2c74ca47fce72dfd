"""Largest-eigenvalue estimation and Chebyshev filter supports."""

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix, Graph, normalized_laplacian, sparse_add, sparse_matmul

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChebSupports:
    """Precomputed Chebyshev supports T_0..T_K of the rescaled Laplacian."""

    order: int
    supports: tuple
    lambda_max: float


def power_iteration(m: CsrMatrix, tol: float = 1e-6, max_iters: int = 1000,
                    seed=0) -> float:
    """Estimate the dominant eigenvalue of a symmetric matrix.

    Iterates from a seeded random start vector and stops when successive
    Rayleigh quotients differ by less than ``tol``. If the budget runs out
    first, the best estimate is returned and a RuntimeWarning is emitted.
    """
    if m.n_rows != m.n_cols:
        raise ValueError("power iteration needs a square matrix")
    if m.nnz == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m.n_rows)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = m.dot(v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # start vector happened to lie in the nullspace
            v = rng.standard_normal(m.n_rows)
            v /= np.linalg.norm(v)
            continue
        lam_new = float(v @ w)
        v = w / norm_w
        if abs(lam_new - lam) < tol:
            return lam_new
        lam = lam_new
    warnings.warn(f"power iteration did not converge in {max_iters} iterations",
                  RuntimeWarning)
    return lam


def rescale_laplacian(laplacian: CsrMatrix, lambda_max: float) -> CsrMatrix:
    """Map the Laplacian spectrum into [-1, 1]: Lt = 2L/lambda_max - I."""
    if not lambda_max > 0.0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    eye = CsrMatrix.identity(laplacian.n_rows)
    return sparse_add(laplacian.scaled(2.0 / lambda_max), eye, cb=-1.0)


def chebyshev_supports(l_tilde: CsrMatrix, order: int,
                       lambda_max: float = math.nan) -> ChebSupports:
    """Supports via the recursion T_0 = I, T_1 = Lt, T_k = 2 Lt T_{k-1} - T_{k-2}."""
    if order < 0:
        raise ValueError("order must be >= 0")
    supports = [CsrMatrix.identity(l_tilde.n_rows)]
    if order >= 1:
        supports.append(l_tilde)
    for _ in range(2, order + 1):
        nxt = sparse_add(sparse_matmul(l_tilde, supports[-1]).scaled(2.0),
                         supports[-2], cb=-1.0)
        supports.append(nxt)
    return ChebSupports(order, tuple(supports), lambda_max)


def build_chebyshev_supports(g: Graph, order: int, tol: float = 1e-6,
                             max_iters: int = 1000, seed=0,
                             lambda_max: float | None = None) -> ChebSupports:
    """Full pipeline: Laplacian, lambda_max by power iteration (unless
    overridden), rescale, recursion."""
    lap = normalized_laplacian(g)
    if lambda_max is None:
        lambda_max = power_iteration(lap, tol=tol, max_iters=max_iters, seed=seed)
        log.debug("power iteration lambda_max = %.8f", lambda_max)
    return chebyshev_supports(rescale_laplacian(lap, lambda_max), order, lambda_max)

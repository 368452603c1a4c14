"""Linear dynamics on R^n: the hyperbolic generator, matrix exponentials and
closed-form flows.

The exponential uses scaling and squaring around a truncated Taylor series.
Relative accuracy is about 1e-12 for ||At||_1 <= 50. Arguments with
||At||_1 > EXP_NORM_LIMIT raise MatrixExpRangeError instead of overflowing.
"""
from __future__ import annotations

import math

import numpy as np

EXP_NORM_LIMIT = 700.0
ACCURATE_NORM = 50.0

_TAYLOR_TERMS = 18
# ||X|| <= 1/2 after scaling; the remainder 0.5**19/19! is far below eps
_SCALED_NORM = 0.5


class MatrixExpRangeError(OverflowError):
    pass


def as_matrix(A) -> np.ndarray:
    M = np.array(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def as_state(x, dim: int | None = None) -> np.ndarray:
    v = np.array(x, dtype=float).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"state has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("state coordinates must be finite")
    return v


def hyperbolic_generator(extra_dims: int = 0) -> np.ndarray:
    """[[0,1,0],[1,0,0],[0,0,0]] plus an identity block for the extra w-coordinates."""
    if extra_dims < 0:
        raise ValueError("extra_dims must be nonnegative")
    n = 3 + extra_dims
    A = np.zeros((n, n))
    A[0, 1] = A[1, 0] = 1.0
    A[3:, 3:] = np.eye(extra_dims)
    return A


def matrix_exp(A, t: float = 1.0) -> np.ndarray:
    """exp(A t) by scaling and squaring."""
    M = as_matrix(A)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    X = M * t
    norm = np.linalg.norm(X, 1)
    if norm > EXP_NORM_LIMIT:
        raise MatrixExpRangeError(
            f"||At||_1 = {norm:.3g} exceeds the supported range {EXP_NORM_LIMIT}"
        )
    squarings = 0
    if norm > _SCALED_NORM:
        squarings = int(math.ceil(math.log2(norm / _SCALED_NORM)))
    X = X / 2.0**squarings

    n = X.shape[0]
    eye = np.eye(n)
    # Horner form of sum_k X^k / k!
    E = eye.copy()
    for k in range(_TAYLOR_TERMS, 0, -1):
        E = eye + (X @ E) / k
    for _ in range(squarings):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise MatrixExpRangeError("matrix exponential overflowed")
    return E


def flow_point(A, t: float, x) -> np.ndarray:
    M = as_matrix(A)
    v = as_state(x, M.shape[0])
    return matrix_exp(M, t) @ v


def closed_form_flow3(t, p) -> np.ndarray:
    """Flow of the hyperbolic system on R^3 in closed form.

    Accepts a single point of shape (3,) or a batch (..., 3); `t` broadcasts
    against the leading axes.
    """
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise ValueError("closed_form_flow3 expects points in R^3")
    t = np.asarray(t, dtype=float)
    ch, sh = np.cosh(t), np.sinh(t)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.stack([x * ch + y * sh, x * sh + y * ch, z + 0.0 * t], axis=-1)


def conserved_quantity(p):
    """x^2 - y^2, constant along every orbit of the hyperbolic flow."""
    p = np.asarray(p, dtype=float)
    return p[..., 0] ** 2 - p[..., 1] ** 2


def product_generator(A, extra_dims: int) -> np.ndarray:
    """Block-diagonal extension diag(A, I) that adds expanding coordinates w' = w."""
    M = as_matrix(A)
    n = M.shape[0]
    out = np.zeros((n + extra_dims, n + extra_dims))
    out[:n, :n] = M
    out[n:, n:] = np.eye(extra_dims)
    return out

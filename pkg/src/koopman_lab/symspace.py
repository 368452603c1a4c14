"""The space of polynomials of degree <= m on V*, the diagonal embedding of V
into it, and the linear generator that makes that embedding equivariant.

Coordinates are plain monomials v^alpha in graded-lex order, so a linear
functional is just a coefficient vector of a polynomial on V.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .linflow import as_matrix, as_state, matrix_exp
from .polynomials import MultiPoly, grlex_key

MAX_BASIS_DIM = 10_000


def basis_dim(n: int, m: int) -> int:
    if n < 1 or m < 1:
        raise ValueError("basis_dim needs n >= 1 and m >= 1")
    d = math.comb(n + m, n)
    if d > MAX_BASIS_DIM:
        raise OverflowError(f"P^{m} of a {n}-dimensional space has dimension {d} > {MAX_BASIS_DIM}")
    return d


def _multi_indices(n: int, m: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(m + 1):
        for combo in itertools.combinations_with_replacement(range(n), deg):
            exp = [0] * n
            for i in combo:
                exp[i] += 1
            out.append(tuple(exp))
    return sorted(set(out), key=grlex_key)


@dataclass(frozen=True)
class PolySpaceBasis:
    n: int
    m: int
    index_list: tuple = field(init=False, repr=False)

    def __post_init__(self):
        basis_dim(self.n, self.m)
        object.__setattr__(self, "index_list", tuple(_multi_indices(self.n, self.m)))

    @property
    def dim(self) -> int:
        return len(self.index_list)

    @cached_property
    def position(self) -> dict:
        return {alpha: i for i, alpha in enumerate(self.index_list)}

    @cached_property
    def exponents(self) -> np.ndarray:
        return np.array(self.index_list, dtype=int)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "dim": self.dim,
                "index_list": [list(a) for a in self.index_list]}


@dataclass(frozen=True)
class PolySpaceElement:
    basis: PolySpaceBasis
    coords: np.ndarray


@dataclass(frozen=True)
class Covector:
    basis: PolySpaceBasis
    coords: np.ndarray


def _monomials(basis: PolySpaceBasis, v: np.ndarray) -> np.ndarray:
    """All v^alpha for alpha in the basis; v may be a batch (..., n)."""
    exps = basis.exponents
    return np.prod(v[..., None, :] ** exps, axis=-1)


def delta_embed(v, m: int, basis: PolySpaceBasis | None = None) -> PolySpaceElement:
    """v -> (v^alpha)_{1 <= |alpha| <= m}; the constant coordinate is zero."""
    vec = as_state(v)
    basis = basis or PolySpaceBasis(vec.shape[0], m)
    if basis.n != vec.shape[0] or basis.m != m:
        raise ValueError("basis does not match the vector dimension and degree")
    coords = _monomials(basis, vec)
    coords[0] = 0.0
    return PolySpaceElement(basis, coords)


def delta_embed_many(points, basis: PolySpaceBasis) -> np.ndarray:
    """Batched embedding, returning raw coordinate rows."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != basis.n:
        raise ValueError("points do not match the basis dimension")
    out = _monomials(basis, pts)
    out[..., 0] = 0.0
    return out


def delta_jacobian(v, basis: PolySpaceBasis) -> np.ndarray:
    """Jacobian of delta_embed at v: row alpha is the gradient of v^alpha."""
    vec = as_state(v, basis.n)
    J = np.zeros((basis.dim, basis.n))
    for row, alpha in enumerate(basis.index_list):
        if row == 0:
            continue
        for i, e in enumerate(alpha):
            if e:
                lowered = list(alpha)
                lowered[i] -= 1
                J[row, i] = e * np.prod(vec ** np.array(lowered))
    return J


def pairing(eta: Covector, w: PolySpaceElement) -> float:
    if eta.basis != w.basis:
        raise ValueError("covector and element live on different bases")
    return float(np.dot(eta.coords, w.coords))


def functional_from_polynomial(p: MultiPoly, basis: PolySpaceBasis) -> Covector:
    """Coefficient vector of p; pairing it with delta_embed(v) gives p(v) - p(0)."""
    if p.nvars != basis.n:
        raise ValueError(f"polynomial has {p.nvars} variables, basis has {basis.n}")
    if p.degree() > basis.m:
        raise ValueError(f"polynomial degree {p.degree()} exceeds basis degree {basis.m}")
    coords = np.zeros(basis.dim)
    for exp, c in p.terms.items():
        coords[basis.position[exp]] = float(c)
    return Covector(basis, coords)


def lift_generator(A, m: int, basis: PolySpaceBasis | None = None) -> np.ndarray:
    """Generator on P^m(V*) with d/dt delta(x(t)) = lift @ delta(x(t)) whenever x' = A x.

    Along x' = Ax, d/dt x^alpha = sum_{i,k} alpha_i A_ik x^(alpha - e_i + e_k),
    which stays in the same degree, so the result is block diagonal by degree.
    """
    M = as_matrix(A)
    n = M.shape[0]
    basis = basis or PolySpaceBasis(n, m)
    pos = basis.position
    L = np.zeros((basis.dim, basis.dim))
    for row, alpha in enumerate(basis.index_list):
        for i in range(n):
            if not alpha[i]:
                continue
            for k in range(n):
                if M[i, k] == 0.0:
                    continue
                beta = list(alpha)
                beta[i] -= 1
                beta[k] += 1
                L[row, pos[tuple(beta)]] += alpha[i] * M[i, k]
    return L


def lifted_flow(A, m: int, t: float) -> np.ndarray:
    return matrix_exp(lift_generator(A, m), t)


def matrix_to_dict(L: np.ndarray, basis: PolySpaceBasis | None = None) -> dict:
    out = {"dim": int(L.shape[0]), "rows": [[float(v) for v in row] for row in L]}
    if basis is not None:
        out["basis"] = [list(a) for a in basis.index_list]
    return out


def matrix_to_json(L: np.ndarray, basis: PolySpaceBasis | None = None) -> str:
    return json.dumps(matrix_to_dict(L, basis))

"""Sparse multivariate polynomials, exact Sturm root counting, and the
taming polynomials for the snake surfaces.

Coefficients may be ints, floats or Fractions; arithmetic never converts
them, so integer or rational inputs give exact results.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


def grlex_key(exp: Sequence[int]):
    """Graded-lex: total degree first, then x0 before x1 before ..."""
    return (sum(exp), tuple(-e for e in exp))


class MultiPoly:
    """Real polynomial in `nvars` variables, stored as {exponent tuple: coef}."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        self.nvars = nvars
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for {nvars} variables")
            if c != 0:
                clean[exp] = clean.get(exp, 0) + c
                if clean[exp] == 0:
                    del clean[exp]
        self.terms = clean

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, nvars: int, c) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int, coef=1) -> "MultiPoly":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): coef})

    @classmethod
    def univariate(cls, coeffs: Sequence, nvars: int = 1, var: int = 0) -> "MultiPoly":
        """From ascending coefficients c0 + c1 t + ... placed in variable `var`."""
        terms = {}
        for k, c in enumerate(coeffs):
            exp = [0] * nvars
            exp[var] = k
            terms[tuple(exp)] = c
        return cls(nvars, terms)

    # -- basic queries ----------------------------------------------------
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, 0)

    def coefficient(self, exp: Sequence[int]):
        return self.terms.get(tuple(exp), 0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def variables_used(self) -> set[int]:
        return {i for exp in self.terms for i, e in enumerate(exp) if e}

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "0"
        names = "xyz" if self.nvars <= 3 else None
        parts = []
        for exp, c in self.sorted_terms():
            mono = "*".join(
                (names[i] if names else f"x{i}") + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(exp) if e
            )
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        return " + ".join(parts)

    # -- ring operations --------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        return MultiPoly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0) + c
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(self.nvars, out)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = MultiPoly.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, c) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: c * v for e, v in self.terms.items()})

    def partial(self, var: int) -> "MultiPoly":
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable index {var} out of range for {self.nvars} variables")
        out = {}
        for exp, c in self.terms.items():
            if exp[var]:
                e = list(exp)
                e[var] -= 1
                out[tuple(e)] = c * exp[var]
        return MultiPoly(self.nvars, out)

    def gradient(self) -> list["MultiPoly"]:
        return [self.partial(i) for i in range(self.nvars)]

    # -- evaluation -------------------------------------------------------
    def __call__(self, point):
        return self.eval(point)

    def eval(self, point):
        """Value at a point of shape (nvars,) or at a batch of shape (..., nvars)."""
        if isinstance(point, (list, tuple)) and not isinstance(point[0], (list, tuple, np.ndarray)):
            if len(point) != self.nvars:
                raise ValueError(f"point has {len(point)} coordinates, polynomial has {self.nvars}")
            total = 0
            for exp, c in self.terms.items():
                term = c
                for v, e in zip(point, exp):
                    if e:
                        term = term * v**e
                total = total + term
            return total
        pts = np.asarray(point, dtype=float)
        if pts.shape[-1] != self.nvars:
            raise ValueError(f"points have {pts.shape[-1]} coordinates, polynomial has {self.nvars}")
        out = np.zeros(pts.shape[:-1])
        for exp, c in self.terms.items():
            term = np.full(pts.shape[:-1], float(c))
            for i, e in enumerate(exp):
                if e:
                    term = term * pts[..., i] ** e
            out = out + term
        return out if out.ndim else float(out)

    def restrict_to_line(self, origin: Sequence, direction: Sequence) -> list:
        """Ascending coefficients of t -> p(origin + t*direction)."""
        t = MultiPoly.variable(1, 0)
        subs = [MultiPoly.constant(1, o) + t.scale(d) for o, d in zip(origin, direction)]
        out = MultiPoly.constant(1, 0)
        for exp, c in self.terms.items():
            term = MultiPoly.constant(1, c)
            for sub, e in zip(subs, exp):
                if e:
                    term = term * sub**e
            out = out + term
        deg = out.degree()
        return [out.coefficient((k,)) for k in range(deg + 1)]

    def univariate_coeffs(self, var: int | None = None) -> list:
        """Ascending coefficients when the polynomial only involves `var`."""
        used = self.variables_used()
        if var is None:
            if len(used) > 1:
                raise ValueError(f"polynomial is not univariate: uses variables {sorted(used)}")
            var = next(iter(used), 0)
        elif used - {var}:
            raise ValueError(f"polynomial involves variables other than {var}: {sorted(used)}")
        deg = max((e[var] for e in self.terms), default=-1)
        return [self.terms.get(tuple(k if i == var else 0 for i in range(self.nvars)), 0)
                for k in range(deg + 1)]

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "nvars": self.nvars,
            "terms": [{"exp": list(e), "coef": float(c)} for e, c in self.sorted_terms()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "MultiPoly":
        return cls(int(data["nvars"]), {tuple(t["exp"]): t["coef"] for t in data["terms"]})

    @classmethod
    def from_json(cls, text: str) -> "MultiPoly":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Univariate helpers (ascending coefficient lists)

def _trim(c: list) -> list:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _peval(c: Sequence, t):
    acc = 0
    for a in reversed(c):
        acc = acc * t + a
    return acc


def _pderiv(c: Sequence) -> list:
    return [k * c[k] for k in range(1, len(c))]


def _pdivmod(a: list, b: list):
    a, b = _trim(a), _trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = list(a)
    while len(_trim(r)) >= len(b):
        r = _trim(r)
        shift = len(r) - len(b)
        f = r[-1] / b[-1]
        q[shift] = f
        for i, bc in enumerate(b):
            r[i + shift] -= f * bc
        r[-1] = 0
    return _trim(q), _trim(r)


def _pgcd(a: list, b: list) -> list:
    a, b = _trim(a), _trim(b)
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    return [c / a[-1] for c in a] if a else a


def _to_fractions(c: Sequence) -> list:
    return [Fraction(x) for x in c]


def sturm_chain(coeffs: Sequence) -> list[list]:
    """Sturm sequence of a polynomial given by ascending (exact) coefficients."""
    p = _trim(_to_fractions(coeffs))
    chain = [p, _pderiv(p)]
    while _trim(chain[-1]):
        _, r = _pdivmod(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    return [c for c in chain if _trim(c)]


def _sign_variations(chain: list[list], t) -> int:
    signs = []
    for c in chain:
        if t == math.inf or t == -math.inf:
            lead = c[-1]
            v = lead if (t > 0 or (len(c) - 1) % 2 == 0) else -lead
        else:
            v = _peval(c, t)
        if v != 0:
            signs.append(v > 0)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_distinct_roots(coeffs: Sequence, lo, hi) -> int:
    """Number of distinct real roots in the half-open interval (lo, hi]."""
    p = _trim(_to_fractions(coeffs))
    if not p:
        raise ValueError("the zero polynomial has infinitely many roots")
    if len(p) == 1:
        return 0
    chain = sturm_chain(p)
    a = lo if lo in (-math.inf, math.inf) else Fraction(lo)
    b = hi if hi in (-math.inf, math.inf) else Fraction(hi)
    return _sign_variations(chain, a) - _sign_variations(chain, b)


def squarefree_factors(coeffs: Sequence) -> list[tuple[list, int]]:
    """Yun's square-free decomposition: [(factor, multiplicity), ...]."""
    f = _trim(_to_fractions(coeffs))
    if len(f) <= 1:
        return []
    df = _pderiv(f)
    a0 = _pgcd(f, df)
    b, _ = _pdivmod(f, a0)
    c, _ = _pdivmod(df, a0)
    d = _psub(c, _pderiv(b))
    out = []
    i = 1
    while len(b) > 1:
        a = _pgcd(b, d)
        if len(a) > 1:
            out.append((a, i))
        b, _ = _pdivmod(b, a)
        c, _ = _pdivmod(d, a) if d else ([], None)
        d = _psub(c, _pderiv(b))
        i += 1
    return out


def _psub(a: list, b: list) -> list:
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return _trim([x - y for x, y in zip(a, b)])


def count_sign_changes(p, interval: tuple[float, float]) -> int:
    """Number of sign alternations of a univariate polynomial on the open interval.

    Each root of odd multiplicity inside (lo, hi) is one alternation; counts are
    exact because the Sturm chains are run in rational arithmetic.
    """
    coeffs = p.univariate_coeffs() if isinstance(p, MultiPoly) else list(p)
    lo, hi = interval
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    total = 0
    hi_f = hi if hi in (-math.inf, math.inf) else Fraction(hi)
    for factor, mult in squarefree_factors(coeffs):
        if mult % 2 == 0:
            continue
        n = count_distinct_roots(factor, lo, hi)
        if hi_f not in (-math.inf, math.inf) and _peval(factor, hi_f) == 0:
            n -= 1
        total += n
    return total


def real_roots(coeffs: Sequence, lo: float, hi: float, tol: float = 1e-13) -> list[float]:
    """Distinct real roots in [lo, hi], isolated by Sturm counts and refined by bisection."""
    f = _trim(_to_fractions(coeffs))
    if len(f) <= 1:
        return []
    g = _pgcd(f, _pderiv(f))
    sqf, _ = _pdivmod(f, g) if len(g) > 1 else (f, None)
    chain = sturm_chain(sqf)
    fl = [float(c) for c in sqf]

    def n_roots(a, b):
        return _sign_variations(chain, Fraction(a)) - _sign_variations(chain, Fraction(b))

    roots = []
    if _peval(sqf, Fraction(lo)) == 0:
        roots.append(float(lo))
    stack = [(float(lo), float(hi))]
    while stack:
        a, b = stack.pop()
        k = n_roots(a, b)
        if k == 0:
            continue
        if k == 1 or b - a <= tol:
            roots.append(_bisect_root(fl, sqf, a, b, tol))
            continue
        mid = 0.5 * (a + b)
        stack.extend([(a, mid), (mid, b)])
    return sorted(roots)


def _bisect_root(fl, exact, a, b, tol):
    """The root in (a, b] of a square-free polynomial with exactly one there."""
    if _peval(exact, Fraction(b)) == 0:
        return b
    va = _peval(exact, Fraction(a))
    if va == 0:
        # a is a simple root of the square-free input; use the sign just right of it
        va = _peval(_pderiv(exact), Fraction(a))
    fa = va > 0
    for _ in range(200):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        v = _peval(exact, Fraction(mid))
        if v == 0:
            return mid
        if (v > 0) == fa:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# The taming polynomials on R^3 = (x, y, z)

X, Y, Z = (MultiPoly.variable(3, i) for i in range(3))


@dataclass(frozen=True)
class Box2:
    """Closed rectangle [x_lo, x_hi] x [z_lo, z_hi] in the plane y = 0."""

    x_lo: float
    x_hi: float
    z_lo: float
    z_hi: float

    def __post_init__(self):
        vals = (self.x_lo, self.x_hi, self.z_lo, self.z_hi)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("box bounds must be finite")
        if not (self.x_lo < self.x_hi and self.z_lo < self.z_hi):
            raise ValueError(f"degenerate box {vals}")

    def contains(self, x: float, z: float) -> bool:
        return self.x_lo <= x <= self.x_hi and self.z_lo <= z <= self.z_hi

    def as_list(self) -> list[float]:
        return [self.x_lo, self.x_hi, self.z_lo, self.z_hi]


def default_box(l: int, a: float = 0.5) -> Box2:
    """Turns sit at |x| = a, z = 1/2, ..., l - 3/2; pad x by 0.05 and z by a quarter unit."""
    if not 0.0 < a < 0.95:
        raise ValueError("amplitude must lie in (0, 0.95) for the padded box to fit |x| < 1")
    return Box2(-a - 0.05, a + 0.05, 0.25, l - 1.25)


def taming_q() -> MultiPoly:
    return Y


def turn_product(l: int) -> MultiPoly:
    """(z - 1/2)(z - 3/2)...(z - (2l-3)/2), vanishing at every turn height."""
    if l < 2:
        raise ValueError("turn_product needs l >= 2")
    out = MultiPoly.constant(3, 1)
    for j in range(1, l):
        out = out * (Z - Fraction(2 * j - 1, 2))
    return _floatify(out)


def taming_p(l: int, M: float) -> MultiPoly:
    """M (1 + y^2)^(l-1) z + x * turn_product(l)."""
    if l < 2:
        raise ValueError("taming_p needs l >= 2")
    if not (M > 0 and math.isfinite(M)):
        raise ValueError("M must be a positive finite constant")
    lift = (1 + Y * Y) ** (l - 1)
    return lift * Z * M + X * turn_product(l)


def example2_p() -> MultiPoly:
    """(z - 1/2)(x + 1 + y^2), the degree-3 partner of q = y for two equilibria."""
    return _floatify((Z - Fraction(1, 2)) * (X + 1 + Y * Y))


def _floatify(p: MultiPoly) -> MultiPoly:
    return MultiPoly(p.nvars, {e: float(c) for e, c in p.terms.items()})


def compute_M(l: int, box: Box2, margin: float = 0.05) -> float:
    """(1 + margin) * max over the box of |x * d/dz turn_product(l)|.

    |x| enters linearly, so its maximum is at an x-edge of the box; |Pi'| is
    maximised over the z-range at the endpoints or at roots of Pi''.
    """
    if max(abs(box.x_lo), abs(box.x_hi)) > 1:
        raise ValueError("the bounding box must satisfy |x| <= 1")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    pi = turn_product(l).univariate_coeffs(2)
    d1 = _pderiv(pi)
    d2 = _pderiv(d1)
    candidates = [box.z_lo, box.z_hi]
    if len(_trim(list(d2))) > 1:
        candidates += real_roots(d2, box.z_lo, box.z_hi)
    best_dpi = max(abs(float(_peval(d1, z))) for z in candidates)
    best_x = max(abs(box.x_lo), abs(box.x_hi))
    return (1.0 + margin) * best_x * best_dpi

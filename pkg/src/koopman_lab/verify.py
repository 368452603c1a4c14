"""Verification suites for the surfaces and their taming polynomials.

Every suite returns a VerificationReport. For suites that bound a quantity
from above, worst_residual is the largest measured error. For suites that
need a quantity to stay above a floor (derivative margins, separations),
worst_residual is the signed shortfall ``floor - achieved`` and the
tolerance is 0, so ``pass <=> worst_residual <= tolerance`` holds uniformly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linflow
from .polynomials import (MultiPoly, Y, _pderiv, _peval, count_distinct_roots,
                          count_sign_changes, real_roots, taming_q)
from .surface import (Arc, SurfaceSpec, arc_params, bridge_y_tangent, cross_section,
                      random_surface_points)
from .symspace import PolySpaceBasis, delta_embed_many, functional_from_polynomial

CONVENTIONS = [
    "taming asserts exactly one hit per fiber (monotone and onto); transversality asserts at most one",
    "constant terms are invisible through the polynomial embedding; level sets shift by a constant",
    "derivative margins are measured along the unit tangent of each cross-section",
    "fiber hits within 1e-6 of an equilibrium are flagged in the details",
]


class UnsupportedConfiguration(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


class DegenerateGram(ValueError):
    pass


@dataclass
class VerificationReport:
    suite: str
    passed: bool
    samples: int
    worst_residual: float
    tolerance: float
    details: list = field(default_factory=list)
    conventions: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "pass": bool(self.passed),
            "samples": int(self.samples),
            "worst_residual": _num(self.worst_residual),
            "tolerance": _num(self.tolerance),
            "conventions": list(self.conventions),
            "metrics": {k: _clean(v) for k, v in self.metrics.items()},
            "details": [_clean(d) for d in self.details],
        }


def _num(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


@dataclass(frozen=True)
class TamingPair:
    q: MultiPoly
    p: MultiPoly
    m: int

    def __post_init__(self):
        if max(self.q.degree(), self.p.degree()) > self.m:
            raise ValueError("taming polynomials exceed the declared degree")
        if self.q.nvars != 3 or self.p.nvars != 3:
            raise ValueError("taming polynomials live on R^3")


def theorem_pair(l: int, M: float) -> TamingPair:
    from .polynomials import taming_p
    return TamingPair(taming_q(), taming_p(l, M), 2 * l - 1)


def example2_pair() -> TamingPair:
    from .polynomials import example2_p
    return TamingPair(taming_q(), example2_p(), 3)


def _require_q_is_y(tp: TamingPair):
    if tp.q != Y:
        raise UnsupportedConfiguration("cross-section suites need q(x, y, z) = y")


class _Grad:
    """Cached gradient of a polynomial on R^3."""

    def __init__(self, p: MultiPoly):
        self.p = p
        self.px, self.py, self.pz = p.gradient()

    def along(self, pts: np.ndarray, tx, tz):
        return self.px.eval(pts) * tx + self.pz.eval(pts) * tz


# ---------------------------------------------------------------------------
# rays: exact certificates from the restriction of p to a half-line

def _cauchy_bound(coeffs: Sequence[float]) -> float:
    c = [float(v) for v in coeffs]
    while c and c[-1] == 0:
        c.pop()
    if len(c) <= 1:
        return 1.0
    return 1.0 + max(abs(v / c[-1]) for v in c[:-1])


def _ray_poly(arc: Arc, p: MultiPoly) -> tuple[list, float]:
    """Coefficients of tau -> p along the ray moving away from the seam, tau >= 0.

    Returns (coeffs, orient) with orient = +1 when the traversal moves with tau
    (top ray) and -1 when it moves against it (bottom ray).
    """
    x0, z0 = (float(v) for v in arc.point(0.0))
    d, _ = arc.velocity(np.array(0.0))
    d = float(d)
    if arc.kind == "bottom_ray":
        return p.restrict_to_line((x0, arc.y, z0), (-d, 0.0, 0.0)), -1.0
    return p.restrict_to_line((x0, arc.y, z0), (d, 0.0, 0.0)), 1.0


def _halfline_min(coeffs: Sequence[float]) -> tuple[float, float]:
    """(inf over tau >= 0 of f, argmin); -inf when f is unbounded below."""
    c = [float(v) for v in coeffs]
    while c and c[-1] == 0:
        c.pop()
    if not c:
        return 0.0, 0.0
    if len(c) > 1 and c[-1] < 0:
        return -math.inf, math.inf
    cands = [0.0]
    if len(c) > 2:
        B = _cauchy_bound(_pderiv(c))
        cands += real_roots(_pderiv(c), 0.0, B)
    vals = [float(_peval(c, t)) for t in cands]
    i = int(np.argmin(vals))
    return vals[i], cands[i]


def certify_ray(arc: Arc, p: MultiPoly) -> dict:
    """Exact derivative floor of p along a ray in the traversal direction."""
    coeffs, orient = _ray_poly(arc, p)
    deriv = [orient * v for v in _pderiv(coeffs)]
    floor, where = _halfline_min(deriv)
    nonconst = any(v != 0 for v in coeffs[1:])
    return {"arc": arc.kind, "min_derivative": floor, "argmin_tau": where,
            "onto": nonconst and floor > 0, "degree": len(coeffs) - 1}


# ---------------------------------------------------------------------------

def verify_taming(spec: SurfaceSpec, tp: TamingPair, y_grid: Sequence[float],
                  margin: float = 1e-8, per_arc: int = 400) -> VerificationReport:
    """p increases strictly along every cross-section y = c and runs from -inf to +inf."""
    _require_q_is_y(tp)
    grad = _Grad(tp.p)
    worst = math.inf
    details = []
    all_ok = True
    samples = 0
    for c in y_grid:
        section = cross_section(spec, c)
        values = []
        min_d = math.inf
        where = None
        rays = []
        for arc in section.arcs:
            if not arc.finite:
                cert = certify_ray(arc, tp.p)
                rays.append(cert)
                if cert["min_derivative"] < min_d:
                    min_d, where = cert["min_derivative"], (arc.kind, cert["argmin_tau"])
                # finite stretch next to the seam joins the value sequence
                ts = arc_params(arc, 8, 1.0)
            else:
                n = per_arc
                ts = np.concatenate([[arc.lo], arc.lo + (np.arange(n) + 0.5) / n * (arc.hi - arc.lo), [arc.hi]])
            pts = arc.ambient(ts)
            tx, tz = arc.tangent(ts)
            d = grad.along(pts, tx, tz)
            k = int(np.argmin(d))
            if d[k] < min_d:
                min_d, where = float(d[k]), (arc.kind, float(ts[k]))
            values.append(tp.p.eval(pts))
            samples += len(ts)
        seq = np.concatenate(values)
        steps = np.diff(seq)
        # repeated junction points give zero steps; everything else must increase
        strictly = bool(np.all(steps > -1e-12 * (1 + np.abs(seq[1:])))) and bool(np.sum(steps > 0) > 0)
        onto = rays[0]["onto"] and rays[-1]["onto"]
        ok = strictly and onto and min_d >= margin
        all_ok &= ok
        worst = min(worst, min_d)
        details.append({"y": float(c), "min_derivative": min_d, "argmin": list(where),
                        "forward_differences_ok": strictly, "onto": onto, "rays": rays, "pass": ok})
    return VerificationReport(
        suite="taming", passed=all_ok, samples=samples,
        worst_residual=margin - worst, tolerance=0.0, details=details,
        conventions=CONVENTIONS + spec.conventions(),
        metrics={"min_derivative": worst, "required_margin": margin,
                 "l": spec.l, "degree": tp.m},
    )


def m_certificate(l: int, M: float, box) -> VerificationReport:
    """The constant M must exceed max |x Pi'(z)| over the box."""
    from .polynomials import compute_M
    bound = compute_M(l, box, margin=0.0)
    return VerificationReport(
        suite="m_bound", passed=M > bound, samples=1,
        worst_residual=bound - M, tolerance=0.0,
        details=[{"M": M, "bound": bound, "box": box.as_list()}],
        conventions=["M must be strictly larger than the box maximum of |x d/dz Pi(z)|"],
        metrics={"M": M, "bound": bound},
    )


# ---------------------------------------------------------------------------

def _intersections(spec: SurfaceSpec, p: MultiPoly, c: float, kappa: float,
                   per_arc: int = 400) -> list[tuple[Arc, float, np.ndarray]]:
    section = cross_section(spec, c)
    hits = []
    for arc in section.arcs:
        if not arc.finite:
            coeffs, orient = _ray_poly(arc, p)
            shifted = list(coeffs)
            shifted[0] = shifted[0] - kappa
            if all(v == 0 for v in shifted):
                raise NumericalFailure("p is constant along a ray at this level")
            B = _cauchy_bound(shifted)
            for tau in real_roots(shifted, 0.0, B, tol=1e-14):
                t = orient * tau
                hits.append((arc, t, arc.ambient(np.array(t))))
            continue
        ts = np.linspace(arc.lo, arc.hi, per_arc + 1)
        f = tp_eval(p, arc, ts) - kappa
        for i in range(per_arc):
            a, b = f[i], f[i + 1]
            if a == 0.0:
                hits.append((arc, ts[i], arc.ambient(ts[i])))
            elif a * b < 0:
                t = _bisect(lambda s: float(tp_eval(p, arc, np.array(s)) - kappa), ts[i], ts[i + 1])
                hits.append((arc, t, arc.ambient(np.array(t))))
        if f[-1] == 0.0:
            hits.append((arc, ts[-1], arc.ambient(ts[-1])))
    # junction points appear on both neighbouring arcs
    unique = []
    for h in hits:
        if all(np.linalg.norm(h[2] - u[2]) > 1e-9 * (1 + np.linalg.norm(h[2])) for u in unique):
            unique.append(h)
    return unique


def tp_eval(p: MultiPoly, arc: Arc, s):
    return p.eval(arc.ambient(s))


def _bisect(f, a: float, b: float, max_iter: int = 200) -> float:
    fa = f(a)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    raise NumericalFailure(f"bisection did not converge in {max_iter} iterations")


def tangent_basis(spec: SurfaceSpec, arc: Arc, s: float):
    """(u, v): unit tangent of the cross-section and the chart tangent in y."""
    tx, tz = arc.tangent(np.array(s))
    u = np.array([float(tx), 0.0, float(tz)])
    if arc.piece[0] == "bridge":
        v = bridge_y_tangent(spec, arc.piece[1], s, arc.y)
    else:
        v = np.array([0.0, 1.0, 0.0])
    return u, np.asarray(v, dtype=float)


def verify_transversality(spec: SurfaceSpec, tp: TamingPair, fibers, tol: float = 1e-6,
                          per_arc: int = 400) -> VerificationReport:
    """Each fiber {q = c, p = kappa} meets the surface at most once, transversally."""
    _require_q_is_y(tp)
    grad_q = [g for g in tp.q.gradient()]
    grad_p = [g for g in tp.p.gradient()]
    details = []
    all_ok = True
    min_det = math.inf
    eqs = [np.array([0.0, 0.0, float(k)]) for k in range(spec.l)]
    for c, kappa in fibers:
        hits = _intersections(spec, tp.p, float(c), float(kappa), per_arc)
        ok = len(hits) <= 1
        rec = {"y": float(c), "kappa": float(kappa), "count": len(hits), "hits": []}
        for arc, s, pt in hits:
            u, v = tangent_basis(spec, arc, float(s))
            dq = np.array([g.eval(pt) for g in grad_q])
            dp = np.array([g.eval(pt) for g in grad_p])
            det = float(dq @ u * (dp @ v) - dq @ v * (dp @ u))
            near_eq = any(np.linalg.norm(pt - e) < 1e-6 for e in eqs)
            min_det = min(min_det, abs(det))
            ok &= abs(det) >= tol
            rec["hits"].append({"piece": list(arc.piece), "point": pt, "det": det,
                                "near_equilibrium": near_eq})
        rec["pass"] = ok
        all_ok &= ok
        details.append(rec)
    if min_det == math.inf:
        min_det = 0.0 if not details else math.inf
    return VerificationReport(
        suite="transversality", passed=all_ok, samples=len(details),
        worst_residual=tol - min_det if math.isfinite(min_det) else -math.inf,
        tolerance=0.0, details=details, conventions=CONVENTIONS,
        metrics={"min_abs_det": min_det, "required_det": tol,
                 "max_count": max((d["count"] for d in details), default=0)},
    )


def random_fibers(spec: SurfaceSpec, tp: TamingPair, n: int, rng: np.random.Generator,
                  y_range: float = 2.0) -> list[tuple[float, float]]:
    """Fibers whose levels mostly fall inside the p-range of the compact part of each section."""
    out = []
    for _ in range(n):
        c = float(rng.uniform(-y_range, y_range))
        section = cross_section(spec, c)
        vals = np.concatenate([tp.p.eval(arc.ambient(arc_params(arc, 20, 2.0))) for arc in section.arcs])
        lo, hi = float(vals.min()), float(vals.max())
        pad = 0.1 * (hi - lo + 1.0)
        out.append((c, float(rng.uniform(lo - pad, hi + pad))))
    return out


# ---------------------------------------------------------------------------

def slice_points(spec: SurfaceSpec, n: int, rng: np.random.Generator, radius: float = 2.0,
                 n_slices: int = 10) -> np.ndarray:
    """Surface points drawn from a few shared slices y = c, so that points
    differing only within a slice are well represented."""
    ys = rng.uniform(-radius, radius, n_slices)
    out = np.empty((n, 3))
    for i in range(n):
        c = float(ys[i % n_slices])
        arcs = cross_section(spec, c).arcs
        arc = arcs[int(rng.integers(0, len(arcs)))]
        if arc.finite:
            s = rng.uniform(arc.lo, arc.hi)
        else:
            s = math.copysign(rng.uniform(0.0, radius), arc.lo if math.isinf(arc.lo) else arc.hi)
        out[i] = arc.ambient(np.array(s))
    return out


def graphlike_check(spec: SurfaceSpec, tp: TamingPair, n_samples: int = 2000, delta: float = 1e-2,
                    eps: float = 1e-6, rng: np.random.Generator | None = None,
                    radius: float = 2.0) -> VerificationReport:
    """Linear projection of Delta^m(surface) through the covectors of (q, p) separates points."""
    if tp.m > 7:
        raise ValueError("graphlike_check supports degree m <= 7")
    rng = rng if rng is not None else np.random.default_rng(0)
    n_free = n_samples // 2
    free, _ = random_surface_points(spec, n_free, rng, radius)
    pts = np.concatenate([free, slice_points(spec, n_samples - n_free, rng, radius)])
    basis = PolySpaceBasis(3, tp.m)
    emb = delta_embed_many(pts, basis)
    eta = np.stack([functional_from_polynomial(tp.q, basis).coords,
                    functional_from_polynomial(tp.p, basis).coords])
    proj = emb @ eta.T
    worst_ratio = math.inf
    min_proj = math.inf
    worst_pair = None
    chunk = 256
    for i0 in range(0, n_samples, chunk):
        A = pts[i0:i0 + chunk]
        PA = proj[i0:i0 + chunk]
        amb = np.linalg.norm(A[:, None, :] - pts[None, :, :], axis=-1)
        prj = np.linalg.norm(PA[:, None, :] - proj[None, :, :], axis=-1)
        mask = amb >= delta
        if not mask.any():
            continue
        masked = np.where(mask, prj, np.inf)
        k = np.unravel_index(np.argmin(masked), masked.shape)
        if masked[k] < min_proj:
            min_proj = float(masked[k])
            worst_pair = (int(i0 + k[0]), int(k[1]))
        ratio = np.where(mask, prj / np.where(mask, amb, 1.0), np.inf)
        worst_ratio = min(worst_ratio, float(ratio.min()))
    passed = min_proj >= eps
    details = []
    if worst_pair is not None:
        i, j = worst_pair
        details.append({"closest_pair": [pts[i], pts[j]], "ambient_distance": float(np.linalg.norm(pts[i] - pts[j])),
                        "projected_distance": min_proj})
    return VerificationReport(
        suite="graphlike", passed=passed, samples=n_samples,
        worst_residual=eps - min_proj, tolerance=0.0, details=details,
        conventions=CONVENTIONS + [f"embedding degree m = {tp.m}, basis dimension {basis.dim}"],
        metrics={"min_projected_distance": min_proj, "min_ratio": worst_ratio,
                 "delta": delta, "eps": eps, "basis_dim": basis.dim},
    )


# ---------------------------------------------------------------------------

def koopman_eigencheck(spec: SurfaceSpec, psi: MultiPoly, lam: float, n_traj: int = 100,
                       t_grid: Sequence[float] = tuple(np.linspace(-2, 2, 21)), tol: float = 1e-9,
                       rng: np.random.Generator | None = None) -> VerificationReport:
    """|psi(flow_t x) - e^{lam t} psi(x)| <= tol (1 + |psi(x)| e^{|lam t|}) on surface points."""
    rng = rng if rng is not None else np.random.default_rng(0)
    x0, _ = random_surface_points(spec, n_traj, rng)
    t = np.asarray(t_grid, dtype=float)
    psi0 = psi.eval(x0)
    flowed = linflow.closed_form_flow3(t[None, :], x0[:, None, :])
    lhs = psi.eval(flowed)
    growth = np.exp(lam * t)[None, :]
    err = np.abs(lhs - growth * psi0[:, None]) / (1.0 + np.abs(psi0[:, None]) * np.exp(np.abs(lam * t))[None, :])
    worst = float(err.max())
    k = np.unravel_index(np.argmax(err), err.shape)
    return VerificationReport(
        suite="koopman", passed=worst <= tol, samples=int(err.size),
        worst_residual=worst, tolerance=tol,
        details=[{"psi": psi.to_dict(), "lambda": lam, "worst_point": x0[k[0]], "worst_t": float(t[k[1]])}],
        conventions=["eigen-equation checked in integrated form along the closed-form flow"],
        metrics={"lambda": lam, "trajectories": n_traj},
    )


def invariant_subspace_check(spec: SurfaceSpec, basis_fns: Sequence[MultiPoly], t_grid: Sequence[float],
                             tol: float = 1e-8, expected=None, rng: np.random.Generator | None = None,
                             n_samples: int | None = None, cond_limit: float = 1e8) -> VerificationReport:
    """Least-squares fit of psi_i(flow_t x) in span{psi_j(x)}; residual and optional matrix check."""
    rng = rng if rng is not None else np.random.default_rng(0)
    k = len(basis_fns)
    n = n_samples or max(200, 10 * k * k)
    pts, _ = random_surface_points(spec, n, rng)
    Phi = np.stack([f.eval(pts) for f in basis_fns], axis=1)
    G = Phi.T @ Phi
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > cond_limit:
        raise DegenerateGram(f"Gram matrix condition number {cond:.3g} exceeds {cond_limit:.3g}")
    worst = 0.0
    details = []
    for t in t_grid:
        flowed = linflow.closed_form_flow3(float(t), pts)
        Phit = np.stack([f.eval(flowed) for f in basis_fns], axis=1)
        Ct = np.linalg.solve(G, Phi.T @ Phit)  # Phit ~ Phi @ Ct
        C = Ct.T
        resid = float(np.abs(Phit - Phi @ Ct).max() / (1.0 + np.abs(Phit).max()))
        rec = {"t": float(t), "coefficients": C, "residual": resid}
        err = resid
        if expected is not None:
            E = np.asarray(expected(float(t)), dtype=float)
            merr = float(np.abs(C - E).max())
            rec["matrix_error"] = merr
            err = max(err, merr)
        worst = max(worst, err)
        details.append(rec)
    return VerificationReport(
        suite="subspace", passed=worst <= tol, samples=n * len(t_grid),
        worst_residual=worst, tolerance=tol, details=details,
        conventions=["normal-equation fit with Gram condition monitoring"],
        metrics={"gram_condition": cond, "dimension": k},
    )


# ---------------------------------------------------------------------------

def ambient_field(pt) -> np.ndarray:
    x, y, _ = pt
    return np.array([y, x, 0.0])


def locate_on_section(spec: SurfaceSpec, p: MultiPoly, c: float, kappa: float,
                      max_iter: int = 200) -> np.ndarray | None:
    """The point of the section y = c where p = kappa, assuming p increases along it."""
    section = cross_section(spec, c)
    arcs = section.arcs
    # values at the junctions, in traversal order
    junction = [float(p.eval(arcs[0].ambient(np.array(0.0))))]
    for arc in arcs[1:-1]:
        junction.append(float(p.eval(arc.ambient(np.array(arc.hi)))))
    if kappa <= junction[0]:
        return _solve_on_ray(arcs[0], p, kappa, max_iter)
    if kappa >= junction[-1]:
        return _solve_on_ray(arcs[-1], p, kappa, max_iter)
    for arc, lo_val, hi_val in zip(arcs[1:-1], junction[:-1], junction[1:]):
        if lo_val <= kappa <= hi_val:
            if kappa == lo_val:
                return arc.ambient(np.array(arc.lo))
            if kappa == hi_val:
                return arc.ambient(np.array(arc.hi))
            s = _bisect(lambda s: float(tp_eval(p, arc, np.array(s)) - kappa), arc.lo, arc.hi, max_iter)
            return arc.ambient(np.array(s))
    return None


def _solve_on_ray(arc: Arc, p: MultiPoly, kappa: float, max_iter: int):
    coeffs, orient = _ray_poly(arc, p)
    f = list(coeffs)
    f[0] -= kappa
    if all(v == 0 for v in f[1:]):
        return None
    B = _cauchy_bound(f)
    roots = real_roots(f, 0.0, B, tol=1e-15)
    if not roots:
        return None
    return arc.ambient(np.array(orient * roots[0]))


def conjugate_field(spec: SurfaceSpec, tp: TamingPair, w, max_iter: int = 200):
    """Pushforward of the ambient field to the (q, p) chart at w, or None without a preimage.

    Returns (field, xi) where xi is the surface point with (q, p)(xi) = w.
    """
    _require_q_is_y(tp)
    xi = locate_on_section(spec, tp.p, float(w[0]), float(w[1]), max_iter)
    if xi is None:
        return None
    F = ambient_field(xi)
    dq = np.array([g.eval(xi) for g in tp.q.gradient()])
    dp = np.array([g.eval(xi) for g in tp.p.gradient()])
    return np.array([dq @ F, dp @ F]), xi


def field_zero_census(spec: SurfaceSpec, tp: TamingPair, y_extent: float = 2.0, n: int = 4001):
    """Zeros of the conjugate field, found without reference to the known equilibria.

    A zero needs dq(F) = x = 0. Bridges never reach x = 0 away from their
    seams, so zeros sit on the lines x = 0 of the planes, where the second
    component reduces to p_x(0, y, k) * y. Sign changes of that function
    along y (and exact zeros) are counted.
    """
    _require_q_is_y(tp)
    px = tp.p.partial(0)
    ys = np.linspace(-y_extent, y_extent, n)
    zeros = []
    for k in range(spec.l):
        pts = np.stack([np.zeros_like(ys), ys, np.full_like(ys, float(k))], axis=1)
        f = px.eval(pts) * ys
        for i in range(n - 1):
            if f[i] == 0.0:
                zeros.append(pts[i])
            elif f[i] * f[i + 1] < 0:
                zeros.append(0.5 * (pts[i] + pts[i + 1]))
        if f[-1] == 0.0:
            zeros.append(pts[-1])
    return zeros


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObstructionResult:
    holds: bool
    turns: float
    degree: int
    min_degree: float
    explanation: str

    def __bool__(self):
        return self.holds


def min_degree(turns) -> float:
    """Smallest degree of p(x, z) whose p_x(0, z) can change sign `turns` times."""
    return math.inf if turns == math.inf else int(turns) + 1


def obstruction_check(turns, m: int) -> ObstructionResult:
    """Necessary condition m - 1 >= turns for a degree-m polynomial to tame a snake."""
    if turns is None or turns == math.inf:
        return ObstructionResult(False, math.inf, m, math.inf,
                                 "p_x(0, z) would need infinitely many sign changes; "
                                 "a nonzero polynomial has finitely many roots")
    turns = int(turns)
    if turns < 1 or m < 1:
        raise ValueError("turns and degree must be positive")
    need = turns + 1
    holds = m >= need
    if holds:
        msg = f"degree {m} >= turns+1 = {need}: p_x(0, z) may change sign {turns} times"
    else:
        msg = (f"degree < turns+1: p_x(0, z) has z-degree <= {m - 1} "
               f"and cannot change sign {turns} times")
    return ObstructionResult(holds, turns, m, need, msg)


def obstruction_report(turns, m: int) -> VerificationReport:
    res = obstruction_check(turns, m)
    details = [{"turns": res.turns, "degree": m, "min_degree": res.min_degree,
                "explanation": res.explanation}]
    if res.holds and turns not in (None, math.inf):
        from .polynomials import turn_product
        pi = turn_product(int(turns) + 1)
        details[0]["turn_product_sign_changes"] = count_sign_changes(pi, (0.0, float(turns)))
    return VerificationReport(
        suite="obstruction", passed=res.holds, samples=1,
        worst_residual=(res.min_degree - m) if math.isfinite(res.min_degree) else math.inf,
        tolerance=0.0, details=details,
        conventions=["only the root-count condition on p_x(0, z) is checked; it is necessary, not sufficient"],
    )


# ---------------------------------------------------------------------------
# suites built on the other modules

def equivariance_check(m_values=(1, 2, 3), n: int = 200, rng: np.random.Generator | None = None,
                       tol: float = 1e-8) -> VerificationReport:
    """lifted_flow(A, m, t) Delta(x) = Delta(flow_t x) for the hyperbolic generator."""
    from .symspace import lift_generator
    rng = rng if rng is not None else np.random.default_rng(0)
    A = linflow.hyperbolic_generator(0)
    worst = 0.0
    details = []
    for m in m_values:
        basis = PolySpaceBasis(3, m)
        L = lift_generator(A, m, basis)
        m_worst = 0.0
        for _ in range(n):
            t = rng.uniform(-2, 2)
            x = rng.normal(size=3)
            x *= rng.uniform(0, 3) / np.linalg.norm(x)
            lhs = linflow.matrix_exp(L, t) @ delta_embed_many(x, basis)
            rhs = delta_embed_many(linflow.closed_form_flow3(t, x), basis)
            dx = delta_embed_many(x, basis)
            m_worst = max(m_worst, float(np.abs(lhs - rhs).max() / (1 + np.abs(dx).max())))
        details.append({"m": m, "worst_scaled_error": m_worst})
        worst = max(worst, m_worst)
    return VerificationReport(
        suite="equivariance", passed=worst <= tol, samples=n * len(m_values),
        worst_residual=worst, tolerance=tol, details=details,
        conventions=["error scaled by 1 + ||Delta(x)||_inf"],
    )


def invariance_check(spec: SurfaceSpec, n: int = 500, rng: np.random.Generator | None = None,
                     tol: float = 1e-6, cons_tol: float = 1e-10) -> VerificationReport:
    """Flowed surface points remain on the surface; x^2 - y^2 is conserved."""
    from .surface import membership
    rng = rng if rng is not None else np.random.default_rng(0)
    pts, tags = random_surface_points(spec, n, rng)
    ts = rng.uniform(-2, 2, n)
    flowed = linflow.closed_form_flow3(ts, pts)
    misses = []
    worst_cons = 0.0
    for p, q, t in zip(pts, flowed, ts):
        if membership(spec, q, tol * (1 + p @ p)) is None:
            misses.append({"point": p, "t": float(t)})
        c0 = linflow.conserved_quantity(p)
        c1 = linflow.conserved_quantity(q)
        worst_cons = max(worst_cons, abs(c1 - c0) / (1 + p[0] ** 2 + p[1] ** 2))
    passed = not misses and worst_cons <= cons_tol
    return VerificationReport(
        suite="invariance", passed=passed, samples=n,
        worst_residual=worst_cons, tolerance=cons_tol, details=misses[:20],
        conventions=spec.conventions(),
        metrics={"membership_misses": len(misses), "membership_tol": tol},
    )

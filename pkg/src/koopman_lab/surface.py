"""Invariant surfaces with l isolated equilibria inside the hyperbolic flow
on R^3.

The surface is a stack of horizontal planes z = 0, ..., l-1 with some
quadrants removed, joined by "bridges": unions of hyperbolic orbits through
a snake curve in the plane y = 0. Bridge j lives over 0 < z - (j-1) < 1.

The snake is parametrised by s in [0, 1] on each bridge:

    x(s) = b_j * a * sin(pi s),     z(s) = (j - 1) + S(s)

with b_j = (-1)**(l - j) and S the smooth step 1 / (1 + exp(1/s - 1/(1-s))).
S is flat at both ends, so the curve leaves and re-enters the planes
tangentially and the bridge is the graph of a flat function of x^2 - y^2 over
the removed quadrant. The turn (x-extremum) of bridge j sits at z = j - 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

from .polynomials import turn_product

PieceId = tuple  # ("plane", k) or ("bridge", j)


def plane(k: int) -> PieceId:
    return ("plane", k)


def bridge(j: int) -> PieceId:
    return ("bridge", j)


# ---------------------------------------------------------------------------
# smooth step and its inverse

def smooth_step(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        L = 1.0 / s - 1.0 / (1.0 - s)
        out = expit(-L)
    out = np.where(s <= 0.0, 0.0, np.where(s >= 1.0, 1.0, out))
    return out if out.ndim else float(out)


def smooth_step_prime(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    sc = np.where(inside, s, 0.5)
    S = expit(-(1.0 / sc - 1.0 / (1.0 - sc)))
    d = S * (1.0 - S) * (1.0 / sc**2 + 1.0 / (1.0 - sc) ** 2)
    out = np.where(inside, d, 0.0)
    return out if out.ndim else float(out)


def smooth_step_inverse(below, above):
    """s with S(s) = below, where below + above = 1 are given separately.

    Passing both distances keeps full relative precision near either end.
    """
    below = np.asarray(below, dtype=float)
    above = np.asarray(above, dtype=float)
    with np.errstate(divide="ignore"):
        L = np.log(above) - np.log(below)
    absL = np.abs(L)
    with np.errstate(invalid="ignore"):
        small = 2.0 / ((absL + 2.0) + np.sqrt(absL**2 + 4.0))
    small = np.where(np.isinf(absL), 0.0, small)
    out = np.where(L >= 0, small, 1.0 - small)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SnakeCurve:
    """The curve gamma in y = 0 that joins (0, 0, 0), (0, 0, 1), ..., (0, 0, l-1)."""

    l: int
    a: float

    def __post_init__(self):
        if self.l < 2:
            raise ValueError("a snake needs l >= 2 equilibria")
        if not 0.0 < self.a < 1.0:
            raise ValueError("amplitude a must lie in (0, 1)")

    @property
    def bulge_dir(self) -> tuple[int, ...]:
        """Side of bridge j, stored at index j - 1."""
        return tuple((-1) ** (self.l - j) for j in range(1, self.l))

    def bulge(self, j: int) -> int:
        self._check_bridge(j)
        return (-1) ** (self.l - j)

    def _check_bridge(self, j: int):
        if not 1 <= j <= self.l - 1:
            raise IndexError(f"bridge index {j} outside 1..{self.l - 1}")

    # parametric form on bridge j
    def x_of_s(self, j: int, s):
        return self.bulge(j) * self.a * np.sin(np.pi * np.asarray(s, dtype=float))

    def z_of_s(self, j: int, s):
        return (j - 1) + smooth_step(s)

    def velocity(self, j: int, s):
        s = np.asarray(s, dtype=float)
        return self.bulge(j) * self.a * np.pi * np.cos(np.pi * s), smooth_step_prime(s)

    def s_of_z(self, z):
        """Bridge index and parameter for heights strictly between integers."""
        z = np.asarray(z, dtype=float)
        j = np.floor(z).astype(int) + 1
        s = smooth_step_inverse(z - (j - 1), j - z)
        return j, s

    # graph-over-z views of the same curve
    def g(self, z) -> float:
        """Signed x-displacement of gamma at height z (zero at every integer)."""
        z = float(z)
        if z <= 0.0 or z >= self.l - 1 or z == math.floor(z):
            if -1e-15 <= z <= self.l - 1 + 1e-15:
                return 0.0
            raise ValueError(f"height {z} outside [0, {self.l - 1}]")
        j, s = self.s_of_z(z)
        return float(self.x_of_s(int(j), s))

    def g_prime(self, z) -> float:
        """dx/dz along gamma; infinite at the integers where gamma is horizontal."""
        z = float(z)
        if z <= 0.0 or z >= self.l - 1 or z == math.floor(z):
            return math.inf
        j, s = self.s_of_z(z)
        dx, dz = self.velocity(int(j), s)
        return float(dx / dz) if dz > 0 else math.copysign(math.inf, float(dx))

    def turn_heights(self) -> list[float]:
        return [j - 0.5 for j in range(1, self.l)]


def build_snake(l: int, a: float = 0.5) -> SnakeCurve:
    return SnakeCurve(l, a)


@dataclass(frozen=True)
class SurfaceSpec:
    l: int
    a: float
    snake: SnakeCurve = field(repr=False)
    bulge_dir: tuple
    removed_bottom: int
    removed_top: int

    def removed_sides(self, k: int) -> tuple[int, ...]:
        """Sides (+1 right, -1 left) whose open quadrant is missing from plane k."""
        if not 0 <= k <= self.l - 1:
            raise IndexError(f"plane index {k} outside 0..{self.l - 1}")
        sides = set()
        if k == 0:
            sides.add(self.removed_bottom)
        if k == self.l - 1:
            sides.add(self.removed_top)
        if 0 < k < self.l - 1:
            sides.update((1, -1))
        return tuple(sorted(sides))

    def bulge(self, j: int) -> int:
        return self.snake.bulge(j)

    def pieces(self) -> list[PieceId]:
        out = [plane(k) for k in range(self.l)]
        out += [bridge(j) for j in range(1, self.l)]
        return out

    def conventions(self) -> list[str]:
        return [
            "removed quadrants are open; the cone lines y = +-x stay on every plane",
            "snake curve x = b_j a sin(pi s), z = j-1 + S(s) with S the flat smooth step",
            f"bulge direction b_j = (-1)^(l-j); amplitude a = {self.a}",
            "membership tolerance: absolute in z, relative in x^2 - y^2",
        ]


def build_surface(l: int, a: float = 0.5) -> SurfaceSpec:
    snake = build_snake(l, a)
    bd = snake.bulge_dir
    return SurfaceSpec(l=l, a=a, snake=snake, bulge_dir=bd,
                       removed_bottom=bd[0], removed_top=bd[-1])


def equilibria(spec: SurfaceSpec) -> list[np.ndarray]:
    return [np.array([0.0, 0.0, float(k)]) for k in range(spec.l)]


# ---------------------------------------------------------------------------
# membership

def _in_kept_plane(spec: SurfaceSpec, k: int, x: float, y: float, tol: float) -> bool:
    slack = tol * (1.0 + abs(x) + abs(y))
    return all(side * x - abs(y) <= slack for side in spec.removed_sides(k))


def _on_bridge(spec: SurfaceSpec, j: int, x: float, y: float, z: float, tol: float) -> bool:
    if not (j - 1 - tol < z < j + tol):
        return False
    b = spec.bulge(j)
    if not (b * x > 0 or abs(x) <= tol):
        return False
    a = spec.a
    u = x * x - y * y
    scale = tol * (1.0 + x * x + y * y)
    # height -> conserved quantity: well conditioned near the turn
    if j - 1 < z < j:
        s = smooth_step_inverse(z - (j - 1), j - z)
        g2 = (a * math.sin(math.pi * s)) ** 2
        if abs(u - g2) <= scale:
            return True
    # conserved quantity -> height: well conditioned near the planes
    if -scale <= u <= a * a + scale:
        uc = min(max(u, 0.0), a * a)
        s_low = math.asin(math.sqrt(uc) / a) / math.pi
        for s in (s_low, 1.0 - s_low):
            if abs(z - ((j - 1) + smooth_step(s))) <= tol:
                return True
    return False


def membership(spec: SurfaceSpec, p, tol: float = 1e-9) -> PieceId | None:
    if tol <= 0:
        raise ValueError("tol must be positive")
    x, y, z = (float(v) for v in p)
    k = round(z)
    if 0 <= k <= spec.l - 1 and abs(z - k) <= tol and _in_kept_plane(spec, k, x, y, tol):
        return plane(k)
    j_lo = max(1, math.floor(z))
    for j in range(j_lo, min(spec.l - 1, math.floor(z) + 1) + 1):
        if _on_bridge(spec, j, x, y, z, tol):
            return bridge(j)
    return None


# ---------------------------------------------------------------------------
# charts and tangent data

def bridge_point(spec: SurfaceSpec, j: int, s, y):
    """Ambient point of bridge j at curve parameter s and height-slice y."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    b = spec.bulge(j)
    r = np.hypot(spec.a * np.sin(np.pi * s), y)
    z = (j - 1) + smooth_step(s)
    return np.stack(np.broadcast_arrays(b * r, y, z + 0.0 * y), axis=-1)


def bridge_velocity(spec: SurfaceSpec, j: int, s, c: float):
    """(dx/ds, dz/ds) of the bridge arc in the slice y = c."""
    s = np.asarray(s, dtype=float)
    b = spec.bulge(j)
    a = spec.a
    sn, cs = np.sin(np.pi * s), np.cos(np.pi * s)
    if c == 0.0:
        dx = b * a * np.pi * cs
    else:
        dx = b * a * a * np.pi * sn * cs / np.hypot(a * sn, c)
    return dx, smooth_step_prime(s)


def bridge_y_tangent(spec: SurfaceSpec, j: int, s, y):
    """Chart derivative d/dy of bridge_point, normalised."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(spec.a * np.sin(np.pi * s), y)
    with np.errstate(invalid="ignore", divide="ignore"):
        dx = np.where(r > 0, spec.bulge(j) * y / np.where(r > 0, r, 1.0), 0.0)
    v = np.stack(np.broadcast_arrays(dx, np.ones_like(dx), np.zeros_like(dx)), axis=-1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# cross-sections y = c

@dataclass(frozen=True)
class Arc:
    """One piece of a cross-section, traversed with z nondecreasing.

    kind is "bottom_ray" (t in (-inf, 0]), "bridge" (s in [0, 1]),
    "segment" (s in [0, 1]) or "top_ray" (t in [0, inf)).
    """

    kind: str
    piece: PieceId
    y: float
    lo: float
    hi: float
    point_fn: Callable = field(repr=False, compare=False)
    velocity_fn: Callable = field(repr=False, compare=False)
    limit_dirs: tuple = ((0.0, 0.0), (0.0, 0.0))

    def point(self, s):
        """(x, z) arrays at parameters s."""
        return self.point_fn(np.asarray(s, dtype=float))

    def ambient(self, s) -> np.ndarray:
        x, z = self.point(s)
        x, z = np.broadcast_arrays(x, z)
        return np.stack([x, np.full_like(x, self.y), z], axis=-1)

    def velocity(self, s):
        return self.velocity_fn(np.asarray(s, dtype=float))

    def tangent(self, s):
        """Unit tangent (tx, tz); uses the one-sided limit where the speed vanishes."""
        s = np.asarray(s, dtype=float)
        dx, dz = np.broadcast_arrays(*self.velocity(s))
        n = np.hypot(dx, dz)
        ok = n > 0
        safe = np.where(ok, n, 1.0)
        tx, tz = np.where(ok, dx / safe, 0.0), np.where(ok, dz / safe, 0.0)
        if not np.all(ok):
            near_lo = np.abs(s - self.lo) <= np.abs(s - self.hi)
            lx = np.where(near_lo, self.limit_dirs[0][0], self.limit_dirs[1][0])
            lz = np.where(near_lo, self.limit_dirs[0][1], self.limit_dirs[1][1])
            tx, tz = np.where(ok, tx, lx), np.where(ok, tz, lz)
        return tx, tz

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def start(self):
        return self.point(self.lo if math.isfinite(self.lo) else self.hi)

    def end(self):
        return self.point(self.hi if math.isfinite(self.hi) else self.lo)


@dataclass(frozen=True)
class CrossSection:
    y_value: float
    arcs: tuple

    def sample(self, per_arc: int = 200, ray_length: float = 3.0):
        """Ordered (arc_index, s, x, z) samples; rays truncated to ray_length."""
        rows = []
        for idx, arc in enumerate(self.arcs):
            for s in arc_params(arc, per_arc, ray_length):
                x, z = arc.point(s)
                rows.append((idx, float(s), float(x), float(z)))
        return rows


def arc_params(arc: Arc, n: int, ray_length: float) -> np.ndarray:
    lo = arc.lo if math.isfinite(arc.lo) else -ray_length
    hi = arc.hi if math.isfinite(arc.hi) else ray_length
    return np.linspace(lo, hi, n)


def _line_arc(kind, piece, c, x0, direction, z, lo, hi):
    d = float(direction)
    return Arc(
        kind=kind, piece=piece, y=c, lo=lo, hi=hi,
        point_fn=lambda t: (x0 + d * t, np.full_like(t, float(z))),
        velocity_fn=lambda t: (np.full_like(t, d), np.zeros_like(t)),
        limit_dirs=((math.copysign(1.0, d), 0.0), (math.copysign(1.0, d), 0.0)),
    )


def cross_section(spec: SurfaceSpec, c: float) -> CrossSection:
    c = float(c)
    ac = abs(c)
    l, a = spec.l, spec.a
    arcs = []
    b1 = spec.bulge(1)
    # bottom plane: kept side is opposite the first bridge, traversed toward it
    arcs.append(_line_arc("bottom_ray", plane(0), c, b1 * ac, b1, 0.0, -math.inf, 0.0))
    for j in range(1, l):
        b = spec.bulge(j)

        def pt(s, j=j, b=b):
            return b * np.hypot(a * np.sin(np.pi * s), c), (j - 1) + smooth_step(s)

        def vel(s, j=j):
            return bridge_velocity(spec, j, s, c)

        arcs.append(Arc("bridge", bridge(j), c, 0.0, 1.0, pt, vel,
                        limit_dirs=((float(b), 0.0), (float(-b), 0.0))))
        if j < l - 1:
            # interior plane j: from the side of bridge j to the side of bridge j+1
            bn = spec.bulge(j + 1)
            arcs.append(_line_arc("segment", plane(j), c, b * ac, 2 * bn * ac, float(j), 0.0, 1.0)
                        if ac > 0 else
                        Arc("segment", plane(j), c, 0.0, 1.0,
                            lambda s, j=j: (np.zeros_like(s), np.full_like(s, float(j))),
                            lambda s: (np.zeros_like(s), np.zeros_like(s)),
                            limit_dirs=((float(bn), 0.0), (float(bn), 0.0))))
    bl = spec.bulge(l - 1)
    arcs.append(_line_arc("top_ray", plane(l - 1), c, bl * ac, -bl, float(l - 1), 0.0, math.inf))
    return CrossSection(c, tuple(arcs))


# ---------------------------------------------------------------------------
# sampling and meshes

@dataclass
class SurfaceMesh:
    points: np.ndarray
    pieces: list
    faces: list
    equilibrium_vertices: list

    def census(self) -> set:
        return set(self.pieces)


def _kept_sectors(spec: SurfaceSpec, k: int) -> list[tuple[float, float]]:
    removed = spec.removed_sides(k)
    q = math.pi / 4
    if len(removed) == 2:
        return [(q, 3 * q), (5 * q, 7 * q)]
    if removed == (1,):
        return [(q, 7 * q)]
    return [(-3 * q, 3 * q)]


def sample_surface(spec: SurfaceSpec, density: float = 10.0, radius: float = 2.0) -> SurfaceMesh:
    """Deterministic vertex/face sampling: polar grids on planes, (s, y) grids on bridges."""
    if density <= 0:
        raise ValueError("density must be positive")
    pts: list = []
    tags: list = []
    faces: list = []
    eq_vertices = []

    nr = max(2, int(math.ceil(density * radius)))
    for k in range(spec.l):
        center = len(pts)
        pts.append((0.0, 0.0, float(k)))
        tags.append(plane(k))
        eq_vertices.append(center)
        for th0, th1 in _kept_sectors(spec, k):
            nth = max(2, int(math.ceil(density * radius * (th1 - th0))))
            thetas = np.linspace(th0, th1, nth + 1)
            base = len(pts)
            for i in range(1, nr + 1):
                r = radius * i / nr
                for th in thetas:
                    pts.append((r * math.cos(th), r * math.sin(th), float(k)))
                    tags.append(plane(k))
            row = nth + 1

            def vid(i, t, base=base, row=row):
                return base + (i - 1) * row + t

            for t in range(nth):
                faces.append((center, vid(1, t), vid(1, t + 1)))
            for i in range(1, nr):
                for t in range(nth):
                    faces.append((vid(i, t), vid(i + 1, t), vid(i + 1, t + 1), vid(i, t + 1)))

    ns = max(2, int(math.ceil(density * 2)))
    ny = max(2, int(math.ceil(density * 2 * radius)))
    s_grid = np.linspace(0.0, 1.0, ns + 1)
    y_grid = np.linspace(-radius, radius, ny + 1)
    for j in range(1, spec.l):
        base = len(pts)
        S, Yg = np.meshgrid(s_grid, y_grid, indexing="ij")
        P = bridge_point(spec, j, S, Yg).reshape(-1, 3)
        pts.extend(map(tuple, P))
        tags.extend([bridge(j)] * len(P))
        m = ny + 1
        for i in range(ns):
            for t in range(ny):
                v = base + i * m + t
                faces.append((v, v + m, v + m + 1, v + 1))
    return SurfaceMesh(np.array(pts, dtype=float), tags, faces, eq_vertices)


def random_surface_points(spec: SurfaceSpec, n: int, rng: np.random.Generator,
                          radius: float = 2.0) -> tuple[np.ndarray, list]:
    """Random points of the surface, split evenly between planes and bridges."""
    pts = np.empty((n, 3))
    tags = []
    for i in range(n):
        if rng.random() < 0.5:
            k = int(rng.integers(0, spec.l))
            sectors = _kept_sectors(spec, k)
            th0, th1 = sectors[int(rng.integers(0, len(sectors)))]
            th = rng.uniform(th0, th1)
            r = radius * math.sqrt(rng.random())
            pts[i] = (r * math.cos(th), r * math.sin(th), float(k))
            tags.append(plane(k))
        else:
            j = int(rng.integers(1, spec.l))
            s = rng.uniform(0.0, 1.0)
            y = rng.uniform(-radius, radius)
            pts[i] = bridge_point(spec, j, s, y)
            tags.append(bridge(j))
    return pts, tags


def seam_normal_angles(spec: SurfaceSpec, y_values, s_probe: float = 0.02, h: float = 1e-6) -> list[float]:
    """Angle between the finite-difference bridge normal next to each seam and the plane normal."""
    angles = []
    for j in range(1, spec.l):
        for s0 in (s_probe, 1.0 - s_probe):
            for y in y_values:
                ds = (bridge_point(spec, j, s0 + h, y) - bridge_point(spec, j, s0 - h, y)) / (2 * h)
                dy = (bridge_point(spec, j, s0, y + h) - bridge_point(spec, j, s0, y - h)) / (2 * h)
                n = np.cross(ds, dy)
                n /= np.linalg.norm(n)
                angles.append(float(math.acos(min(1.0, abs(n[2])))))
    return angles


def snake_sign_agreement(spec: SurfaceSpec, z_grid) -> list[tuple[float, int, int]]:
    """(z, sign g'(z), sign Pi(z)) on the given heights."""
    pi = turn_product(spec.l)
    out = []
    for z in z_grid:
        gp = spec.snake.g_prime(z)
        out.append((float(z), int(np.sign(gp)), int(np.sign(pi.eval([0.0, 0.0, float(z)])))))
    return out

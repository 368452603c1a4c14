"""File emission: OBJ meshes, CSV point sets, contour polylines and SVG figures.

All numbers are written with fixed precision so repeated runs are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
from contourpy import contour_generator

from .polynomials import MultiPoly
from .surface import CrossSection, SnakeCurve, SurfaceMesh

FMT = "{:.6f}"


def _f(v: float) -> str:
    s = FMT.format(float(v))
    return "0.000000" if s == "-0.000000" else s


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- meshes -----------------------------------------------------------------

def mesh_to_obj(mesh: SurfaceMesh, header: str = "") -> str:
    out = io.StringIO()
    if header:
        for line in header.splitlines():
            out.write(f"# {line}\n")
    for vi in mesh.equilibrium_vertices:
        x, y, z = mesh.points[vi]
        out.write(f"# equilibrium v {vi + 1} {_f(x)} {_f(y)} {_f(z)}\n")
    for x, y, z in mesh.points:
        out.write(f"v {_f(x)} {_f(y)} {_f(z)}\n")
    current = None
    for face in mesh.faces:
        piece = mesh.pieces[face[0]]
        if piece != current:
            current = piece
            out.write(f"g {piece[0]}_{piece[1]}\n")
        out.write("f " + " ".join(str(v + 1) for v in face) + "\n")
    return out.getvalue()


def mesh_to_csv(mesh: SurfaceMesh) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["piece", "index", "x", "y", "z", "equilibrium"])
    eq = set(mesh.equilibrium_vertices)
    for i, (p, tag) in enumerate(zip(mesh.points, mesh.pieces)):
        w.writerow([tag[0], tag[1], _f(p[0]), _f(p[1]), _f(p[2]), int(i in eq)])
    return out.getvalue()


def snake_to_csv(snake: SnakeCurve, per_bridge: int = 101) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["bridge", "s", "x", "z"])
    s = np.linspace(0.0, 1.0, per_bridge)
    for j in range(1, snake.l):
        xs, zs = snake.x_of_s(j, s), snake.z_of_s(j, s)
        for si, x, z in zip(s, xs, zs):
            w.writerow([j, _f(si), _f(x), _f(z)])
    return out.getvalue()


def section_to_csv(section: CrossSection, per_arc: int = 200, ray_length: float = 3.0) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["arc_id", "s", "x", "z"])
    for arc_id, s, x, z in section.sample(per_arc, ray_length):
        w.writerow([arc_id, _f(s), _f(x), _f(z)])
    return out.getvalue()


# -- contours ---------------------------------------------------------------

def section_polyline(section: CrossSection, per_arc: int = 200, ray_length: float = 3.0) -> np.ndarray:
    rows = section.sample(per_arc, ray_length)
    return np.array([(x, z) for _, _, x, z in rows])


def contour_lines(p: MultiPoly, y: float, window, levels, n: int = 241) -> list[tuple[float, np.ndarray]]:
    """Level curves of (x, z) -> p(x, y, z) over window = (x0, x1, z0, z1)."""
    x0, x1, z0, z1 = window
    xs = np.linspace(x0, x1, n)
    zs = np.linspace(z0, z1, n)
    Xg, Zg = np.meshgrid(xs, zs)
    P = p.eval(np.stack([Xg, np.full_like(Xg, y), Zg], axis=-1))
    gen = contour_generator(xs, zs, P, line_type="Separate")
    out = []
    for lev in levels:
        for line in gen.lines(float(lev)):
            if len(line) >= 2:
                out.append((float(lev), np.asarray(line)))
    return out


def default_levels(p: MultiPoly, y: float, window, count: int = 15) -> list[float]:
    x0, x1, z0, z1 = window
    xs = np.linspace(x0, x1, 61)
    zs = np.linspace(z0, z1, 61)
    Xg, Zg = np.meshgrid(xs, zs)
    P = p.eval(np.stack([Xg, np.full_like(Xg, y), Zg], axis=-1))
    lo, hi = np.percentile(P, [5, 95])
    return [float(v) for v in np.round(np.linspace(lo, hi, count), 6)]


def contours_to_csv(lines) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["level", "line_id", "x", "z"])
    for i, (lev, pts) in enumerate(lines):
        for x, z in pts:
            w.writerow([_f(lev), i, _f(x), _f(z)])
    return out.getvalue()


def padded_window(curve: np.ndarray, pad: float = 0.1):
    x0, z0 = curve.min(axis=0)
    x1, z1 = curve.max(axis=0)
    dx = (x1 - x0) or 1.0
    dz = (z1 - z0) or 1.0
    return (x0 - pad * dx, x1 + pad * dx, z0 - pad * dz, z1 + pad * dz)


# -- svg --------------------------------------------------------------------

def section_svg(curve: np.ndarray, lines, window, title: str = "", provenance: str = "",
                width_px: int = 600) -> str:
    """Bold cross-section over thin contour lines; x to the right, z upward."""
    x0, x1, z0, z1 = window
    scale = width_px / (x1 - x0)
    height_px = int(round((z1 - z0) * scale))

    def pt(x, z):
        return f"{_f((x - x0) * scale)},{_f((z1 - z) * scale)}"

    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height_px}" '
              f'viewBox="0 0 {width_px} {height_px}">\n')
    if provenance:
        out.write(f"<!-- {provenance} -->\n")
    if title:
        out.write(f"<title>{title}</title>\n")
    out.write(f'<rect x="0" y="0" width="{width_px}" height="{height_px}" fill="#ffffff"/>\n')
    out.write('<g fill="none" stroke="#8a8a8a" stroke-width="0.8">\n')
    for lev, pts in lines:
        out.write(f'<polyline data-level="{_f(lev)}" points="' + " ".join(pt(x, z) for x, z in pts) + '"/>\n')
    out.write("</g>\n")
    out.write('<polyline fill="none" stroke="#000000" stroke-width="3" points="'
              + " ".join(pt(x, z) for x, z in curve) + '"/>\n')
    out.write("</svg>\n")
    return out.getvalue()

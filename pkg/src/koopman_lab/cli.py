"""Command-line front end.

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage or
configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import artifacts, verify
from .linflow import MatrixExpRangeError, as_matrix, hyperbolic_generator
from .polynomials import Box2, X, Y, Z, compute_M, default_box, taming_p, taming_q
from .surface import build_surface, cross_section, equilibria, sample_surface
from .symspace import MAX_BASIS_DIM, PolySpaceBasis, lift_generator, matrix_to_dict

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SUITES = ("taming", "transversality", "graphlike", "koopman", "subspace",
          "equivariance", "invariance", "obstruction")
DEFAULT_Y_GRID = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0]
OUT_ENV = "KOOPMAN_LAB_OUT"
# figure constants: M = 1 for two equilibria, M = 4 for four; other l use compute_M
FIGURE_M = {2: 1.0, 4: 4.0}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    l: int = 2
    a: float = 0.5
    m: int | None = None
    M: float | None = None
    M_box: list | None = None
    M_margin: float = 0.05
    p_variant: str = "theorem"
    y_grid: list = field(default_factory=lambda: list(DEFAULT_Y_GRID))
    tolerances: dict = field(default_factory=lambda: {
        "taming": 1e-8, "transversality": 1e-6, "graphlike": 1e-6, "koopman": 1e-9,
        "subspace": 1e-8, "equivariance": 1e-8, "invariance": 1e-6,
    })
    seed: int = 0
    output_dir: str = "koopman_out"
    fibers: int = 200
    graphlike_samples: int = 2000
    graphlike_delta: float = 1e-2
    turns: int | None = None
    degree: int | None = None

    def validate(self):
        if not isinstance(self.l, int) or self.l < 2:
            raise ConfigError(f"l must be an integer >= 2, got {self.l!r}")
        if not 0.0 < self.a < 1.0:
            raise ConfigError(f"a must lie in (0, 1), got {self.a!r}")
        if self.m is not None and self.m < 1:
            raise ConfigError("m must be positive")
        if self.M is not None and not (self.M > 0 and math.isfinite(self.M)):
            raise ConfigError("M must be positive")
        if self.M_margin < 0:
            raise ConfigError("M margin must be nonnegative")
        if self.p_variant not in ("theorem", "example2"):
            raise ConfigError("p variant must be 'theorem' or 'example2'")
        if self.p_variant == "example2" and self.l != 2:
            raise ConfigError("the example2 polynomial only applies to l = 2")
        if any(v <= 0 for v in self.tolerances.values()):
            raise ConfigError("tolerances must be positive")
        try:
            self.box()
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid M box: {exc}") from exc
        return self

    def box(self) -> Box2:
        if self.M_box is None:
            return default_box(self.l, self.a)
        return Box2(*(float(v) for v in self.M_box))

    def resolved_M(self) -> float:
        return self.M if self.M is not None else compute_M(self.l, self.box(), self.M_margin)

    def degree_m(self) -> int:
        return self.m if self.m is not None else 2 * self.l - 1

    def hashed(self) -> str:
        d = asdict(self)
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    return cfg


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace("[", "").replace("]", "").split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {
        "l": args.l, "a": args.a, "m": args.m, "M": args.M, "M_box": args.M_box,
        "M_margin": args.M_margin, "y_grid": args.y_grid, "seed": args.seed,
        "p_variant": args.p, "turns": getattr(args, "turns", None),
        "degree": getattr(args, "degree", None),
    }
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if os.environ.get(OUT_ENV):
        cfg.output_dir = os.environ[OUT_ENV]
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg.validate()


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _suite_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def _pairs(cfg: RunConfig) -> list[tuple[str, verify.TamingPair]]:
    if cfg.p_variant == "example2":
        return [("example2", verify.example2_pair())]
    pairs = [("theorem", verify.TamingPair(taming_q(), taming_p(cfg.l, cfg.resolved_M()), cfg.degree_m()))]
    if cfg.l == 2:
        pairs.append(("example2", verify.example2_pair()))
    return pairs


# -- commands ---------------------------------------------------------------

def cmd_build(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    spec = build_surface(cfg.l, cfg.a)
    header = f"config {cfg.hashed()} l={cfg.l} a={cfg.a}"
    mesh = sample_surface(spec, density=10.0)
    artifacts.write_text(out / "surface.obj", artifacts.mesh_to_obj(mesh, header))
    artifacts.write_text(out / "surface_points.csv", artifacts.mesh_to_csv(mesh))
    artifacts.write_text(out / "snake.csv", artifacts.snake_to_csv(spec.snake))
    M = cfg.resolved_M()
    taming = {
        "config_hash": cfg.hashed(),
        "l": cfg.l,
        "m": cfg.degree_m(),
        "M": M,
        "M_box": cfg.box().as_list(),
        "M_margin": cfg.M_margin,
        "M_box_bound": compute_M(cfg.l, cfg.box(), 0.0),
        "q": taming_q().to_dict(),
        "p": taming_p(cfg.l, M).to_dict(),
        "equilibria": [e.tolist() for e in equilibria(spec)],
    }
    if cfg.l == 2:
        taming["p_example2"] = verify.example2_pair().p.to_dict()
    artifacts.write_text(out / "taming.json", artifacts.dump_json(taming))
    print(f"built l={cfg.l}: {len(mesh.points)} vertices, {len(mesh.equilibrium_vertices)} equilibria -> {out}")
    return EXIT_OK


def run_suites(cfg: RunConfig, suites) -> list[verify.VerificationReport]:
    spec = build_surface(cfg.l, cfg.a)
    tol = cfg.tolerances
    reports = []
    for name in suites:
        rng = _suite_rng(cfg.seed, name)
        if name == "taming":
            for label, tp in _pairs(cfg):
                r = verify.verify_taming(spec, tp, cfg.y_grid, margin=tol["taming"])
                r.metrics["variant"] = label
                reports.append(r)
                if label == "theorem":
                    reports.append(verify.m_certificate(cfg.l, cfg.resolved_M(), cfg.box()))
        elif name == "transversality":
            for label, tp in _pairs(cfg):
                fibers = verify.random_fibers(spec, tp, cfg.fibers, rng)
                r = verify.verify_transversality(spec, tp, fibers, tol=tol["transversality"])
                r.metrics["variant"] = label
                reports.append(r)
        elif name == "graphlike":
            tp = _pairs(cfg)[0][1]
            if tp.m > 7:
                print(f"skipping graphlike: degree {tp.m} > 7 makes the embedding too large", file=sys.stderr)
                continue
            reports.append(verify.graphlike_check(spec, tp, cfg.graphlike_samples, cfg.graphlike_delta,
                                                  tol["graphlike"], rng))
        elif name == "koopman":
            for psi, lam in ((X + Y, 1.0), (X - Y, -1.0), (Z, 0.0)):
                reports.append(verify.koopman_eigencheck(spec, psi, lam, 100, np.linspace(-2, 2, 21),
                                                         tol["koopman"], rng))
        elif name == "subspace":
            reports.append(verify.invariant_subspace_check(
                spec, [X + Y, X - Y, Z], [-1.0, 0.3, 1.0], tol["subspace"],
                expected=lambda t: np.diag([math.exp(t), math.exp(-t), 1.0]), rng=rng))
        elif name == "equivariance":
            reports.append(verify.equivariance_check((1, 2, 3), 200, rng, tol["equivariance"]))
        elif name == "invariance":
            reports.append(verify.invariance_check(spec, 500, rng, tol["invariance"]))
        elif name == "obstruction":
            turns = cfg.turns if cfg.turns is not None else cfg.l - 1
            degree = cfg.degree if cfg.degree is not None else cfg.degree_m()
            reports.append(verify.obstruction_report(turns, degree))
    return reports


def cmd_verify(cfg: RunConfig, suites) -> int:
    out = _out_dir(cfg)
    code = EXIT_OK
    try:
        reports = run_suites(cfg, suites)
    except (verify.NumericalFailure, MatrixExpRangeError) as exc:
        reports, code = [], EXIT_NUMERIC
        print(f"numerical failure: {exc}", file=sys.stderr)
    passed = code == EXIT_OK and all(r.passed for r in reports)
    if code == EXIT_OK and not passed:
        code = EXIT_FAIL
    doc = {
        "config_hash": cfg.hashed(),
        "seed": cfg.seed,
        "config": {k: v for k, v in asdict(cfg).items() if k != "output_dir"},
        "suites": list(suites),
        "pass": passed,
        "exit_code": code,
        "conventions": verify.CONVENTIONS + build_surface(cfg.l, cfg.a).conventions(),
        "reports": [r.to_dict() for r in reports],
    }
    artifacts.write_text(out / "report.json", artifacts.dump_json(doc))
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.suite:<15} worst={r.worst_residual:.3e} tol={r.tolerance:.1e} samples={r.samples}")
        if r.suite == "obstruction":
            print(f"     {r.details[0]['explanation']}")
    return code


def plot_section(cfg: RunConfig, y: float, ray_length: float = 1.5):
    spec = build_surface(cfg.l, cfg.a)
    section = cross_section(spec, y)
    curve = artifacts.section_polyline(section, 200, ray_length)
    window = artifacts.padded_window(curve)
    p = taming_p(cfg.l, cfg.M if cfg.M is not None else FIGURE_M.get(cfg.l, cfg.resolved_M()))
    levels = artifacts.default_levels(p, y, window)
    lines = artifacts.contour_lines(p, y, window, levels)
    return curve, lines, window, p


def cmd_plot(cfg: RunConfig, kind: str, y: float) -> int:
    out = _out_dir(cfg)
    spec = build_surface(cfg.l, cfg.a)
    prov = f"config {cfg.hashed()} l={cfg.l} y={y}"
    if kind == "cross_section":
        curve, lines, window, p = plot_section(cfg, y)
        title = f"section y={y} of the surface with {cfg.l} equilibria; contours of p = {p!r}"
        path = artifacts.write_text(out / f"cross_section_l{cfg.l}_y{y:g}.svg",
                                    artifacts.section_svg(curve, lines, window, title, prov))
    elif kind == "contour_csv":
        _, lines, _, _ = plot_section(cfg, y)
        path = artifacts.write_text(out / f"contours_l{cfg.l}_y{y:g}.csv", artifacts.contours_to_csv(lines))
    elif kind == "surface_obj":
        mesh = sample_surface(spec, density=10.0)
        path = artifacts.write_text(out / f"surface_l{cfg.l}.obj", artifacts.mesh_to_obj(mesh, prov))
    else:
        print(f"unknown plot kind {kind!r}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {path}")
    return EXIT_OK


def cmd_lift(n: int, m: int, matrix: str | None, out_path: str | None) -> int:
    if matrix is None:
        A = hyperbolic_generator(0) if n == 3 else np.eye(n)
    else:
        try:
            A = as_matrix(json.loads(matrix))
        except (json.JSONDecodeError, ValueError) as exc:
            print(f"invalid matrix: {exc}", file=sys.stderr)
            return EXIT_USAGE
    if A.shape[0] != n:
        print(f"matrix is {A.shape[0]}x{A.shape[0]} but --n is {n}", file=sys.stderr)
        return EXIT_USAGE
    if math.comb(n + m, n) > MAX_BASIS_DIM:
        print(f"basis dimension exceeds {MAX_BASIS_DIM}", file=sys.stderr)
        return EXIT_USAGE
    basis = PolySpaceBasis(n, m)
    text = json.dumps(matrix_to_dict(lift_generator(A, m, basis), basis))
    if out_path:
        artifacts.write_text(Path(out_path), text + "\n")
    else:
        print(text)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--l", type=int, help="number of equilibria (>= 2)")
    p.add_argument("--a", type=float, help="snake amplitude in (0, 1)")
    p.add_argument("--m", type=int, help="embedding degree (default 2l-1)")
    p.add_argument("--M", type=float, help="taming constant (default from the bounding box)")
    p.add_argument("--M-box", dest="M_box", type=_floats, help="x_lo,x_hi,z_lo,z_hi")
    p.add_argument("--M-margin", dest="M_margin", type=float)
    p.add_argument("--p", choices=("theorem", "example2"), help="which p to pair with q = y")
    p.add_argument("--y-grid", dest="y_grid", type=_floats)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON file with RunConfig keys")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="koopman-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="write the surface mesh, snake curve and taming polynomials")
    _common(b)

    v = sub.add_parser("verify", help="run verification suites")
    _common(v)
    v.add_argument("--suites", default="all", help=f"comma list from {','.join(SUITES)} or 'all'")
    v.add_argument("--turns", type=int)
    v.add_argument("--degree", type=int)

    pl = sub.add_parser("plot", help="emit figures")
    _common(pl)
    pl.add_argument("--kind", required=True)
    pl.add_argument("--y", type=float, default=0.0)

    li = sub.add_parser("lift", help="print the lifted generator on P^m")
    li.add_argument("--n", type=int, required=True)
    li.add_argument("--m", type=int, required=True)
    li.add_argument("--A", help="matrix as JSON, default: hyperbolic generator for n = 3")
    li.add_argument("--out", help="write JSON here instead of stdout")
    return parser


def _parse_suites(text: str) -> list[str]:
    if text == "all":
        return list(SUITES)
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in SUITES]
    if bad:
        raise ConfigError(f"unknown suites {bad}; choose from {SUITES}")
    return names


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "lift":
            if args.n < 1 or args.m < 1:
                raise ConfigError("--n and --m must be positive")
            return cmd_lift(args.n, args.m, args.A, args.out)
        cfg = config_from_args(args)
        if args.command == "build":
            return cmd_build(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, _parse_suites(args.suites))
        if args.command == "plot":
            return cmd_plot(cfg, args.kind, args.y)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (verify.NumericalFailure, MatrixExpRangeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

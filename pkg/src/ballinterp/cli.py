"""Batch front-end: build a run configuration, generate or read a point
sequence, run the checks of one module (or all of them) and emit a JSON report.

Exit codes: 0 when every check passes, 1 when a check fails or a module raises,
2 for configuration or input errors.
"""
import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA = 1
SUBCOMMANDS = ("geom", "quad", "gleason", "interp", "drury", "amar", "carleson",
               "smooth-check")

DEFAULT_TOL = {
    "involution": 1e-10,
    "moebius_identity": 1e-12,
    "jacobian": 1e-10,
    "moments": 1e-8,
    "mass": 1e-8,
    "forelli": 1e-6,
    "gleason_residual": 1e-3,
    "gleason_ratio": 100.0,
    "interp_exact": 1e-8,
    "kronecker": 1e-8,
    "plancherel": 1e-10,
    "B_zero": 1e-8,
    "M_identity": 1e-8,
    "det_expansion": 1e-10,
    "factorization": 1e-3,
    "t_min": 2.0 ** -8,
    "smooth_interp": 1e-12,
    "dbar": 1e-5,
    "fd_order": 1.8,
}
DEFAULT_OPTIONS = {
    "geom_samples": 1000,
    "gleason_trials": 5,
    "poly_degree": 4,
    "eval_samples": 50,
    "region_samples": 200,
    "eta": 0.2,
    "xi_grid": 256,
    "mass_exponent": None,
    "fd_samples": 20,
    "fd_step_scale": 1e-3,
    "order_step_scale": 1e-2,
}
DEFAULT_SEQUENCE = {"kind": "uniform", "count": 3, "radius": 0.7}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 2
    p: float = 4.0
    alpha: float = 0.5
    seed: int = 42
    quad: dict = field(default_factory=lambda: {"radial": 16, "angular": 12})
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOL))
    options: dict = field(default_factory=lambda: dict(DEFAULT_OPTIONS))
    sequence: dict = field(default_factory=lambda: dict(DEFAULT_SEQUENCE))

    def params(self):
        from .functions import SpaceParams

        return SpaceParams(self.n, self.p, self.alpha)

    def echo(self):
        return asdict(self)


# configuration ---------------------------------------------------------------------

def _merge(base, extra, what):
    unknown = set(extra) - set(base)
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    out = dict(base)
    out.update(extra)
    return out


def load_config(path=None, seed=None, points=None):
    """RunConfig from an optional JSON file (``schema: 1``), then flag overrides."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("the config must be a JSON object")
        if raw.pop("schema", None) != SCHEMA:
            raise ConfigError(f"config needs \"schema\": {SCHEMA}")
    cfg = RunConfig()
    unknown = set(raw) - {"n", "p", "alpha", "seed", "quad", "tol", "options", "sequence"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("n", "p", "alpha", "seed"):
        if key in raw:
            setattr(cfg, key, raw[key])
    cfg.quad = _merge(cfg.quad, raw.get("quad", {}), "quad")
    cfg.tol = _merge(cfg.tol, raw.get("tol", {}), "tol")
    cfg.options = _merge(cfg.options, raw.get("options", {}), "options")
    if "sequence" in raw:
        cfg.sequence = dict(raw["sequence"])
    if seed is not None:
        cfg.seed = seed
    if points is not None:
        cfg.sequence = {"kind": "csv", "path": str(points)}
    validate(cfg)
    return cfg


def validate(cfg):
    from .functions import ParameterError, SpaceParams

    if not isinstance(cfg.n, int) or isinstance(cfg.n, bool):
        raise ConfigError("n must be an integer")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    try:
        SpaceParams(cfg.n, float(cfg.p), float(cfg.alpha))
    except (ParameterError, TypeError) as exc:
        raise ConfigError(f"invalid space parameters: {exc}") from exc
    for key in ("radial", "angular"):
        v = cfg.quad[key]
        if not isinstance(v, int) or v < 1:
            raise ConfigError(f"quad.{key} must be a positive integer")
    for key, v in cfg.tol.items():
        if not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"tol.{key} must be positive")
    if not isinstance(cfg.sequence, dict) or "kind" not in cfg.sequence:
        raise ConfigError("sequence needs a \"kind\"")


# sequences -------------------------------------------------------------------------

def _complex_vector(v, n):
    arr = []
    for x in v:
        if isinstance(x, (list, tuple)):
            if len(x) != 2:
                raise ConfigError("complex entries are written [re, im]")
            arr.append(complex(float(x[0]), float(x[1])))
        else:
            arr.append(complex(float(x)))
    out = np.array(arr, dtype=np.complex128)
    if out.shape != (n,):
        raise ConfigError(f"direction must have {n} entries")
    return out


def generate_sequence(spec, seed, n=2):
    """Points of the ball in C^n, shape (count, n), from a generator description.

    ``radial``: r_k = 1 - q^k, k = 1..count, along ``direction`` (default e_1).
    ``uniform``: ``count`` independent draws from the hyperbolic volume
    rho^-(n+1) dnu restricted to {|z| < radius}.
    """
    kind = spec.get("kind")
    count = spec.get("count", 0)
    if not isinstance(count, int) or count < 0:
        raise ConfigError("count must be a nonnegative integer")
    if kind == "radial":
        q = float(spec.get("q", 0.5))
        if not 0 < q < 1:
            raise ConfigError(f"q must lie in (0, 1), got {q}")
        d = spec.get("direction")
        u = np.eye(n, dtype=np.complex128)[0] if d is None else _complex_vector(d, n)
        norm = np.linalg.norm(u)
        if not norm > 0:
            raise ConfigError("direction must be nonzero")
        r = 1.0 - q ** np.arange(1, count + 1)
        return r[:, None] * (u / norm)[None, :]
    if kind == "uniform":
        radius = float(spec.get("radius", 0.7))
        if not 0 < radius < 1:
            raise ConfigError(f"radius must lie in (0, 1), got {radius}")
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((count, 2 * n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        xi = g[:, :n] + 1j * g[:, n:]
        # t = |z|^2 / (1 - |z|^2) has density proportional to t^(n-1) on [0, T]
        T = radius ** 2 / (1.0 - radius ** 2)
        t = T * rng.uniform(size=count) ** (1.0 / n)
        return np.sqrt(t / (1.0 + t))[:, None] * xi
    raise ConfigError(f"unknown sequence kind {kind!r}")


def read_points_csv(path):
    """(points, masses or None) from a CSV with header re1,im1,...,ren,imn[,mass]."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path}, line 1: missing header")
    header = [h.strip() for h in rows[0]]
    has_mass = bool(header) and header[-1] == "mass"
    coords = header[:-1] if has_mass else header
    n = len(coords) // 2
    expect = [f"{part}{k}" for k in range(1, n + 1) for part in ("re", "im")]
    if n == 0 or coords != expect:
        raise ConfigError(f"{path}, line 1: header must be re1,im1,...,ren,imn[,mass]")
    pts, masses = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ConfigError(f"{path}, line {lineno}: expected {len(header)} fields, "
                              f"got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ConfigError(f"{path}, line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"{path}, line {lineno}: non-finite value")
        z = np.array(vals[0:2 * n:2]) + 1j * np.array(vals[1:2 * n:2])
        if np.linalg.norm(z) >= 1:
            raise ConfigError(f"{path}, line {lineno}: point outside the open ball")
        pts.append(z)
        if has_mass:
            if not vals[-1] > 0:
                raise ConfigError(f"{path}, line {lineno}: mass must be positive")
            masses.append(vals[-1])
    points = np.array(pts, dtype=np.complex128).reshape(-1, n)
    return points, (np.array(masses) if has_mass else None)


def resolve_sequence(cfg):
    """(points, masses or None) for the configured sequence source."""
    spec = cfg.sequence
    kind = spec["kind"]
    if kind == "csv":
        points, masses = read_points_csv(spec.get("path", ""))
    elif kind == "inline":
        rows = spec.get("rows", [])
        try:
            flat = np.array(rows, dtype=float).reshape(len(rows), -1)
        except ValueError as exc:
            raise ConfigError(f"inline rows must be re1,im1,...: {exc}") from exc
        if flat.shape[1] != 2 * cfg.n and len(rows):
            raise ConfigError(f"inline rows need {2 * cfg.n} numbers")
        points, masses = flat[:, 0::2] + 1j * flat[:, 1::2], None
        if len(points) and np.any(np.linalg.norm(points, axis=1) >= 1):
            raise ConfigError("inline point outside the open ball")
    else:
        points, masses = generate_sequence(spec, cfg.seed, cfg.n), None
    if points.shape[1] != cfg.n:
        raise ConfigError(f"points live in C^{points.shape[1]} but n = {cfg.n}")
    return points, masses


# checks ----------------------------------------------------------------------------

def _num(v):
    v = float(v)
    return v if math.isfinite(v) else str(v)


class Checks:
    def __init__(self, tol):
        self.tol = tol
        self.items = []
        self.tables = {}

    def below(self, name, value, key=None):
        tol = self.tol[key or name]
        self.items.append({"name": name, "value": _num(value), "tol": tol,
                           "pass": bool(value <= tol)})

    def above(self, name, value, key=None):
        tol = self.tol[key or name]
        self.items.append({"name": name, "value": _num(value), "tol": tol,
                           "pass": bool(value >= tol)})

    def truth(self, name, ok, value=None):
        self.items.append({"name": name, "value": None if value is None else _num(value),
                           "tol": None, "pass": bool(ok)})

    def error(self, name, exc):
        self.items.append({"name": name, "value": None, "tol": None, "pass": False,
                           "error": f"{type(exc).__name__}: {exc}"})


def _need_points(points, what, minimum=1):
    if len(points) < minimum:
        raise ConfigError(f"{what} needs at least {minimum} point(s)")


def run_geom(cfg, points, masses, chk):
    from .geometry import herm, moebius, moebius_derivative, moebius_jacobian, rho, uniform_ball

    rng = np.random.default_rng(cfg.seed)
    m = cfg.options["geom_samples"]
    A = uniform_ball(rng, m, cfg.n, radius=0.99)
    Z = uniform_ball(rng, m, cfg.n, radius=0.99)
    inv, ident, jac = 0.0, 0.0, 0.0
    for a, z in zip(A, Z):
        w = moebius(a, z)
        inv = max(inv, float(np.max(np.abs(moebius(a, w) - z))))
        ident = max(ident, abs(rho(w) - rho(a) * rho(z) / abs(1 - herm(z, a)) ** 2))
    for a, z in zip(A[:100], Z[:100]):
        d = np.linalg.det(moebius_derivative(a, z))
        j = moebius_jacobian(a, z)
        jac = max(jac, abs(d - j) / max(1.0, abs(j)))
    chk.below("involution", inv)
    chk.below("moebius_identity", ident)
    chk.below("jacobian", jac)


def run_quad(cfg, points, masses, chk):
    from .functions import Poly
    from .quadrature import (ball_moment, ball_weight_mass, build_ball_rule,
                             build_sphere_rule, forelli_check, integrate)

    n = cfg.n
    rows = []
    mass_err, mom_err = 0.0, 0.0
    for ap in (1, 2, 3):
        rule = build_ball_rule(n, ap - 1, cfg.quad["radial"], cfg.quad["angular"])
        exact = math.gamma(n + 1) * math.gamma(ap) / math.gamma(n + ap)
        got = integrate(lambda x: np.ones(len(x)), rule)
        mass_err = max(mass_err, abs(got - exact) / exact, abs(ball_weight_mass(n, ap - 1) - exact) / exact)
        for k in range(5):
            theta = (k,) + (0,) * (n - 1)
            val = integrate(lambda x: np.abs(x[:, 0]) ** (2 * k), rule).real
            ref = ball_moment(theta, ap - 1)
            mom_err = max(mom_err, abs(val - ref) / ref)
            rows.append([ap, k, val, ref])
    chk.below("mass", mass_err)
    chk.below("moments", mom_err)
    chk.tables["moments"] = (["alpha_p", "m", "quadrature", "exact"], rows)
    if n == 2:
        rng = np.random.default_rng(cfg.seed)
        sphere = build_sphere_rule(4, 10)
        ball = build_ball_rule(2, 1, 12, 10)
        worst = 0.0
        for _ in range(3):
            f = Poly.random(rng, 2, 2)
            lhs, rhs = forelli_check(lambda x: np.abs(f(x)) ** 2, 2, 2, sphere, ball)
            worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
        chk.below("forelli", worst)


def run_gleason(cfg, points, masses, chk):
    from .functions import Poly
    from .geometry import uniform_ball
    from .gleason import gleason_at
    from .kernels import KernelParams

    params = cfg.params()
    params.check_gleason()
    kp = KernelParams(params)
    rng = np.random.default_rng(cfg.seed)
    a = points[0] if len(points) else np.zeros(cfg.n)
    res, ratio = 0.0, 0.0
    z = uniform_ball(rng, cfg.options["eval_samples"], cfg.n, radius=0.9)
    for _ in range(cfg.options["gleason_trials"]):
        f = Poly.random(rng, cfg.n, cfg.options["poly_degree"], vanish_at=a)
        sol = gleason_at(f, a, kp, test_points=z)
        res = max(res, sol.residual)
        ratio = max(ratio, sol.norm_ratio)
    chk.below("gleason_residual", res)
    chk.below("gleason_ratio", ratio)


def run_interp(cfg, points, masses, chk):
    from .interpolation import min_norm_interpolant

    _need_points(points, "interp")
    rng = np.random.default_rng(cfg.seed)
    lam = rng.standard_normal(len(points)) + 1j * rng.standard_normal(len(points))
    f = min_norm_interpolant(points, lam, cfg.params())
    chk.below("interp_exact", float(np.max(np.abs(f(points) - lam))))


def run_drury(cfg, points, masses, chk):
    from .interpolation import drury_extension

    _need_points(points, "drury")
    basis = drury_extension(points, cfg.params(), seed=cfg.seed,
                            tol_delta=np.inf, tol_plancherel=np.inf)
    chk.below("kronecker", basis.checks["kronecker"])
    chk.below("plancherel", basis.checks["plancherel"])
    chk.truth("beta_norm_finite", math.isfinite(basis.checks["norm"]), basis.checks["norm"])


def run_amar(cfg, points, masses, chk):
    from .amar import build_amar, det_expansion, factorization_residual, search_constants
    from .geometry import sample_pseudo_ball

    _need_points(points, "amar")
    asm = build_amar(points, cfg.params())
    rng = np.random.default_rng(cfg.seed)
    chk.below("B_zero", float(np.max(np.abs(asm.B_at(points)))))
    chk.below("M_identity", float(np.max(np.abs(asm.M_at(asm.a) - np.eye(cfg.n)))))
    z = sample_pseudo_ball(rng, asm.a, 0.5, cfg.options["eval_samples"])
    direct, expansion = det_expansion(asm, z)
    chk.below("det_expansion", float(np.max(np.abs(direct - expansion))))
    chk.below("factorization", factorization_residual(asm, z))
    t, C, reports = search_constants([asm], samples=cfg.options["region_samples"],
                                     seed=cfg.seed)
    chk.above("t_found", 0.0 if t is None else t, "t_min")
    chk.tables["factorization"] = (
        ["k", "t", "C", "radius", "min_det", "max_inv", "max_entry_norm", "passed"],
        [[r.k, r.t, r.C, r.radius, r.min_det, r.max_inv, r.max_entry_norm, r.passed]
         for r in reports])


def run_carleson(cfg, points, masses, chk):
    from .carleson import AtomicMeasure, carleson_constant, mu_A

    expo = cfg.options["mass_exponent"]
    if masses is not None:
        mu = AtomicMeasure(points, masses)
    else:
        mu = mu_A(points, float(cfg.n if expo is None else expo))
    rep = carleson_constant(mu, cfg.n, xi_grid=cfg.options["xi_grid"])
    chk.truth("constant_finite", math.isfinite(rep.constant), rep.constant)
    if len(mu) == 0:
        chk.truth("empty_is_zero", rep.constant == 0.0, rep.constant)
    else:
        doubled = carleson_constant(mu.scaled(2.0), cfg.n, xi_grid=cfg.options["xi_grid"])
        chk.truth("scaling_covariance", doubled.constant == 2.0 * rep.constant,
                  doubled.constant - 2.0 * rep.constant)
    chk.tables["carleson"] = (["constant", "t", "atoms"], [[rep.constant, rep.t, len(mu)]])


def run_smooth(cfg, points, masses, chk):
    from .geometry import rho, uniform_ball
    from .smooth import (assemble_all, build_F, dbar_identity_check, fd_order,
                         omega_forms, shrink_radius, support_samples)

    _need_points(points, "smooth-check")
    if cfg.n != 2:
        raise ConfigError("smooth-check works on the ball of C^2 (n = 2)")
    source = cfg.params()
    target = source.squared()
    eta = cfg.options["eta"]
    RN = shrink_radius(points, eta, target)
    chk.truth("R_N_below_one", RN < 1.0, RN)
    rng = np.random.default_rng(cfg.seed)
    lam = rng.standard_normal(len(points)) + 1j * rng.standard_normal(len(points))
    sd = build_F(points, lam, 0.5 * (1.0 + RN), eta, target, assemble_all(points, source))
    chk.below("smooth_interp", float(np.max(np.abs(sd.F(points / sd.R) - lam))))
    z = support_samples(sd, cfg.options["fd_samples"], seed=cfg.seed)
    far = uniform_ball(rng, 200, 2, radius=0.99)
    x = sd.arguments(far)
    outside = np.all((x < 0.5) | (x > 1), axis=1)
    w1, w2, w3 = omega_forms(sd, far[outside])
    chk.truth("support_discipline",
              bool(np.all(w1 == 0) and np.all(w2 == 0) and np.all(w3 == 0)), int(np.sum(outside)))
    # steps scale with the smallest support, about r_j rho(a_j) / R across
    size = float(np.min(sd.radii * rho(points))) / sd.R
    h = min(1e-4, cfg.options["fd_step_scale"] * size)
    rep = dbar_identity_check(sd, z, h, scheme="richardson")
    chk.below("dbar_F", rep["dbar_F"] / max(1.0, rep["scale_F"]), "dbar")
    chk.below("dbar_w1", rep["dbar_w1"] / max(1.0, rep["scale_w"]), "dbar")
    chk.below("dbar_w2", rep["dbar_w2"] / max(1.0, rep["scale_w"]), "dbar")
    orders, _, _ = fd_order(sd, z, min(1e-3, cfg.options["order_step_scale"] * size))
    chk.above("fd_order", min(orders.values()))


RUNNERS = {"geom": run_geom, "quad": run_quad, "gleason": run_gleason,
           "interp": run_interp, "drury": run_drury, "amar": run_amar,
           "carleson": run_carleson, "smooth-check": run_smooth}


def run(cfg, subcommand):
    """Report dict for one subcommand or ``all``; raises ConfigError on bad input."""
    from .functions import ParameterError

    names = SUBCOMMANDS if subcommand == "all" else (subcommand,)
    points, masses = resolve_sequence(cfg)
    sections, timing, tables = {}, {}, {}
    for name in names:
        chk = Checks(cfg.tol)
        start = time.perf_counter()
        try:
            RUNNERS[name](cfg, points, masses, chk)
        except ConfigError:
            raise
        except ParameterError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
        except (ValueError, ArithmeticError, IndexError, np.linalg.LinAlgError) as exc:
            chk.error(f"{name}_module", exc)
        timing[name] = time.perf_counter() - start
        sections[name] = chk.items
        for key, table in chk.tables.items():
            tables[f"{name}.{key}"] = table
    passed = all(c["pass"] for items in sections.values() for c in items)
    report = {"schema": SCHEMA, "subcommand": subcommand, "version": __version__,
              "config": cfg.echo(), "points": len(points), "checks": sections,
              "passed": passed, "timing": timing}
    return report, tables


def deterministic_part(report):
    """The report without the timing field."""
    return {k: v for k, v in report.items() if k != "timing"}


def _write_tables(out, tables):
    for key, (header, rows) in tables.items():
        path = out.with_name(f"{out.stem}.{key}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)


def _summary(report):
    lines = []
    for section, items in report["checks"].items():
        for c in items:
            mark = "PASS" if c["pass"] else "FAIL"
            extra = c.get("error", "")
            lines.append(f"{mark}  {section}.{c['name']}  value={c['value']}  tol={c['tol']}"
                         + (f"  {extra}" if extra else ""))
    lines.append("all checks passed" if report["passed"] else "some checks failed")
    return "\n".join(lines)


def build_parser():
    parser = argparse.ArgumentParser(prog="ballinterp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS + ("all",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration (schema 1)")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default 42)")
        sp.add_argument("--out", help="write the JSON report here (tables next to it)")
        sp.add_argument("--points", help="CSV with header re1,im1,...[,mass]")
        sp.add_argument("--json", action="store_true", help="print the JSON report")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed, args.points)
        report, tables = run(cfg, args.subcommand)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        out = Path(args.out)
        out.write_text(text + "\n")
        _write_tables(out, tables)
    print(text if args.json else _summary(report))
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())

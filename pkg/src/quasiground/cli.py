"""Command-line front end.

Every subcommand writes its data files plus ``manifest.json`` into the output
directory (``--out``, overridden by ``$QUASIGROUND_OUT``). Tables use 12
significant digits; field and profile CSVs use ``repr`` so that they re-import
bit-identically. Failures exit nonzero and print a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import __version__, kernels
from .asymptotics import (DEFAULT_DQ, SweepOptions, SweepRecord, ThresholdOptions, default_geometry,
                          default_q_list, energy_gap, nonexistence_probe, sweep, threshold_bisect)
from .constants import (ProblemParams, blowup_level, blowup_scale, critical_exponent, energy_asymptote,
                        existence_threshold, gn_constants, rescaled_coupling)
from .energy import gaussian
from .errors import ConfigError, InvalidRegime, PartialSweep, QuasigroundError
from .field import Geometry
from .minimizer import MinimizerOptions, minimize
from .potentials import KINDS, Potential
from .profile import gn_equality_ratio, pohozaev_residuals, solve_profile

log = logging.getLogger("quasiground")

SUBCOMMANDS = ("profile", "constants", "minimize", "sweep", "gap", "nonexist", "threshold")
EXIT_CODES = {"usage": 2}
DIGITS = 12


def fmt(x) -> str:
    """12 significant digits for floats, ``str`` for everything else."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{DIGITS}g}"
    return str(x)


@dataclass
class RunConfig:
    """Everything a run depends on; JSON-serializable via :meth:`to_dict`."""

    subcommand: str
    dim: int = 1
    q: float | None = None
    a: float | None = None
    a_mult: list = field(default_factory=lambda: [2.0])
    potential: list = field(default_factory=lambda: [{"kind": "zero"}])
    geometry: str | None = None
    nodes: int | None = None
    r_max: float | None = None
    tol: float = 1e-8
    max_iter: int = 50000
    precondition: bool = True
    divergence_floor: float | None = None
    out: str = "."
    jobs: int = 1
    mode: str = "blowup"
    dq: list = field(default_factory=lambda: list(DEFAULT_DQ))
    include_critical: bool = False
    taus: list = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0, 64.0])
    bracket: list = field(default_factory=lambda: [0.5, 2.0])
    rel_tol: float = 0.01
    seed_tau: float = 100.0
    profile_nodes: int = 4096
    profile_tol: float = 1e-6
    nodes_per_eps: int = 64

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ConfigError(f"--dim must be a positive integer, got {self.dim!r}")
        for name in ("tol", "rel_tol", "profile_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("nodes", "profile_nodes"):
            n = getattr(self, name)
            if n is not None and n < 16:
                raise ConfigError(f"{name} must be at least 16")
        if self.max_iter < 1 or self.jobs < 1 or self.nodes_per_eps < 2:
            raise ConfigError("max_iter, jobs and nodes_per_eps must be positive")
        if self.mode not in ("blowup", "compactness"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.geometry not in (None, "radial", "interval"):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if len(self.bracket) != 2 or not all(b > 0 for b in self.bracket):
            raise ConfigError("bracket needs two positive multiples of a*")
        if not self.a_mult or not self.potential:
            raise ConfigError("need at least one coupling and one potential")
        self.potentials()

    def potentials(self) -> list:
        return [Potential.from_dict(p) for p in self.potential]

    def minimizer_options(self, **extra) -> MinimizerOptions:
        kw = dict(tol=self.tol, max_iter=self.max_iter, precondition=self.precondition,
                  divergence_floor=self.divergence_floor)
        kw.update(extra)
        return MinimizerOptions(**kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def parse_potential(text: str) -> dict:
    """``kind`` or ``kind:key=value,...``; ``custom-table:file=path`` reads an ``x,v`` CSV."""
    kind, _, rest = text.partition(":")
    if kind not in KINDS:
        raise ConfigError(f"unknown potential kind {kind!r}; expected one of {KINDS}")
    spec = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"bad potential parameter {item!r}")
        spec[key] = val if key == "file" else _number(val)
    if "file" in spec:
        xs, vs = _read_table(spec.pop("file"))
        spec.update(table_x=xs, table_v=vs)
    Potential.from_dict(spec)
    return spec


def _number(text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _read_table(path):
    xs, vs = [], []
    with open(path) as fh:
        for row in csv.reader(line for line in fh if not line.startswith("#")):
            if not row or not row[0].strip():
                continue
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except (ValueError, IndexError):
                continue
    return xs, vs


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("problem")
    g.add_argument("--config", help="JSON file with run settings; flags override it")
    g.add_argument("--dim", type=int)
    g.add_argument("--q", type=float, help="exponent (default q*)")
    g.add_argument("--a", type=float, help="absolute coupling; overrides --a-mult")
    g.add_argument("--a-mult", type=float, nargs="+", help="coupling as multiples of a*")
    g.add_argument("--potential", type=parse_potential, action="append",
                   help="e.g. zero, power:p=2, shifted-well:r0=1, custom-table:file=V.csv (repeatable)")
    g = common.add_argument_group("mesh and solver")
    g.add_argument("--geometry", choices=("radial", "interval"))
    g.add_argument("--nodes", type=int)
    g.add_argument("--r-max", type=float)
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--no-precondition", dest="precondition", action="store_false", default=None)
    g.add_argument("--divergence-floor", type=float)
    g.add_argument("--profile-nodes", type=int)
    g.add_argument("--out", help="output directory ($QUASIGROUND_OUT takes precedence)")
    g.add_argument("--jobs", type=int, help="worker processes over (a, V) combinations")
    g.add_argument("-v", "--verbose", action="store_true", default=None)

    p = _Parser(prog="quasiground", description="Normalized ground states of the quasilinear energy.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sub.add_parser("profile", parents=[common], help="free-boundary profile and its constants")
    sub.add_parser("constants", parents=[common], help="print the GN and threshold constants")
    sub.add_parser("minimize", parents=[common], help="constrained minimizer at fixed q")
    s = sub.add_parser("sweep", parents=[common], help="minimizers along q -> q*")
    s.add_argument("--mode", choices=("blowup", "compactness"))
    s.add_argument("--dq", type=float, nargs="+", help="values of q* - q")
    s.add_argument("--include-critical", action="store_true", default=None)
    s.add_argument("--nodes-per-eps", type=int)
    s = sub.add_parser("gap", parents=[common], help="energy gap with and without V")
    s.add_argument("--dq", type=float, nargs="+")
    s.add_argument("--nodes-per-eps", type=int)
    s = sub.add_parser("nonexist", parents=[common], help="trial-family energies above a*")
    s.add_argument("--taus", type=float, nargs="+")
    s = sub.add_parser("threshold", parents=[common], help="bisect the existence threshold at q*")
    s.add_argument("--bracket", type=float, nargs=2, help="bracket in multiples of a*")
    s.add_argument("--rel-tol", type=float)
    s.add_argument("--seed-tau", type=float)
    return p


def resolve_config(argv) -> tuple[RunConfig, bool]:
    """Parse flags, merge them over ``--config`` and the defaults."""
    args = vars(build_parser().parse_args(argv))
    verbose = bool(args.pop("verbose", None))
    path = args.pop("config", None)
    merged = {}
    if path:
        try:
            with open(path) as fh:
                merged = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(merged, dict):
            raise ConfigError("config file must hold a JSON object")
        merged.pop("subcommand", None)
        if isinstance(merged.get("potential"), dict):
            merged["potential"] = [merged["potential"]]
    merged.update({k: v for k, v in args.items() if v is not None})
    env = os.environ.get("QUASIGROUND_OUT")
    if env:
        merged["out"] = env
    return RunConfig.from_dict(merged), verbose


# ---------------------------------------------------------------- outputs

class Run:
    """Collects artifacts of one invocation and writes the manifest."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = cfg.out
        os.makedirs(self.out, exist_ok=True)
        self.files = []
        self.t0 = time.perf_counter()
        self.summary = {}

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out, name)

    def table(self, name, header, rows, comments=()):
        with open(self.path(name), "w", newline="") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(x) for x in row])

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def manifest(self, status="ok", error=None):
        doc = {
            "config": self.cfg.to_dict(),
            "status": status,
            "outputs": self.files,
            "summary": self.summary,
            "versions": versions(),
            "wall_clock_seconds": time.perf_counter() - self.t0,
        }
        if error is not None:
            doc["error"] = error
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
            fh.write("\n")


def versions() -> dict:
    import scipy
    return {"quasiground": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "kernels": kernels.BACKEND}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _qtag(q):
    return f"{q:.6g}".replace(".", "p")


# ---------------------------------------------------------------- helpers

def _critical(cfg):
    return solve_profile(ProblemParams(cfg.dim, critical_exponent(cfg.dim)), tol=cfg.profile_tol,
                         nodes=cfg.profile_nodes)


def _couplings(cfg, a_star):
    if cfg.a is not None:
        return [float(cfg.a)]
    return [m * a_star for m in cfg.a_mult]


def _label(a, a_star, V: Potential):
    parts = [V.kind] + [f"{k}{fmt(v)}" for k, v in V.to_dict().items()
                        if k != "kind" and not isinstance(v, list)]
    return f"a{fmt(a / a_star)}_" + "-".join(parts)


def _combos(cfg, a_star):
    return list(itertools.product(_couplings(cfg, a_star), cfg.potentials()))


def _map(cfg, fn, items):
    """Run ``fn`` over independent ``(a, V)`` combinations, in parallel when ``--jobs > 1``."""
    if cfg.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _mesh(cfg, V):
    nodes = cfg.nodes or 2048
    kind = cfg.geometry or ("interval" if cfg.dim == 1 and not V.is_zero else "radial")
    if kind == "interval" and cfg.dim != 1:
        raise ConfigError("interval geometry needs --dim 1")
    if cfg.r_max is not None:
        R = cfg.r_max
        return Geometry.radial(cfg.dim, R, nodes) if kind == "radial" else Geometry.interval(-R, R, nodes)
    g = default_geometry(cfg.dim, None if V.is_zero else V, nodes)
    if g.kind == kind:
        return g
    R = max(abs(g.lo), abs(g.hi))
    return Geometry.radial(cfg.dim, R, nodes) if kind == "radial" else Geometry.interval(-R, R, nodes)


# ---------------------------------------------------------------- subcommands

def cmd_constants(cfg, run, table_name="constants.csv"):
    N = cfg.dim
    q = cfg.q if cfg.q is not None else critical_exponent(N)
    p = ProblemParams(N, q)
    prof = solve_profile(p, tol=cfg.profile_tol, nodes=cfg.profile_nodes)
    crit = prof if p.is_critical else _critical(cfg)
    gn = gn_constants(p, prof.mass)
    a_star = existence_threshold(N, crit.mass)
    vals = {"N": N, "q": q, "q_star": p.q_star, "theta": gn.theta_q, "lambda_q": gn.lambda_q,
            "a_q": gn.a_q, "upsilon_q": gn.upsilon_q, "profile_mass": prof.mass,
            "profile_peak": prof.peak, "support_radius": prof.R, "a_star": a_star}
    a = cfg.a if cfg.a is not None else cfg.a_mult[0] * a_star
    if not p.is_critical:
        pa = p.with_a(a)
        vals["a"] = a
        vals["rescaled_coupling"] = rescaled_coupling(pa, gn)
        try:
            vals["t_q"] = blowup_level(pa, gn)
            vals["eps_q"] = blowup_scale(pa, gn)
            vals["d_formula"] = energy_asymptote(pa, gn, a_star)
        except InvalidRegime:
            pass
    run.table(table_name, ["name", "value"], vals.items())
    for k, v in vals.items():
        print(f"{k} = {fmt(v)}")
    run.summary.update(vals)
    return prof, vals


def cmd_profile(cfg, run):
    prof, vals = cmd_constants(cfg, run)
    pr = pohozaev_residuals(prof)
    gn = gn_constants(prof.params, prof.mass)
    vals.update(pohozaev_1=pr[0], pohozaev_2=pr[1], alpha=prof.alpha,
                boundary_slope=prof.boundary_residuals()[1], gn_ratio=gn_equality_ratio(prof, gn))
    name = f"profile_N{prof.N}_q{_qtag(prof.q)}.csv"
    prof.to_csv(run.path(name))
    run.json("constants.json", vals)
    run.summary.update(vals)
    print(f"wrote {name}")


def _minimize_one(item):
    cfg, a, V, a_star = item
    N = cfg.dim
    q = cfg.q if cfg.q is not None else critical_exponent(N)
    p = ProblemParams(N, q, a)
    g = _mesh(cfg, V)
    gn = None
    if not p.is_critical:
        gn = gn_constants(p.with_a(1.0), solve_profile(p, tol=cfg.profile_tol, nodes=cfg.profile_nodes).mass)
    center = V.argmin_point() if g.kind == "interval" else 0.0
    width = (g.hi if g.kind == "radial" else 0.5 * (g.hi - g.lo)) / 8.0
    init = gaussian(g, width, center)
    res = minimize(p, None if V.is_zero else V, init=init,
                   opts=cfg.minimizer_options(raise_on_cap=False), gn=gn, a_star=a_star)
    return res


def cmd_minimize(cfg, run):
    crit = _critical(cfg)
    a_star = existence_threshold(cfg.dim, crit.mass)
    combos = _combos(cfg, a_star)
    results = _map(cfg, _minimize_one, [(cfg, a, V, a_star) for a, V in combos])
    rows = []
    for (a, V), res in zip(combos, results):
        label = _label(a, a_star, V)
        res.u.to_csv(run.path(f"field_{label}.csv"))
        e = res.energy
        rows.append([label, a, res.status, e.total, e.kinetic, e.potential, e.quasilinear,
                     e.nonlinear, res.mu, res.grad_norm, res.iterations])
        print(f"{label}: {res.status} E={fmt(e.total)} mu={fmt(res.mu)} iterations={res.iterations}")
    run.table("minimize.csv", ["label", "a", "status", "energy", "kinetic", "potential", "quasilinear",
                               "nonlinear", "mu", "residual", "iterations"], rows,
              [f"N={cfg.dim} a_star={fmt(a_star)}"])
    run.summary["status"] = [r[2] for r in rows]


def _q_list(cfg):
    qs = default_q_list(cfg.dim, cfg.dq)
    qs = sorted(set(qs))
    if cfg.include_critical:
        qs.append(critical_exponent(cfg.dim))
    return qs


def _sweep_opts(cfg):
    kw = dict(nodes_per_eps=cfg.nodes_per_eps, compact_nodes=cfg.nodes or 2048,
              minimizer=cfg.minimizer_options(), profile_nodes=cfg.profile_nodes)
    return SweepOptions(**kw)


def _sweep_one(item):
    cfg, a, V, crit = item
    opts = _sweep_opts(cfg)
    if cfg.mode == "compactness" and (cfg.geometry or cfg.r_max is not None):
        opts = replace(opts, geometry=_mesh(cfg, V))
    try:
        return sweep(_q_list(cfg), ProblemParams(cfg.dim, critical_exponent(cfg.dim), a),
                     None if V.is_zero else V, opts, cfg.mode, crit), None
    except PartialSweep as exc:
        return exc.records, exc.to_record()


def cmd_sweep(cfg, run):
    crit = _critical(cfg)
    a_star = existence_threshold(cfg.dim, crit.mass)
    combos = _combos(cfg, a_star)
    outcomes = _map(cfg, _sweep_one, [(cfg, a, V, crit) for a, V in combos])
    errors = []
    for (a, V), (records, err) in zip(combos, outcomes):
        label = _label(a, a_star, V)
        run.table(f"sweep_{label}.csv", SweepRecord.columns(), [r.row() for r in records],
                  [f"mode={cfg.mode} N={cfg.dim} a={fmt(a)} a_star={fmt(a_star)}"])
        for r in records:
            if cfg.mode == "compactness":
                print(f"{label} q={fmt(r.q)} d={fmt(r.d_numeric)} potential_mass={fmt(r.potential_mass)}")
                continue
            print(f"{label} q={fmt(r.q)} d/d_formula={fmt(r.d_numeric / r.d_formula)} "
                  f"ratio_ql={fmt(r.ratio_quasilinear)} ratio_nl={fmt(r.ratio_nonlinear)} "
                  f"mu_scaled={fmt(r.mu_scaled)}")
        if err:
            errors.append(dict(err, label=label))
    if errors:
        raise PartialSweep(f"{len(errors)} sweep chain(s) failed: {errors}", q=errors[0].get("q"))


def _gap_one(item):
    cfg, a, V, crit = item
    return energy_gap(_q_list(cfg), ProblemParams(cfg.dim, critical_exponent(cfg.dim), a), V,
                      _sweep_opts(cfg), crit)


def cmd_gap(cfg, run):
    crit = _critical(cfg)
    a_star = existence_threshold(cfg.dim, crit.mass)
    combos = _combos(cfg, a_star)
    outcomes = _map(cfg, _gap_one, [(cfg, a, V, crit) for a, V in combos])
    header = ["q", "gap", "raw", "lower", "upper", "d_with_V", "d_without_V"]
    for (a, V), recs in zip(combos, outcomes):
        label = _label(a, a_star, V)
        run.table(f"gap_{label}.csv", header, [[getattr(r, h) for h in header] for r in recs],
                  [f"N={cfg.dim} a={fmt(a)}"])
        for r in recs:
            print(f"{label} q={fmt(r.q)} gap={fmt(r.gap)}")


def cmd_nonexist(cfg, run):
    crit = _critical(cfg)
    a_star = existence_threshold(cfg.dim, crit.mass)
    q = cfg.q if cfg.q is not None else critical_exponent(cfg.dim)
    rows = []
    for a, V in _combos(cfg, a_star):
        p = ProblemParams(cfg.dim, q, a, allow_supercritical=True)
        rep = nonexistence_probe(p, cfg.taus, crit, None if V.is_zero else V)
        label = _label(a, a_star, V)
        run.table(f"nonexist_{label}.csv", ["tau", "energy", "dominant"],
                  zip(rep.taus, rep.energies, rep.dominant), [f"mode={rep.mode} N={cfg.dim} q={fmt(q)}"])
        rows.append([label, rep.mode, rep.slope, rep.expected_slope, rep.coefficient,
                     rep.expected_coefficient, rep.energy_slope])
        print(f"{label}: slope={fmt(rep.slope)} (expected {fmt(rep.expected_slope)}) "
              f"coefficient={fmt(rep.coefficient)} (expected {fmt(rep.expected_coefficient)})")
    run.table("nonexist_fit.csv", ["label", "mode", "slope", "expected_slope", "coefficient",
                                   "expected_coefficient", "energy_slope"], rows)


def _threshold_one(item):
    cfg, V, crit, a_star = item
    opts = ThresholdOptions(rel_tol=cfg.rel_tol, seed_tau=cfg.seed_tau, R_max=cfg.r_max,
                            minimizer=cfg.minimizer_options(max_iter=min(cfg.max_iter, 20000)))
    trace = []
    a = threshold_bisect(cfg.dim, None if V.is_zero else V, [b * a_star for b in cfg.bracket],
                         opts, crit, trace)
    return a, trace


def cmd_threshold(cfg, run):
    crit = _critical(cfg)
    a_star = existence_threshold(cfg.dim, crit.mass)
    Vs = cfg.potentials()
    outcomes = _map(cfg, _threshold_one, [(cfg, V, crit, a_star) for V in Vs])
    rows = []
    for V, (a, trace) in zip(Vs, outcomes):
        label = _label(a_star, a_star, V).split("_", 1)[1]
        run.table(f"threshold_trace_{label}.csv", ["a", "a_over_a_star", "status"],
                  [(x, x / a_star, s) for x, s in trace])
        rows.append([label, a, a_star, a / a_star - 1.0])
        print(f"{label}: threshold={fmt(a)} a_star={fmt(a_star)} relative_error={fmt(a / a_star - 1.0)}")
    run.table("threshold.csv", ["potential", "threshold", "a_star", "relative_error"], rows)


COMMANDS = {"profile": cmd_profile, "constants": cmd_constants, "minimize": cmd_minimize,
            "sweep": cmd_sweep, "gap": cmd_gap, "nonexist": cmd_nonexist, "threshold": cmd_threshold}


def run(cfg: RunConfig) -> int:
    """Execute one subcommand; returns the process exit status."""
    r = Run(cfg)
    try:
        COMMANDS[cfg.subcommand](cfg, r)
    except QuasigroundError as exc:
        rec = exc.to_record()
        r.manifest("error", rec)
        _report(rec)
        return EXIT_CODES.get(exc.code, 1)
    except (ValueError, ArithmeticError, OSError) as exc:
        rec = {"error": type(exc).__name__, "message": str(exc)}
        r.manifest("error", rec)
        _report(rec)
        return 1
    r.manifest()
    return 0


def _report(rec):
    sys.stderr.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")


def main(argv=None) -> int:
    try:
        cfg, verbose = resolve_config(argv)
    except ConfigError as exc:
        _report(exc.to_record())
        return EXIT_CODES["usage"]
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

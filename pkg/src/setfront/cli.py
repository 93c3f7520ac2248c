"""Command-line entry point.

Each subcommand reads a JSON config, runs one pipeline and writes CSV/JSON
artifacts into ``--out``.  Exit codes::

    0  success
    1  config, argument or curve-spec error
    2  minimality certificate failed
    3  covering left the working window
    4  singular front (report still written)
    5  relaxation did not converge
    6  spectrum verdict is ContactAnomaly
    7  some persistence row did not converge (table still written)
    8  base scenario of a persistence family is not attracting
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import io
from .errors import (
    BaseNotAttracting,
    CertificateFailed,
    ConfigError,
    ContactDrift,
    NoStabilization,
    NonConvergent,
    NotInvariantLoop,
    SetFrontError,
    SingularFront,
    ValidationFailed,
    WindowEscape,
)
from .front import (
    TAU,
    circle_curve,
    detect_projection_singularities,
    ellipse_curve,
    equidistant_front,
    lift_circle,
    lift_closed_curve,
    propagate_loop,
    relax_to_invariant_loop,
)
from .geometry import LegendrianLoop
from .hyperbolicity import classify, estimate_spectrum
from .persistence import default_initial_loop, run_persistence_experiment
from .setvalued import Grid, minimal_invariant_set
from .systems import family_from_dict, scenario_from_dict, validate_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERTIFICATE = 2
EXIT_ESCAPE = 3
EXIT_SINGULAR = 4
EXIT_NONCONVERGENT = 5
EXIT_ANOMALY = 6
EXIT_ROW_NONCONVERGENT = 7
EXIT_BASE = 8

DEFAULT_TOLERANCES = {
    "relax": 1e-6,
    "tau": TAU,
    "gap": 0.05,
    "invariance": 1e-4,
}


@dataclass
class RunConfig:
    scenario: object
    grid: Optional[Grid]
    h_front: float
    tolerances: dict
    output_dir: Path
    seed: int = 0
    curve: Optional[dict] = None
    base_dir: Path = Path(".")
    extra: dict = field(default_factory=dict)


def _scenario_doc(doc):
    if "scenario" in doc:
        return doc["scenario"]
    if "map" in doc:
        return doc
    return None


def parse_config(doc, output_dir=".", seed=None, base_dir="."):
    """Build a :class:`RunConfig` from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    sdoc = _scenario_doc(doc)
    scenario = scenario_from_dict(sdoc) if sdoc is not None else None
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(doc.get("tolerances", {}))
    try:
        tol = {k: float(v) for k, v in tol.items()}
        h_front = float(doc.get("h_front", 0.005))
        grid = None
        if scenario is not None:
            gdoc = doc.get("grid", {})
            h = float(gdoc.get("h", 0.01))
            lo = gdoc.get("lo", scenario.window[0])
            hi = gdoc.get("hi", scenario.window[1])
            grid = Grid(lo, hi, h)
        cfg_seed = int(doc.get("seed", 0)) if seed is None else int(seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if h_front <= 0 or any(v <= 0 for v in tol.values()):
        raise ConfigError("h_front and all tolerances must be positive")
    return RunConfig(
        scenario, grid, h_front, tol, Path(output_dir), cfg_seed,
        doc.get("curve"), Path(base_dir), doc,
    )


def load_config(path, output_dir=".", seed=None):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(doc, output_dir, seed, path.parent)


def _require_scenario(cfg):
    if cfg.scenario is None:
        raise ConfigError("config has no scenario")
    return cfg.scenario


# -- curves --------------------------------------------------------------------


def curve_from_spec(spec, base_dir="."):
    """``{"kind": "circle", "center", "radius"}``, ``{"kind": "ellipse", "a",
    "b"}`` or ``{"csv": path}`` (an ``i,x,y`` file)."""
    if not spec:
        raise ConfigError("missing curve spec")
    try:
        if "csv" in spec:
            p = Path(spec["csv"])
            return io.read_curve_csv(p if p.is_absolute() else Path(base_dir) / p)
        kind = spec.get("kind")
        center = spec.get("center", (0.0, 0.0))
        if kind == "circle":
            return circle_curve(center, float(spec["radius"]), int(spec.get("n", 720)))
        if kind == "ellipse":
            return ellipse_curve(float(spec["a"]), float(spec["b"]), int(spec.get("n", 2000)),
                                 center)
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"bad curve spec: {exc}") from None
    raise ConfigError(f"unknown curve kind {spec.get('kind')!r}")


def initial_loop(cfg):
    """Lifted initial curve; a circle is lifted exactly.  An optional
    ``offset`` moves the lift along its normals without resampling."""
    spec = cfg.curve
    if spec is None:
        return default_initial_loop(_require_scenario(cfg), cfg.h_front)
    if spec.get("kind") == "circle" and "csv" not in spec:
        try:
            l = lift_circle(spec.get("center", (0.0, 0.0)), float(spec["radius"]), cfg.h_front)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad curve spec: {exc}") from None
    else:
        l = lift_closed_curve(curve_from_spec(spec, cfg.base_dir), cfg.h_front)
    offset = float(spec.get("offset", 0.0))
    if offset:
        l = LegendrianLoop(l.x + offset * l.n, l.n, l.h_front)
    return l


# -- subcommands -----------------------------------------------------------------


def cmd_minimal_set(cfg, n_seeds=None):
    s = _require_scenario(cfg)
    validate_scenario(s)
    out = cfg.output_dir
    n = int(n_seeds or cfg.extra.get("n_seeds", 20))
    try:
        M, cert = minimal_invariant_set(s, cfg.grid, n_seeds=n, seed=cfg.seed)
    except CertificateFailed as exc:
        io.write_boxset_csv(out / "boxset.csv", exc.covering)
        io.write_certificate_json(out / "certificate.json", exc.certificate)
        raise
    io.write_boxset_csv(out / "boxset.csv", M)
    io.write_certificate_json(out / "certificate.json", cert)
    return EXIT_OK


def _write_singularity(path, report, extra=None):
    doc = report.to_dict()
    doc.update(extra or {})
    io.write_json(path, doc)


def cmd_boundary_flow(cfg, steps=None, relax=False):
    s = _require_scenario(cfg)
    out = cfg.output_dir
    tau = cfg.tolerances["tau"]
    l = initial_loop(cfg)
    io.write_loop_csv(out / "loop_0000.csv", l)
    try:
        if relax:
            l = relax_to_invariant_loop(l, s, cfg.tolerances["relax"],
                                        int(cfg.extra.get("max_iter", 200)), tau)
            io.write_loop_csv(out / "loop_final.csv", l)
        else:
            k_steps = int(steps if steps is not None else cfg.extra.get("steps", 1))
            for k in range(1, k_steps + 1):
                l = propagate_loop(l, s, 1, tau)
                io.write_loop_csv(out / f"loop_{k:04d}.csv", l)
    except SingularFront as exc:
        _write_singularity(out / "singularity.json", exc.report, {"status": "singular"})
        raise
    except NonConvergent as exc:
        if exc.loop is not None:
            io.write_loop_csv(out / "loop_last.csv", exc.loop)
        raise
    _write_singularity(out / "singularity.json", detect_projection_singularities(l, tau),
                       {"status": "ok", "vertices": len(l)})
    return EXIT_OK


def cmd_spectrum(cfg, report_hook=None):
    """``report_hook(report) -> report`` lets tests substitute the estimate."""
    s = _require_scenario(cfg)
    loop = relax_to_invariant_loop(initial_loop(cfg), s, cfg.tolerances["relax"],
                                   int(cfg.extra.get("max_iter", 200)), cfg.tolerances["tau"])
    report = estimate_spectrum(
        loop, s,
        n_orbits=int(cfg.extra.get("n_orbits", 4)),
        n_iter=int(cfg.extra.get("n_iter", 60)),
        seed=cfg.seed,
        invariance_tol=cfg.tolerances["invariance"],
    )
    if report_hook is not None:
        report = report_hook(report)
    c = classify(report, cfg.tolerances["gap"])
    io.write_spectrum_json(cfg.output_dir / "spectrum.json", report, c)
    return EXIT_ANOMALY if c.verdict == "ContactAnomaly" else EXIT_OK


def cmd_persist(cfg, family=None, deltas=None):
    s = _require_scenario(cfg)
    fdoc = family if family is not None else cfg.extra.get("family")
    if fdoc is None:
        raise ConfigError("no perturbation family given")
    ds = deltas if deltas is not None else cfg.extra.get("deltas")
    if not ds:
        raise ConfigError("no deltas given")
    try:
        ds = [float(d) for d in ds]
    except (TypeError, ValueError):
        raise ConfigError(f"bad deltas {ds!r}") from None
    if any(d < 0 for d in ds):
        raise ConfigError("deltas must be non-negative")
    fam = family_from_dict(s, fdoc)
    base = initial_loop(cfg) if cfg.curve is not None else None
    table = run_persistence_experiment(
        fam, ds, tol=cfg.tolerances["relax"], h_front=cfg.h_front, base_loop=base,
        max_iter=int(cfg.extra.get("max_iter", 400)),
    )
    io.write_persistence_csv(cfg.output_dir / "persistence.csv", table)
    return EXIT_OK if all(r.converged for r in table.rows) else EXIT_ROW_NONCONVERGENT


def cmd_equidistant(cfg, offset=None):
    c = curve_from_spec(cfg.curve, cfg.base_dir)
    off = offset if offset is not None else cfg.extra.get("offset")
    if off is None:
        raise ConfigError("no offset given")
    front, report = equidistant_front(c, float(off), cfg.h_front, cfg.tolerances["tau"])
    io.write_curve_csv(cfg.output_dir / "equidistant.csv", front)
    _write_singularity(cfg.output_dir / "singularity.json", report,
                       {"offset": float(off), "simple": front.is_simple})
    return EXIT_SINGULAR if report.singular else EXIT_OK


# -- argument parsing ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _family_arg(text):
    return {"kind": text}


def _deltas_arg(text):
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser():
    p = _Parser(prog="setfront", description="Minimal invariant sets of bounded-noise maps.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        return sp

    sp = common(sub.add_parser("minimal-set", help="box covering + minimality certificate"))
    sp.add_argument("--n-seeds", type=int, default=None)
    sp = common(sub.add_parser("boundary-flow", help="propagate a front by the boundary map"))
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--steps", type=int, default=None)
    g.add_argument("--relax", action="store_true")
    common(sub.add_parser("spectrum", help="normal/tangential exponents of the invariant loop"))
    sp = common(sub.add_parser("persist", help="persistence table over a perturbation family"))
    sp.add_argument("--family", type=_family_arg, default=None,
                    help="epsilon, shear or contraction")
    sp.add_argument("--deltas", type=_deltas_arg, default=None, help="comma-separated")
    sp = common(sub.add_parser("equidistant", help="signed normal equidistant of a curve"))
    sp.add_argument("--offset", type=float, default=None)
    return p


def _dispatch(args, cfg):
    if args.command == "minimal-set":
        return cmd_minimal_set(cfg, args.n_seeds)
    if args.command == "boundary-flow":
        return cmd_boundary_flow(cfg, args.steps, args.relax)
    if args.command == "spectrum":
        return cmd_spectrum(cfg)
    if args.command == "persist":
        return cmd_persist(cfg, args.family, args.deltas)
    return cmd_equidistant(cfg, args.offset)


# exception -> exit code, most specific first
_EXIT_MAP = (
    (CertificateFailed, EXIT_CERTIFICATE),
    (NoStabilization, EXIT_CERTIFICATE),
    (WindowEscape, EXIT_ESCAPE),
    (SingularFront, EXIT_SINGULAR),
    (NonConvergent, EXIT_NONCONVERGENT),
    (ContactDrift, EXIT_NONCONVERGENT),
    (NotInvariantLoop, EXIT_NONCONVERGENT),
    (BaseNotAttracting, EXIT_BASE),
    (ConfigError, EXIT_CONFIG),
    (ValidationFailed, EXIT_CONFIG),
)


def exit_code_for(exc):
    for cls, code in _EXIT_MAP:
        if isinstance(exc, cls):
            return code
    return EXIT_CONFIG


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.seed)
        code = _dispatch(args, cfg)
    except SetFrontError as exc:
        code = exit_code_for(exc)
        print(f"setfront {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    except ValueError as exc:
        print(f"setfront {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())

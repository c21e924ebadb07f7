"""Command-line front end.

Every command writes ``<out>/<command>-<confighash>.json`` (and a ``.csv``
table where one exists).  Exit codes: 0 success, 1 other package errors,
2 an eigensolver did not converge, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .certify import CertifySettings, certify_pipeline
from .config import RunConfig, load_config, set_path, version_string
from .crosssec import CrossSection, build_grid, estimate_lemma_constants, mu_pencil, solve_transverse
from .effective import (Effective1D, alpha0_search, discrete_condition, neumann_box_eigen,
                        neumann_box_limit, solve_effective)
from .errors import ConfigError, NotConverged, TwistlabError
from .profiles import TwistProfile
from .speclin import smallest_eigenpairs
from .tube import (TubeDiscretization, assemble, estimate_hardy_constant, lowest_mode,
                   neumann_interface_check, sweep_alpha)

log = logging.getLogger("twistlab")

COMMANDS = ("cross-section", "sweep", "hardy-estimate", "certify", "effective", "bracketing",
            "neumann-check", "oracle")

# flag -> (config path, type)
OVERRIDES = {
    "beta": ("profile.beta", float),
    "alpha": ("profile.alpha", float),
    "kind": ("profile.kind", str),
    "support": ("profile.support", float),
    "L": ("tube.L", float),
    "h1": ("tube.h1", float),
    "h": ("cross_section.h", float),
    "shape": ("cross_section.shape", str),
    "width": ("cross_section.width", float),
    "height": ("cross_section.height", float),
    "radius": ("cross_section.radius", float),
    "r_inner": ("cross_section.r_inner", float),
    "r_outer": ("cross_section.r_outer", float),
    "sign": ("bracketing.sign", int),
    "n": ("neumann.n", float),
    "delta": ("neumann.delta", float),
    "c0": ("certify.c0", float),
}


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 3), not solver failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "config", "type": "UsageError", "message": message,
                          "exit_code": 3}), file=sys.stderr)
        raise SystemExit(3)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run control")
    g.add_argument("--config", help="JSON configuration file")
    g.add_argument("--threads", type=int, help="worker threads (default 1)")
    g.add_argument("--out", default="out", help="output directory (default: out)")
    g.add_argument("--seed", type=int, help="seed for the initial eigensolver block")
    g.add_argument("--dense-oracle", action="store_true", help="force dense eigensolves")
    g.add_argument("--tol", type=float, help="eigensolver tolerance")
    g.add_argument("-v", "--verbose", action="store_true")
    p = common.add_argument_group("parameters")
    for name, (path, typ) in OVERRIDES.items():
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, type=typ, help=f"override {path}")
    p.add_argument("--offset", nargs=2, type=float, metavar=("X2", "X3"))
    p.add_argument("--interface", action="store_true", help="cut the tube at x1 = 0")
    p.add_argument("--alphas", type=_float_list, help="comma-separated couplings")
    p.add_argument("--L-list", dest="L_list", type=_float_list, help="comma-separated half-lengths")

    parser = _Parser(prog="twistlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "cross-section": "threshold lambda1, E1, C_omega and a for a cross-section",
        "sweep": "lowest tube eigenvalue against the coupling alpha",
        "hardy-estimate": "numerical Hardy constants along an L ladder",
        "certify": "sufficient-condition Hardy certificate",
        "effective": "effective 1D model and the discrete-spectrum condition",
        "bracketing": "Neumann boxes and the alpha0 threshold",
        "neumann-check": "spectrum of the tube cut at x1 = 0",
        "oracle": "dense cross-checks of the iterative solvers",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else load_config(data={})
    for name, (path, _) in OVERRIDES.items():
        value = getattr(args, name, None)
        if value is not None:
            set_path(cfg, path, value)
    if args.offset is not None:
        cfg.cross_section.offset = list(args.offset)
    if args.interface:
        cfg.tube.interface = True
    if args.alphas is not None:
        cfg.sweep.alphas = args.alphas
        cfg.effective.alphas = args.alphas
        cfg.bracketing.alphas = args.alphas
    if args.L_list is not None:
        cfg.hardy.L_list = args.L_list
    if args.threads is not None:
        cfg.solver.threads = args.threads
    if args.seed is not None:
        cfg.solver.seed = args.seed
    if args.tol is not None:
        cfg.solver.tol = args.tol
    if args.dense_oracle:
        cfg.solver.dense_oracle = True
    from .config import validate
    validate(cfg)
    return cfg


# output ---------------------------------------------------------------------------


class Output:
    def __init__(self, command: str, cfg: RunConfig, out_dir):
        self.command = command
        self.cfg = cfg
        self.hash = cfg.config_hash()
        self.version = version_string()
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.stem = self.dir / f"{command}-{self.hash}"

    @property
    def tag(self) -> str:
        return f"version={self.version} config_hash={self.hash}"

    def csv(self, header, rows) -> Path:
        path = self.stem.with_suffix(".csv")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# {self.tag}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        return path

    def json(self, results: dict) -> Path:
        path = self.stem.with_suffix(".json")
        doc = {"command": self.command, "version": self.version, "config_hash": self.hash,
               "config": self.cfg.to_dict(), "results": results}
        path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n")
        return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_clean(v) for v in o.tolist()]
    if isinstance(o, np.generic):
        o = o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None if math.isnan(o) else ("inf" if o > 0 else "-inf")
    return o


# commands -------------------------------------------------------------------------------


def _profile(cfg: RunConfig, alpha=None) -> TwistProfile:
    p = cfg.profile
    samples = tuple(p.samples) if p.samples else None
    return TwistProfile(p.beta, p.alpha if alpha is None else alpha, p.kind, p.support, samples)


def _method(cfg: RunConfig) -> str:
    return "dense" if cfg.solver.dense_oracle else cfg.solver.method


def cmd_cross_section(cfg, out: Output) -> int:
    cs = cfg.cross_section.build()
    grid = build_grid(cs, cfg.cross_section.h)
    gs = solve_transverse(grid, cfg.profile.beta, tol=min(cfg.solver.tol, 1e-10), method=_method(cfg))
    lemma = estimate_lemma_constants(grid, gs.chi, gs.lambda1, gs.beta, cfg.certify.c0)
    res = {"shape": cs.label(), "h": grid.h, "nodes": grid.m, "grid": grid.kind,
           "beta": gs.beta, "lambda1": gs.lambda1, "E1": gs.E1, "C_omega": gs.C_omega, "a": gs.a,
           "rotationally_symmetric": cs.rotationally_symmetric, "lemma": lemma.to_dict()}
    out.csv(["x2", "x3", "chi"], zip(grid.x2, grid.x3, gs.chi))
    out.json(res)
    print(f"{cs.label()}  h={grid.h:g}  nodes={grid.m}")
    print(f"lambda1 = {gs.lambda1:.12g}  E1 = {gs.E1:.12g}  C_omega = {gs.C_omega:.6g}  a = {gs.a:.6g}")
    return 0


def _disc(cfg, cs=None, interface=None) -> TubeDiscretization:
    cs = cfg.cross_section.build() if cs is None else cs
    grid = build_grid(cs, cfg.cross_section.h)
    inter = cfg.tube.interface if interface is None else interface
    return TubeDiscretization(cfg.tube.L, cfg.tube.h1, grid, inter)


def cmd_sweep(cfg, out: Output) -> int:
    disc = _disc(cfg)
    p = cfg.profile
    table = sweep_alpha(disc, p.beta, p.kind, cfg.sweep.values(), tol=cfg.solver.tol,
                        threads=cfg.solver.threads, support=p.support)
    out.csv(["alpha", "e0", "gap", "converged", "iterations"],
            [(r.alpha, r.e0, r.gap, r.converged, r.iterations) for r in table.rows])
    res = {"lambda1_h": table.lambda1_h, "crossings": table.crossings,
           "alpha_star": table.alpha_star, "n_unknowns": disc.cross.m * (disc.n_intervals - 1),
           "failed": [r.alpha for r in table.rows if not r.converged]}
    out.json(res)
    print(f"lambda1_h = {table.lambda1_h:.12g}")
    for a, direction in table.crossings:
        print(f"crossing ({direction}) at alpha = {a:.4f}")
    print(f"alpha* = {table.alpha_star:.4f}")
    return 2 if res["failed"] else 0


def cmd_hardy(cfg, out: Output) -> int:
    rows = []
    prof = _profile(cfg)
    cs = cfg.cross_section.build()
    grid = build_grid(cs, cfg.cross_section.h)
    ground = solve_transverse(grid, prof.beta)
    for L in cfg.hardy.L_list:
        t = assemble(TubeDiscretization(L, cfg.tube.h1, grid), prof, ground=ground)
        est = estimate_hardy_constant(t, cfg.solver.tol, cfg.hardy.shift)
        rows.append((L, est.c_num, est.raw, est.shift, est.converged))
        print(f"L = {L:g}: c_num = {est.c_num:.8g}")
    out.csv(["L", "c_num", "raw", "shift", "converged"], rows)
    out.json({"lambda1_h": ground.lambda1, "rows": rows})
    return 0 if all(r[-1] for r in rows) else 2


def cmd_certify(cfg, out: Output) -> int:
    c = cfg.certify
    p = cfg.profile
    settings = CertifySettings(cfg.cross_section.build(), c.h, p.beta, p.kind, p.alpha, p.support,
                               tuple(p.samples) if p.samples else None,
                               tuple(c.interval) if c.interval else None, c.x1_0, c.c0,
                               c.epsilon0, c.nu_samples)
    cert = certify_pipeline(settings)
    out.json(cert.to_dict())
    print(cert.report())
    return 0


def _c_omega(cfg) -> float:
    if cfg.effective.C_omega is not None:
        return cfg.effective.C_omega
    grid = build_grid(cfg.cross_section.build(), cfg.cross_section.h)
    return solve_transverse(grid, 0.0).C_omega


def cmd_effective(cfg, out: Output) -> int:
    p = cfg.profile
    C = _c_omega(cfg)
    eff = Effective1D(C, p.beta, p.kind, p.support, tuple(p.samples) if p.samples else None,
                      cfg.effective.L1, cfg.effective.spacing)
    alphas = cfg.effective.alphas or [p.alpha]
    m1, m2 = _profile(cfg).moments()
    rows = []
    for a in alphas:
        cond = discrete_condition(p.beta, a, _profile(cfg, a))
        rows.append((a, cond, solve_effective(eff, a).value))
        print(f"alpha = {a:g}: discrete condition = {cond:.10g}, ground energy = {rows[-1][2]:.10g}")
    out.csv(["alpha", "discrete_condition", "ground_energy"], rows)
    out.json({"C_omega": C, "polynomial": {"alpha^2": m2, "alpha": 2 * p.beta * m1}, "rows": rows})
    return 0


def cmd_bracketing(cfg, out: Output) -> int:
    b = cfg.bracketing
    a, ai, bi, bb = b.box
    rows = [(al, neumann_box_eigen(a, ai, bi, bb, al, b.spacing)) for al in b.alphas]
    limit = neumann_box_limit(a, ai, bi, bb)
    p = cfg.profile
    eff = Effective1D(_c_omega(cfg), p.beta, p.kind, p.support,
                      tuple(p.samples) if p.samples else None, cfg.effective.L1,
                      cfg.effective.spacing)
    res = alpha0_search(eff, sign=b.sign, eta=b.eta)
    out.csv(["alpha", "box_eigenvalue"], rows)
    out.json({"box": b.box, "limit": limit, "rows": rows, "alpha0": res.to_dict()})
    for al, val in rows:
        print(f"alpha = {al:g}: lowest Neumann box eigenvalue = {val:.8g}")
    print(f"infinite-barrier limit = {limit:.8g}")
    print(f"alpha0 = {res.alpha0:.6g} (couplings of sign {b.sign:+d}; checked: {res.validated})")
    return 0


def cmd_neumann(cfg, out: Output) -> int:
    base = cfg.cross_section.build()
    cs = CrossSection(base.shape, base.width, base.height, base.radius, base.r_inner,
                      base.r_outer, tuple(cfg.neumann.offset))
    disc = _disc(cfg, cs, interface=True)
    res = neumann_interface_check(disc, cfg.profile.beta, cfg.neumann.n, cfg.neumann.delta,
                                  cfg.solver.tol)
    out.json(res.to_dict())
    print(f"inf spectrum with cut = {res.e0_N:.10g}, lambda1_h = {res.lambda1_h:.10g}, "
          f"drop = {res.drop:.4g}")
    print(f"test function: Q = {res.Q_test:.6g} (delta = {res.delta:.4g}), mixed term = "
          f"{res.mixed:.6g} vs {res.mixed_target:.6g}")
    return 0 if res.converged else 2


def cmd_oracle(cfg, out: Output) -> int:
    rows = []
    tol = cfg.solver.tol
    cs = cfg.cross_section.build()
    beta = cfg.profile.beta
    h = max(cfg.cross_section.h, 1.0 / 32)
    grid = build_grid(cs, h)
    A = grid.transverse_operator(beta)
    M = grid.mass()
    if grid.m <= 2000:
        it = smallest_eigenpairs(A, M, 1, tol, method="auto", seed=cfg.solver.seed)
        dn = smallest_eigenpairs(A, M, 1, tol, method="dense")
        rows.append(("transverse", grid.m, it.value, dn.value))
        gs = solve_transverse(grid, beta)
        K, Mw = mu_pencil(grid, gs.chi, 0.3)
        it = smallest_eigenpairs(K, Mw, 1, tol, method="auto", seed=cfg.solver.seed)
        dn = smallest_eigenpairs(K, Mw, 1, tol, method="dense")
        rows.append(("mu(0.3)", grid.m, it.value, dn.value))
    small = build_grid(cs, 1.0 / 8)
    t = assemble(TubeDiscretization(2.0, 0.25, small), _profile(cfg))
    if t.n <= 2000:
        it = lowest_mode(t, 1, tol, seed=cfg.solver.seed)
        dn = smallest_eigenpairs(t.A, t.M, 1, tol, method="dense")
        rows.append(("tube", t.n, it.value, dn.value))
    table = [(name, n, a, b, abs(a - b) / max(abs(b), 1e-300)) for name, n, a, b in rows]
    out.csv(["problem", "n", "iterative", "dense", "rel_diff"], table)
    out.json({"rows": table})
    worst = 0.0
    for name, n, a, b, rel in table:
        worst = max(worst, rel)
        print(f"{name:12s} n={n:5d} iterative={a:.14g} dense={b:.14g} rel={rel:.2e}")
    return 0 if worst <= 1e-8 else 2


HANDLERS = {
    "cross-section": cmd_cross_section,
    "sweep": cmd_sweep,
    "hardy-estimate": cmd_hardy,
    "certify": cmd_certify,
    "effective": cmd_effective,
    "bracketing": cmd_bracketing,
    "neumann-check": cmd_neumann,
    "oracle": cmd_oracle,
}


def _diagnose(kind: str, exc: Exception, code: int) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc),
                      "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        return _diagnose("config", exc, 3)
    out = Output(args.command, cfg, args.out)
    try:
        return HANDLERS[args.command](cfg, out)
    except NotConverged as exc:
        return _diagnose("not_converged", exc, 2)
    except (ConfigError, ValueError) as exc:
        return _diagnose("config", exc, 3)
    except TwistlabError as exc:
        return _diagnose("failure", exc, 1)


if __name__ == "__main__":
    sys.exit(main())

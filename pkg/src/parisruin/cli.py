"""Command-line entry point ``parisruin``.

Every subcommand writes a table (CSV by default, ``--format json`` for JSON)
to standard output or ``--out``. Values come from ``--config`` first and are
then overridden by explicit flags. Exit status is 0 on success, 1 when a
check fails or a numerical routine raises, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import replace
from itertools import product

from . import __version__
from .compare import COLUMNS, TARGETS, compare, make_kernel, metadata, rows_to_csv, rows_to_json
from .config import NumericBlock, QueryBlock, RunConfig, load_config
from .errors import ParisRuinError
from .mc_oracle import Estimand, SimConfig, simulate_cl_exact, simulate_diffusive
from .parisian import (
    ParisianQuery,
    exit_laplace,
    joint_laplace,
    joint_laplace_inf_b,
    potential_density_full,
    potential_density_pos,
    potential_laplace,
    potential_laplace_inf_b,
    ruin_probability,
)
from .selftest import run_all
from .valuation import ExpMixture, ValuationSpec, value


def _num_list(text: str):
    return [_num(t) for t in text.split(",")] if "," in text else [_num(text)]


def _num(text):
    t = str(text).strip().lower()
    if t in ("inf", "infinity"):
        return math.inf
    if t == "phi":
        return "phi"
    return float(t)


def _mixture(text: str | None) -> ExpMixture | None:
    """Parse ``"w:lam,w:lam"``."""
    if text is None:
        return None
    terms = []
    for part in text.split(","):
        w, _, lam = part.partition(":")
        terms.append((float(w), float(lam or 0.0)))
    return ExpMixture(tuple(terms))


def _common(p: argparse.ArgumentParser, query=True):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--model", help="model preset (cl-default, bm-default)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="write the table here instead of standard output")
    if query:
        for name in ("x", "b", "q", "lam", "r"):
            p.add_argument(f"--{name}", nargs="+", type=_num)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parisruin", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("psi", help="Laplace exponent psi(lam)")
    _common(p)
    p = sub.add_parser("phi", help="right inverse Phi(q)")
    _common(p)
    p = sub.add_parser("scale", help="scale function W^(q)(x)")
    _common(p)
    p.add_argument("--tilted", action="store_true", help="report exp(-Phi(q) x) W^(q)(x)")
    p.add_argument("--method", help="scale-function method")
    p = sub.add_parser("lambda-kernel", help="Lambda^(q)(x, r) and companions")
    _common(p)

    p = sub.add_parser("parisian", help="Parisian ruin identities")
    psub = p.add_subparsers(dest="identity", required=True)
    for name in ("joint", "exit", "potential", "density", "ruin-prob"):
        pp = psub.add_parser(name)
        _common(pp)
        if name == "density":
            pp.add_argument("--y", nargs="+", type=float, required=False)
            pp.add_argument("--full", action="store_true",
                            help="density on the whole line (exp(q r)-weighted)")

    p = sub.add_parser("value", help="expected discounted payoff")
    _common(p)
    p.add_argument("--g", help="running payoff as 'w:lam,w:lam'")
    p.add_argument("--f-below", help="penalty at Parisian ruin as 'w:lam,...'")
    p.add_argument("--f-at-b", type=float, default=0.0, help="payoff at first passage above b")

    p = sub.add_parser("simulate", help="Monte Carlo estimates")
    _common(p)
    p.add_argument("--estimand", nargs="+", default=["ruin"],
                   help="ruin | exit:q | ruin_laplace:q:lam | potential:q:lam | occupation:q:lo:hi")
    _sim_flags(p)

    p = sub.add_parser("compare", help="formula versus Monte Carlo on a grid")
    p.add_argument("targets", nargs="+", choices=TARGETS + ("all",))
    p.add_argument("--grid", choices=("standard", "config"), default="standard")
    _common(p, query=False)
    _sim_flags(p)

    p = sub.add_parser("selftest", help="invariant checks without simulation")
    _common(p, query=False)
    return ap


def _sim_flags(p):
    p.add_argument("--n-paths", type=lambda s: int(float(s)))
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--dt", type=float)


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.model:
        cfg = replace(cfg, model=type(cfg.model).from_dict({"preset": args.model}))
    if getattr(args, "format", None):
        cfg = replace(cfg, output=replace(cfg.output, format=args.format))
    if getattr(args, "out", None):
        cfg = replace(cfg, output=replace(cfg.output, path=args.out))
    qd = cfg.query.to_dict()
    touched = False
    for name in ("x", "b", "q", "lam", "r"):
        v = getattr(args, name, None)
        if v is not None:
            qd[name] = ["inf" if isinstance(e, float) and math.isinf(e) else e for e in v]
            touched = True
    if getattr(args, "y", None):
        qd["y"] = args.y
        touched = True
    if touched:
        cfg = replace(cfg, query=QueryBlock.from_dict(qd))
    sd = cfg.sim.to_dict()
    for name in ("n_paths", "seed", "horizon"):
        v = getattr(args, name, None)
        if v is not None:
            sd[name] = v
    cfg = replace(cfg, sim=type(cfg.sim).from_dict(sd))
    if getattr(args, "dt", None) is not None:
        cfg = replace(cfg, numeric=replace(cfg.numeric, dt=args.dt))
    return cfg


def _emit(rows, columns, meta, cfg: RunConfig):
    if cfg.output.format == "json":
        text = rows_to_json(rows, meta, columns)
    else:
        text = rows_to_csv(rows, meta, columns)
    if cfg.output.path:
        with open(cfg.output.path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _queries(model, qb: QueryBlock, need_b=True):
    for x, b, q, lam, r in product(qb.x, qb.b, qb.q, qb.lam, qb.r):
        lam_v = model.phi(q) if lam == "phi" else lam
        yield ParisianQuery(x, b, q, lam_v, r)


def _cmd_psi(cfg, model, args):
    rows = [{"lam": lam, "psi": float(model.psi(lam))} for lam in cfg.query.lam if lam != "phi"]
    return rows, ("lam", "psi")


def _cmd_phi(cfg, model, args):
    rows = [{"q": q, "phi": model.phi(q, root_tol=cfg.numeric.root_tol)} for q in cfg.query.q]
    return rows, ("q", "phi")


def _cmd_scale(cfg, model, args):
    from .scale_fn import ScaleFunction

    rows = []
    for q in cfg.query.q:
        sf = ScaleFunction(model, q, method=args.method, talbot_nodes=cfg.numeric.talbot_nodes,
                           euler_nodes=cfg.numeric.euler_nodes, root_tol=cfg.numeric.root_tol)
        for x in cfg.query.x:
            val = float(sf.w_tilted(x)) if args.tilted else float(sf.w(x))
            rows.append({"q": q, "x": x, "method": sf.method, "value": val})
    return rows, ("q", "x", "method", "value")


def _cmd_lambda(cfg, model, args):
    rows = []
    for q in cfg.query.q:
        k = make_kernel(model, q, cfg.numeric)
        for x, r in product(cfg.query.x, cfg.query.r):
            lam_vals = [k.phi_q if v == "phi" else v for v in cfg.query.lam]
            for lam in lam_vals:
                rows.append({"q": q, "x": x, "r": r, "lam": lam, "lambda": k.lambda_q(x, r),
                             "exp_moment": k.lambda_exp_moment(r),
                             "time_integral": k.lambda_time_integral(x, r, lam)})
    return rows, ("q", "x", "r", "lam", "lambda", "exp_moment", "time_integral")


def _cmd_parisian(cfg, model, args):
    ident = args.identity
    rows = []
    kernels = {}

    def kern(q):
        if q not in kernels:
            kernels[q] = make_kernel(model, q, cfg.numeric)
        return kernels[q]

    if ident == "ruin-prob":
        k = kern(0.0)
        for x, r in product(cfg.query.x, cfg.query.r):
            rows.append({"x": x, "r": r, "value": ruin_probability(k, x, r)})
        return rows, ("x", "r", "value")
    cols = ("x", "b", "q", "lam", "r", "value")
    for qy in _queries(model, cfg.query):
        k = kern(qy.q)
        base = {"x": qy.x, "b": qy.b, "q": qy.q, "lam": qy.lam, "r": qy.r}
        if ident == "joint":
            v = joint_laplace(k, qy) if qy.finite_b else joint_laplace_inf_b(k, qy)
        elif ident == "exit":
            v = exit_laplace(k, qy)
        elif ident == "potential":
            v = potential_laplace(k, qy) if qy.finite_b else potential_laplace_inf_b(k, qy)
        else:
            ys = cfg.query.y or (0.5,)
            for y in ys:
                if args.full:
                    pt = potential_density_full(k, qy, y)
                    rows.append({**base, "y": y, "value": pt.value, "abs_error": pt.abs_error})
                else:
                    rows.append({**base, "y": y, "value": potential_density_pos(k, qy, y)})
            continue
        rows.append({**base, "value": v})
    if ident == "density":
        cols = ("x", "b", "q", "lam", "r", "y", "value") + (("abs_error",) if args.full else ())
    return rows, cols


def _cmd_value(cfg, model, args):
    g = _mixture(args.g) or ExpMixture.constant(0.0)
    f = _mixture(args.f_below) or ExpMixture.constant(0.0)
    rows = []
    for qy in _queries(model, cfg.query):
        k = make_kernel(model, qy.q, cfg.numeric)
        spec = ValuationSpec(qy, g=g, f_below=f, f_at_b=args.f_at_b)
        rows.append({"x": qy.x, "b": qy.b, "q": qy.q, "r": qy.r, "value": value(k, spec)})
    return rows, ("x", "b", "q", "r", "value")


def _parse_estimand(text: str) -> Estimand:
    parts = text.split(":")
    kind, nums = parts[0], [float(p) for p in parts[1:]]
    if kind == "ruin":
        return Estimand("ruin")
    if kind == "exit":
        return Estimand("exit", *nums[:1])
    if kind in ("ruin_laplace", "potential"):
        return Estimand(kind, *nums[:2])
    if kind == "occupation":
        q, lo, hi = nums
        return Estimand("occupation", q, lo=lo, hi=hi)
    raise ValueError(f"unknown estimand {text!r}")


def _cmd_simulate(cfg, model, args):
    ests = [_parse_estimand(t) for t in args.estimand]
    rows = []
    for x, b, r in product(cfg.query.x, cfg.query.b, cfg.query.r):
        sc = SimConfig(model, x, b, r, horizon=cfg.sim.horizon, n_paths=cfg.sim.n_paths,
                       seed=cfg.sim.seed, dt=cfg.numeric.dt, block_size=cfg.sim.block_size)
        base = {"x": x, "b": b, "r": r}
        if model.sigma > 0:
            for name, est in simulate_diffusive(sc, ests).items():
                for grid, e in (("dt", est.coarse), ("dt/2", est.fine)):
                    rows.append({**base, "estimand": name, "grid": grid, **e.to_dict(),
                                 "richardson": est.richardson})
        else:
            for name, e in simulate_cl_exact(sc, ests).items():
                rows.append({**base, "estimand": name, "grid": "exact", **e.to_dict(),
                             "richardson": None})
    cols = ("x", "b", "r", "estimand", "grid", "mean", "std_error", "n_paths", "n_censored",
            "seed", "bias_bound", "dt", "richardson")
    return rows, cols


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _resolve(args)
        model = cfg.model.build()
        meta = metadata(model, seed=cfg.sim.seed, numeric=cfg.numeric, command=args.command)
        if args.command == "compare":
            targets = TARGETS if "all" in args.targets else tuple(args.targets)
            grid = None if args.grid == "standard" else cfg.query.to_dict()
            if grid is not None:
                grid["b"] = list(cfg.query.b)
            rows = compare(model, targets, grid, n_paths=cfg.sim.n_paths, seed=cfg.sim.seed,
                           numeric=cfg.numeric, horizon=cfg.sim.horizon,
                           block_size=cfg.sim.block_size, dt=cfg.numeric.dt)
            meta["n_paths"] = cfg.sim.n_paths
            _emit(rows, COLUMNS, meta, cfg)
            n_fail = sum(not r.passed for r in rows)
            print(f"compare: {len(rows) - n_fail}/{len(rows)} rows within tolerance",
                  file=sys.stderr)
            return 0 if n_fail == 0 else 1
        if args.command == "selftest":
            rows = run_all(model, cfg.numeric)
            _emit(rows, ("check", "params", "residual", "tol", "passed"), meta, cfg)
            return 0 if all(r["passed"] for r in rows) else 1
        handler = {"psi": _cmd_psi, "phi": _cmd_phi, "scale": _cmd_scale,
                   "lambda-kernel": _cmd_lambda, "parisian": _cmd_parisian,
                   "value": _cmd_value, "simulate": _cmd_simulate}[args.command]
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            rows, cols = handler(cfg, model, args)
        _emit(rows, cols, meta, cfg)
        return 0
    except ParisRuinError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

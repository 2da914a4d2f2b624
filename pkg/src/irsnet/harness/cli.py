"""Command-line experiment runner.

Exit codes: 0 success / all comparisons pass, 1 comparison failure,
2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .. import association, spatial
from ..handover import ho_probability
from ..mc import sim
from ..mc.geometry import BACKEND
from ..quadrature import QuadratureError
from ..scenario import (
    ConfigError,
    InvalidScenario,
    Scenario,
    default_scenario,
    load_config,
    to_config_dict,
)
from ..transition import transition_matrix
from . import recipes
from .sweep import ComparisonRow, SweepSpec, compare_report, emit_csv, run_sweep

EXIT_OK = 0
EXIT_COMPARE_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML scenario file (defaults built in)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. --set mu=0.8")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drops", type=int, default=100_000)
    p.add_argument("--engine", choices=["analytic", "mc", "both"],
                   default="analytic")
    p.add_argument("--mode", choices=["approx", "exact"], default="approx")
    p.add_argument("--out", help="output CSV path (or directory for recipes)")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes for the MC engine")


def _scenario(args) -> Scenario:
    from ..scenario import params_from_dict, validate

    doc = {}
    if args.config:
        sc = load_config(args.config)
        doc = to_config_dict(sc)
    else:
        doc = to_config_dict(default_scenario())
    for item in args.set:
        key, _, val = item.partition("=")
        if not _:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        doc[key] = float(val)
    # constant/uniform keys are mutually exclusive in config files; --set
    # of block_length_m wins over an inherited uniform range
    if "block_length_m" in doc:
        doc.pop("block_length_min_m", None)
        doc.pop("block_length_max_m", None)
    return validate(params_from_dict(doc))


def cmd_validate(args) -> int:
    sc = _scenario(args)
    print("scenario valid; normalized values (SI):")
    for key, val in sorted(to_config_dict(sc).items()):
        print(f"  {key} = {val}")
    print(f"  derived lambda_i_per_km2 = {sc.lambda_i * 1e6}")
    print(f"  derived E[l] = {sc.e_l} m, E[l^2] = {sc.e_l2} m^2")
    return EXIT_OK


def _parse_values(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split(",") if tok)


def cmd_densities(args) -> int:
    sc = _scenario(args)
    spec = SweepSpec(sc, "d", _parse_values(args.d), protocol="densities",
                     engines=args.engine, n_drops=args.drops, seed=args.seed,
                     mode=args.mode, abs_gate=0.08, n_jobs=args.jobs)
    rows = run_sweep(spec)
    return _finish(rows, spec, args)


def cmd_association(args) -> int:
    sc = _scenario(args)
    if args.engine == "analytic" and not args.out:
        probs = association.association_probs(sc)
        for state in ("los", "nlos", "rlos"):
            print(f"a_{state} = {probs[state]:.6f}")
        return EXIT_OK
    spec = SweepSpec(sc, "mu", (sc.mu,), protocol="association",
                     engines=args.engine, n_drops=args.drops, seed=args.seed,
                     n_jobs=args.jobs)
    return _finish(run_sweep(spec), spec, args)


def cmd_transition(args) -> int:
    sc = _scenario(args)
    if args.engine == "analytic" and not args.out:
        tm = transition_matrix(sc)
        for ki, k in enumerate(association.STATES):
            row = "  ".join(f"{tm.p[ki, ji]:.6f}" for ji in range(3))
            print(f"P[{k} -> los/nlos/rlos] = {row}")
        return EXIT_OK
    spec = SweepSpec(sc, "mu", (sc.mu,), protocol="transition",
                     engines=args.engine, n_drops=args.drops, seed=args.seed,
                     n_jobs=args.jobs)
    return _finish(run_sweep(spec), spec, args)


def cmd_handover(args) -> int:
    sc = _scenario(args)
    if args.engine == "analytic" and not args.out:
        res = ho_probability(sc)
        print(f"h = {res.h:.6f}  (nodes={res.n_nodes})")
        return EXIT_OK
    spec = SweepSpec(sc, "mu", (sc.mu,), protocol="handover",
                     engines=args.engine, n_drops=args.drops, seed=args.seed,
                     n_jobs=args.jobs)
    return _finish(run_sweep(spec), spec, args)


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    if args.protocol == "densities":
        est = sim.estimate_density(sc, args.d, args.drops, args.seed)
        for state in ("los", "nlos", "rlos"):
            e = est.state(state)
            print(f"p_{state} = {e.mean:.6f} +- {e.ci_halfwidth:.6f}")
        return EXIT_OK
    est = sim.estimate(sc, args.protocol, args.drops, args.seed,
                       n_jobs=args.jobs)
    if args.protocol == "association":
        for state, e in est.estimates().items():
            print(f"a_{state} = {e.mean:.6f} +- {e.ci_halfwidth:.6f}")
    elif args.protocol == "transition":
        for ki, k in enumerate(association.STATES):
            row = est.row(ki)
            cells = "  ".join(f"{e.mean:.4f}+-{e.ci_halfwidth:.4f}" for e in row)
            print(f"P[{k} -> .] = {cells}")
    else:
        print(f"h = {est.h.mean:.6f} +- {est.h.ci_halfwidth:.6f} "
              f"(discarded {est.n_discarded})")
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = _scenario(args)
    spec = SweepSpec(sc, "mu", (sc.mu,), protocol=args.protocol,
                     engines="both", n_drops=args.drops, seed=args.seed,
                     abs_gate=args.gate, n_jobs=args.jobs)
    rows = run_sweep(spec)
    summary = compare_report(rows, abs_gate=args.gate, out=sys.stdout)
    if args.out:
        emit_csv(rows, args.out, abs_gate=args.gate)
    return EXIT_OK if summary.ok else EXIT_COMPARE_FAIL


def cmd_dump_world(args) -> int:
    from ..mc.world import dump_world, generate_world

    sc = _scenario(args)
    world = generate_world(sc, args.radius, seed=args.seed)
    if args.out:
        with open(args.out, "w") as fh:
            dump_world(world, fh)
        print(f"wrote {len(world.bs_x)} BS and {len(world.segs)} blockage "
              f"records to {args.out}")
    else:
        dump_world(world, sys.stdout)
    return EXIT_OK


def cmd_recipe(args) -> int:
    base = _scenario(args)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    names = recipes.recipe_names() if args.name == "all" else [args.name]
    status = EXIT_OK
    for name in names:
        for tag, spec in recipes.build_recipe(name, base, args.drops, args.seed):
            rows = run_sweep(spec)
            path = os.path.join(out_dir, f"{name}_{tag}.csv")
            emit_csv(rows, path, abs_gate=spec.abs_gate, comment=spec.comment)
            summary = compare_report(rows, abs_gate=spec.abs_gate,
                                     out=sys.stdout if args.verbose else None)
            print(f"{name}_{tag}: {len(rows)} rows -> {path} "
                  f"(pass {summary.n_pass}/{summary.n_compared})")
            if not summary.ok and spec.engines == "both":
                status = EXIT_COMPARE_FAIL
    return status


def _finish(rows: list[ComparisonRow], spec: SweepSpec, args) -> int:
    if args.out:
        emit_csv(rows, args.out, abs_gate=spec.abs_gate, comment=spec.comment)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        compare_report(rows, abs_gate=spec.abs_gate, out=sys.stdout)
    if spec.engines == "both":
        summary = compare_report(rows, abs_gate=spec.abs_gate)
        return EXIT_OK if summary.ok else EXIT_COMPARE_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="irsnet",
        description="analytic + Monte-Carlo toolkit for LoS-state transitions "
                    "and handover probability in IRS-aided networks "
                    f"(geometry backend: {BACKEND})",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check and normalize a config")
    _add_common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("densities", help="state densities vs link distance")
    _add_common(p)
    p.add_argument("--d", default="25,50,75,100,150,200,250,300",
                   help="comma-separated link distances in meters")
    p.set_defaults(fn=cmd_densities)

    for name, fn in (("association", cmd_association),
                     ("transition", cmd_transition),
                     ("handover", cmd_handover)):
        p = sub.add_parser(name, help=f"{name} metrics at the configured point")
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("simulate", help="Monte-Carlo estimate of one protocol")
    _add_common(p)
    p.add_argument("--protocol", required=True,
                   choices=["densities", "association", "transition", "handover"])
    p.add_argument("--d", type=float, default=100.0,
                   help="link distance for the densities protocol")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="analytic vs MC gate at one point")
    _add_common(p)
    p.add_argument("--protocol", required=True,
                   choices=["densities", "association", "transition", "handover"])
    p.add_argument("--gate", type=float, default=0.02,
                   help="absolute tolerance when the MC ci is smaller")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("recipe", help="run a named experiment preset")
    _add_common(p)
    p.add_argument("name", help="fig2..fig9 or 'all'; see 'recipe list'")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_recipe)

    p = sub.add_parser("dump-world",
                       help="write one sampled world for external viewers")
    _add_common(p)
    p.add_argument("--radius", type=float, default=None)
    p.set_defaults(fn=cmd_dump_world)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "name", None) == "list":
        for name in recipes.recipe_names():
            print(f"{name}: {recipes.RECIPES[name][1]}")
        return EXIT_OK
    try:
        return args.fn(args)
    except (ConfigError, InvalidScenario, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

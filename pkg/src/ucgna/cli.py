"""Command-line entry point: ``ucgna validate|run|sweep|oracle``.

Exit codes: 0 ok, 2 validation failure, 3 solver limit with an incumbent,
4 infeasible (or limit without an incumbent).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .data import DataError, load_system
from .model import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED

EXIT_OK, EXIT_INVALID, EXIT_LIMIT, EXIT_INFEASIBLE = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _exit_for(status: str, has_incumbent: bool) -> int:
    if status == OPTIMAL:
        return EXIT_OK
    if status == LIMIT and has_incumbent:
        return EXIT_LIMIT
    return EXIT_INFEASIBLE


def _config(args):
    cfg = load_config(args.config)
    over, lim = {}, {}
    if getattr(args, "alpha", None) is not None:
        over["alpha"] = args.alpha
    if getattr(args, "time_limit", None) is not None:
        lim["time_limit"] = args.time_limit
    if getattr(args, "no_preprocess", False):
        over["preprocess"] = False
    return cfg.with_overrides(limits=lim, **over) if (over or lim) else cfg


def cmd_validate(args) -> int:
    try:
        system = load_system(args.system)
    except DataError as exc:
        print(f"invalid: {exc}")
        for d in exc.diagnostics:
            print(f"  - {d}")
        return EXIT_INVALID
    for w in system.warnings():
        print(w)
    print(f"ok: {system.name} ({len(system.power.buses)} buses, {len(system.power.generators)} generators, "
          f"{len(system.gas.junctions)} junctions, {len(system.coupling.links)} GFPPs, T={system.T})")
    return EXIT_OK


def cmd_run(args) -> int:
    from .harness.runs import run_scenario

    try:
        system = load_system(args.system)
    except DataError as exc:
        print(f"invalid: {exc}")
        return EXIT_INVALID
    cfg = _config(args)
    out = Path(args.out) if args.out else None
    rep = run_scenario(system, args.mode, args.eta_p, args.eta_g, cfg, log_dir=str(out / "logs") if out else None)
    text = rep.to_json()
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"report_{args.mode}_{args.eta_p:g}_{args.eta_g:g}.json").write_text(text)
    if rep.costs:
        c = rep.costs
        print(f"mode {rep.mode} eta_p={rep.eta_p:g} eta_g={rep.eta_g:g}: status {rep.status}, "
              f"power {c.power:.2f}, gas {c.gas:.2f}, loss {c.loss:.2f}, total {c.total:.2f}, "
              f"objective/gap {rep.table_row()}")
    else:
        print(f"mode {rep.mode}: status {rep.status}; " + "; ".join(rep.diagnostics))
    return _exit_for(rep.status, rep.costs is not None)


def cmd_sweep(args) -> int:
    from .harness.sweep import sweep

    try:
        system = load_system(args.system)
    except DataError as exc:
        print(f"invalid: {exc}")
        return EXIT_INVALID
    cfg = _config(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    results, text = sweep(system, _floats(args.eta_p), _floats(args.eta_g), modes, cfg, args.jobs,
                          args.out, with_wall=args.with_wall)
    if not args.out:
        sys.stdout.write(text)
    failed = [r for r in results if r.report is None]
    for r in failed:
        print(f"cell {r.cell} failed: {r.error.splitlines()[0]}", file=sys.stderr)
    statuses = [r.report.status for r in results if r.report is not None]
    if failed or any(s in (INFEASIBLE, UNBOUNDED) for s in statuses):
        return EXIT_INFEASIBLE
    if any(s == LIMIT for s in statuses):
        return EXIT_LIMIT
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .data import scale_loads
    from .reformulation import alpha_sweep, assemble_trilevel

    try:
        system = scale_loads(load_system(args.system), args.eta_p, args.eta_g)
    except DataError as exc:
        print(f"invalid: {exc}")
        return EXIT_INVALID
    cfg = _config(args)
    tri = assemble_trilevel(system.power, system.gas, system.coupling, system.T, cfg.ybar_factor)
    rows = alpha_sweep(tri, _floats(args.alphas), cap=cfg.limits.enumeration_cap, limits=cfg.limits,
                       tolerances=cfg.tolerances)
    doc = [{"alpha": r.alpha, "leader_objective": r.leader_objective, "oracle_objective": r.oracle_objective,
            "gap": r.gap, "xp_distance": r.xp_distance} for r in rows]
    print(json.dumps(doc, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ucgna", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="TOML or JSON config file")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a system file")
    p.add_argument("--system", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="solve one scenario")
    p.add_argument("--system", required=True)
    p.add_argument("--mode", choices=("A", "B"), default="B")
    p.add_argument("--eta-p", type=float, default=1.0)
    p.add_argument("--eta-g", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--no-preprocess", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid of load multipliers in one or both modes")
    p.add_argument("--system", required=True)
    p.add_argument("--eta-p", default="1.0", help="comma-separated list")
    p.add_argument("--eta-g", default="1.0", help="comma-separated list")
    p.add_argument("--modes", default="A,B")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--alpha", type=float)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--no-preprocess", action="store_true")
    p.add_argument("--with-wall", action="store_true", help="write wall times into the CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="compare the single-level program with enumeration over alpha")
    p.add_argument("--system", default="toy2x2")
    p.add_argument("--alphas", default="0.9,0.99,0.999")
    p.add_argument("--eta-p", type=float, default=1.0)
    p.add_argument("--eta-g", type=float, default=1.0)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        if isinstance(exc, DataError):
            print(f"invalid: {exc}", file=sys.stderr)
            return EXIT_INVALID
        raise


if __name__ == "__main__":
    sys.exit(main())

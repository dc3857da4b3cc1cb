"""Command-line front end: validate, cluster, hurricane, plan."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .benders import CONVERGED, PLAN_INFEASIBLE, BendersError, run_planning
from .clustering import RepresentativeSet, ctpc, error_criterion, load_timeseries
from .formulation import ModelError
from .hurricane import (
    DEFAULT_LINE_CURVE,
    DEFAULT_TOWER_CURVE,
    FragilityCurve,
    HurricaneModel,
    SpeedDistribution,
    hurricane_zone_lines,
    select_vulnerable_lines,
)
from .report import render_report
from .solver import LpError
from .system import SystemDataError, load_system

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_PLAN_INFEASIBLE = 4

log = logging.getLogger("gridplan")


def _read_json(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SystemDataError(f"parse error: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None


def _hurricane_model(cfg: dict, seed: int, samples: int | None = None, scenarios: int | None = None) -> HurricaneModel:
    dist = SpeedDistribution(**cfg["distribution"]) if "distribution" in cfg else SpeedDistribution()
    curves = {}
    for key, default in (("line_curve", DEFAULT_LINE_CURVE), ("tower_curve", DEFAULT_TOWER_CURVE)):
        data = cfg.get(key)
        curves[key] = FragilityCurve(tuple(data["speeds"]), tuple(data["probabilities"])) if data else default
    return HurricaneModel.from_sampling(
        dist,
        samples or int(cfg.get("samples", 1000)),
        scenarios or int(cfg.get("scenarios", 5)),
        seed,
        tower_spacing=float(cfg.get("tower_spacing", 500.0)),
        cap=int(cfg.get("max_vulnerable", 12)),
        **curves,
    )


def cmd_validate(args) -> int:
    system = load_system(args.system)
    cfg = system.config
    print(
        f"ok: {len(system.buses)} buses, {len(system.existing_lines)} existing lines, "
        f"{len(system.ac_candidates)} HVAC and {len(system.dc_candidates)} HVDC candidates, "
        f"{len(system.generators)} generators, {cfg.stages} stages"
    )
    return EXIT_OK


def cmd_cluster(args) -> int:
    series = load_timeseries(args.timeseries)
    reps = ctpc(series, args.days, args.hours)
    reps.write_csv(args.out)
    ec_load, ec_wind = error_criterion(series, reps)
    print(f"{len(reps)} representative hours, weight {reps.weight.sum():.6f}; EC load {ec_load:.6f}, wind {ec_wind:.6f}")
    return EXIT_OK


def cmd_hurricane(args) -> int:
    system = load_system(args.system)
    cfg = _read_json(args.config).get("hurricane", {})
    hm = _hurricane_model(cfg, args.seed, args.samples, args.scenarios)
    built = [int(v) for v in args.built.split(",")] if args.built else []
    zone = hurricane_zone_lines(system, built)
    doc = {"speed_scenarios": [], "failure_scenarios": []}
    for hs in hm.speeds:
        vuln = select_vulnerable_lines(zone, hs.speed, hm.line_curve, hm.tower_curve, hm.tower_spacing)
        doc["speed_scenarios"].append(
            {
                "speed": round(hs.speed, 6),
                "probability": round(hs.probability, 12),
                "vulnerable_lines": [{"line": ln.id, "failure_probability": round(p, 12)} for ln, p in vuln],
            }
        )
    for sc in hm.probable_scenarios(system, built):
        doc["failure_scenarios"].append(
            {
                "speed": round(sc.speed.speed, 6) if sc.speed else None,
                "failed_lines": sorted(sc.failed),
                "probability": round(sc.probability, 12),
            }
        )
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{len(hm.speeds)} speed scenarios, {len(doc['failure_scenarios'])} probable failure configurations")
    return EXIT_OK


def cmd_plan(args) -> int:
    system = load_system(args.system)
    conf = _read_json(args.config)
    if conf.get("planning"):
        system = system.with_config(system.config.replace(**conf["planning"]))
    if args.no_hvdc or args.no_bes:
        system = system.without(hvdc=args.no_hvdc, bes=args.no_bes)
    if args.reps:
        reps = RepresentativeSet.read_csv(args.reps)
    elif args.timeseries:
        cl = conf.get("clustering", {})
        reps = ctpc(load_timeseries(args.timeseries), int(cl.get("days", 120)), int(cl.get("hours", 96)))
    else:
        raise SystemDataError("plan needs --timeseries or --reps")
    hm = None
    if not args.no_resilience and conf.get("hurricane") is not None:
        hm = _hurricane_model(conf["hurricane"], args.seed)
    bd = conf.get("benders", {})
    plan = run_planning(
        system,
        reps,
        hm,
        eps=args.eps,
        max_iter=args.max_iter or int(bd.get("max_iter", 200)),
        multi_cut=bool(bd.get("multi_cut", True)),
    )
    for w in plan.warnings:
        log.warning(w)
    out = Path(args.out)
    report = render_report(plan, out, hm.speeds if hm else None)
    print(report.text(), end="")
    if plan.status == PLAN_INFEASIBLE:
        log.error("no build plan satisfies the operating constraints")
        return EXIT_PLAN_INFEASIBLE
    if plan.status != CONVERGED:
        log.error("Benders iteration limit reached; best plan written")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridplan", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a system file")
    v.add_argument("--system", required=True)
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("cluster", help="representative hours from an hourly series")
    c.add_argument("--timeseries", required=True)
    c.add_argument("--days", type=int, required=True)
    c.add_argument("--hours", type=int, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_cluster)

    h = sub.add_parser("hurricane", help="speed scenarios and probable line-failure configurations")
    h.add_argument("--system", required=True)
    h.add_argument("--samples", type=int, required=True)
    h.add_argument("--scenarios", type=int, required=True)
    h.add_argument("--seed", type=int, required=True)
    h.add_argument("--out", required=True)
    h.add_argument("--config")
    h.add_argument("--built", help="comma-separated candidate line ids treated as built")
    h.set_defaults(func=cmd_hurricane)

    pl = sub.add_parser("plan", help="run the co-planning model")
    pl.add_argument("--system", required=True)
    pl.add_argument("--timeseries")
    pl.add_argument("--reps", help="representative-hour CSV (skips clustering)")
    pl.add_argument("--config")
    pl.add_argument("--out", required=True)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--eps", type=float)
    pl.add_argument("--max-iter", type=int)
    pl.add_argument("--no-hvdc", action="store_true")
    pl.add_argument("--no-bes", action="store_true")
    pl.add_argument("--no-resilience", action="store_true")
    pl.set_defaults(func=cmd_plan)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (SystemDataError, ModelError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    except (LpError, BendersError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_ERROR


def run_cli(argv: list[str] | None = None) -> int:
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

# contrastcpd/commands/simulate.py
import logging
import time

from ..schemas.report import PublishedCell, SimulationReport
from ..services import simbench
from ..services.reports import trace_csv, write_json, write_text
from .common import (
    UsageError,
    add_common,
    add_detector_options,
    add_family_options,
    build_spec,
    fit_workers_of,
    seed_of,
    workers_of,
)

log = logging.getLogger("cli")


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("simulate", help="run one synthetic scenario end-to-end with auto-calibration")
    add_common(p)
    add_family_options(p)
    add_detector_options(p)
    p.add_argument("--example", type=int, choices=[1, 2, 3])
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--mu", type=float, help="post-change mean for example 1 (default 0.1)")
    p.add_argument("--uniform-support", choices=["moment", "literal"], default="moment",
                   help="example 3 post-change support: +-sigma*sqrt(3) (moment) or +-sigma/sqrt(3)")
    p.add_argument("--threshold", type=float, help="skip calibration and use this threshold")
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.add_argument("--trace", help="trace CSV of the first replication")
    p.set_defaults(handler=run)


def run(args) -> int:
    if args.example is None:
        raise UsageError("--example is required")
    if args.mu is not None and args.example != 1:
        raise UsageError("--mu only applies to example 1")
    started = time.perf_counter()
    spec = build_spec(args)
    scenario = simbench.example_scenario(
        args.example,
        seed=seed_of(args),
        reps=args.reps,
        mu=args.mu,
        uniform_support=args.uniform_support,
    )
    row, calib, results = simbench.run_scenario(
        scenario,
        spec,
        threshold=args.threshold,
        warmup=args.warmup,
        margin=args.margin,
        workers=workers_of(args),
        fit_workers=fit_workers_of(args),
    )
    pub = simbench.published(args.example, spec)
    if args.mu is not None or args.uniform_support != "moment":
        pub = None
    report = SimulationReport(
        scenario=scenario,
        family=spec.label,
        threshold=row.threshold,
        mean_delay=row.mean_delay,
        std_delay=row.std_delay,
        calibration=calib,
        row=row,
        published=None if pub is None else PublishedCell(threshold=pub[0], mean_delay=pub[1], std_delay=pub[2]),
        wall_time=time.perf_counter() - started,
    )
    write_json(args.out, report)
    if args.trace and results:
        write_text(args.trace, trace_csv(results[0].trace))
    return 0

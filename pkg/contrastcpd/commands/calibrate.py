# contrastcpd/commands/calibrate.py
import logging

from ..schemas.calibration import CalibrationConfig, GaussianReference
from ..services import calibration
from ..services.reports import write_json
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
    p = subparsers.add_parser("calibrate", help="bootstrap an alarm threshold from Gaussian null streams")
    add_common(p)
    add_family_options(p)
    add_detector_options(p)
    p.add_argument("--mean", type=float, help="pre-change mean")
    p.add_argument("--std", type=float, help="pre-change standard deviation")
    p.add_argument("--n", type=int, default=150, help="null stream length")
    p.add_argument("--reps", type=int, default=10, help="number of null streams")
    p.add_argument("--rank", type=int, default=2, help="order statistic from the top (2 = second largest)")
    p.add_argument("--json", action="store_true", help="print the full calibration report as JSON")
    p.set_defaults(handler=run)


def run(args) -> int:
    if args.mean is None or args.std is None:
        raise UsageError("--mean and --std are required")
    config = CalibrationConfig(
        reference=GaussianReference(mean=args.mean, std=args.std),
        spec=build_spec(args),
        n=args.n,
        reps=args.reps,
        rank=args.rank,
        margin=args.margin,
        warmup=args.warmup,
        seed=seed_of(args),
        workers=workers_of(args),
        fit_workers=fit_workers_of(args),
    )
    report = calibration.run_calibration(config)
    if args.json:
        write_json(None, report)
    else:
        print(repr(report.threshold))
    return 0

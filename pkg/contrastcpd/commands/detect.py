# contrastcpd/commands/detect.py
import logging
import time

from ..schemas.calibration import CalibrationConfig, GaussianReference
from ..schemas.detector import DetectorConfig
from ..schemas.report import IngestSpec, RunReport
from ..services import calibration, detector
from ..services.ingest import ingest
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

EXIT_ALARM = 2

# real-signal protocol: every 10th sample, z-scored, 200 Adam epochs for the mlp
REAL_PRESET = {"epochs": 200, "stride": 10, "normalize": True}
# with --preset real, `--class <kind>` picks that kind's family; poly when --class is omitted
REAL_FAMILIES = {"poly": "poly:9", "fourier": "fourier:10", "mlp": "mlp:1,2,3,1"}


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("detect", help="run the detector over a numeric text stream")
    add_common(p)
    add_family_options(p)
    p.add_argument("--input", help="path to a text file, or '-' for standard input")
    p.add_argument("--threshold", type=float, help="alarm threshold; calibrated from the prefix when omitted")
    add_detector_options(p)
    p.add_argument("--stride", type=int, help="keep every stride-th record (default 1)")
    p.add_argument("--normalize", action="store_true", default=None, help="z-score with prefix statistics")
    p.add_argument("--prefix", type=int, help="number of kept samples used for mean/std")
    p.add_argument("--columns", help="comma-separated zero-based columns for vector samples")
    p.add_argument("--window", type=int, help="sliding window (restart horizon) in samples")
    p.add_argument("--warm-start", action="store_true", help="start each fit from the previous step's fit")
    p.add_argument(
        "--preset",
        choices=["real"],
        help="real-signal defaults: stride 10, normalize, 200 epochs; "
             "--class poly|fourier|mlp picks poly:9, fourier:10 or mlp:1,2,3,1 (poly:9 when omitted)",
    )
    p.add_argument("--calib-n", type=int, default=150, help="null stream length for auto-calibration")
    p.add_argument("--calib-reps", type=int, default=10)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.add_argument("--trace", help="trace CSV path (t,S_t,tau_hat)")
    p.set_defaults(handler=run)


def run(args) -> int:
    if not args.input:
        raise UsageError("--input is required")
    preset = REAL_PRESET if args.preset == "real" else {}
    if preset:
        args.family = REAL_FAMILIES.get(args.family or "poly", args.family)
    started = time.perf_counter()

    columns = [int(c) for c in args.columns.split(",")] if args.columns else None
    ingest_spec = IngestSpec(
        path=None if args.input == "-" else args.input,
        use_stdin=args.input == "-",
        columns=columns,
        downsample_stride=args.stride or preset.get("stride", 1),
        normalize=bool(args.normalize if args.normalize is not None else preset.get("normalize", False)),
        calibration_prefix_len=args.prefix,
    )
    data = ingest(ingest_spec)

    spec = build_spec(args, default_epochs=preset.get("epochs", 50))
    if columns and spec.family == "linear" and spec.input_dim != len(columns):
        spec = spec.copy(update={"input_dim": len(columns)})

    calib_report = None
    threshold = args.threshold
    if threshold is None:
        if data.stats.mean is None:
            raise UsageError("--threshold or --prefix (for auto-calibration) is required")
        if ingest_spec.normalize:
            ref = GaussianReference(mean=0.0, std=1.0)
        else:
            ref = GaussianReference(mean=data.stats.mean[0], std=data.stats.std[0])
        calib_report = calibration.run_calibration(CalibrationConfig(
            reference=ref,
            spec=spec,
            n=args.calib_n,
            reps=args.calib_reps,
            rank=args.rank,
            margin=args.margin,
            warmup=args.warmup,
            seed=seed_of(args),
            workers=workers_of(args),
            fit_workers=fit_workers_of(args),
        ))
        threshold = calib_report.threshold

    config = DetectorConfig(
        threshold=threshold,
        spec=spec,
        warmup=args.warmup,
        margin=args.margin,
        window_cap=args.window,
        seed=seed_of(args),
        warm_start=args.warm_start,
        fit_workers=fit_workers_of(args),
    )
    result = detector.run(data.samples, config)

    report = RunReport(
        config={"detector": config.dict(), "ingest": ingest_spec.dict()},
        threshold=threshold,
        calibration=calib_report,
        ingest=data.stats,
        trace=result.trace,
        stopping_time=result.stopping_time,
        tau_hat=result.argmax_split,
        statistic=result.statistic,
        wall_time=time.perf_counter() - started,
    )
    write_json(args.out, report)
    if args.trace:
        write_text(args.trace, trace_csv(result.trace))

    if result.alarmed:
        log.info("change detected at t=%d (tau_hat=%d)", result.stopping_time, result.argmax_split)
        return EXIT_ALARM
    return 0

# contrastcpd/commands/benchmark.py
import logging

from ..services import simbench
from ..services.reports import benchmark_csv, render_benchmark_markdown, write_text
from .common import UsageError, add_common, fit_workers_of, seed_of, workers_of

log = logging.getLogger("cli")


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("benchmark", help="reproduce the synthetic delay table (3 examples x 3 families)")
    add_common(p)
    p.add_argument("--table1", action="store_true", help="run all nine synthetic cells")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--uniform-support", choices=["moment", "literal"], default="moment")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--markdown", help="also render a Markdown summary to this path")
    p.set_defaults(handler=run)


def run(args) -> int:
    if not args.table1:
        raise UsageError("only --table1 is available")
    seed = seed_of(args)
    table = simbench.table1(seed=seed, reps=args.reps, uniform_support=args.uniform_support)
    rows = simbench.run_benchmark(
        table, reps=args.reps, seed=seed, workers=workers_of(args), fit_workers=fit_workers_of(args)
    )
    write_text(args.out, benchmark_csv(rows))
    if args.markdown:
        # the published example 3 cells use the moment-matched support
        published = [
            None if args.uniform_support != "moment" and scenario.example == 3
            else simbench.published(scenario.example, spec)
            for scenario, spec in table
        ]
        write_text(args.markdown, render_benchmark_markdown(rows, published, seed))
    return 0

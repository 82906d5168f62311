# contrastcpd/services/reports.py
"""
File outputs: benchmark CSV, trace CSV, JSON reports and the Markdown benchmark summary.

Benchmark CSV (schema_version 1), one row per (scenario, family):
    scenario, family, threshold, mean_delay, std_delay, misses, rep_delays, false_alarms
rep_delays joins per-replication outcomes with ';' (a delay, 'miss' or 'fa').
"""
import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Optional, Sequence, Tuple

from pydantic.json import pydantic_encoder

from ..schemas.detector import TracePoint
from ..schemas.simbench import BenchmarkRow
from ..shared import BaseModel, templates

log = logging.getLogger("reports")

BENCHMARK_COLUMNS = [
    "scenario", "family", "threshold", "mean_delay", "std_delay", "misses", "rep_delays", "false_alarms",
]
TRACE_COLUMNS = ["t", "S_t", "tau_hat"]


def _fmt(value: Optional[float], digits: int = 6) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def benchmark_csv(rows: Sequence[BenchmarkRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCHMARK_COLUMNS)
    for r in rows:
        writer.writerow([
            r.scenario, r.family, _fmt(r.threshold), _fmt(r.mean_delay), _fmt(r.std_delay),
            r.misses, ";".join(r.rep_outcomes), r.false_alarms,
        ])
    return buf.getvalue()


def trace_csv(trace: Sequence[TracePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for p in trace:
        writer.writerow([p.t, repr(p.statistic), p.tau_hat])
    return buf.getvalue()


def render_benchmark_markdown(
    rows: Sequence[BenchmarkRow],
    published: Sequence[Optional[Tuple[float, float, float]]],
    seed: int,
) -> str:
    tpl = templates.get_template("benchmark.md.j2")
    items = [
        {
            "row": r,
            "mean": _fmt(r.mean_delay, 1) or "-",
            "std": _fmt(r.std_delay, 1) or "-",
            "published": pub,
        }
        for r, pub in zip(rows, published)
    ]
    return tpl.render(items=items, seed=seed)


def write_text(path: Optional[str], text: str) -> None:
    """Write to path, or to stdout when path is None or '-'."""
    if path is None or path == "-":
        print(text, end="" if text.endswith("\n") else "\n")
        return
    out = Path(path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    log.info("wrote %s (%d bytes)", out, len(text.encode("utf-8")))


def _strict(value: Any) -> Any:
    """Replace non-finite floats by None, recursively; strict JSON has no Infinity or NaN."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _strict(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_strict(v) for v in value]
    return value


def write_json(path: Optional[str], model: BaseModel) -> None:
    """Strict JSON: an infinite threshold or radius is written as null."""
    text = json.dumps(_strict(model.dict()), indent=2, default=pydantic_encoder, allow_nan=False)
    write_text(path, text + "\n")

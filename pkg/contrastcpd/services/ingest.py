# contrastcpd/services/ingest.py
"""
Signal ingestion: one numeric record per line (comma-separated components for vectors),
'#' lines and blank lines skipped. Records are downsampled by keeping every stride-th one,
then optionally z-scored with the mean/std of the first calibration_prefix_len kept samples.
"""
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np

from ..errors import DegenerateReference, InsufficientPrefix, ParseError
from ..schemas.report import IngestSpec, IngestStats

log = logging.getLogger("ingest")


@dataclass
class IngestResult:
    samples: np.ndarray
    stats: IngestStats


def read_records(lines: Iterable[str], columns: Optional[List[int]] = None) -> np.ndarray:
    rows: List[List[float]] = []
    width: Optional[int] = None
    for line_no, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = [p.strip() for p in text.split(",")]
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ParseError(line_no, f"not a numeric record: {text[:80]!r}")
        if not all(np.isfinite(values)):
            raise ParseError(line_no, "non-finite value")
        if columns is not None:
            try:
                values = [values[c] for c in columns]
            except IndexError:
                raise ParseError(line_no, f"record has {len(values)} components, columns {columns} requested")
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(line_no, f"expected {width} components, got {len(values)}")
        rows.append(values)
    if not rows:
        return np.empty((0, len(columns) if columns else 1))
    return np.asarray(rows, dtype=np.float64)


def _open_lines(spec: IngestSpec) -> List[str]:
    if spec.use_stdin:
        return sys.stdin.read().splitlines()
    return Path(spec.path).read_text(encoding="utf-8-sig").splitlines()


def prepare(records: np.ndarray, spec: IngestSpec) -> IngestResult:
    """Stride, then prefix statistics and optional z-scoring of already parsed records."""
    kept = records[:: spec.downsample_stride]
    mean = std = None
    prefix = spec.calibration_prefix_len
    if prefix is not None:
        if prefix > kept.shape[0]:
            raise InsufficientPrefix(f"prefix of {prefix} samples requested, only {kept.shape[0]} available")
        head = kept[:prefix]
        mean = head.mean(axis=0)
        std = head.std(axis=0, ddof=1)
        if np.any(std <= 0):
            raise DegenerateReference("calibration prefix has zero spread")
        if spec.normalize:
            kept = (kept - mean) / std
    stats = IngestStats(
        records_read=int(records.shape[0]),
        samples_kept=int(kept.shape[0]),
        mean=None if mean is None else [float(v) for v in mean],
        std=None if std is None else [float(v) for v in std],
    )
    samples = kept[:, 0] if kept.shape[1] == 1 else kept
    log.info("ingested %d records, kept %d (stride %d, normalize=%s)",
             stats.records_read, stats.samples_kept, spec.downsample_stride, spec.normalize)
    return IngestResult(samples=samples, stats=stats)


def ingest(spec: IngestSpec) -> IngestResult:
    records = read_records(_open_lines(spec), spec.columns)
    return prepare(records, spec)

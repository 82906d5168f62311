# contrastcpd/services/calibration.py
"""
Bootstrap threshold selection: simulate `reps` null streams from the pre-change Gaussian,
record the largest S_t of each (detector run with threshold +inf) and take the
`rank`-th largest maximum as the alarm threshold.
"""
import logging
import math
from typing import List, Sequence

from ..errors import DegenerateReference
from ..schemas.calibration import CalibrationConfig, CalibrationReport
from ..schemas.detector import DetectorConfig
from ..shared import derive_rng, derive_seed, ordered_map
from . import detector

log = logging.getLogger("calibration")

# key that separates null streams from the scenario streams drawn with the same seed
CALIBRATION_STREAM = 0xCA1


def select_threshold(maxima: Sequence[float], rank: int) -> float:
    """rank-th largest value (rank 1 = the maximum)."""
    if not 1 <= rank <= len(maxima):
        raise ValueError(f"rank {rank} outside 1..{len(maxima)}")
    return float(sorted(maxima, reverse=True)[rank - 1])


def null_stream(config: CalibrationConfig, rep: int):
    rng = derive_rng(config.seed, CALIBRATION_STREAM, rep)
    ref = config.reference
    dim = config.spec.sample_dim
    draws = rng.normal(ref.mean, ref.std, size=(config.n, dim))
    return draws[:, 0] if dim == 1 else draws


def null_maximum(config: CalibrationConfig, rep: int) -> float:
    det_config = DetectorConfig(
        threshold=math.inf,
        spec=config.spec,
        warmup=config.warmup,
        margin=config.margin,
        seed=derive_seed(config.seed, CALIBRATION_STREAM, rep),
        fit_workers=config.fit_workers,
    )
    result = detector.run(null_stream(config, rep), det_config)
    peak = result.max_statistic
    if peak is None:
        # n > warmup but no admissible split ever existed (margin too large for n)
        raise ValueError(f"no statistic was computed on a null stream of length {config.n}")
    log.debug("rep %d: max S_t = %.4f", rep, peak)
    return peak


def run_calibration(config: CalibrationConfig) -> CalibrationReport:
    if not config.reference.std > 0:
        raise DegenerateReference(f"reference std must be > 0, got {config.reference.std}")
    maxima: List[float] = ordered_map(
        lambda rep: null_maximum(config, rep), range(config.reps), workers=config.workers
    )
    threshold = select_threshold(maxima, config.rank)
    log.info(
        "calibrated %s: threshold=%.4f (rank %d of %d, n=%d)",
        config.spec.label, threshold, config.rank, config.reps, config.n,
    )
    return CalibrationReport(threshold=threshold, rank=config.rank, maxima=maxima)


def calibrate(config: CalibrationConfig) -> float:
    return run_calibration(config).threshold

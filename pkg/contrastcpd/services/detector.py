# contrastcpd/services/detector.py
import logging
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..errors import AlreadyAlarmed, EmptyRange
from ..schemas.detector import Alarm, DetectionResult, DetectorConfig, TracePoint
from ..shared import derive_rng, ordered_map
from .buffer import ObservationBuffer
from .contrast_core import admissible_taus, max_statistic
from .discriminators import FittedDiscriminator, fit_splits, init_params

log = logging.getLogger("detector")

FIT_BLOCK = 32     # splits per fit call; fixed so the worker count never changes a batch


class DetectorState:
    """Mutable loop state: the buffer, steps consumed, the S_t trace and the alarm flag."""

    def __init__(self, dim: int = 1):
        self.buffer = ObservationBuffer(dim=dim)
        self.t = 0
        self.trace: List[TracePoint] = []
        self.alarmed = False
        self.alarm: Optional[Alarm] = None
        # warm-start cache: absolute tau -> last fitted parameters
        self.last_params: Dict[int, np.ndarray] = {}

    @classmethod
    def for_config(cls, config: DetectorConfig) -> "DetectorState":
        return cls(dim=config.spec.sample_dim)


def _warm_init(state: DetectorState, config: DetectorConfig, abs_taus: List[int], t: int) -> np.ndarray:
    spec = config.spec
    rows = []
    for k in abs_taus:
        prev = state.last_params.get(k)
        if prev is not None:
            rows.append(prev)
        elif spec.is_linear_in_params:
            rows.append(init_params(spec))
        else:
            rows.append(init_params(spec, derive_rng(config.seed, k, t)))
    return np.stack(rows)


def _fit_step(state: DetectorState, config: DetectorConfig, window: np.ndarray, start: int) -> List[Tuple[int, FittedDiscriminator]]:
    local_taus = list(admissible_taus(len(window), config.margin))
    init_all = _warm_init(state, config, [start + k for k in local_taus], state.t) if config.warm_start else None

    def fit_chunk(bounds: Tuple[int, int]) -> List[FittedDiscriminator]:
        lo, hi = bounds
        chunk = local_taus[lo:hi]
        return fit_splits(
            config.spec,
            window,
            chunk,
            config.seed,
            tau_keys=[start + k for k in chunk],
            t_key=state.t,
            init=None if init_all is None else init_all[lo:hi],
        )

    bounds = [(lo, lo + FIT_BLOCK) for lo in range(0, len(local_taus), FIT_BLOCK)]
    fits: List[FittedDiscriminator] = []
    for part in ordered_map(fit_chunk, bounds, workers=config.fit_workers):
        fits.extend(part)
    return list(zip(local_taus, fits))


def step(state: DetectorState, config: DetectorConfig, x) -> Tuple[DetectorState, Optional[Alarm]]:
    """Consume one observation; fit every admissible split and raise an Alarm when S_t > threshold."""
    if state.alarmed:
        raise AlreadyAlarmed(f"detector already alarmed at t={state.alarm.t if state.alarm else '?'}")
    state.buffer.append(x)
    state.t += 1
    t = state.t

    if t <= config.warmup:
        log.debug("t=%d: warm-up, statistic not computed", t)
        return state, None

    start = 0
    if config.window_cap is not None and t > config.window_cap:
        start = t - config.window_cap
    window = state.buffer.snapshot(start)
    if not admissible_taus(len(window), config.margin):
        log.debug("t=%d: no admissible split (window=%d, margin=%d)", t, len(window), config.margin)
        return state, None

    try:
        fitted = _fit_step(state, config, window, start)
    except Exception:
        # leave the state as it was before this observation
        state.buffer.truncate(t - 1)
        state.t = t - 1
        raise
    if config.warm_start:
        state.last_params = {start + k: f.params for k, f in fitted}
    try:
        best = max_statistic(((k, f.achieved_value) for k, f in fitted), config.margin, len(window))
    except EmptyRange:
        return state, None

    tau_hat = start + best.tau
    state.trace.append(TracePoint(t=t, statistic=best.value, tau_hat=tau_hat))
    if best.value > config.threshold:
        state.alarmed = True
        state.alarm = Alarm(t=t, tau_hat=tau_hat, statistic=best.value)
        state.last_params = {}
        log.info("alarm at t=%d (S_t=%.4f > %.4f, tau_hat=%d)", t, best.value, config.threshold, tau_hat)
        return state, state.alarm
    return state, None


def run(stream: Iterable, config: DetectorConfig) -> DetectionResult:
    """Fold step over the stream until the first alarm or the end of the stream."""
    state = DetectorState.for_config(config)
    alarm: Optional[Alarm] = None
    for x in stream:
        state, alarm = step(state, config, x)
        if alarm is not None:
            break
    if alarm is None:
        log.debug("stream ended after %d steps without alarm", state.t)
        return DetectionResult(trace=list(state.trace))
    return DetectionResult(
        stopping_time=alarm.t,
        argmax_split=alarm.tau_hat,
        statistic=alarm.statistic,
        trace=list(state.trace),
    )

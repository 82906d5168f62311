# contrastcpd/schemas/detector.py
import math
from typing import List, Optional

from ..shared import BaseModel, root_validator, validator
from .discriminators import DiscriminatorSpec


class DetectorConfig(BaseModel):
    # +inf is the "never alarm" setting used when collecting null statistics
    threshold: float
    spec: DiscriminatorSpec
    warmup: int = 20
    margin: int = 10
    window_cap: Optional[int] = None
    seed: int = 0
    warm_start: bool = False
    fit_workers: int = 1

    @validator("threshold")
    def _threshold_not_nan(cls, v):
        if math.isnan(v) or v == -math.inf:
            raise ValueError("threshold must be a real number or +inf")
        return v

    @validator("margin")
    def _margin_positive(cls, v):
        if v < 1:
            raise ValueError("margin must be >= 1")
        return v

    @validator("warmup")
    def _warmup_non_negative(cls, v):
        if v < 0:
            raise ValueError("warmup must be >= 0")
        return v

    @validator("fit_workers")
    def _workers_positive(cls, v):
        if v < 1:
            raise ValueError("fit_workers must be >= 1")
        return v

    @root_validator(skip_on_failure=True)
    def _window_holds_a_split(cls, values):
        cap = values.get("window_cap")
        margin = values.get("margin")
        if cap is not None and cap < 2 * margin + 1:
            raise ValueError(f"window_cap must be >= 2*margin + 1 = {2 * margin + 1}")
        return values


class TracePoint(BaseModel):
    t: int
    statistic: float
    tau_hat: int


class Alarm(BaseModel):
    t: int
    # change-point estimate; diagnostic only, no localization guarantee
    tau_hat: int
    statistic: float


class DetectionResult(BaseModel):
    stopping_time: Optional[int] = None
    argmax_split: Optional[int] = None
    statistic: Optional[float] = None
    trace: List[TracePoint] = []

    @property
    def alarmed(self) -> bool:
        return self.stopping_time is not None

    @property
    def max_statistic(self) -> Optional[float]:
        if not self.trace:
            return None
        return max(p.statistic for p in self.trace)

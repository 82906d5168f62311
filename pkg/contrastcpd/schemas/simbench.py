# contrastcpd/schemas/simbench.py
import math
import statistics
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from scipy import stats

from ..shared import BaseModel, root_validator, validator


class Gaussian(BaseModel):
    kind: Literal["gaussian"] = "gaussian"
    mean: float = 0.0
    std: float = 1.0

    @validator("std")
    def _std_positive(cls, v):
        if not v > 0:
            raise ValueError("std must be > 0")
        return v

    @property
    def dim(self) -> int:
        return 1

    @property
    def spread(self) -> float:
        return self.std

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.mean, self.mean

    def logpdf(self, x):
        return stats.norm.logpdf(x, loc=self.mean, scale=self.std)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=size)


class Uniform(BaseModel):
    kind: Literal["uniform"] = "uniform"
    low: float
    high: float

    @root_validator(skip_on_failure=True)
    def _ordered(cls, values):
        if not values["high"] > values["low"]:
            raise ValueError("uniform needs high > low")
        return values

    @classmethod
    def centered(cls, half_width: float) -> "Uniform":
        return cls(low=-half_width, high=half_width)

    @property
    def dim(self) -> int:
        return 1

    @property
    def spread(self) -> float:
        return (self.high - self.low) / math.sqrt(12.0)

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.low, self.high

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def logpdf(self, x):
        return stats.uniform.logpdf(x, loc=self.low, scale=self.high - self.low)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=size)


class GaussianVector(BaseModel):
    kind: Literal["gaussian_vector"] = "gaussian_vector"
    mean: List[float]
    cov: List[List[float]]

    @root_validator(skip_on_failure=True)
    def _square(cls, values):
        d = len(values["mean"])
        cov = values["cov"]
        if d < 1 or len(cov) != d or any(len(r) != d for r in cov):
            raise ValueError("cov must be a d x d matrix matching mean")
        try:
            np.linalg.cholesky(np.asarray(cov, dtype=np.float64))
        except np.linalg.LinAlgError as e:
            raise ValueError("cov must be positive definite") from e
        return values

    @property
    def dim(self) -> int:
        return len(self.mean)

    def logpdf(self, x):
        return stats.multivariate_normal.logpdf(x, mean=self.mean, cov=self.cov)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.multivariate_normal(self.mean, self.cov, size=size)


Distribution = Union[Gaussian, Uniform, GaussianVector]


class ScenarioSpec(BaseModel):
    id: str
    pre: Distribution
    post: Distribution
    change_time: int
    length: int
    reps: int = 10
    # synthetic example number (1-3) when built by example_scenario
    example: Optional[int] = None
    seed: int = 0

    @root_validator(skip_on_failure=True)
    def _change_inside(cls, values):
        tau, T = values["change_time"], values["length"]
        if not 0 < tau < T:
            raise ValueError(f"need 0 < change_time < length, got {tau}, {T}")
        if values["pre"].dim != values["post"].dim:
            raise ValueError("pre and post laws must have the same dimension")
        return values

    @validator("reps")
    def _reps_positive(cls, v):
        if v < 1:
            raise ValueError("reps must be >= 1")
        return v


class BenchmarkRow(BaseModel):
    scenario: str
    family: str
    threshold: Optional[float]     # None when read back from JSON with an infinite threshold
    change_time: int
    # per replication: the stopping time, or None when the stream ended without an alarm
    stopping_times: List[Optional[int]]
    delays: List[int]
    mean_delay: Optional[float] = None
    std_delay: Optional[float] = None
    misses: int = 0
    false_alarms: int = 0

    @classmethod
    def from_stopping_times(
        cls,
        scenario: str,
        family: str,
        threshold: float,
        change_time: int,
        stopping_times: List[Optional[int]],
    ) -> "BenchmarkRow":
        delays = [st - change_time for st in stopping_times if st is not None and st > change_time]
        misses = sum(1 for st in stopping_times if st is None)
        false_alarms = sum(1 for st in stopping_times if st is not None and st <= change_time)
        mean = float(statistics.fmean(delays)) if delays else None
        std = float(statistics.stdev(delays)) if len(delays) >= 2 else (0.0 if delays else None)
        return cls(
            scenario=scenario,
            family=family,
            threshold=threshold,
            change_time=change_time,
            stopping_times=list(stopping_times),
            delays=delays,
            mean_delay=mean,
            std_delay=std,
            misses=misses,
            false_alarms=false_alarms,
        )

    @property
    def rep_outcomes(self) -> List[str]:
        out = []
        for st in self.stopping_times:
            if st is None:
                out.append("miss")
            elif st <= self.change_time:
                out.append("fa")
            else:
                out.append(str(st - self.change_time))
        return out


class Lemma1Report(BaseModel):
    tau: int
    t: int
    mc_reps: int
    scale: float
    js: float
    target: float
    mc_mean: float
    mc_stderr: float
    z: float

    @property
    def within(self) -> bool:
        return abs(self.z) <= 4.0

    @property
    def below_bound(self) -> bool:
        """Monte-Carlo mean does not exceed the JS target beyond 4 standard errors."""
        return self.mc_mean <= self.target + 4.0 * self.mc_stderr

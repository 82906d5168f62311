# contrastcpd/schemas/calibration.py
from typing import List

from ..shared import BaseModel, Field, root_validator, validator
from .discriminators import DiscriminatorSpec


class GaussianReference(BaseModel):
    """Pre-change law used to simulate null streams (mean and std of the signal before the change)."""
    mean: float = 0.0
    std: float = 1.0


class CalibrationConfig(BaseModel):
    reference: GaussianReference = Field(default_factory=GaussianReference)
    spec: DiscriminatorSpec
    n: int = 150
    reps: int = 10
    # order statistic counted from the top: 1 = largest, 2 = second largest, ...
    rank: int = 2
    margin: int = 10
    warmup: int = 20
    seed: int = 0
    workers: int = 1
    fit_workers: int = 1

    @validator("margin", "workers", "fit_workers")
    def _positive(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name} must be >= 1")
        return v

    @root_validator(skip_on_failure=True)
    def _counts(cls, values):
        reps, rank = values["reps"], values["rank"]
        if not reps >= rank >= 1:
            raise ValueError(f"need reps >= rank >= 1, got reps={reps}, rank={rank}")
        if values["n"] <= values["warmup"]:
            raise ValueError(f"stream length n={values['n']} must exceed warmup={values['warmup']}")
        return values


class CalibrationReport(BaseModel):
    threshold: float
    rank: int
    maxima: List[float]

# contrastcpd/schemas/report.py
from typing import Any, Dict, List, Optional

from ..shared import BaseModel, root_validator, validator
from .calibration import CalibrationReport
from .detector import TracePoint
from .simbench import BenchmarkRow, ScenarioSpec

SCHEMA_VERSION = 1


class IngestSpec(BaseModel):
    path: Optional[str] = None
    use_stdin: bool = False
    # zero-based column indices kept from each comma-separated record; None keeps all
    columns: Optional[List[int]] = None
    downsample_stride: int = 1
    normalize: bool = False
    calibration_prefix_len: Optional[int] = None

    @validator("downsample_stride")
    def _stride_positive(cls, v):
        if v < 1:
            raise ValueError("downsample_stride must be >= 1")
        return v

    @root_validator(skip_on_failure=True)
    def _source_and_prefix(cls, values):
        if not values.get("use_stdin") and not values.get("path"):
            raise ValueError("either a path or use_stdin is required")
        prefix = values.get("calibration_prefix_len")
        if values.get("normalize") and (prefix is None or prefix < 2):
            raise ValueError("normalize needs calibration_prefix_len >= 2")
        if prefix is not None and prefix < 2:
            raise ValueError("calibration_prefix_len must be >= 2")
        return values


class IngestStats(BaseModel):
    records_read: int
    samples_kept: int
    mean: Optional[List[float]] = None
    std: Optional[List[float]] = None


class RunReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    config: Dict[str, Any]
    # None once written: an infinite threshold (never alarms) has no JSON number
    threshold: Optional[float]
    calibration: Optional[CalibrationReport] = None
    ingest: Optional[IngestStats] = None
    trace: List[TracePoint] = []
    stopping_time: Optional[int] = None
    # diagnostic change-point estimate at the alarm
    tau_hat: Optional[int] = None
    statistic: Optional[float] = None
    wall_time: float = 0.0


class PublishedCell(BaseModel):
    threshold: float
    mean_delay: float
    std_delay: float


class SimulationReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    scenario: ScenarioSpec
    family: str
    threshold: Optional[float]
    mean_delay: Optional[float] = None
    std_delay: Optional[float] = None
    calibration: Optional[CalibrationReport] = None
    row: BenchmarkRow
    published: Optional[PublishedCell] = None
    wall_time: float = 0.0

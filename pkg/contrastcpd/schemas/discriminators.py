# contrastcpd/schemas/discriminators.py
import math
from typing import List, Literal, Optional

from ..shared import BaseModel, Field, root_validator, validator

FAMILIES = ("poly", "fourier", "linear", "mlp")
DEFAULT_MLP_WIDTHS = [1, 2, 3, 1]


class OptimizerSettings(BaseModel):
    """
    Adam settings drive the mlp family. Families that are linear in their parameters
    have a concave objective and are solved by damped Newton ascent instead, stopping
    once the Newton decrement falls below `tolerance` or after `max_iter` iterations.
    """
    epochs: int = 50
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iter: int = 100
    tolerance: float = 1e-10

    @validator("epochs", "max_iter")
    def _count_non_negative(cls, v):
        if v < 0:
            raise ValueError("iteration counts must be >= 0")
        return v

    @validator("learning_rate")
    def _lr_non_negative(cls, v):
        # lr == 0 is allowed: it freezes parameters at initialization
        if not math.isfinite(v) or v < 0:
            raise ValueError("learning_rate must be finite and >= 0")
        return v

    @validator("beta1", "beta2")
    def _beta_range(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError("Adam betas must lie in [0, 1)")
        return v

    @validator("tolerance")
    def _tolerance_positive(cls, v):
        if not v > 0:
            raise ValueError("tolerance must be > 0")
        return v


class DiscriminatorSpec(BaseModel):
    family: Literal["poly", "fourier", "linear", "mlp"]
    degree: Optional[int] = None          # poly
    num_terms: Optional[int] = None       # fourier
    input_dim: Optional[int] = None       # linear
    widths: Optional[List[int]] = None    # mlp
    # linear-class constraints: ||S w|| <= weight_radius, |b| <= bias_radius, S = Sigma^{1/2}
    # None leaves that part unconstrained
    weight_radius: Optional[float] = None
    bias_radius: Optional[float] = None
    sigma_sqrt: Optional[List[List[float]]] = None
    clamp_bound: float = 10.0
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)

    @validator("weight_radius", "bias_radius")
    def _radius(cls, v):
        if v is None or v == math.inf:
            return None
        if not v > 0:
            raise ValueError("constraint radii must be positive")
        return v

    @root_validator(skip_on_failure=True)
    def _family_fields(cls, values):
        fam = values.get("family")
        if fam == "poly":
            if values.get("degree") is None or values["degree"] < 0:
                raise ValueError("poly family needs degree >= 0")
        elif fam == "fourier":
            if values.get("num_terms") is None or values["num_terms"] < 1:
                raise ValueError("fourier family needs num_terms >= 1")
        elif fam == "linear":
            if values.get("input_dim") is None:
                values["input_dim"] = 1
            if values["input_dim"] < 1:
                raise ValueError("linear family needs input_dim >= 1")
            sq = values.get("sigma_sqrt")
            if sq is not None:
                d = values["input_dim"]
                if len(sq) != d or any(len(row) != d for row in sq):
                    raise ValueError(f"sigma_sqrt must be {d}x{d}")
        elif fam == "mlp":
            widths = values.get("widths") or list(DEFAULT_MLP_WIDTHS)
            if len(widths) < 2 or any(w < 1 for w in widths):
                raise ValueError("mlp widths must be positive with at least input and output layers")
            if widths[-1] != 1:
                raise ValueError("mlp output width must be 1")
            values["widths"] = widths
        clamp = values.get("clamp_bound")
        if clamp is None or not clamp > 0:
            raise ValueError("clamp_bound must be > 0")
        return values

    @property
    def is_linear_in_params(self) -> bool:
        return self.family != "mlp"

    @property
    def is_constrained(self) -> bool:
        return self.family == "linear" and (
            self.weight_radius is not None or self.bias_radius is not None
        )

    @property
    def sample_dim(self) -> int:
        if self.family == "linear":
            return int(self.input_dim)
        if self.family == "mlp":
            return int(self.widths[0])
        return 1

    @property
    def label(self) -> str:
        if self.family == "poly":
            return f"poly:{self.degree}"
        if self.family == "fourier":
            return f"fourier:{self.num_terms}"
        if self.family == "linear":
            return f"linear:{self.input_dim}"
        return "mlp:" + ",".join(str(w) for w in self.widths)


def parse_family(text: str, **overrides) -> DiscriminatorSpec:
    """
    Parse `poly:<degree>`, `fourier:<q>`, `linear[:dim]`, `mlp[:w1,w2,...]`.
    Extra keyword arguments are passed to DiscriminatorSpec (clamp_bound, optimizer, ...).
    """
    raw = (text or "").strip().lower()
    name, _, arg = raw.partition(":")
    if name not in FAMILIES:
        raise ValueError(f"unknown discriminator family {text!r} (expected one of {', '.join(FAMILIES)})")
    try:
        if name == "poly":
            return DiscriminatorSpec(family="poly", degree=int(arg), **overrides)
        if name == "fourier":
            return DiscriminatorSpec(family="fourier", num_terms=int(arg), **overrides)
        if name == "linear":
            return DiscriminatorSpec(family="linear", input_dim=int(arg) if arg else 1, **overrides)
        widths = [int(w) for w in arg.split(",")] if arg else list(DEFAULT_MLP_WIDTHS)
        return DiscriminatorSpec(family="mlp", widths=widths, **overrides)
    except ValueError as e:
        # int() failures and validation errors alike read as a bad family string
        raise ValueError(f"bad discriminator family {text!r}: {e}") from e

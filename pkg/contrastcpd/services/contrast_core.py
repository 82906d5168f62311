# contrastcpd/services/contrast_core.py
"""
Contrastive functional T_{tau,t}(f) and the max statistic S_t.

For a split of t discriminator outputs f_1..f_t at tau (tau samples before, t - tau after):

    T = (t - tau)/t * sum_{s<=tau} [f_s - ln((1 + e^{f_s})/2)] - tau/t * sum_{s>tau} ln((1 + e^{f_s})/2)

All functions here are pure; nothing holds state between calls.
"""
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

import numpy as np

from ..errors import EmptyRange

LN2 = float(np.log(2.0))

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class SplitView:
    pre: np.ndarray
    post: np.ndarray
    tau: int
    t: int

    def __post_init__(self):
        if self.t < 2:
            raise ValueError(f"split view needs t >= 2, got t={self.t}")
        if not 1 <= self.tau <= self.t - 1:
            raise ValueError(f"tau={self.tau} outside 1..{self.t - 1}")
        if len(self.pre) != self.tau or len(self.post) != self.t - self.tau:
            raise ValueError(
                f"segment lengths ({len(self.pre)}, {len(self.post)}) do not match tau={self.tau}, t={self.t}"
            )

    @classmethod
    def from_outputs(cls, outputs, tau: int) -> "SplitView":
        arr = np.asarray(outputs, dtype=np.float64).reshape(-1)
        return cls(pre=arr[:tau], post=arr[tau:], tau=int(tau), t=int(arr.size))


@dataclass(frozen=True)
class StatValue:
    value: float
    tau: int


def softplus_half(x: ArrayLike) -> ArrayLike:
    """ln((1 + e^x)/2), stable for large |x|; exactly 0 at x = 0."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.maximum(arr, 0.0) + np.log1p(np.exp(-np.abs(arr))) - LN2
    out = np.where(arr == 0.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def sigmoid(x: ArrayLike) -> ArrayLike:
    arr = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(arr))
    out = np.where(arr >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if out.ndim == 0:
        return float(out)
    return out


def contrastive_value(view: SplitView) -> float:
    tau, t = view.tau, view.t
    pre = np.asarray(view.pre, dtype=np.float64)
    post = np.asarray(view.post, dtype=np.float64)
    # np.sum is pairwise on contiguous float64, which bounds drift on long segments
    pre_sum = np.sum(pre - softplus_half(pre))
    post_sum = np.sum(softplus_half(post))
    return float((t - tau) / t * pre_sum - tau / t * post_sum)


def contrastive_gradient(view: SplitView) -> np.ndarray:
    """dT/df_s for every sample, pre segment first."""
    tau, t = view.tau, view.t
    pre = np.asarray(view.pre, dtype=np.float64)
    post = np.asarray(view.post, dtype=np.float64)
    g_pre = (t - tau) / t * (1.0 - sigmoid(pre))
    g_post = -(tau / t) * sigmoid(post)
    return np.concatenate([np.atleast_1d(g_pre), np.atleast_1d(g_post)])


def batch_value_and_gradient(outputs: np.ndarray, taus: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized T and dT/df for B splits of the same t samples.

    outputs: (B, t) discriminator outputs, one row per candidate split
    taus:    (B,) split index per row
    """
    outputs = np.asarray(outputs, dtype=np.float64)
    B, t = outputs.shape
    taus = np.asarray(taus, dtype=np.float64).reshape(B, 1)
    is_pre = np.arange(t)[None, :] < taus
    a = (t - taus) / t
    c = taus / t

    sp = softplus_half(outputs)
    terms = np.where(is_pre, a * (outputs - sp), -c * sp)
    values = terms.sum(axis=-1)

    sig = sigmoid(outputs)
    grads = np.where(is_pre, a * (1.0 - sig), -c * sig)
    return values, grads


def admissible_taus(t: int, margin: int) -> range:
    return range(margin, t - margin + 1)


def max_statistic(values: Iterable[Tuple[int, float]], margin: int, t: int) -> StatValue:
    """Max of (tau, T) pairs over tau in {margin, ..., t - margin}; ties go to the smallest tau."""
    if margin < 1:
        raise ValueError(f"margin must be >= 1, got {margin}")
    best: StatValue | None = None
    for tau, value in values:
        tau = int(tau)
        if tau < margin or tau > t - margin:
            continue
        value = float(value)
        if best is None or value > best.value or (value == best.value and tau < best.tau):
            best = StatValue(value=value, tau=tau)
    if best is None:
        raise EmptyRange(f"no admissible tau in {{{margin}, ..., {t - margin}}}")
    return best

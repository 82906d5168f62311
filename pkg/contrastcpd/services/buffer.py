# contrastcpd/services/buffer.py
from typing import Optional, Tuple

import numpy as np

from ..errors import DimensionMismatch


class ObservationBuffer:
    """Append-only series of scalar or fixed-dimension vector samples."""

    def __init__(self, dim: int = 1, capacity: int = 256):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self._data = np.empty((max(capacity, 1), dim), dtype=np.float64)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def append(self, x) -> None:
        row = np.asarray(x, dtype=np.float64).reshape(-1)
        if row.size != self.dim:
            raise DimensionMismatch(f"buffer holds {self.dim}-dimensional samples, got {row.size} components")
        if not np.all(np.isfinite(row)):
            raise ValueError("observations must be finite")
        if self._size == self._data.shape[0]:
            grown = np.empty((2 * self._data.shape[0], self.dim), dtype=np.float64)
            grown[: self._size] = self._data[: self._size]
            self._data = grown
        self._data[self._size] = row
        self._size += 1

    def snapshot(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        """Read-only (n, dim) copy of samples [start, stop)."""
        stop = self._size if stop is None else min(stop, self._size)
        view = self._data[start:stop].copy()
        view.setflags(write=False)
        return view

    def split(self, tau: int, start: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        """(pre, post) snapshots of the window starting at `start`, split after its first tau samples."""
        window = self.snapshot(start)
        if not 1 <= tau <= len(window) - 1:
            raise ValueError(f"tau={tau} outside 1..{len(window) - 1}")
        return window[:tau], window[tau:]

    def truncate(self, size: int) -> None:
        """Drop every sample past the first `size`."""
        if not 0 <= size <= self._size:
            raise ValueError(f"cannot truncate {self._size} samples to {size}")
        self._size = size

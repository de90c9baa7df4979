"""Sampled (t, value) series with units metadata."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """Immutable sampled signal on a strictly increasing time grid."""

    t: np.ndarray
    value: np.ndarray
    t_unit: str = "s"
    value_unit: str = ""

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.value, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size or t.size == 0:
            raise ValueError("t and value must be 1-D arrays of equal nonzero length")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise ValueError("non-finite sample in time series")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("time grid must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "value", v)

    def __len__(self) -> int:
        return self.t.size

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def interp(self, t: float) -> float:
        """Linear interpolation; extrapolation is rejected."""
        lo, hi = self.span
        if t < lo or t > hi:
            raise ValueError(f"t={t} outside sampled span [{lo}, {hi}]")
        return float(np.interp(t, self.t, self.value))

"""Voltage-gated channel kinetics and on-off keying voltage waveforms.

The transition rates use the single-gate potassium parametrization in the
original Hodgkin-Huxley voltage convention, where depolarization is negative.
Applied voltages (depolarization positive, the convention of the modulation
waveforms) are mapped through :func:`applied_to_hh`, v_hh = -v_applied, which
makes the steady-state opening probability increase with applied voltage:
+200 mV opens the channels (p_inf ~ 0.995), -200 mV closes them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .timeseries import TimeSeries

# Half-width of the guard band around the removable singularity at
# v_hh = -10 mV inside which a series expansion replaces the raw quotient.
_SINGULAR_BAND_MV = 1e-7


@dataclass(frozen=True)
class RatePair:
    """Opening/closing transition rates in 1/ms."""

    alpha1: float
    alpha2: float

    def __post_init__(self):
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ValueError("rates must be non-negative")
        if self.alpha1 + self.alpha2 <= 0.0:
            raise ValueError("total rate must be positive")


def applied_to_hh(v_applied_mv: float) -> float:
    """Sign adapter between applied-voltage and rate-table conventions."""
    if not math.isfinite(v_applied_mv):
        raise ValueError("voltage must be finite")
    return -v_applied_mv


def potassium_rates(v_hh_mv: float) -> RatePair:
    """Single-gate potassium transition rates at voltage v (rate-table sign).

    alpha1 = 0.01 (v+10) / (exp((v+10)/10) - 1), alpha2 = 0.125 exp(v/80),
    both in 1/ms.  The removable singularity at v = -10 is evaluated by its
    limit 0.1 with a short series expansion inside a +-1e-7 mV band.
    """
    if not math.isfinite(v_hh_mv):
        raise ValueError("voltage must be finite")
    dv = v_hh_mv + 10.0
    if abs(dv) < _SINGULAR_BAND_MV:
        # u/(e^u - 1) = 1 - u/2 + O(u^2) with u = dv/10
        alpha1 = 0.1 * (1.0 - 0.05 * dv)
    else:
        alpha1 = 0.01 * dv / math.expm1(dv / 10.0)
    alpha2 = 0.125 * math.exp(v_hh_mv / 80.0)
    return RatePair(alpha1=alpha1, alpha2=alpha2)


def steady_state(rates: RatePair) -> tuple[float, float]:
    """(final opening probability, time constant in ms) for constant voltage."""
    total = rates.alpha1 + rates.alpha2
    return rates.alpha1 / total, 1.0 / total


@dataclass(frozen=True)
class VoltageWaveform:
    """Piecewise-constant applied voltage: ordered (duration [s], level [mV])."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        segs = tuple((float(d), float(v)) for d, v in self.segments)
        if not segs:
            raise ValueError("waveform needs at least one segment")
        for d, v in segs:
            if d <= 0.0:
                raise ValueError("segment durations must be positive")
            if not math.isfinite(v):
                raise ValueError("segment level must be finite")
        object.__setattr__(self, "segments", segs)

    @property
    def duration(self) -> float:
        return sum(d for d, _ in self.segments)

    def boundaries(self) -> list[float]:
        """Cumulative segment edges, including 0 and the total duration."""
        edges = [0.0]
        for d, _ in self.segments:
            edges.append(edges[-1] + d)
        return edges

    def level_at(self, t: float) -> float:
        """Level in mV at time t; right-continuous at interior edges."""
        if t < 0.0 or t > self.duration:
            raise ValueError("t outside waveform")
        acc = 0.0
        for d, v in self.segments:
            acc += d
            if t < acc:
                return v
        return self.segments[-1][1]


def ook_waveforms(
    v_on_mv: float, v_off_mv: float, T1: float, T_slot: float
) -> tuple[VoltageWaveform, VoltageWaveform]:
    """Bit-0 and bit-1 keying waveforms on a slot of length T_slot.

    Bit 0 holds v_off for the whole slot; bit 1 holds v_on on [0, T1] and
    v_off on [T1, T_slot].
    """
    if not 0.0 < T1 < T_slot:
        raise ValueError("require 0 < T1 < T_slot")
    v0 = VoltageWaveform(((T_slot, v_off_mv),))
    v1 = VoltageWaveform(((T1, v_on_mv), (T_slot - T1, v_off_mv)))
    return v0, v1


def _sample_times(waveform: VoltageWaveform, dt_sample: float) -> np.ndarray:
    """Uniform grid merged with exact segment edges (deduplicated)."""
    total = waveform.duration
    n = int(math.floor(total / dt_sample + 1e-9))
    uniform = np.arange(n + 1) * dt_sample
    ts = np.union1d(np.round(uniform, 15), np.round(waveform.boundaries(), 15))
    return ts[(ts >= 0.0) & (ts <= total * (1 + 1e-12))]


def evolve(p0: float, waveform: VoltageWaveform, dt_sample: float) -> TimeSeries:
    """Opening probability under a piecewise-constant waveform.

    Within each segment the exact solution
    P(t) = p_inf + (P_start - p_inf) * exp(-(t - t_start)/t_c)
    is evaluated; the end value of each segment seeds the next, so the trace
    is continuous.  Samples cover a uniform dt_sample grid plus the exact
    segment boundaries.
    """
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must be a probability")
    if dt_sample <= 0.0:
        raise ValueError("dt_sample must be positive")
    ts = _sample_times(waveform, dt_sample)
    out = np.empty_like(ts)

    edges = waveform.boundaries()
    # Interior edges route each sample to its segment; an exact boundary
    # sample belongs to the earlier segment (the trace is continuous there,
    # so the value is the same either way).
    interior = np.round(edges[1:-1], 15)
    seg_of = np.searchsorted(interior, ts, side="left")

    p_start = p0
    for j, (duration, level) in enumerate(waveform.segments):
        p_inf, tc_ms = steady_state(potassium_rates(applied_to_hh(level)))
        tc_s = tc_ms * 1e-3
        mask = seg_of == j
        out[mask] = p_inf + (p_start - p_inf) * np.exp(-(ts[mask] - edges[j]) / tc_s)
        p_start = p_inf + (p_start - p_inf) * math.exp(-duration / tc_s)
    out = np.clip(out, 0.0, 1.0)  # guard 1-ulp excursions only
    return TimeSeries(t=ts, value=out, t_unit="s", value_unit="probability")


def evolve_ode(
    p0: float,
    v_applied_mv: Callable[[float], float] | float,
    t_grid: Sequence[float],
    substeps: int = 1,
) -> TimeSeries:
    """Fourth-order Runge-Kutta integration of the gating ODE.

    Secondary code path for arbitrary (not piecewise-constant) applied
    voltages; also serves as the independent oracle for :func:`evolve`.
    ``v_applied_mv`` may be a callable of time [s] or a constant.
    """
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must be a probability")
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size < 2 or not np.all(np.diff(ts) > 0):
        raise ValueError("t_grid must be increasing with at least two points")
    if callable(v_applied_mv):
        vfun = v_applied_mv
    else:
        level = float(v_applied_mv)
        vfun = lambda _t: level  # noqa: E731

    def dpdt(t: float, p: float) -> float:
        r = potassium_rates(applied_to_hh(vfun(t)))
        # rates are 1/ms, time axis is seconds
        return 1e3 * (r.alpha1 * (1.0 - p) - r.alpha2 * p)

    out = np.empty_like(ts)
    out[0] = p0
    p = p0
    for i in range(ts.size - 1):
        h = (ts[i + 1] - ts[i]) / substeps
        t = ts[i]
        for _ in range(substeps):
            k1 = dpdt(t, p)
            k2 = dpdt(t + 0.5 * h, p + 0.5 * h * k1)
            k3 = dpdt(t + 0.5 * h, p + 0.5 * h * k2)
            k4 = dpdt(t + h, p + h * k3)
            p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        out[i + 1] = p
    return TimeSeries(t=ts, value=np.clip(out, 0.0, 1.0), t_unit="s", value_unit="probability")

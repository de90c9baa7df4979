"""Series solution under the empty-exterior assumption and the release bound.

With the exterior concentration pinned at zero the interior problem has a
classical eigenfunction solution.  The eigenvalues gamma_n are the positive
roots of

    gamma * cot(gamma) + h - 1 = 0,

one per interval ((n-1) pi, n pi) for h > 0.  The impulse release response is

    phi_u(tau | rho') = sum_n G_n rho' exp(-gamma_n^2 tau) sin(gamma_n rho')

with G_n = 8 pi r_m^2 h sin(gamma_n) (gamma_n^2 + (h-1)^2) / (gamma_n^2 + h (h-1)),
equal on the root locus to -8 pi r_m^2 (gamma_n cos gamma_n - sin gamma_n) * (same
fraction); the two printed forms agreeing is itself a root-quality check.

Numerical notes:

- Roots are located as gamma_n = k pi - delta with delta in (0, pi) solved
  from (k pi - delta) cos(delta) = (h - 1) sin(delta).  Working in delta keeps
  sin(gamma_n)/cos(gamma_n) fully accurate even when gamma_n hugs k pi at
  large h, where evaluating sin at the raw root loses ~5 digits.
- The keyed-signal series are evaluated in regrouped form: the tau-independent
  parts are replaced by their exact sums (mass balance: the source steady
  state releases 4 pi r_s^2 S, the initial content totals T 4/3 pi r_m^3),
  leaving only exp(-gamma^2 tau) remainders.  The raw printed series converge
  like 1/n (conditionally) and cannot reach the required tolerances directly.
- Series are accumulated with exact (compensated) summation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import SourceModel, initial_flux
from .physio import DimensionlessParams, TransmitterSpec
from .timeseries import TimeSeries

# Smallest dimensionless time the impulse/bound series support; below this the
# required number of eigenmodes grows without a payoff (callers should use the
# transform route instead).
TAU_MIN = 1e-6

# exp(-x) beyond this exponent is negligible against the leading terms
_EXP_CUTOFF = 45.0


class ConvergenceError(ArithmeticError):
    """Series truncation could not reach the requested tolerance."""


@dataclass(frozen=True)
class SeriesTruncation:
    """n_terms is a floor on summed terms; tail_tol stops the sum early once a
    term falls below tail_tol * |running sum|."""

    n_terms: int = 200
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.n_terms < 1:
            raise ValueError("n_terms must be >= 1")
        if not 0.0 < self.tail_tol < 1.0:
            raise ValueError("tail_tol must be in (0, 1)")


@dataclass(frozen=True)
class EigenRoots:
    """First eigenvalues for a given h: gammas[i] = k[i]*pi - delta[i]."""

    h: float
    gammas: np.ndarray
    k: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        for name in ("gammas", "delta"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        karr = np.asarray(self.k, dtype=np.int64)
        karr.setflags(write=False)
        object.__setattr__(self, "k", karr)
        if not np.all(np.diff(self.gammas) > 0) or not np.all(self.gammas > 0):
            raise ValueError("roots must be positive and strictly increasing")

    def __len__(self) -> int:
        return self.gammas.size

    # sin/cos at the roots through the reduced angle (full precision at any h):
    # sin(k pi - d) = (-1)^(k+1) sin d, cos(k pi - d) = (-1)^k cos d
    def sin_gamma(self) -> np.ndarray:
        sign = np.where(self.k % 2 == 0, -1.0, 1.0)
        return sign * np.sin(self.delta)

    def cos_gamma(self) -> np.ndarray:
        sign = np.where(self.k % 2 == 0, 1.0, -1.0)
        return sign * np.cos(self.delta)


def root_residual(h: float, gamma: float) -> float:
    """gamma*cot(gamma) + h - 1 at a candidate root."""
    return gamma / math.tan(gamma) + h - 1.0


def _solve_bracket(h: float, k: int) -> float:
    """Root of (k pi - d) cos d - (h-1) sin d on d in (0, pi); returns delta."""
    kpi = k * math.pi

    def g(d: float) -> float:
        return (kpi - d) * math.cos(d) - (h - 1.0) * math.sin(d)

    lo, hi = 1e-300, math.pi * (1.0 - 1e-16)
    glo = g(lo)
    if not glo > 0.0:  # pragma: no cover - bracket is analytic for h >= 0
        raise ArithmeticError(f"bracket lost at k={k}, h={h}")
    # bisection to a 1e-6-wide interval, then Newton polish
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    d = 0.5 * (lo + hi)
    for _ in range(60):
        gd = g(d)
        dg = -(kpi - d) * math.sin(d) - h * math.cos(d)
        if dg == 0.0:
            break
        step = gd / dg
        d_new = d - step
        if not lo <= d_new <= hi:
            d_new = min(max(d_new, lo), hi)
        if d_new == d:
            break
        d = d_new
        if abs(step) < 1e-15 * d:
            break
    return d


def find_roots(h: float, n: int) -> EigenRoots:
    """First n positive roots of gamma*cot(gamma) + h - 1 = 0.

    For h > 0 root n sits in ((n-1) pi, n pi); for h = 0 the equation
    degenerates at gamma = 0 and the genuine roots shift one interval up.
    """
    if h < 0.0:
        raise ValueError("require h >= 0")
    if n < 1:
        raise ValueError("need n >= 1")
    offset = 1 if h == 0.0 else 0
    ks = np.arange(1, n + 1, dtype=np.int64) + offset
    deltas = np.array([_solve_bracket(h, int(k)) for k in ks])
    gammas = ks * math.pi - deltas
    return EigenRoots(h=h, gammas=gammas, k=ks, delta=deltas)


def g_coefficient(h: float, gamma_n: float, r_m: float) -> float:
    """Series coefficient G_n (carries the 8 pi r_m^2 factor, units m^2).

    Both printed forms are evaluated; they only coincide on the root locus,
    so their disagreement flags a bad root.
    """
    s, c = math.sin(gamma_n), math.cos(gamma_n)
    frac = (gamma_n**2 + (h - 1.0) ** 2) / (gamma_n**2 + h * (h - 1.0))
    form_cos = -8.0 * math.pi * r_m**2 * (gamma_n * c - s) * frac
    form_sin = 8.0 * math.pi * r_m**2 * h * s * frac
    if h > 0.0:
        scale = max(abs(form_sin), abs(form_cos))
        if scale > 0.0 and abs(form_cos - form_sin) > 1e-8 * scale:
            raise ArithmeticError(
                f"G_n forms disagree at gamma={gamma_n} (h={h}): {form_cos} vs {form_sin}"
            )
    return form_sin


def g_coefficients(roots: EigenRoots, r_m: float) -> np.ndarray:
    """Vector of G_n from reduced-angle trig (exact sin(gamma) at any h)."""
    g = roots.gammas
    h = roots.h
    frac = (g**2 + (h - 1.0) ** 2) / (g**2 + h * (h - 1.0))
    return 8.0 * math.pi * r_m**2 * h * roots.sin_gamma() * frac


def _fsum(terms: np.ndarray) -> float:
    return math.fsum(terms.tolist())


def impulse_response_u(
    tau: float,
    rho_prime: float,
    roots: EigenRoots,
    r_m: float,
    trunc: SeriesTruncation = SeriesTruncation(),
) -> float:
    """Series impulse release response phi_u(tau | rho') [m^2 per unit tau].

    tau below TAU_MIN is rejected (the delta-source series needs ever more
    modes there); supply enough roots for exp(-gamma^2 tau) to die out or a
    ConvergenceError is raised.
    """
    if tau < TAU_MIN:
        raise ValueError(f"tau={tau} below smallest supported tau {TAU_MIN}")
    if not 0.0 < rho_prime <= 1.0:
        raise ValueError("require 0 < rho_prime <= 1")
    gn = g_coefficients(roots, r_m)
    g = roots.gammas
    sin_rp = _sin_gamma_rho(roots, rho_prime)
    terms = gn * rho_prime * np.exp(-(g**2) * tau) * sin_rp

    total = 0.0
    comp = 0.0  # Kahan compensation
    for i in range(terms.size):
        term = float(terms[i])
        y = term - comp
        t_new = total + y
        comp = (t_new - total) - y
        total = t_new
        if i + 1 >= trunc.n_terms and abs(term) < trunc.tail_tol * max(abs(total), 1e-300):
            return total
    raise ConvergenceError(
        f"series not converged after {len(roots)} terms at tau={tau}; supply more roots"
    )


def _sin_gamma_rho(roots: EigenRoots, rho: float) -> np.ndarray:
    # plain sin: for rho < 1 the argument sits away from the k*pi pinch that
    # makes sin(gamma_n) itself need the reduced-angle form
    return np.sin(roots.gammas * rho)


def roots_for_grid(h: float, tau_min: float, trunc: SeriesTruncation) -> EigenRoots:
    """Enough roots for the regrouped bound series at the smallest grid tau."""
    gamma_max = math.sqrt(_EXP_CUTOFF / max(tau_min, TAU_MIN))
    n = max(trunc.n_terms, int(math.ceil(gamma_max / math.pi)) + 4)
    return find_roots(h, n)


def upper_signal(
    spec: TransmitterSpec,
    source: SourceModel,
    grid: np.ndarray,
    trunc: SeriesTruncation = SeriesTruncation(),
    p_open_final: float = 1.0,
) -> tuple[TimeSeries, TimeSeries]:
    """Closed-form bound signals (w_u, M_u) on a positive increasing grid [s].

    Regrouped series: the steady parts carry their exact sums (source steady
    state 4 pi r_s^2 S; total initial content T 4/3 pi r_m^3), the remainders
    decay like exp(-gamma_n^2 tau).  A (0, closed-form boundary flux) sample
    is prepended to w_u and (0, 0) to M_u.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or not np.all(t > 0) or not np.all(np.diff(t) > 0):
        raise ValueError("grid must be positive and strictly increasing")
    t0 = spec.t0
    taus = t / t0
    if taus[0] < TAU_MIN:
        raise ValueError(
            f"grid point t={t[0]} is below the smallest supported dimensionless time "
            f"{TAU_MIN} (t >= {TAU_MIN * t0}); not extrapolating"
        )
    dp = DimensionlessParams.from_spec(spec, p_open_final)
    h = dp.h
    if h == 0.0:
        # closed membrane: nothing escapes, and the regrouped steady
        # constants (which assume an eventual drain) do not apply
        zero = np.zeros(t.size + 1)
        ts = np.concatenate(([0.0], t))
        return (
            TimeSeries(t=ts, value=zero, value_unit="molecules/s"),
            TimeSeries(t=ts, value=zero.copy(), value_unit="molecules"),
        )
    roots = roots_for_grid(h, float(taus[0]), trunc)

    g = roots.gammas
    gn = g_coefficients(roots, spec.r_m)
    rho_s = spec.r_s / spec.r_m
    sin_gr = _sin_gamma_rho(roots, rho_s)
    sin_g = roots.sin_gamma()

    s_coeff = gn * (source.S_rate * spec.r_s / (g**2 * spec.r_m)) * sin_gr
    t_coeff = gn * (source.T_conc * h * spec.D1 / (g**2 * spec.r_m)) * sin_g
    s_steady = 4.0 * math.pi * spec.r_s**2 * source.S_rate
    t_total = source.T_conc * (4.0 / 3.0) * math.pi * spec.r_m**3
    m_s_coeff = s_coeff * (spec.r_m**2 / (g**2 * spec.D1))
    m_t_coeff = gn * (source.T_conc * h * spec.r_m / g**4) * sin_g

    w_u = np.empty_like(t)
    m_u = np.empty_like(t)
    for i, tau in enumerate(taus):
        decay = np.exp(-(g**2) * tau)
        w_u[i] = s_steady - _fsum(s_coeff * decay) + _fsum(t_coeff * decay)
        m_u[i] = (
            s_steady * t[i]
            - _fsum(m_s_coeff * (1.0 - decay))
            + (t_total - _fsum(m_t_coeff * decay))
        )

    w0 = initial_flux(spec, source, p_open_final)
    w_series = TimeSeries(
        t=np.concatenate(([0.0], t)),
        value=np.concatenate(([w0], w_u)),
        value_unit="molecules/s",
    )
    m_series = TimeSeries(
        t=np.concatenate(([0.0], t)),
        value=np.concatenate(([0.0], m_u)),
        value_unit="molecules",
    )
    if np.any(np.diff(m_series.value) < -1e-9 * max(m_u.max(), 1.0)):
        raise ArithmeticError("M_u lost monotonicity beyond numerical tolerance")
    return w_series, m_series

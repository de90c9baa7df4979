"""Figure-reproduction pipelines: deterministic CSV emission for the CLI.

Three scenarios mirror the study's figures:

- fig3-gating: opening-probability traces for the bit-1 keying waveform at
  several on-voltages,
- fig4-compare: analytic release rate for several channel counts next to the
  particle-based estimate at two step sizes, joined per bin with CI-overlap
  flags,
- fig5-bound: cumulative release versus its closed-form upper bound, with the
  relative gap at the end of the on-interval.

All CSVs are RFC-4180-style with '.' decimals, fixed headers, and are written
atomically (temp file + rename), so a re-run replaces files in one step.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic, bounded, gating, pbs
from .physio import TransmitterSpec, default_spec, with_channels

SCENARIOS = ("fig3-gating", "fig4-compare", "fig5-bound")

FIG3_V_ON_MV = (25.0, 50.0, 200.0, -200.0)
FIG4_CHANNEL_COUNTS = (100, 500, 10_000_000)
FIG4_PBS_DTS = (1e-5, 1e-6)


@dataclass
class ExperimentConfig:
    """Settings shared by the scenario pipelines."""

    scenario: str
    spec: TransmitterSpec = field(default_factory=default_spec)
    output_dir: Path = Path("ionmod_out")
    v_on_mv: float = 200.0
    v_off_mv: float = -200.0
    seed: int = 0
    quick: bool = False
    n_grid: int = 200
    pbs_trials: int = 1000
    pbs_trials_explicit: bool = False  # an explicit --trials bypasses --quick scaling
    pbs_bins: int = 40
    n_terms: int = 200
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; pick one of {SCENARIOS}")
        self.output_dir = Path(self.output_dir)

    @property
    def grid_points(self) -> int:
        return max(20, self.n_grid // 10) if self.quick else self.n_grid

    @property
    def trials(self) -> int:
        if self.pbs_trials_explicit or not self.quick:
            return self.pbs_trials
        return max(10, self.pbs_trials // 10)


def write_csv(path: Path, header: str, rows) -> Path:
    """Atomic CSV write: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".10g")


def _n_label(n: int) -> str:
    return f"N{n}"


def run_fig3(cfg: ExperimentConfig) -> list[Path]:
    """One opening-probability CSV per on-voltage (t_ms,p_open)."""
    paths = []
    dt_sample = 1e-4 if cfg.quick else 1e-5
    for v_on in FIG3_V_ON_MV:
        _, v1 = gating.ook_waveforms(v_on, cfg.v_off_mv, cfg.spec.T1, cfg.spec.T_slot)
        trace = gating.evolve(0.0, v1, dt_sample)
        label = str(int(v_on)).replace("-", "m")
        path = cfg.output_dir / f"gating_von_{label}.csv"
        rows = zip(trace.t * 1e3, trace.value)
        paths.append(write_csv(path, "t_ms,p_open", rows))
    return paths


def _analytic_signal(spec: TransmitterSpec, n_grid: int) -> analytic.ModulatedSignal:
    grid = analytic.default_grid(spec.T1, n_grid)
    source = analytic.SourceModel.from_spec(spec)
    return analytic.modulated_signal(spec, source, grid)


def write_analytic_csv(cfg: ExperimentConfig, n_channels: int) -> Path:
    spec = with_channels(cfg.spec, n_channels)
    sig = _analytic_signal(spec, cfg.grid_points)
    path = cfg.output_dir / f"analytic_{_n_label(n_channels)}.csv"
    rows = zip(sig.w.t, sig.w.value, sig.M.value)
    return write_csv(path, "t_s,w_mo_per_s,M_mo", rows)


def bound_grid(spec: TransmitterSpec, n: int) -> np.ndarray:
    """Output grid for the bound series: the default log grid with its lower
    end clamped to the smallest supported dimensionless time (only binding
    for very short on-intervals)."""
    lo = max(1e-5 * spec.T1, 1.01 * bounded.TAU_MIN * spec.t0)
    return np.geomspace(lo, spec.T1, n)


def write_bound_csv(cfg: ExperimentConfig, n_channels: int) -> Path:
    spec = with_channels(cfg.spec, n_channels)
    grid = bound_grid(spec, cfg.grid_points)
    source = analytic.SourceModel.from_spec(spec)
    trunc = bounded.SeriesTruncation(n_terms=cfg.n_terms, tail_tol=cfg.tail_tol)
    w_u, m_u = bounded.upper_signal(spec, source, grid, trunc=trunc)
    path = cfg.output_dir / f"bound_{_n_label(n_channels)}.csv"
    rows = zip(w_u.t, w_u.value, m_u.value)
    return write_csv(path, "t_s,w_u_mo_per_s,M_u_mo", rows)


def _pbs_config(cfg: ExperimentConfig, dt: float) -> pbs.PbsConfig:
    return pbs.PbsConfig(
        dt=dt,
        n_trials=cfg.trials,
        bin_width=cfg.spec.T1 / cfg.pbs_bins,
        kill_radius=10.0 * cfg.spec.r_m,
        base_seed=cfg.seed,
    )


def write_pbs_csv(cfg: ExperimentConfig, n_channels: int, dt: float) -> tuple[Path, pbs.ReleaseEstimate]:
    spec = with_channels(cfg.spec, n_channels)
    est = pbs.run(spec, _pbs_config(cfg, dt))
    path = cfg.output_dir / f"pbs_{_n_label(n_channels)}_dt{dt:g}.csv"
    rows = zip(est.w_hat.t, est.w_hat.value, est.ci_halfwidth.value, est.M_hat.value)
    return write_csv(path, "t_s,w_hat_mo_per_s,ci_mo_per_s,M_hat_mo", rows), est


def bin_averaged_w(spec: TransmitterSpec, edges: np.ndarray) -> np.ndarray:
    """Per-bin average of the analytic release rate, (M(t2)-M(t1))/(t2-t1).

    This is the quantity a crossing histogram estimates; at the first bin it
    differs noticeably from w at the bin center because of the fast head.
    """
    source = analytic.SourceModel.from_spec(spec)
    sig = analytic.modulated_signal(spec, source, edges)
    m = np.concatenate(([0.0], sig.M.value[1:]))
    return np.diff(m) / np.diff(np.concatenate(([0.0], edges)))


def run_fig4(cfg: ExperimentConfig) -> list[Path]:
    """Analytic curves per channel count, PBS runs per dt, and a joined
    per-bin comparison with CI-overlap flags."""
    paths = [write_analytic_csv(cfg, n) for n in FIG4_CHANNEL_COUNTS]

    n_pbs = FIG4_CHANNEL_COUNTS[-1]
    spec = with_channels(cfg.spec, n_pbs)
    estimates: dict[float, pbs.ReleaseEstimate] = {}
    for dt in FIG4_PBS_DTS:
        path, est = write_pbs_csv(cfg, n_pbs, dt)
        paths.append(path)
        estimates[dt] = est

    centers = estimates[FIG4_PBS_DTS[0]].w_hat.t
    edges = estimates[FIG4_PBS_DTS[0]].M_hat.t
    w_ref = bin_averaged_w(spec, edges)
    cols = [centers, w_ref]
    header = "t_s,w_analytic_mo_per_s"
    for dt in FIG4_PBS_DTS:
        est = estimates[dt]
        overlap = (np.abs(est.w_hat.value - w_ref) <= est.ci_halfwidth.value).astype(int)
        cols += [est.w_hat.value, est.ci_halfwidth.value, overlap]
        tag = f"dt{dt:g}".replace("-", "m")
        header += f",w_pbs_{tag}_mo_per_s,ci_{tag}_mo_per_s,overlap_{tag}"
    path = cfg.output_dir / "fig4_compare.csv"
    paths.append(write_csv(path, header, zip(*cols)))
    return paths


def run_fig5(cfg: ExperimentConfig) -> list[Path]:
    """M(t) vs M_u(t) per channel count plus the end-of-interval gap metric."""
    paths = []
    gap_rows = []
    t1 = cfg.spec.T1
    for n in FIG4_CHANNEL_COUNTS:
        spec = with_channels(cfg.spec, n)
        grid = bound_grid(spec, cfg.grid_points)  # shared grid keeps the pair comparable
        source = analytic.SourceModel.from_spec(spec)
        sig = analytic.modulated_signal(spec, source, grid)
        trunc = bounded.SeriesTruncation(n_terms=cfg.n_terms, tail_tol=cfg.tail_tol)
        _, m_u = bounded.upper_signal(spec, source, grid, trunc=trunc)
        path = cfg.output_dir / f"fig5_{_n_label(n)}.csv"
        rows = zip(sig.M.t, sig.M.value, m_u.value)
        paths.append(write_csv(path, "t_s,M_mo,M_u_mo", rows))
        m_end = analytic.released_count(sig.M, t1)
        mu_end = m_u.interp(t1)
        gap_rows.append((n, m_end, mu_end, (mu_end - m_end) / mu_end))
    paths.append(
        write_csv(cfg.output_dir / "fig5_gap.csv", "N,M_mo,M_u_mo,gap_ratio", gap_rows)
    )
    return paths


def run_scenario(cfg: ExperimentConfig) -> list[Path]:
    if cfg.scenario == "fig3-gating":
        return run_fig3(cfg)
    if cfg.scenario == "fig4-compare":
        return run_fig4(cfg)
    return run_fig5(cfg)

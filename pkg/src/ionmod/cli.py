"""Command-line interface.

    ionmod <gating|analytic|bound|pbs|compare> [--config FILE]
           [--set key=value ...] [--out DIR] [--seed U64] [--quick]

Subcommands write deterministic CSV files into --out:

- gating    opening-probability traces (default: the fig3 on-voltage sweep;
            or a custom waveform from repeated --segment <ms>:<mV> flags)
- analytic  w(t), M(t) for the channel-count presets (or --set N=...)
- bound     closed-form upper bound w_u(t), M_u(t)
- pbs       particle-based estimate with per-bin confidence half-widths
- compare   full three-way comparison (fig4 + fig5 pipelines)

Seed resolution order: --seed, then IONMOD_SEED, then 0.  Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analytic, gating
from .bounded import ConvergenceError
from .experiments import (
    FIG4_CHANNEL_COUNTS,
    ExperimentConfig,
    run_fig4,
    run_fig5,
    run_scenario,
    write_analytic_csv,
    write_bound_csv,
    write_csv,
    write_pbs_csv,
)
from .laplace import TransferFunction, phi_star_laplace
from .physio import DEFAULTS, DimensionlessParams, load_spec, spec_from_mapping, with_channels

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_EXTRA_KEYS = ("v_on_mv", "v_off_mv")


class ConfigError(Exception):
    pass


def _parse_value(raw: str):
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _parse_sets(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS and key not in _EXTRA_KEYS:
            raise ConfigError(f"unknown parameter {key!r}")
        out[key] = _parse_value(raw.strip())
    return out


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("IONMOD_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"IONMOD_SEED={env!r} is not an integer") from exc
    return 0


def _build_config(args, scenario: str) -> ExperimentConfig:
    mapping = {}
    if args.config:
        try:
            spec = load_spec(args.config)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"config file {args.config}: {exc}") from exc
        mapping.update({k: getattr(spec, k) for k in DEFAULTS})
    overrides = _parse_sets(args.set or [])
    v_on = overrides.pop("v_on_mv", 200.0)
    v_off = overrides.pop("v_off_mv", -200.0)
    mapping.update(overrides)
    try:
        spec = spec_from_mapping(mapping)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg = ExperimentConfig(
        scenario=scenario,
        spec=spec,
        output_dir=Path(args.out),
        v_on_mv=v_on,
        v_off_mv=v_off,
        seed=_resolve_seed(args),
        quick=args.quick,
    )
    if getattr(args, "n_terms", None) is not None:
        cfg.n_terms = args.n_terms
    if getattr(args, "tail_tol", None) is not None:
        cfg.tail_tol = args.tail_tol
    if getattr(args, "trials", None) is not None:
        cfg.pbs_trials = args.trials
        cfg.pbs_trials_explicit = True
    if getattr(args, "bins", None) is not None:
        cfg.pbs_bins = args.bins
    return cfg


def _explicit_n(args) -> int | None:
    for pair in args.set or []:
        if pair.split("=", 1)[0].strip() == "N":
            return int(_parse_value(pair.split("=", 1)[1].strip()))
    return None


def _cmd_gating(args) -> list[Path]:
    cfg = _build_config(args, "fig3-gating")
    if args.segment:
        segments = []
        for seg in args.segment:
            try:
                dur_ms, level = seg.split(":")
                segments.append((float(dur_ms) * 1e-3, float(level)))
            except ValueError as exc:
                raise ConfigError(f"--segment expects <ms>:<mV>, got {seg!r}") from exc
        waveform = gating.VoltageWaveform(tuple(segments))
        trace = gating.evolve(0.0, waveform, 1e-4 if cfg.quick else 1e-5)
        path = cfg.output_dir / "gating_trace.csv"
        return [write_csv(path, "t_ms,p_open", zip(trace.t * 1e3, trace.value))]
    return run_scenario(cfg)


def _cmd_analytic(args) -> list[Path]:
    cfg = _build_config(args, "fig4-compare")
    n = _explicit_n(args)
    counts = [n] if n is not None else list(FIG4_CHANNEL_COUNTS)
    return [write_analytic_csv(cfg, c) for c in counts]


def _cmd_bound(args) -> list[Path]:
    cfg = _build_config(args, "fig5-bound")
    n = _explicit_n(args)
    counts = [n] if n is not None else list(FIG4_CHANNEL_COUNTS)
    return [write_bound_csv(cfg, c) for c in counts]


def _cmd_pbs(args) -> list[Path]:
    cfg = _build_config(args, "fig4-compare")
    n = _explicit_n(args)
    count = n if n is not None else cfg.spec.N
    path, _ = write_pbs_csv(cfg, count, args.dt)
    return [path]


def _cmd_compare(args) -> list[Path]:
    cfg4 = _build_config(args, "fig4-compare")
    paths = run_fig4(cfg4)
    cfg5 = _build_config(args, "fig5-bound")
    paths += run_fig5(cfg5)
    return paths


def _cmd_transform_dump(args) -> list[Path]:
    # diagnostic: (s, phi(s)) table on a real log grid for the source shell
    cfg = _build_config(args, "fig4-compare")
    spec = cfg.spec if _explicit_n(args) is None else with_channels(cfg.spec, _explicit_n(args))
    dp = DimensionlessParams.from_spec(spec)
    tf = TransferFunction(A=dp.A, h=dp.h, r_m=spec.r_m, rho_prime=spec.r_s / spec.r_m)
    svals = np.geomspace(1e-6, 1e6, 121)
    rows = []
    for s in svals:
        val = phi_star_laplace(tf, complex(s))
        rows.append((s, val.real, val.imag))
    path = cfg.output_dir / "transform_dump.csv"
    return [write_csv(path, "s,phi_re,phi_im", rows)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionmod",
        description="Ion-channel gated release: analytic, bound, and particle-based solvers",
    )
    sub = parser.add_subparsers(dest="command", metavar="{gating,analytic,bound,pbs,compare}")
    sub.required = True

    def common(p):
        p.add_argument("--config", help="JSON file of transmitter parameters (SI units)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a parameter (repeatable)")
        p.add_argument("--out", default="ionmod_out", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="base RNG seed (fallback: IONMOD_SEED, then 0)")
        p.add_argument("--quick", action="store_true",
                       help="~10x smaller grids/trial counts for smoke runs")

    p = sub.add_parser("gating", help="opening-probability traces (CSV t_ms,p_open)")
    common(p)
    p.add_argument("--segment", action="append", metavar="MS:MV",
                   help="custom waveform segment, e.g. --segment 20:200 --segment 20:-200")
    p.set_defaults(func=_cmd_gating)

    p = sub.add_parser("analytic", help="average release rate and cumulative count")
    common(p)
    p.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("bound", help="closed-form upper bound signals")
    common(p)
    p.add_argument("--n-terms", type=int, default=None, help="series floor (default 200)")
    p.add_argument("--tail-tol", type=float, default=None, help="series tail tolerance")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("pbs", help="particle-based Monte Carlo estimate")
    common(p)
    p.add_argument("--dt", type=float, default=1e-6, help="step size in seconds")
    p.add_argument("--trials", type=int, default=None, help="number of trials (default 1000)")
    p.add_argument("--bins", type=int, default=None, help="tally bins over [0, T1] (default 40)")
    p.set_defaults(func=_cmd_pbs)

    p = sub.add_parser("compare", help="three-way comparison (fig4 + fig5 pipelines)")
    common(p)
    p.set_defaults(func=_cmd_compare)

    # hidden diagnostic
    p = sub.add_parser("transform-dump")
    common(p)
    p.set_defaults(func=_cmd_transform_dump)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        paths = args.func(args)
    except ConfigError as exc:
        print(f"ionmod: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (analytic.InversionFailure, ConvergenceError) as exc:
        print(f"ionmod: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"ionmod: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ionmod: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ionmod: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

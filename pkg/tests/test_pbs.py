import math

import numpy as np
import pytest

import ionmod.pbs as pbs
from ionmod.pbs import _pykernel
from ionmod.pbs.core import _alloc
from ionmod.physio import default_spec, permeability, spec_from_mapping
from oracles import ball_radius_cubed_mean

SPEC = default_spec(N=10**7)


def small_spec(**over):
    base = {"N": 10**7, "T1": 1e-3, "T_slot": 2e-3}
    base.update(over)
    return spec_from_mapping(base)


def cfg_for(spec, dt=1e-5, trials=3, bins=10, seed=42):
    return pbs.PbsConfig(
        dt=dt,
        n_trials=trials,
        bin_width=spec.T1 / bins,
        kill_radius=10 * spec.r_m,
        base_seed=seed,
    )


def test_initial_count_reference():
    assert pbs.initial_count(SPEC) == 524
    assert pbs.initial_count(spec_from_mapping({"T_conc": 0.0})) == 0


def test_init_state_uniform_in_ball():
    rng = pbs.trial_rng(11, 0)
    cfg = cfg_for(SPEC)
    means = []
    for _ in range(50):
        state = pbs.init_state(SPEC, rng, cfg)
        inside = state.inside
        assert inside.shape[0] == 524
        assert np.all(np.linalg.norm(inside, axis=1) <= SPEC.r_m)
        means.append(ball_radius_cubed_mean(inside, SPEC.r_m))
    # E[(r/r_m)^3] = 1/2 for uniform ball; 26200 samples, sd ~ 0.0018
    assert np.mean(means) == pytest.approx(0.5, abs=0.008)
    assert state.n_outside == 0


def test_closed_membrane_never_crosses():
    spec = small_spec(N=0)
    est = pbs.run(spec, cfg_for(spec, trials=4))
    assert np.all(est.w_hat.value == 0.0)
    assert np.all(est.M_hat.value == 0.0)
    assert np.all(est.ci_halfwidth.value == 0.0)


def test_zero_step_scale_is_fixed_point():
    rng = pbs.trial_rng(5, 0)
    cfg = cfg_for(SPEC)
    state = pbs.init_state(SPEC, rng, cfg)
    before = state.pos.copy()
    normals = rng.standard_normal((4, state.pos.shape[0], 3))
    uniforms = rng.random((4, state.pos.shape[0]))
    _pykernel.step_chunk(
        state.pos, state.status, normals, uniforms,
        np.zeros(4, np.int64), np.empty((0, 3)), np.zeros(4, np.int64),
        state.out_crossings, state.in_crossings,
        0.0, 0.0, SPEC.r_m, SPEC.r_s, 10 * SPEC.r_m, 0.1,
    )
    assert np.array_equal(state.pos, before)
    assert state.out_crossings.sum() == 0


def test_mass_conservation_stepwise():
    spec = small_spec()
    cfg = cfg_for(spec)
    rng = pbs.trial_rng(cfg.base_seed, 0)
    state = pbs.init_state(spec, rng, cfg)
    z = permeability(spec, 1.0)
    k0 = pbs.initial_count(spec)
    for _ in range(60):
        pbs.step(state, spec, z, cfg.dt, rng)
        pbs.generate(state, spec, cfg.dt, rng)
        assert k0 + state.produced_total == state.n_inside + state.n_outside + state.retired
    # tallies reconcile with the state change
    net = int(state.out_crossings.sum() - state.in_crossings.sum())
    assert net == state.n_outside + state.retired


def test_generation_rate_and_placement():
    spec = small_spec()
    cfg = cfg_for(spec)
    rng = pbs.trial_rng(1, 0)
    empty = spec_from_mapping({"T_conc": 0.0, "N": 10**7})
    state = pbs.init_state(empty, rng, cfg, capacity=2600, n_bins=10)
    lam = 4 * math.pi * spec.r_s**2 * spec.S_rate * 1e-3  # fat step for counts
    total_steps = 2000
    for _ in range(total_steps):
        pbs.generate(state, spec, 1e-3, rng)
    mean = state.produced_total / total_steps
    assert mean == pytest.approx(lam, rel=0.05)
    radii = np.linalg.norm(state.inside, axis=1)
    assert np.allclose(radii, spec.r_s, rtol=1e-12)


def test_run_is_bit_deterministic():
    spec = small_spec()
    cfg = cfg_for(spec, trials=3)
    a = pbs.run(spec, cfg)
    b = pbs.run(spec, cfg)
    assert np.array_equal(a.w_hat.value, b.w_hat.value)
    assert np.array_equal(a.M_hat.value, b.M_hat.value)
    assert np.array_equal(a.ci_halfwidth.value, b.ci_halfwidth.value)
    c = pbs.run(spec, cfg_for(spec, trials=3, seed=43))
    assert not np.array_equal(a.w_hat.value, c.w_hat.value)


def test_backends_agree_bitwise(monkeypatch):
    try:
        from ionmod.pbs import _ckernel
    except ImportError:
        pytest.skip("compiled kernel not built")
    import ionmod.pbs.core as core

    if core.BACKEND != "compiled":
        pytest.skip("compiled backend not active")
    spec = small_spec()
    cfg = cfg_for(spec, trials=2)
    compiled = pbs.run(spec, cfg)
    monkeypatch.setattr(core, "step_chunk", _pykernel.step_chunk)
    fallback = pbs.run(spec, cfg)
    assert np.array_equal(compiled.w_hat.value, fallback.w_hat.value)
    assert np.array_equal(compiled.M_hat.value, fallback.M_hat.value)
    assert np.array_equal(compiled.ci_halfwidth.value, fallback.ci_halfwidth.value)


def test_m_hat_is_cumulative_net_crossings():
    spec = small_spec()
    est = pbs.run(spec, cfg_for(spec, trials=1, seed=9))
    net_per_bin = np.diff(np.concatenate(([0.0], est.M_hat.value)))
    assert np.array_equal(net_per_bin / (spec.T1 / 10), est.w_hat.value)
    assert np.all(net_per_bin == np.round(net_per_bin))  # integer counts


def test_single_step_crossing_probability():
    # ensemble at r_m - eps with z = 1: one end-of-step test against the
    # half-space crossing probability Phi(-eps/sigma); the fine-step variance
    # composition below covers the dt-scaling side of the oracle
    n = 10**5
    sigma = 0.002 * SPEC.r_m
    eps = 0.02 * sigma
    pos = np.zeros((n, 3))
    pos[:, 0] = SPEC.r_m - eps
    status = np.ones(n, dtype=np.int8)
    rng = pbs.trial_rng(123, 0)
    normals = rng.standard_normal((1, n, 3))
    uniforms = rng.random((1, n))
    out = np.zeros(1, np.int64)
    into = np.zeros(1, np.int64)
    _pykernel.step_chunk(
        pos, status, normals, uniforms, np.zeros(1, np.int64), np.empty((0, 3)),
        np.zeros(1, np.int64), out, into, sigma, sigma, SPEC.r_m, SPEC.r_s,
        10 * SPEC.r_m, 1.0,
    )
    freq = out[0] / n
    expect = 0.5 * math.erfc((eps / sigma) / math.sqrt(2.0))
    # 3 sigma binomial + curvature allowance (tangential drift ~ sigma/r_m)
    tol = 3 * math.sqrt(expect * (1 - expect) / n) + 0.002
    assert abs(freq - expect) < tol


def test_displacement_variance_composition():
    # 100 steps of dt/100 compose to one step of dt: per-axis variance 2 D dt
    n = 20000
    dt = 1e-6
    rng = pbs.trial_rng(77, 0)
    sig_fine = math.sqrt(2 * SPEC.D1 * dt / 100)
    disp_fine = (sig_fine * rng.standard_normal((100, n))).sum(axis=0)
    sig_coarse = math.sqrt(2 * SPEC.D1 * dt)
    disp_coarse = sig_coarse * rng.standard_normal(n)
    v_fine = disp_fine.var()
    v_coarse = disp_coarse.var()
    target = 2 * SPEC.D1 * dt
    assert v_fine == pytest.approx(target, rel=0.05)
    assert v_coarse == pytest.approx(target, rel=0.05)


def test_retirement_at_kill_radius():
    kill = 2.5 * SPEC.r_m
    pos = np.array([[kill * 0.999, 0.0, 0.0]])
    status = np.array([2], dtype=np.int8)
    normals = np.array([[[100.0, 0.0, 0.0]]])  # deterministic outward leap
    uniforms = np.array([[0.5]])
    out = np.zeros(1, np.int64)
    into = np.zeros(1, np.int64)
    sigma = math.sqrt(2 * SPEC.D1 * 1e-6)
    retired, _, _ = _pykernel.step_chunk(
        pos, status, normals, uniforms, np.zeros(1, np.int64), np.empty((0, 3)),
        np.zeros(1, np.int64), out, into, sigma, sigma, SPEC.r_m, SPEC.r_s, kill, 0.1,
    )
    assert retired == 1
    assert status[0] == 0
    assert np.all(pos[0] == 0.0)


@pytest.mark.slow
def test_kill_radius_insensitive():
    spec = SPEC
    base = dict(dt=1e-5, n_trials=100, bin_width=5e-4, base_seed=31)
    a = pbs.run(spec, pbs.PbsConfig(kill_radius=10 * spec.r_m, **base))
    b = pbs.run(spec, pbs.PbsConfig(kill_radius=20 * spec.r_m, **base))
    ma, mb = a.M_hat.value[-1], b.M_hat.value[-1]
    # < 1% shift allowing the Monte Carlo wobble of two independent estimates
    ci = 1.96 * math.sqrt(2) * 11.0 / math.sqrt(100)
    assert abs(ma - mb) <= 0.01 * ma + ci


@pytest.mark.slow
def test_step_size_convergence_of_cumulative_release():
    spec = SPEC
    mk = lambda dt: pbs.PbsConfig(dt=dt, n_trials=40, bin_width=5e-4,
                                  kill_radius=10 * spec.r_m, base_seed=17)
    a = pbs.run(spec, mk(1e-6))
    b = pbs.run(spec, mk(5e-7))
    # per-trial sd of M(20 ms) is ~11 molecules; combined 95% CI at 40 trials
    ci = 1.96 * math.sqrt(2) * 11.0 / math.sqrt(40)
    assert abs(a.M_hat.value[-1] - b.M_hat.value[-1]) <= ci


def test_backend_env_override():
    import os
    import subprocess
    import sys

    env = dict(os.environ, IONMOD_PBS_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import ionmod.pbs as p; print(p.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_config_validation():
    with pytest.raises(ValueError):
        pbs.PbsConfig(dt=0.0, n_trials=1, bin_width=1e-4, kill_radius=1e-5, base_seed=0)
    with pytest.raises(ValueError):
        pbs.PbsConfig(dt=1e-4, n_trials=1, bin_width=1e-5, kill_radius=1e-5, base_seed=0)
    with pytest.raises(ValueError):
        pbs.PbsConfig(dt=1e-5, n_trials=0, bin_width=1e-4, kill_radius=1e-5, base_seed=0)
    with pytest.raises(ValueError):
        pbs.PbsConfig(dt=1e-5, n_trials=1, bin_width=1e-4, kill_radius=1e-5, base_seed=-1)
    spec = small_spec()
    with pytest.raises(ValueError):
        pbs.run(spec, pbs.PbsConfig(dt=1e-5, n_trials=1, bin_width=1e-4,
                                    kill_radius=0.5 * spec.r_m, base_seed=0))


def test_alloc_capacity_covers_births():
    cap, n_steps, n_bins = _alloc(SPEC, cfg_for(SPEC, dt=1e-6, bins=40), SPEC.T1)
    assert n_steps == 20000
    assert n_bins == 40
    assert cap >= 524 + 19  # initial + expected births with headroom

import json
import math

import pytest
from hypothesis import given, strategies as st

from ionmod.physio import (
    BOLTZMANN,
    DimensionlessParams,
    TransmitterSpec,
    boundary_h,
    default_spec,
    dump_spec,
    from_dimensionless,
    load_spec,
    permeability,
    spec_from_mapping,
    thermal_speed,
    to_dimensionless,
    with_channels,
)


def test_permeability_reference_values():
    assert permeability(default_spec(N=10**7), 1.0) == pytest.approx(0.1, rel=1e-12)
    assert permeability(default_spec(N=100), 1.0) == pytest.approx(1e-6, rel=1e-12)
    assert permeability(default_spec(N=0), 1.0) == 0.0
    assert permeability(default_spec(N=0), 0.5) == 0.0


def test_permeability_scales_linearly():
    spec = default_spec(N=500)
    assert permeability(spec, 0.5) == pytest.approx(0.5 * permeability(spec, 1.0), rel=1e-12)
    z1 = permeability(default_spec(N=300), 1.0)
    z2 = permeability(default_spec(N=700), 1.0)
    z12 = permeability(default_spec(N=1000), 1.0)
    assert z12 == pytest.approx(z1 + z2, rel=1e-12)


def test_permeability_rejects_bad_probability():
    spec = default_spec()
    with pytest.raises(ValueError):
        permeability(spec, -0.1)
    with pytest.raises(ValueError):
        permeability(spec, 1.5)


def test_overfull_membrane_rejected_at_construction():
    # N pi r_c^2 >= 4 pi r_m^2 would mean z >= 1
    with pytest.raises(ValueError):
        default_spec(N=10**14)


def test_thermal_speed_reference():
    # sqrt(k_B * 300.15 K / (2 pi * 6.4923e-26 kg)) ~ 100.79 m/s
    assert thermal_speed(default_spec()) == pytest.approx(100.79, rel=1e-3)


def test_boundary_h_reference_values():
    spec = default_spec()
    assert boundary_h(spec, 0.1) == pytest.approx(4.912e4, rel=1e-3)
    assert boundary_h(spec, 1e-6) == pytest.approx(0.44208, rel=1e-3)
    assert boundary_h(spec, 0.0) == 0.0
    # independent arithmetic chain
    v = math.sqrt(BOLTZMANN * 300.15 / (2 * math.pi * 6.4923e-26))
    expect = (5e-6 / 1.14e-9) * (0.1 / 0.9) * v
    assert boundary_h(spec, 0.1) == pytest.approx(expect, rel=1e-12)


def test_boundary_h_rejects_and_monotone():
    spec = default_spec()
    with pytest.raises(ValueError):
        boundary_h(spec, 1.0)
    with pytest.raises(ValueError):
        boundary_h(spec, -0.01)
    zs = [i / 100 for i in range(100)]
    hs = [boundary_h(spec, z) for z in zs]
    assert all(b > a for a, b in zip(hs, hs[1:]))
    # h(z) (1-z)/z is constant in z
    ratios = [boundary_h(spec, z) * (1 - z) / z for z in (0.01, 0.2, 0.5, 0.9)]
    assert max(ratios) == pytest.approx(min(ratios), rel=1e-12)


def test_dimensionless_conversion_reference():
    spec = default_spec()
    tau, rho = to_dimensionless(spec.r_m**2 / spec.D1, spec.r_m, spec)
    assert (tau, rho) == (pytest.approx(1.0, rel=1e-15), pytest.approx(1.0, rel=1e-15))
    tau, _ = to_dimensionless(0.02, 0.0, spec)
    assert tau == pytest.approx(0.912, rel=1e-3)


@given(
    t=st.floats(min_value=0, max_value=1e6, allow_nan=False),
    r=st.floats(min_value=0, max_value=1e3, allow_nan=False),
)
def test_dimensionless_round_trip(t, r):
    spec = default_spec()
    tau, rho = to_dimensionless(t, r, spec)
    t2, r2 = from_dimensionless(tau, rho, spec)
    assert t2 == pytest.approx(t, rel=1e-12, abs=1e-300)
    assert r2 == pytest.approx(r, rel=1e-12, abs=1e-300)


def test_derived_quantities_are_pure():
    spec = default_spec(N=500)
    a = DimensionlessParams.from_spec(spec)
    b = DimensionlessParams.from_spec(spec)
    assert (a.z, a.A, a.h, a.v_thermal) == (b.z, b.A, b.h, b.v_thermal)


def test_dimensionless_params_invariants():
    with pytest.raises(ValueError):
        DimensionlessParams(z=0.0, A=1.0, h=0.5, v_thermal=100.0)  # h>0 needs z>0
    with pytest.raises(ValueError):
        DimensionlessParams(z=0.5, A=-1.0, h=1.0, v_thermal=100.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        spec_from_mapping({"r_s": 6e-6})  # r_s > r_m
    with pytest.raises(ValueError):
        spec_from_mapping({"D1": 0.0})
    with pytest.raises(ValueError):
        spec_from_mapping({"T1": 0.05})  # T1 > T_slot
    with pytest.raises(KeyError):
        spec_from_mapping({"bogus": 1.0})


def test_config_file_round_trip(tmp_path):
    spec = default_spec(N=500)
    path = tmp_path / "spec.json"
    dump_spec(spec, path)
    assert load_spec(path) == spec
    data = json.loads(path.read_text())
    assert data["N"] == 500 and data["r_m"] == 5e-6


def test_with_channels():
    spec = with_channels(default_spec(), 42)
    assert spec.N == 42 and spec.r_m == 5e-6

import json
import math

import numpy as np
import pytest

from illumpde.elliptic import EllipticMode, SolverConfig
from illumpde.grid import BoundaryRule, GridField
from illumpde.imageio import ShadingSpec, apply_shading
from illumpde.restore import (
    RestoreError,
    RestoreParams,
    UpdateRule,
    cost_field,
    log_potential,
    momentum,
    restore,
    update_illumination,
)


def test_cost_field_examples():
    assert np.all(cost_field(GridField.full(4, 4, 0.0)).values == 0)
    assert np.all(cost_field(GridField.full(4, 4, 0.5)).values == 0.25)
    ramp = np.linspace(0, 1, 30).reshape(5, 6)
    out = cost_field(GridField(ramp)).values
    for i in range(5):
        for j in range(6):
            assert out[i, j] == ramp[i, j] * ramp[i, j]


def test_cost_field_range():
    bad = GridField(np.full((3, 3), 1.5))
    with pytest.raises(ValueError):
        cost_field(bad)
    assert np.all(cost_field(bad, clamp=True).values == 1.0)


def test_log_potential_examples():
    assert np.all(log_potential(GridField.full(3, 3, 1.0), 0.5).values == 0)
    assert np.allclose(log_potential(GridField.full(3, 3, math.e), 1.0).values, -2.0, rtol=1e-15)
    V = log_potential(GridField.full(3, 3, 1e-8), 1e-6).values
    assert np.allclose(V, 3.6841e-11, rtol=1e-4)
    assert np.allclose(V, -2e-12 * math.log(1e-8), rtol=1e-14)
    with pytest.raises(ValueError):
        log_potential(GridField(np.zeros((3, 3))), 1.0)


def test_momentum_examples(rng):
    px, py = momentum(GridField.full(4, 5, 2.0))
    assert np.all(px.values == 0) and np.all(py.values == 0)
    x = np.tile(np.arange(6.0), (5, 1)) * 1.5
    px, py = momentum(GridField(2 * x, 1.5))
    assert np.allclose(px.values[1:-1, 1:-1], -1.0, atol=1e-14)
    assert np.allclose(py.values[1:-1, 1:-1], 0.0, atol=1e-14)
    V = GridField(rng.standard_normal((6, 6)))
    a = momentum(V)
    b = momentum(V.with_values(-V.values))
    assert np.array_equal(a[0].values, -b[0].values) and np.array_equal(a[1].values, -b[1].values)


def test_update_rules(rng):
    L = GridField(rng.uniform(0.2, 0.8, (6, 6)))
    p = (L.with_values(np.full((6, 6), 0.3)), L.with_values(np.full((6, 6), -0.1)))
    assert np.array_equal(update_illumination(L, p, 0.0).values, L.values)
    assert np.array_equal(update_illumination(L, p, 0.1, UpdateRule.DIVERGENCE).values, L.values)
    summed = update_illumination(L, p, 0.1, UpdateRule.COMPONENT_SUM).values
    assert np.allclose(summed, L.values + 0.1 * (0.3 - 0.1), atol=1e-15)
    clamped = update_illumination(L, p, 10.0, UpdateRule.COMPONENT_SUM, clamp=True).values
    assert clamped.max() == 1.0


def test_zero_momentum_is_identity(rng):
    L = GridField(rng.uniform(0, 1, (5, 5)))
    zero = L.with_values(np.zeros((5, 5)))
    for rule in UpdateRule:
        assert np.array_equal(update_illumination(L, (zero, zero), 0.3, rule).values, L.values)


def test_constant_u_gives_zero_drive():
    V = log_potential(GridField.full(5, 5, 0.37), 0.8)
    for rule in BoundaryRule:
        px, py = momentum(V, rule)
        assert np.all(px.values == 0) and np.all(py.values == 0)


def test_black_image_is_fixed(rng):
    L0 = GridField(np.zeros((9, 9)))
    L, trace = restore(L0, RestoreParams(sigma=0.7, dt=0.5, global_steps=5))
    assert np.array_equal(L.values, L0.values)
    assert len(trace) == 5
    assert all(r.u["min"] == 1.0 for r in trace)


def test_dt_zero_is_bitwise_identity(rng):
    L0 = GridField(rng.uniform(0, 1, (12, 10)))
    L, _ = restore(L0, RestoreParams(sigma=0.5, dt=0.0, global_steps=1))
    assert np.array_equal(L.values, L0.values)


def test_restore_moves_image_and_traces(rng):
    clean = GridField(np.full((24, 24), 0.8))
    L0 = apply_shading(clean, ShadingSpec("radial", 0.5))
    params = RestoreParams(sigma=0.5, dt=0.5, global_steps=4)
    L, trace = restore(L0, params)
    assert len(trace) == 4
    assert 0.0 <= L.values.min() and L.values.max() <= 1.0
    assert trace.records[0].increment_l2 > 0
    lines = trace.to_jsonl().splitlines()
    assert len(lines) == 4 and json.loads(lines[0])["step"] == 0
    csv = trace.to_csv().splitlines()
    assert csv[0].startswith("step,iterations") and len(csv) == 5


def test_determinism(rng):
    L0 = GridField(rng.uniform(0.1, 0.9, (16, 16)))
    params = RestoreParams(sigma=0.6, dt=0.3, global_steps=3)
    a, ta = restore(L0, params)
    b, tb = restore(L0, params)
    assert np.array_equal(a.values, b.values)
    assert ta.to_jsonl() == tb.to_jsonl()


def test_rotation_equivariance(rng):
    half = rng.uniform(0.1, 0.9, (14, 14))
    L0 = GridField((half + np.rot90(half, 2)) / 2)
    L, _ = restore(L0, RestoreParams(sigma=0.6, dt=0.5, global_steps=3))
    assert np.allclose(L.values, np.rot90(L.values, 2), atol=1e-13)


def test_prototype_mode_runs(rng):
    clean = GridField(rng.uniform(0.3, 0.9, (64, 64)))
    L0 = apply_shading(clean, ShadingSpec("ramp", 0.5))
    params = RestoreParams(
        sigma=1e-6, dt=1e-4, global_steps=20,
        solver=SolverConfig(omega=1e-5),
        mode=EllipticMode.NEUMANN, update_rule=UpdateRule.COMPONENT_SUM,
    )
    L, trace = restore(L0, params)
    assert len(trace) == 20 and np.all(np.isfinite(L.values))
    assert all(r.solve.clip_events > 0 for r in trace)


def test_unclamped_out_of_range_aborts_with_trace():
    L0 = GridField(np.tile(np.linspace(0.05, 0.95, 10), (10, 1)), 1.0)
    params = RestoreParams(
        sigma=0.3, dt=1e3, global_steps=5, clamp_illumination=False,
        update_rule=UpdateRule.COMPONENT_SUM,
    )
    with pytest.raises(RestoreError) as info:
        restore(L0, params)
    err = info.value
    assert err.step >= 1 and len(err.trace) == err.step
    rec = err.trace.records[-1]
    assert rec.L["max"] > 1.0 or rec.L["min"] < 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        RestoreParams(dt=-1)
    with pytest.raises(ValueError):
        RestoreParams(global_steps=0)
    with pytest.raises(ValueError):
        restore(GridField(np.full((3, 3), 2.0)))

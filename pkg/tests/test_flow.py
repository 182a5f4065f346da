"""Tests for the explicit heat integrator."""
import numpy as np
import pytest

from qcflow.flow import (
    FlowConfig,
    F_of,
    cfl_timestep,
    evolve,
    heat_step,
    initial_field,
    phi_of,
)
from qcflow.lattice import ScalarField, integrate, make_grid
from qcflow.operators import grad_h, sub_laplacian


def small_config(**kw):
    base = dict(n=1, m_x=4, alpha=-0.05, cfl_safety=0.9, t_end=0.002,
                record_every=1, width=0.2, amplitude=0.3, offset=1.0,
                tau_profile="uniform")
    base.update(kw)
    return FlowConfig(**base)


def test_cfl_value_and_scaling():
    grid = make_grid(1, 8)
    dt = cfl_timestep(grid, 1.0)
    assert dt == pytest.approx((1.0 / 64.0) / 16.0, rel=1e-15)
    grid2 = make_grid(1, 16)
    assert cfl_timestep(grid2, 1.0) == pytest.approx(dt / 4.0, rel=1e-15)
    with pytest.raises(ValueError):
        cfl_timestep(grid, 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(alpha=0.0)
    with pytest.raises(ValueError):
        small_config(alpha=0.5)
    with pytest.raises(ValueError):
        small_config(cfl_safety=0.0)
    with pytest.raises(ValueError):
        small_config(offset=0.1, amplitude=0.3)
    with pytest.raises(ValueError):
        small_config(record_every=0)
    with pytest.raises(ValueError):
        small_config(method="rk4")


def test_heat_step_constant_fixed_point():
    grid = make_grid(1, 4)
    u = ScalarField(grid, np.full(grid.shape, 1.5))
    dt = cfl_timestep(grid, 0.9)
    v = heat_step(u, dt)
    assert np.array_equal(v.values, u.values)


def test_heat_step_guards():
    grid = make_grid(1, 4)
    u = ScalarField(grid, np.full(grid.shape, 1.0))
    with pytest.raises(ValueError):
        heat_step(u, cfl_timestep(grid, 1.0) * 2.0)
    bad = ScalarField(grid, np.zeros(grid.shape))
    with pytest.raises(ValueError):
        heat_step(bad, cfl_timestep(grid, 0.5))


def test_heat_step_mass_and_range():
    cfg = small_config(m_x=4)
    u = initial_field(cfg)
    grid = u.grid
    dt = cfl_timestep(grid, 0.9)
    mass0 = integrate(u)
    lo0, hi0 = u.values.min(), u.values.max()
    v = u
    for _ in range(50):
        v = heat_step(v, dt)
        assert v.values.min() >= lo0
        assert v.values.max() <= hi0
    assert abs(integrate(v) - mass0) <= 1e-12 * abs(mass0)
    # contraction toward the mean
    mean = mass0 / (grid.cell_volume * grid.size)
    assert np.max(np.abs(v.values - mean)) < np.max(np.abs(u.values - mean))


def test_evolve_t_end_zero_returns_initial():
    cfg = small_config(t_end=0.0)
    states = evolve(cfg)
    assert len(states) == 1
    assert states[0].step == 0


def test_evolve_deterministic():
    cfg = small_config()
    a = evolve(cfg)
    b = evolve(cfg)
    assert len(a) == len(b)
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.u.values, sb.u.values)
        assert sa.time == sb.time


def test_evolve_linearity():
    # the update is linear and constants are fixed points
    cfg = small_config(t_end=0.003)
    u0 = initial_field(cfg)
    grid = u0.grid
    a, b = 1.7, 0.4
    scaled = ScalarField(grid, a * u0.values + b)
    st1 = evolve(cfg, u0=u0)
    st2 = evolve(cfg, u0=scaled)
    for s1, s2 in zip(st1, st2):
        expect = a * s1.u.values + b
        scale = np.max(np.abs(expect))
        assert np.max(np.abs(s2.u.values - expect)) <= 1e-12 * scale


def test_evolve_decays_to_mean():
    cfg = small_config(m_x=4, t_end=0.25, record_every=64)
    states = evolve(cfg)
    u_end = states[-1].u
    mean = integrate(u_end) / (u_end.grid.cell_volume * u_end.grid.size)
    dev0 = np.max(np.abs(states[0].u.values - mean))
    dev = np.max(np.abs(u_end.values - mean)) / mean
    assert dev < 1e-3
    assert dev0 > 1e-2


def test_heun_method_runs_and_contracts():
    cfg = small_config(method="heun", t_end=0.003)
    states = evolve(cfg)
    u0, u1 = states[0].u, states[-1].u
    slack = 1e-12 * float(np.max(np.abs(u0.values)))
    assert u1.values.max() <= u0.values.max() + slack
    assert u1.values.min() >= u0.values.min() - slack


def test_transform_round_trips():
    cfg = small_config()
    u = initial_field(cfg)
    phi = phi_of(u)
    F = F_of(u, -0.05)
    back1 = np.exp(-phi.values)
    back2 = np.power(F.values, 1.0 / -0.05)
    assert np.max(np.abs(back1 - u.values)) <= 1e-12 * np.max(u.values)
    assert np.max(np.abs(back2 - u.values)) <= 1e-12 * np.max(u.values)
    with pytest.raises(ValueError):
        F_of(u, 0.5)
    bad = ScalarField(u.grid, np.zeros(u.grid.shape))
    with pytest.raises(ValueError):
        phi_of(bad)


def _connect_residuals(m, alpha=-0.05):
    cfg = small_config(m_x=m)
    u = initial_field(cfg)
    grid = u.grid
    phi = phi_of(u)
    F = F_of(u, alpha)
    gphi = grad_h(phi).components
    gF = grad_h(F).components
    gphi_sq = np.sum(gphi ** 2, axis=0)
    gF_sq = np.sum(gF ** 2, axis=0)
    Finv = 1.0 / F.values
    r1 = gphi_sq - (alpha ** -2) * Finv ** 2 * gF_sq
    lapphi = sub_laplacian(phi).values
    lapF = sub_laplacian(F).values
    r2 = lapphi + (1.0 / alpha) * (Finv ** 2 * gF_sq + Finv * lapF)
    s1 = np.sqrt(np.mean(r1 ** 2)) / max(np.sqrt(np.mean(gphi_sq ** 2)), 1e-30)
    s2 = np.sqrt(np.mean(r2 ** 2)) / max(np.sqrt(np.mean(lapphi ** 2)), 1e-30)
    return s1, s2


def test_connect_identities_improve():
    a4 = _connect_residuals(4)
    a8 = _connect_residuals(8)
    assert a8[0] < a4[0]
    assert a8[1] < a4[1]
    assert a8[0] < 0.05

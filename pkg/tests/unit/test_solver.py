# -*- coding: utf-8 -*-

import numpy as np
import pytest

import context

import dsmve.solver as m
from dsmve.dynamics import (
    DriftTerm,
    constant_diffusion,
    make_custom_model,
    make_linear_model,
    make_opinion_model,
    make_present_cubic_model,
    make_zero_drift_model,
)
from dsmve.errors import MomentBlowUpError, UsageError
from dsmve.fgn import path_from_increments
from dsmve.models.grid import EnsembleTrajectory, TimeGrid
from dsmve.models.model_spec import InitialPath
from dsmve.models.noise import GeneratorMethod, Hurst


@pytest.mark.parametrize(
    "delay,delay_steps,horizon,expected",
    [
        pytest.param(0.125, 16, 1.0, TimeGrid(dt=0.0078125, delay_steps=16, horizon_steps=128), id="default"),
        pytest.param(0.125, 1, 0.125, TimeGrid(dt=0.125, delay_steps=1, horizon_steps=1), id="single-step"),
        pytest.param(0.125, 3, 1.0, TimeGrid(dt=0.125 / 3, delay_steps=3, horizon_steps=24), id="non-dyadic"),
    ],
)
def test_build_grid(delay, delay_steps, horizon, expected):
    assert m.build_grid(delay, delay_steps, horizon) == expected


def test_build_grid_names_nearest_horizon():
    with pytest.raises(UsageError) as excinfo:
        m.build_grid(0.125, 1, 0.3)
    assert "0.25" in str(excinfo.value)


@pytest.mark.parametrize("args", [(0.0, 1, 1.0), (0.125, 0, 1.0), (0.125, 1, -1.0)])
def test_build_grid_domain(args):
    with pytest.raises(UsageError):
        m.build_grid(*args)


@pytest.mark.parametrize(
    "args",
    [
        pytest.param((0.125, 1, 1e308), id="horizon-overflows"),
        pytest.param((0.125, 1, float("inf")), id="infinite-horizon"),
        pytest.param((0.125, 1, float("nan")), id="nan-horizon"),
        pytest.param((0.125, m.MAX_GRID_STEPS + 1, 1.0), id="delay-steps"),
        pytest.param((0.125, 2 ** 20, 8.0), id="horizon-steps"),
    ],
)
def test_build_grid_step_limit(args):
    with pytest.raises(UsageError):
        m.build_grid(*args)


def test_build_grid_at_step_limit():
    grid = m.build_grid(1.0, 1, float(m.MAX_GRID_STEPS))
    assert grid.horizon_steps == m.MAX_GRID_STEPS


def test_grid_rows_and_coarsening():
    grid = m.build_grid(0.125, 8, 1.0)
    assert grid.size == 8 + 64 + 1
    assert grid.row(-8) == 0
    assert grid.times()[0] == -0.125
    coarse = grid.coarsen(4)
    assert (coarse.delay_steps, coarse.horizon_steps, coarse.dt) == (2, 16, 0.0625)
    with pytest.raises(UsageError):
        grid.coarsen(3)
    with pytest.raises(UsageError):
        grid.row(65)


def test_init_ensemble_fills_history_only():
    grid = m.build_grid(0.125, 4, 0.5)
    traj = m.init_ensemble(make_opinion_model(), grid, particles=3)
    np.testing.assert_array_equal(traj.at(-4)[:, 0], [0.125] * 3)
    np.testing.assert_array_equal(traj.at(0)[:, 0], [0.0] * 3)
    assert np.isnan(traj.at(1)).all()


def test_init_ensemble_rejects_mismatched_delay():
    with pytest.raises(UsageError):
        m.init_ensemble(make_opinion_model(), m.build_grid(0.25, 4, 0.5), particles=3)


def test_em_step_errors():
    grid = m.build_grid(0.125, 2, 0.25)
    traj = m.init_ensemble(make_zero_drift_model(), grid, particles=2)
    with pytest.raises(UsageError):
        m.em_step(make_zero_drift_model(), traj, grid.horizon_steps, np.zeros((2, 1)))
    with pytest.raises(UsageError):
        m.em_step(make_zero_drift_model(), traj, 0, np.zeros((3, 1)))
    with pytest.raises(UsageError):
        m.em_step(make_zero_drift_model(), traj, 0, None)


def test_em_step_uses_frozen_measures():
    model = make_linear_model(a=-1.0, b=0.0, beta=0.0)
    grid = m.build_grid(0.125, 1, 0.25)
    traj = m.init_ensemble(model, grid, particles=2)
    new = m.em_step(model, traj, 0, np.zeros((2, 1)))
    np.testing.assert_array_equal(new, [[0.875], [0.875]])
    # em_step does not write the trajectory
    assert np.isnan(traj.at(1)).all()


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_zero_drift_reproduces_the_noise_path(h):
    model = make_zero_drift_model(beta=1.0)
    grid = m.build_grid(0.125, 4, 1.0)
    traj = m.run(model, grid, particles=4, hurst=h, seed=9)
    blocks = m.generate_noise(grid, 4, 1, Hurst(h), 9, GeneratorMethod.DAVIES_HARTE)
    for i, block in enumerate(blocks):
        np.testing.assert_array_equal(traj.states[i, grid.delay_steps :, 0], path_from_increments(block))


def test_zero_drift_without_noise_stays_at_initial_value():
    model = make_zero_drift_model(beta=0.0, initial_value=2.0)
    traj = m.run(model, m.build_grid(0.125, 2, 0.5), particles=3, hurst=0.7, seed=0)
    np.testing.assert_array_equal(traj.states, 2.0)


def test_deterministic_linear_decay():
    model = make_linear_model(a=-1.0, b=0.0, beta=0.0)
    grid = m.build_grid(0.125, 8, 1.0)
    traj = m.run(model, grid, particles=2, hurst=0.7, seed=0)
    expected = (1 - grid.dt) ** np.arange(grid.horizon_steps + 1)
    np.testing.assert_allclose(traj.states[0, grid.delay_steps :, 0], expected, rtol=1e-12)


@pytest.mark.parametrize("factor", [2, 4, 8])
def test_coupled_zero_drift_runs_agree_exactly(factor):
    model = make_zero_drift_model(beta=1.0)
    fine, coarse = m.coupled_pair_run(model, m.build_grid(0.125, 8, 1.0), factor, particles=5, hurst=0.8, seed=2)
    np.testing.assert_array_equal(coarse.terminal(), fine.terminal())
    coarse_running = coarse.states[:, coarse.grid.delay_steps :]
    np.testing.assert_array_equal(coarse_running, fine.states[:, fine.grid.delay_steps :: factor])


def test_coupled_runs_share_metadata():
    fine, coarse = m.coupled_runs(make_opinion_model(), m.build_grid(0.125, 8, 0.5), [2, 4], 6, 0.7, seed=4)
    assert set(coarse) == {2, 4}
    for factor, traj in coarse.items():
        assert traj.grid == fine.grid.coarsen(factor)
        assert (traj.seed, traj.particles, traj.hurst) == (fine.seed, fine.particles, fine.hurst)


@pytest.mark.parametrize("method", list(GeneratorMethod))
def test_run_does_not_depend_on_threads(method):
    model = make_opinion_model()
    grid = m.build_grid(0.125, 8, 0.5)
    serial = m.run(model, grid, particles=13, hurst=0.6, seed=21, method=method, threads=1)
    parallel = m.run(model, grid, particles=13, hurst=0.6, seed=21, method=method, threads=4)
    np.testing.assert_array_equal(serial.states, parallel.states)


def test_run_replays_bit_identically():
    model = make_opinion_model()
    grid = m.build_grid(0.125, 4, 0.5)
    a = m.run(model, grid, particles=4, hurst=0.3, seed=5)
    b = m.run(model, grid, particles=4, hurst=0.3, seed=5)
    c = m.run(model, grid, particles=4, hurst=0.3, seed=6)
    np.testing.assert_array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)
    assert not a.states.flags.writeable


def test_noise_streams_are_component_major():
    assert m.noise_streams(2, 3) == [0, 1, 2, 3, 4, 5]
    blocks = m.generate_noise(m.build_grid(0.125, 1, 0.25), 2, 3, Hurst(0.7), 0, GeneratorMethod.CHOLESKY)
    noise = m.noise_array(blocks, 2, 3)
    assert noise.shape == (2, 2, 3)
    np.testing.assert_array_equal(noise[1, :, 2], blocks[5].increments)


def test_present_cubic_blows_up_at_coarse_step():
    model = make_present_cubic_model(beta=0.0)
    with pytest.raises(MomentBlowUpError) as excinfo:
        m.run(model, m.build_grid(0.125, 1, 8.0), particles=2, hurst=0.7, seed=0)
    assert excinfo.value.step > 1
    assert excinfo.value.particles == [0, 1]


def test_em_step_is_equivariant_under_particle_permutation():
    model = make_opinion_model()
    grid = m.build_grid(0.125, 4, 0.5)
    traj = m.run(model, grid, particles=7, hurst=0.7, seed=8)
    perm = np.random.default_rng(1).permutation(7)
    permuted = EnsembleTrajectory(
        states=traj.states[perm], grid=grid, model_id=traj.model_id, seed=traj.seed, hurst=traj.hurst
    )
    noise = np.random.default_rng(2).normal(size=(7, 1))
    for k in (0, 3, grid.horizon_steps - 1):
        expected = m.em_step(model, traj, k, noise)[perm]
        np.testing.assert_allclose(m.em_step(model, permuted, k, noise[perm]), expected, rtol=1e-13, atol=1e-15)


def delay_only_model():
    return make_custom_model(
        [DriftTerm("delay_power", coef=1.0, power=1)],
        constant_diffusion(0.0),
        True,
        0.125,
        InitialPath(kind="abs"),
    )


def test_delay_only_drift_integrates_the_initial_path():
    grid = m.build_grid(0.125, 8, 0.25)
    traj = m.run(delay_only_model(), grid, particles=2, hurst=0.7, seed=0)
    dt, delay = grid.dt, grid.delay
    for k in range(grid.delay_steps + 1):
        expected = dt * sum(delay - j * dt for j in range(k))
        np.testing.assert_allclose(traj.at(k)[:, 0], expected, rtol=0, atol=1e-15)


def test_delay_only_drift_ignores_states_after_time_zero():
    model = delay_only_model()
    grid = m.build_grid(0.125, 8, 0.25)
    traj = m.run(model, grid, particles=2, hurst=0.7, seed=0)
    states = np.array(traj.states)
    states[:, grid.row(1) :, :] = 99.0
    mutated = EnsembleTrajectory(states=states, grid=grid, model_id=traj.model_id, seed=traj.seed, hurst=traj.hurst)
    noise = np.zeros((2, 1))
    for k in range(grid.delay_steps):
        increment = m.em_step(model, traj, k, noise) - traj.at(k)
        np.testing.assert_allclose(m.em_step(model, mutated, k, noise) - mutated.at(k), increment, rtol=0, atol=1e-12)

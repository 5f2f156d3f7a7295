"""The interacting particle Euler-Maruyama scheme for delay McKean-Vlasov
equations driven by fractional Brownian motion.

Z^i(t_{k+1}) = Z^i(t_k) + alpha(t_k, Z^i(t_k), Z^i(t_{k-M}), L_k, L_{k-M}) dt
               + beta(t_k, L_k, L_{k-M}) dB^{H,i}_k

where L_j is the empirical measure of all N particles at t_j, taken
before any particle is updated.
"""

from concurrent.futures import Executor, ThreadPoolExecutor
import contextlib
import logging
import math
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from dsmve.errors import DomainError, MomentBlowUpError, UsageError
from dsmve.fgn import HurstLike, as_hurst, coarsen, generate_streams
from dsmve.models.grid import EnsembleTrajectory, TimeGrid
from dsmve.models.measure import EmpiricalMeasure
from dsmve.models.model_spec import ModelSpec
from dsmve.models.noise import GeneratorMethod, Hurst, NoiseBlock

log = logging.getLogger("dsmve.solver")

GRID_TOLERANCE = 1e-9
# upper bound on M and on T / dt for a single grid
MAX_GRID_STEPS = 2 ** 24


def build_grid(delay: float, delay_steps: int, horizon: float) -> TimeGrid:
    "dt = delay / M and M_T = T / dt, which must be an integer"
    if delay <= 0 or horizon <= 0:
        raise DomainError(f"delay and horizon must be positive got {delay!r} and {horizon!r}")
    if delay_steps < 1:
        raise DomainError(f"need at least one delay step got M={delay_steps}")
    if delay_steps > MAX_GRID_STEPS:
        raise UsageError(f"M={delay_steps} exceeds the {MAX_GRID_STEPS} step limit")
    dt = delay / delay_steps
    ratio = horizon / dt
    if not math.isfinite(ratio) or ratio > MAX_GRID_STEPS + 0.5:
        raise UsageError(f"T/dt={ratio!r} exceeds the {MAX_GRID_STEPS} step limit for T={horizon!r} and dt={dt!r}")
    horizon_steps = int(round(ratio))
    if horizon_steps < 1 or abs(ratio - horizon_steps) > GRID_TOLERANCE * ratio:
        nearest = max(1, horizon_steps) * dt
        raise UsageError(
            f"T={horizon!r} is not a multiple of dt=delay/M={dt!r} (T/dt={ratio!r}); nearest valid T is {nearest!r}"
        )
    return TimeGrid(dt=dt, delay_steps=delay_steps, horizon_steps=horizon_steps)


def _check_grid(model: ModelSpec, grid: TimeGrid) -> None:
    if not math.isclose(grid.delay, model.delay, rel_tol=GRID_TOLERANCE):
        raise UsageError(f"grid delay {grid.delay!r} does not match model delay {model.delay!r}")


def init_ensemble(
    model: ModelSpec,
    grid: TimeGrid,
    particles: int,
    seed: int = 0,
    hurst: HurstLike = 0.5,
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE,
) -> EnsembleTrajectory:
    """trajectory with rows k = -M..0 set to xi^i(t_k); later rows are NaN
    until the scheme fills them
    """
    if particles < 1:
        raise DomainError(f"need at least one particle got N={particles}")
    _check_grid(model, grid)
    states = np.full((particles, grid.size, model.dim), np.nan)
    thetas = np.arange(-grid.delay_steps, 1) * grid.dt
    states[:, : grid.delay_steps + 1, :] = model.initial_path.particle_values(thetas, model.dim, particles, seed)
    return EnsembleTrajectory(
        states=states,
        grid=grid,
        model_id=model.model_id,
        seed=seed,
        hurst=as_hurst(hurst),
        method=method,
    )


def _chunks(particles: int, count: int) -> List[slice]:
    bounds = np.linspace(0, particles, num=max(1, min(count, particles)) + 1).astype(int)
    return [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]


def em_step(
    model: ModelSpec,
    traj: EnsembleTrajectory,
    k: int,
    noise_k: np.ndarray,
    executor: Optional[Executor] = None,
    chunks: int = 1,
) -> np.ndarray:
    """returns the N x d states at t_{k+1}; does not modify traj

    Drift is evaluated on contiguous particle chunks (in parallel when an
    executor is given); both measures are frozen before any evaluation.
    """
    grid = traj.grid
    if not (0 <= k < grid.horizon_steps):
        raise UsageError(f"step index {k} outside [0, {grid.horizon_steps})")
    if noise_k is None:
        raise UsageError(f"missing noise for step {k}")
    noise_k = np.asarray(noise_k, dtype=np.float64).reshape(traj.particles, -1)
    if noise_k.shape != (traj.particles, traj.dim):
        raise UsageError(f"noise for step {k} must be {traj.particles} x {traj.dim} got {noise_k.shape}")

    x = traj.at(k)
    x_del = traj.at(k - grid.delay_steps)
    mu = EmpiricalMeasure(samples=x)
    mu_del = EmpiricalMeasure(samples=x_del)
    t = grid.time(k)

    parts = _chunks(traj.particles, chunks)
    if executor is not None and len(parts) > 1:
        futures = [executor.submit(model.drift, t, x[part], x_del[part], mu, mu_del) for part in parts]
        drift = np.concatenate([f.result() for f in futures])
    else:
        drift = model.drift(t, x, x_del, mu, mu_del)

    beta = np.asarray(model.diffusion(t, mu, mu_del), dtype=np.float64)
    if traj.dim == 1:
        shock = noise_k * beta[0, 0]
    else:
        shock = noise_k @ beta.T
    return x + drift * grid.dt + shock


@contextlib.contextmanager
def _maybe_pool(threads: int) -> Iterator[Optional[Executor]]:
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield pool


def noise_streams(particles: int, dim: int) -> List[int]:
    "stream id of particle i component c is i * dim + c"
    return list(range(particles * dim))


def generate_noise(
    grid: TimeGrid,
    particles: int,
    dim: int,
    hurst: Hurst,
    seed: int,
    method: GeneratorMethod,
    threads: int = 1,
) -> List[NoiseBlock]:
    return generate_streams(
        grid.horizon_steps, grid.dt, hurst, seed, noise_streams(particles, dim), method=method, threads=threads
    )


def noise_array(blocks: Sequence[NoiseBlock], particles: int, dim: int) -> np.ndarray:
    "N x M_T x d increments from per-stream blocks"
    return np.stack([b.increments for b in blocks]).reshape(particles, dim, -1).transpose(0, 2, 1)


def integrate(
    model: ModelSpec,
    grid: TimeGrid,
    noise: np.ndarray,
    hurst: Hurst,
    seed: int,
    method: GeneratorMethod,
    threads: int = 1,
) -> EnsembleTrajectory:
    "folds em_step over k = 0..M_T-1 for pre-generated N x M_T x d noise"
    particles = noise.shape[0]
    if noise.shape[1:] != (grid.horizon_steps, model.dim):
        raise UsageError(f"noise must be N x {grid.horizon_steps} x {model.dim} got {noise.shape}")
    traj = init_ensemble(model, grid, particles, seed=seed, hurst=hurst, method=method)
    log.debug(
        f"integrating {model.model_id} N={particles} dt={grid.dt} M={grid.delay_steps} "
        f"M_T={grid.horizon_steps} H={hurst.h} seed={seed}"
    )
    with _maybe_pool(threads) as pool, np.errstate(over="ignore", invalid="ignore"):
        for k in range(grid.horizon_steps):
            new_states = em_step(model, traj, k, noise[:, k, :], executor=pool, chunks=threads)
            bad = ~np.isfinite(new_states).all(axis=1)
            if bad.any():
                raise MomentBlowUpError(step=k + 1, particles=np.flatnonzero(bad).tolist())
            traj.states[:, grid.row(k + 1), :] = new_states
    return traj.freeze()


def run(
    model: ModelSpec,
    grid: TimeGrid,
    particles: int,
    hurst: HurstLike,
    seed: int,
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE,
    threads: int = 1,
) -> EnsembleTrajectory:
    """one noise block of length M_T per particle (stream id = particle
    index), then the scheme over the whole horizon
    """
    hurst = as_hurst(hurst)
    model.check_regime(hurst)
    _check_grid(model, grid)
    blocks = generate_noise(grid, particles, model.dim, hurst, seed, method, threads)
    return integrate(model, grid, noise_array(blocks, particles, model.dim), hurst, seed, method, threads)


def coupled_runs(
    model: ModelSpec,
    grid_fine: TimeGrid,
    factors: Sequence[int],
    particles: int,
    hurst: HurstLike,
    seed: int,
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE,
    threads: int = 1,
) -> Tuple[EnsembleTrajectory, Dict[int, EnsembleTrajectory]]:
    """one fine run and one coarse run per factor, all driven by the same
    fine noise (coarse runs consume block sums of it)
    """
    hurst = as_hurst(hurst)
    model.check_regime(hurst)
    _check_grid(model, grid_fine)
    coarse_grids = {factor: grid_fine.coarsen(factor) for factor in factors}
    blocks = generate_noise(grid_fine, particles, model.dim, hurst, seed, method, threads)
    fine = integrate(model, grid_fine, noise_array(blocks, particles, model.dim), hurst, seed, method, threads)
    coarse = {}
    for factor, grid in coarse_grids.items():
        coarse_blocks = [coarsen(b, factor) for b in blocks]
        coarse[factor] = integrate(
            model, grid, noise_array(coarse_blocks, particles, model.dim), hurst, seed, method, threads
        )
    return fine, coarse


def coupled_pair_run(
    model: ModelSpec,
    grid_fine: TimeGrid,
    factor: int,
    particles: int,
    hurst: HurstLike,
    seed: int,
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE,
    threads: int = 1,
) -> Tuple[EnsembleTrajectory, EnsembleTrajectory]:
    fine, coarse = coupled_runs(model, grid_fine, [factor], particles, hurst, seed, method, threads)
    return fine, coarse[factor]

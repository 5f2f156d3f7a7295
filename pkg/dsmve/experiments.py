"""Strong convergence, propagation of chaos, and the maximal / moment
probes.

Replications run on a thread pool and are aggregated in seed order, so
tables do not depend on the thread count.
"""

from concurrent.futures import ThreadPoolExecutor
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy import stats

from dsmve.errors import DomainError, MomentBlowUpError, UsageError
from dsmve.fgn import as_hurst, generate_streams, path_from_increments
from dsmve.measure import norms, ordered_mean
from dsmve.models.grid import EnsembleTrajectory, TimeGrid
from dsmve.models.model_spec import ModelSpec
from dsmve.models.noise import GeneratorMethod
from dsmve.models.study import (
    ChaosRow,
    ChaosTable,
    ConvergenceStudy,
    ErrorRow,
    ErrorTable,
    MaximalProbeResult,
    MaximalProbeRow,
    MomentProbeRow,
    MomentProbeTable,
    SlopeFit,
)
from dsmve.rng_util import replication_seed
from dsmve import solver

log = logging.getLogger("dsmve.experiments")

T = TypeVar("T")

MIN_PROBE_PATHS = 10_000
MAXIMAL_PROBE_GRID_POINTS = 1024
MAXIMAL_PROBE_BATCH = 1000
MOMENT_RATIO_BOUND = 2.0


def map_replications(fn: Callable[[int], T], count: int, threads: int = 1) -> List[T]:
    "fn(r) for r = 0..count-1 in order, concurrently when threads > 1"
    if threads <= 1 or count < 2:
        return [fn(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _mean_and_std_error(values: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    center = float(ordered_mean(values))
    if len(values) < 2:
        return center, 0.0
    return center, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def fit_slope(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    "least squares fit of y against x with a 95% t interval on the slope"
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise UsageError(f"need at least two (x, y) pairs got {len(x)} and {len(y)}")
    if len(x) == 2:
        slope = float((y[1] - y[0]) / (x[1] - x[0]))
        return SlopeFit(
            slope=slope,
            intercept=float(y[0] - slope * x[0]),
            stderr=math.nan,
            ci_low=math.nan,
            ci_high=math.nan,
            points=2,
        )
    result = stats.linregress(x, y)
    half_width = float(stats.t.ppf(0.975, len(x) - 2) * result.stderr)
    return SlopeFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        stderr=float(result.stderr),
        ci_low=float(result.slope) - half_width,
        ci_high=float(result.slope) + half_width,
        points=len(x),
    )


def _check_coupling(fine: EnsembleTrajectory, coarse: EnsembleTrajectory) -> int:
    "returns the coarsening factor relating the two grids"
    mismatched = [
        name
        for name, a, b in [
            ("seed", fine.seed, coarse.seed),
            ("particles", fine.particles, coarse.particles),
            ("model_id", fine.model_id, coarse.model_id),
            ("hurst", fine.hurst, coarse.hurst),
            ("method", fine.method, coarse.method),
            ("dim", fine.dim, coarse.dim),
        ]
        if a != b
    ]
    if not math.isclose(fine.grid.horizon, coarse.grid.horizon, rel_tol=1e-12):
        mismatched.append("horizon")
    if mismatched:
        raise UsageError(f"trajectories are not coupled; mismatched {mismatched}")
    factor = coarse.grid.dt / fine.grid.dt
    if factor < 1 or not math.isclose(factor, round(factor), rel_tol=1e-12):
        raise UsageError(f"coarse dt {coarse.grid.dt!r} is not a multiple of fine dt {fine.grid.dt!r}")
    return int(round(factor))


def strong_error(fine: EnsembleTrajectory, coarse: EnsembleTrajectory, p: float = 2.0, mode: str = "terminal") -> float:
    """((1/N) sum_i |fine_i(T) - coarse_i(T)|^p)^(1/p)

    mode "sup" replaces the terminal difference by the max over coarse grid
    points of [0, T] (only meaningful for H > 1/2).
    """
    if p < 1:
        raise DomainError(f"p must be >= 1 got {p!r}")
    factor = _check_coupling(fine, coarse)
    if mode == "terminal":
        diffs = norms(fine.terminal() - coarse.terminal())
    elif mode == "sup":
        fine_rows = fine.states[:, fine.grid.delay_steps :: factor, :]
        coarse_rows = coarse.states[:, coarse.grid.delay_steps :, :]
        diffs = np.max(norms(fine_rows - coarse_rows), axis=1)
    else:
        raise UsageError(f"unknown error mode {mode!r}")
    return float(ordered_mean(diffs ** p) ** (1.0 / p))


def _fit_log2(xs: Sequence[float], ys: Sequence[float], flagged: Sequence[bool]) -> Optional[SlopeFit]:
    usable = [(x, y) for x, y, bad in zip(xs, ys, flagged) if not bad]
    if len(usable) < 2:
        return None
    return fit_slope([math.log2(x) for x, _ in usable], [math.log2(y) for _, y in usable])


def convergence_table(
    hurst: float,
    level_errors: Dict[int, Sequence[float]],
    theoretical_exponent: float,
    p: float = 2.0,
    fine_level: int = 14,
    error_mode: str = "terminal",
    model_id: str = "",
) -> ErrorTable:
    "aggregates per-level replication errors and fits log2 err against log2 dt"
    rows = []
    for level, errs in sorted(level_errors.items()):
        err, std_error = _mean_and_std_error(errs)
        flagged = not (err > 0 and math.isfinite(err))
        if flagged:
            log.warning(f"H={hurst} level {level} has degenerate err={err}; excluding it from the slope fit")
        rows.append(
            ErrorRow(dt=2.0 ** -level, level=level, err=err, repeats=len(errs), std_error=std_error, flagged=flagged)
        )
    fit = _fit_log2([row.dt for row in rows], [row.err for row in rows], [row.flagged for row in rows])
    if fit is None:
        log.warning(f"H={hurst} has fewer than two usable levels; slope undefined")
    return ErrorTable(
        hurst=hurst,
        rows=rows,
        fit=fit,
        theoretical_exponent=theoretical_exponent,
        p=p,
        fine_level=fine_level,
        error_mode=error_mode,
        model_id=model_id,
    )


def convergence_study(study: ConvergenceStudy) -> List[ErrorTable]:
    """one ErrorTable per Hurst parameter: coupled fine/coarse runs for
    every replication seed, errors averaged over replications
    """
    grid = study.fine_grid()
    factors = study.factors()
    tables = []
    for h in study.hurst_list:
        hurst = as_hurst(h)
        study.model.check_regime(hurst)
        if study.error_mode == "sup" and hurst.h <= 0.5:
            raise UsageError(f"sup-over-grid errors are only reported for H > 1/2 got H={hurst.h}")
        log.info(
            f"convergence H={hurst.h} fine level {study.fine_level} coarse levels {sorted(factors)} "
            f"N={study.particles} repeats={study.repeats}"
        )

        def replicate(r: int) -> Dict[int, float]:
            seed = replication_seed(study.seed, r)
            fine, coarse = solver.coupled_runs(
                study.model, grid, list(factors.values()), study.particles, hurst, seed, study.method
            )
            errs = {
                level: strong_error(fine, coarse[factor], study.p, study.error_mode)
                for level, factor in factors.items()
            }
            log.debug(f"H={hurst.h} replication {r} seed {seed} errors {errs}")
            return errs

        replications = map_replications(replicate, study.repeats, study.threads)
        level_errors = {level: [errs[level] for errs in replications] for level in factors}
        table = convergence_table(
            hurst.h,
            level_errors,
            theoretical_exponent=min(study.model.holder_exponent, hurst.h),
            p=study.p,
            fine_level=study.fine_level,
            error_mode=study.error_mode,
            model_id=study.model.model_id,
        )
        log.info(
            f"H={hurst.h} fitted slope {table.fitted_slope:.4f} CI {table.slope_ci} "
            f"theoretical {table.theoretical_exponent}"
        )
        tables.append(table)
    return tables


def chaos_rate_exponent(p: float, dim: int, horizon: float, delay: float, epsilon: float = 1.0) -> Dict:
    """exponent of N in the p-th moment propagation of chaos bound with
    lambda = ((p - epsilon) / p)^floor(T / delay)
    """
    if not (0 < epsilon <= 1):
        raise DomainError(f"epsilon must be in (0, 1] got {epsilon!r}")
    lam = ((p - epsilon) / p) ** math.floor(horizon / delay + 1e-9)
    if p > dim / 2:
        return dict(regime="p>d/2", exponent=-0.5 * lam, lam=lam)
    elif p == dim / 2:
        return dict(regime="p=d/2 (times a log(1+N) factor)", exponent=-0.5 * lam, lam=lam)
    return dict(regime="p<d/2", exponent=-(p / dim) * lam, lam=lam)


def ensemble_gap(reference: EnsembleTrajectory, traj: EnsembleTrajectory, p: float = 2.0) -> float:
    "((1/N) sum_{i<N} |reference_i(T) - traj_i(T)|^p)^(1/p) over the first N reference particles"
    if traj.particles > reference.particles:
        raise UsageError(f"reference has {reference.particles} particles but the system has {traj.particles}")
    diffs = norms(reference.terminal()[: traj.particles] - traj.terminal())
    return float(ordered_mean(diffs ** p) ** (1.0 / p))


def chaos_study(
    model: ModelSpec,
    grid: TimeGrid,
    particle_counts: Sequence[int],
    reference_particles: int,
    hurst: float,
    seed: int,
    p: float = 2.0,
    repeats: int = 1,
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE,
    threads: int = 1,
    epsilon: float = 1.0,
) -> ChaosTable:
    """N particle systems against an N_ref particle proxy of the
    non-interacting limit; particle i uses noise stream i in every system
    """
    particle_counts = list(particle_counts)
    if not particle_counts or particle_counts != sorted(particle_counts):
        raise UsageError(f"particle counts must be non-empty and ascending got {particle_counts}")
    if reference_particles < 2 * max(particle_counts):
        raise UsageError(
            f"reference system needs at least {2 * max(particle_counts)} particles got {reference_particles}"
        )
    hurst = as_hurst(hurst)
    model.check_regime(hurst)

    def replicate(r: int) -> List[float]:
        rep_seed = replication_seed(seed, r)
        blocks = solver.generate_noise(grid, reference_particles, model.dim, hurst, rep_seed, method)
        noise = solver.noise_array(blocks, reference_particles, model.dim)
        reference = solver.integrate(model, grid, noise, hurst, rep_seed, method)
        gaps = []
        for n in particle_counts:
            traj = solver.integrate(model, grid, noise[:n], hurst, rep_seed, method)
            gaps.append(ensemble_gap(reference, traj, p))
        log.debug(f"chaos replication {r} seed {rep_seed} gaps {gaps}")
        return gaps

    replications = map_replications(replicate, repeats, threads)
    rows = []
    for j, n in enumerate(particle_counts):
        gap, std_error = _mean_and_std_error([gaps[j] for gaps in replications])
        flagged = not (gap > 0 and math.isfinite(gap))
        if flagged:
            log.warning(f"N={n} has degenerate gap={gap}; excluding it from the slope fit")
        rows.append(ChaosRow(particles=n, gap=gap, repeats=repeats, std_error=std_error, flagged=flagged))
    fit = _fit_log2([row.particles for row in rows], [row.gap for row in rows], [row.flagged for row in rows])
    rate = chaos_rate_exponent(p, model.dim, grid.horizon, grid.delay, epsilon)
    table = ChaosTable(
        reference_particles=reference_particles,
        rows=rows,
        fit=fit,
        theoretical_exponent=rate["exponent"],
        lambda_value=rate["lam"],
        epsilon=epsilon,
        regime=rate["regime"],
        hurst=hurst.h,
        p=p,
    )
    log.info(f"chaos fitted slope {table.fitted_slope:.4f} bound exponent {table.theoretical_exponent:.6f}")
    return table


def maximal_inequality_probe(
    hurst: float,
    p: float,
    horizons: Sequence[float],
    paths: int,
    seed: int,
    grid_points: int = MAXIMAL_PROBE_GRID_POINTS,
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE,
    threads: int = 1,
) -> MaximalProbeResult:
    """Monte Carlo E[sup_{s <= t} |B^H_s|^p] on a grid_points grid of [0, t]
    for each t, regressed on log t. The slope should be p H.
    """
    if not p > 0:
        raise DomainError(f"p must be positive got {p!r}")
    horizons = sorted(float(t) for t in horizons)
    if len(horizons) < 2 or horizons[0] <= 0 or horizons[-1] / horizons[0] < 10:
        raise UsageError(f"horizons must be positive and span at least a decade got {horizons}")
    if paths < MIN_PROBE_PATHS:
        log.warning(f"{paths} paths is below the recommended {MIN_PROBE_PATHS}")
    hurst = as_hurst(hurst)
    rows = []
    for j, t in enumerate(horizons):
        dt = t / grid_points
        sups: List[float] = []
        for start in range(0, paths, MAXIMAL_PROBE_BATCH):
            streams = range(start, min(paths, start + MAXIMAL_PROBE_BATCH))
            blocks = generate_streams(grid_points, dt, hurst, replication_seed(seed, j), streams, method, threads)
            sups.extend(float(np.max(np.abs(path_from_increments(b)))) for b in blocks)
        estimate, std_error = _mean_and_std_error(np.asarray(sups) ** p)
        log.debug(f"maximal probe t={t} estimate {estimate} +/- {std_error}")
        rows.append(MaximalProbeRow(horizon=t, estimate=estimate, std_error=std_error))
    fit = fit_slope([math.log(row.horizon) for row in rows], [math.log(row.estimate) for row in rows])
    result = MaximalProbeResult(hurst=hurst.h, p=p, paths=paths, grid_points=grid_points, rows=rows, fit=fit)
    log.info(f"maximal probe H={hurst.h} p={p} slope {result.slope:.4f} expected {result.expected:.4f}")
    return result


def sup_moment(traj: EnsembleTrajectory, p_bar: float) -> Tuple[float, float]:
    "(1/N) sum_i max_{0 <= k <= M_T} |Z_i(t_k)|^p_bar and its standard error"
    running = traj.states[:, traj.grid.delay_steps :, :]
    per_particle = np.max(norms(running), axis=1) ** p_bar
    return _mean_and_std_error(per_particle)


def moment_bound_probe(
    model: ModelSpec,
    grids: Sequence[TimeGrid],
    particles: int,
    hurst: float,
    seed: int,
    p_bar: float = 4.0,
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE,
    threads: int = 1,
) -> MomentProbeTable:
    """E[sup_k |Z(t_k)|^p_bar] for each grid; a blow-up is recorded on its
    row instead of raised
    """
    if not grids:
        raise UsageError("need at least one grid")
    first = grids[0]
    for grid in grids[1:]:
        if not (
            math.isclose(grid.delay, first.delay, rel_tol=1e-12)
            and math.isclose(grid.horizon, first.horizon, rel_tol=1e-12)
        ):
            raise UsageError(f"grids must share delay and horizon; got {grid.to_dict()} and {first.to_dict()}")
    hurst = as_hurst(hurst)
    if not model.in_assumption_class:
        log.warning(f"model {model.model_id!r} is outside the delay-slot class; blow-ups are expected")
    rows = []
    for grid in grids:
        try:
            traj = solver.run(model, grid, particles, hurst, seed, method, threads)
        except MomentBlowUpError as e:
            log.warning(f"moment blow-up at dt={grid.dt}: {e}")
            rows.append(
                MomentProbeRow(dt=grid.dt, estimate=math.inf, std_error=math.nan, blow_up=True, blow_up_step=e.step)
            )
            continue
        estimate, std_error = sup_moment(traj, p_bar)
        log.debug(f"moment probe dt={grid.dt} estimate {estimate} +/- {std_error}")
        rows.append(MomentProbeRow(dt=grid.dt, estimate=estimate, std_error=std_error))
    table = MomentProbeTable(
        model_id=model.model_id,
        hurst=hurst.h,
        p_bar=p_bar,
        rows=rows,
        ratio_bound=MOMENT_RATIO_BOUND,
        in_assumption_class=model.in_assumption_class,
    )
    log.info(f"moment probe ratio {table.ratio:.4f} bounded={table.bounded} blow_up={table.blow_up}")
    return table

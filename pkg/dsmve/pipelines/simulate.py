import argparse
import logging
from typing import AsyncGenerator

import numpy as np

from dsmve.config import SimulateConfig, parse_config
from dsmve.models.grid import EnsembleTrajectory
from dsmve.models.pipeline import CsvTable, Pipeline, run_overrides
from dsmve.pipelines.util import run_blocking
from dsmve import solver

log = logging.getLogger("dsmve.pipelines.simulate")

__doc__ = """Runs the interacting particle scheme for a configured model and
writes every particle state at every grid point as CSV"""

FIELDS = ("particle", "k", "t_k")


def read_config(args: argparse.Namespace) -> SimulateConfig:
    return parse_config(args.config, "simulate", run_overrides(args))


async def run_pipeline(config: SimulateConfig, args: argparse.Namespace) -> AsyncGenerator[EnsembleTrajectory, None]:
    log.info("simulate pipeline started")
    log.info(
        f"simulating {config.model.model_id} N={config.particles} H={config.hurst.h} grid {config.grid.to_dict()}"
    )
    traj = await run_blocking(
        solver.run,
        config.model,
        config.grid,
        config.particles,
        config.hurst,
        config.options.seed,
        config.options.method,
        config.options.threads,
    )
    yield traj


def header(dim: int) -> tuple:
    return FIELDS + tuple(f"x{c}" for c in range(dim))


def serialize(args: argparse.Namespace, traj: EnsembleTrajectory) -> CsvTable:
    table = CsvTable(header=header(traj.dim))
    times = traj.grid.times()
    ks = range(-traj.grid.delay_steps, traj.grid.horizon_steps + 1)
    for i in range(traj.particles):
        for row, k in enumerate(ks):
            table.rows.append((i, k, times[row], *traj.states[i, row, :]))
    terminal = traj.terminal()
    table.summary.append(
        f"{traj.model_id}: N={traj.particles} T={traj.grid.horizon:g} dt={traj.grid.dt:g} "
        f"terminal mean {np.mean(terminal, axis=0).tolist()} std {np.std(terminal, axis=0).tolist()}"
    )
    return table


pipeline = Pipeline(
    name="simulate",
    desc=__doc__,
    fields=FIELDS,
    reader=read_config,
    runner=run_pipeline,
    serializer=serialize,
)

import argparse
import logging
from typing import AsyncGenerator

from dsmve.config import ChaosConfig, parse_config
from dsmve.experiments import chaos_study
from dsmve.models.pipeline import CsvTable, Pipeline, run_overrides
from dsmve.models.study import ChaosTable
from dsmve.pipelines.util import format_ci, run_blocking
from dsmve.plot_util import emit_svg

log = logging.getLogger("dsmve.pipelines.chaos")

__doc__ = """Gap between N particle systems and a large shared-noise
reference system over a range of N"""

FIELDS = ("particles", "gap", "std_error", "repeats", "flagged")


def read_config(args: argparse.Namespace) -> ChaosConfig:
    return parse_config(args.config, "chaos", run_overrides(args))


async def run_pipeline(config: ChaosConfig, args: argparse.Namespace) -> AsyncGenerator[ChaosTable, None]:
    log.info("chaos pipeline started")
    table = await run_blocking(
        chaos_study,
        config.model,
        config.grid,
        config.particle_counts,
        config.reference_particles,
        config.hurst,
        config.options.seed,
        p=config.p,
        repeats=config.repeats,
        method=config.options.method,
        threads=config.options.threads,
        epsilon=config.epsilon,
    )
    yield table


def serialize(args: argparse.Namespace, table: ChaosTable) -> CsvTable:
    rows = [(row.particles, row.gap, row.std_error, row.repeats, row.flagged) for row in table.rows]
    ci = table.fit.ci if table.fit else (float("nan"), float("nan"))
    summary = [
        f"N_ref={table.reference_particles} H={table.hurst:g} p={table.p:g}: fitted slope {table.fitted_slope:.4f} "
        f"95% CI {format_ci(ci)}; non-increasing within 1.1x: {table.non_increasing()}",
        f"bound exponent {table.theoretical_exponent:.6f} ({table.regime}, lambda={table.lambda_value:.6f} "
        f"with epsilon={table.epsilon:g}); {table.note}",
    ]
    return CsvTable(header=FIELDS, rows=rows, summary=summary)


pipeline = Pipeline(
    name="chaos",
    desc=__doc__,
    fields=FIELDS,
    reader=read_config,
    runner=run_pipeline,
    serializer=serialize,
    plotter=emit_svg,
)

import argparse
import logging
from typing import AsyncGenerator

from dsmve.config import MomentProbeConfig, parse_config
from dsmve.experiments import moment_bound_probe
from dsmve.models.pipeline import CsvTable, Pipeline, run_overrides
from dsmve.models.study import MomentProbeTable
from dsmve.pipelines.util import run_blocking
from dsmve.plot_util import emit_svg

log = logging.getLogger("dsmve.pipelines.probe_moments")

__doc__ = """Supremum moment of the particle system across step sizes;
blow-ups are reported as flagged rows"""

FIELDS = ("dt", "estimate", "std_error", "blow_up", "blow_up_step")


def read_config(args: argparse.Namespace) -> MomentProbeConfig:
    return parse_config(args.config, "probe-moments", run_overrides(args))


async def run_pipeline(config: MomentProbeConfig, args: argparse.Namespace) -> AsyncGenerator[MomentProbeTable, None]:
    log.info("probe-moments pipeline started")
    table = await run_blocking(
        moment_bound_probe,
        config.model,
        config.grids,
        config.particles,
        config.hurst,
        config.options.seed,
        p_bar=config.p_bar,
        method=config.options.method,
        threads=config.options.threads,
    )
    yield table


def serialize(args: argparse.Namespace, table: MomentProbeTable) -> CsvTable:
    rows = [(row.dt, row.estimate, row.std_error, row.blow_up, row.blow_up_step) for row in table.rows]
    summary = (
        f"{table.model_id} H={table.hurst:g} p_bar={table.p_bar:g}: max/min ratio {table.ratio:.4f} "
        f"(bound {table.ratio_bound:g}) bounded={table.bounded} blow_up={table.blow_up}"
    )
    if not table.in_assumption_class:
        summary += " [model outside the delay-slot class; negative control]"
    return CsvTable(header=FIELDS, rows=rows, summary=[summary])


pipeline = Pipeline(
    name="probe-moments",
    desc=__doc__,
    fields=FIELDS,
    reader=read_config,
    runner=run_pipeline,
    serializer=serialize,
    plotter=emit_svg,
)

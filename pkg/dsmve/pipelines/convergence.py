import argparse
import logging
from typing import AsyncGenerator

from dsmve.config import ConvergenceConfig, parse_config
from dsmve.experiments import convergence_study
from dsmve.models.pipeline import CsvTable, Pipeline, run_overrides
from dsmve.models.study import ErrorTable
from dsmve.pipelines.util import format_ci, run_blocking
from dsmve.plot_util import emit_svg

log = logging.getLogger("dsmve.pipelines.convergence")

__doc__ = """Strong error of coarse grid runs against a coupled fine grid
run for each configured Hurst parameter, with fitted log-log slopes"""

FIELDS = ("hurst", "level", "dt", "err", "std_error", "repeats", "flagged")


def read_config(args: argparse.Namespace) -> ConvergenceConfig:
    return parse_config(args.config, "convergence", run_overrides(args))


async def run_pipeline(config: ConvergenceConfig, args: argparse.Namespace) -> AsyncGenerator[ErrorTable, None]:
    log.info("convergence pipeline started")
    tables = await run_blocking(convergence_study, config.study)
    for table in tables:
        yield table


def serialize(args: argparse.Namespace, table: ErrorTable) -> CsvTable:
    rows = [
        (table.hurst, row.level, row.dt, row.err, row.std_error, row.repeats, row.flagged) for row in table.rows
    ]
    summary = (
        f"H={table.hurst:g} ({table.error_mode} error, p={table.p:g}): fitted slope {table.fitted_slope:.4f} "
        f"95% CI {format_ci(table.slope_ci)} theoretical exponent {table.theoretical_exponent:g}"
    )
    if table.flagged:
        summary += " [flagged: degenerate rows excluded]"
    return CsvTable(header=FIELDS, rows=rows, summary=[summary])


pipeline = Pipeline(
    name="convergence",
    desc=__doc__,
    fields=FIELDS,
    reader=read_config,
    runner=run_pipeline,
    serializer=serialize,
    plotter=emit_svg,
)

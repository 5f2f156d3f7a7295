import argparse
import logging
from typing import AsyncGenerator

from dsmve.config import MaximalProbeConfig, parse_config
from dsmve.experiments import maximal_inequality_probe
from dsmve.models.pipeline import CsvTable, Pipeline, run_overrides
from dsmve.models.study import MaximalProbeResult
from dsmve.pipelines.util import format_ci, run_blocking
from dsmve.plot_util import emit_svg

log = logging.getLogger("dsmve.pipelines.probe_maximal")

__doc__ = """Monte Carlo scaling of E[sup_{s <= t} |B^H_s|^p] in t"""

FIELDS = ("horizon", "estimate", "std_error")


def read_config(args: argparse.Namespace) -> MaximalProbeConfig:
    return parse_config(args.config, "probe-maximal", run_overrides(args))


async def run_pipeline(
    config: MaximalProbeConfig, args: argparse.Namespace
) -> AsyncGenerator[MaximalProbeResult, None]:
    log.info("probe-maximal pipeline started")
    result = await run_blocking(
        maximal_inequality_probe,
        config.hurst,
        config.p,
        config.horizons,
        config.paths,
        config.options.seed,
        grid_points=config.grid_points,
        method=config.options.method,
        threads=config.options.threads,
    )
    yield result


def serialize(args: argparse.Namespace, result: MaximalProbeResult) -> CsvTable:
    rows = [(row.horizon, row.estimate, row.std_error) for row in result.rows]
    summary = (
        f"H={result.hurst:g} p={result.p:g} paths={result.paths}: fitted slope {result.slope:.4f} "
        f"95% CI {format_ci(result.fit.ci)} expected pH={result.expected:.4f}"
    )
    return CsvTable(header=FIELDS, rows=rows, summary=[summary])


pipeline = Pipeline(
    name="probe-maximal",
    desc=__doc__,
    fields=FIELDS,
    reader=read_config,
    runner=run_pipeline,
    serializer=serialize,
    plotter=emit_svg,
)

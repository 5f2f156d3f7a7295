import argparse
from dataclasses import dataclass
import logging
import math
from typing import AsyncGenerator, List

import numpy as np

from dsmve.config import parse_hurst
from dsmve.errors import ConfigError
from dsmve.fgn import generate_streams, path_from_increments
from dsmve.models.noise import GeneratorMethod, Hurst, NoiseBlock
from dsmve.models.pipeline import CsvTable, Pipeline, add_method_arg, add_outfile_args
from dsmve.pipelines.util import run_blocking
from dsmve.solver import MAX_GRID_STEPS

log = logging.getLogger("dsmve.pipelines.fbm")

__doc__ = """Samples fractional Gaussian noise streams and writes the
increments and cumulative fBm path of each stream as CSV"""

FIELDS = ("stream_id", "k", "t_k", "increment", "cumulative")


@dataclass(frozen=True)
class FbmRequest:
    n: int
    dt: float
    hurst: Hurst
    seed: int
    streams: int
    method: GeneratorMethod

    def to_dict(self: "FbmRequest") -> dict:
        return dict(
            n=self.n, dt=self.dt, hurst=self.hurst.h, seed=self.seed, streams=self.streams, method=self.method.value
        )


def parse_args(pipeline_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    parser = add_outfile_args(pipeline_parser)
    parser = add_method_arg(parser)
    parser.add_argument("--n", type=int, required=True, help="number of increments per stream")
    parser.add_argument("--dt", type=float, required=True, help="step size")
    parser.add_argument("--hurst", type=float, required=True, help="Hurst parameter in (0, 1)")
    parser.add_argument("--seed", type=int, default=20200415, help="seed (defaults to 20200415)")
    parser.add_argument("--streams", type=int, default=1, help="number of streams 0..streams-1 (defaults to 1)")
    parser.add_argument("--threads", type=int, default=1, help="threads for sampling streams (defaults to 1)")
    parser.add_argument(
        "--allow-brownian", action="store_true", default=False, help="Accept H = 0.5. Defaults to False."
    )
    return parser


def read_request(args: argparse.Namespace) -> FbmRequest:
    if not 1 <= args.n <= MAX_GRID_STEPS:
        raise ConfigError(f"expected 1..{MAX_GRID_STEPS} increments got {args.n}", field="--n")
    if not (args.dt > 0 and math.isfinite(args.dt)):
        raise ConfigError(f"expected a positive step got {args.dt!r}", field="--dt")
    if args.seed < 0:
        raise ConfigError(f"expected a non-negative seed got {args.seed}", field="--seed")
    if args.streams < 1:
        raise ConfigError(f"expected at least one stream got {args.streams}", field="--streams")
    if args.threads < 1:
        raise ConfigError(f"expected at least one thread got {args.threads}", field="--threads")
    return FbmRequest(
        n=args.n,
        dt=args.dt,
        hurst=parse_hurst(args.hurst, "--hurst", args.allow_brownian),
        seed=args.seed,
        streams=args.streams,
        method=GeneratorMethod.parse(args.method),
    )


async def run_pipeline(request: FbmRequest, args: argparse.Namespace) -> AsyncGenerator[List[NoiseBlock], None]:
    log.info("fbm pipeline started")
    blocks = await run_blocking(
        generate_streams,
        request.n,
        request.dt,
        request.hurst,
        request.seed,
        range(request.streams),
        request.method,
        args.threads,
    )
    yield blocks


def serialize(args: argparse.Namespace, blocks: List[NoiseBlock]) -> CsvTable:
    table = CsvTable(header=FIELDS)
    for block in blocks:
        path = path_from_increments(block)
        # k = 0 anchors the path at B_0 = 0 with no increment before it
        table.rows.append((block.stream_id, 0, 0.0, 0.0, path[0]))
        for k in range(1, len(block) + 1):
            table.rows.append((block.stream_id, k, k * block.step, block.increments[k - 1], path[k]))
    if blocks:
        terminal = np.array([path_from_increments(b)[-1] for b in blocks])
        table.summary.append(
            f"{len(blocks)} stream(s) of {len(blocks[0])} increments with H={blocks[0].hurst.h} "
            f"method={blocks[0].method.value}; mean terminal value {terminal.mean():.6f}"
        )
    return table


pipeline = Pipeline(
    name="fbm",
    desc=__doc__,
    fields=FIELDS,
    argparser=parse_args,
    reader=read_request,
    runner=run_pipeline,
    serializer=serialize,
)

import argparse
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

from dsmve.models.noise import GeneratorMethod
from dsmve.serialize_util import Cell


def add_config_arg(pipeline_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    pipeline_parser.add_argument(
        "-c",
        "--config",
        type=str,
        required=True,
        help="JSON config file for the subcommand",
    )
    return pipeline_parser


def add_outfile_args(pipeline_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    pipeline_parser.add_argument(
        "-o",
        "--out",
        type=str,
        required=False,
        default="-",
        help="CSV output file (defaults to stdout '-'). A run manifest is written to <out>.manifest.json",
    )
    return pipeline_parser


def add_svg_arg(pipeline_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    pipeline_parser.add_argument(
        "--svg",
        type=str,
        required=False,
        default=None,
        help="Optional log-log SVG plot output file (defaults to None)",
    )
    return pipeline_parser


def add_run_args(pipeline_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    pipeline_parser.add_argument(
        "--seed",
        type=int,
        required=False,
        default=None,
        help="Override the config seed",
    )
    pipeline_parser.add_argument(
        "--threads",
        type=int,
        required=False,
        default=None,
        help="Override the config thread count. Results do not depend on it.",
    )
    pipeline_parser.add_argument(
        "--allow-brownian",
        action="store_true",
        required=False,
        default=False,
        help="Accept H = 0.5 for standard Brownian motion sanity runs. Defaults to False.",
    )
    return pipeline_parser


def add_method_arg(pipeline_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    pipeline_parser.add_argument(
        "--method",
        type=str,
        choices=[m.value for m in GeneratorMethod],
        required=False,
        default=GeneratorMethod.DAVIES_HARTE.value,
        help="fGn generator (defaults to davies-harte)",
    )
    return pipeline_parser


def add_config_pipeline_args(pipeline_parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    "the global flags of the config driven subcommands"
    parser = add_config_arg(pipeline_parser)
    parser = add_outfile_args(parser)
    parser = add_svg_arg(parser)
    return add_run_args(parser)


def run_overrides(args: argparse.Namespace) -> dict:
    return dict(seed=args.seed, threads=args.threads, allow_brownian=args.allow_brownian)


@dataclass
class CsvTable:
    header: Sequence[str]
    rows: List[Sequence[Cell]] = field(default_factory=list)
    # human readable report lines
    summary: List[str] = field(default_factory=list)

    def extend(self, other: "CsvTable") -> "CsvTable":
        if list(other.header) != list(self.header):
            raise ValueError(f"cannot join tables with headers {self.header} and {other.header}")
        self.rows.extend(other.rows)
        self.summary.extend(other.summary)
        return self


@dataclass
class Pipeline:
    """
    A Pipeline to run. run_pipeline.py will:

    0. use the .argparser to read any additional program arguments
    1. build a validated config from the args with .reader
    2. process the config with the async generator .runner
    3. serialize each result to a CsvTable with .serializer
    4. write the joined CSV with the summary and manifest, and optionally
       plot all results to an SVG with .plotter
    """

    # pipeline name
    name: str
    # pipeline description
    desc: str

    # CSV columns
    fields: Sequence[str]

    reader: Callable
    runner: Callable
    serializer: Callable
    argparser: Callable = field(default=add_config_pipeline_args)
    plotter: Optional[Callable] = None

#!/usr/bin/env python

"""
dsmve <subcommand> [options]

Runs one simulation or study pipeline and writes a CSV table, a summary,
a run manifest, and optionally an SVG plot.
"""

import argparse
import asyncio
import logging
import sys
import time
from typing import Any, List, Optional, Sequence

from dsmve import NAME, VERSION
from dsmve.errors import EXIT_OK, exc_to_str, exit_code_for
from dsmve.io_util import STDOUT, save_to_tmpfile, sha256_file, write_csv, write_manifest
from dsmve.models.manifest import RunManifest
from dsmve.models.pipeline import CsvTable, Pipeline
from dsmve.pipelines import pipelines

log = logging.getLogger("dsmve")
log.setLevel(logging.DEBUG)
fh = logging.FileHandler("dsmve-debug.log", delay=True)
fh.setLevel(logging.DEBUG)
ch = logging.StreamHandler()
ch.setLevel(logging.INFO)
formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
fh.setFormatter(formatter)
ch.setFormatter(formatter)


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Runs a single pipeline", usage=__doc__)
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        default=False,
        help="Enable debug logging to the console",
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="store_true",
        default=False,
        help="don't log anything to the console",
    )
    parser.add_argument(
        "--save-to-tmpfile",
        action="store_true",
        default=False,
        help="Save unserialized and serialized results to temp files. Defaults to False.",
    )

    subparsers = parser.add_subparsers(help="available pipelines", dest="pipeline_name")
    subparsers.required = True
    for pipeline in pipelines:
        pipeline_parser = subparsers.add_parser(pipeline.name, help=pipeline.desc)
        pipeline.argparser(pipeline_parser)
    return parser.parse_args(argv)


def emit_summary(lines: Sequence[str], out_path: str) -> None:
    "to stdout unless the CSV is going there"
    stream = sys.stderr if out_path == STDOUT else sys.stdout
    for line in lines:
        print(line, file=stream)


async def collect(pipeline: Pipeline, config: Any, args: argparse.Namespace) -> List[Any]:
    results = []
    async for result in pipeline.runner(config, args):
        if args.save_to_tmpfile:
            save_to_tmpfile(f"{args.pipeline_name}_unserialized_", file_ext=".pickle", item=result)
        results.append(result)
    return results


def run(pipeline: Pipeline, args: argparse.Namespace) -> RunManifest:
    started = time.monotonic()
    config = pipeline.reader(args)
    config_path = getattr(args, "config", None)
    options = getattr(config, "options", None)
    manifest = RunManifest(
        tool=NAME,
        version=VERSION,
        command=pipeline.name,
        seed=options.seed if options is not None else getattr(config, "seed", None),
        config_path=config_path,
        config_sha256=sha256_file(config_path) if config_path else None,
        parameters=config.to_dict(),
    )

    results = asyncio.run(collect(pipeline, config, args), debug=False)

    table: Optional[CsvTable] = None
    for result in results:
        serialized = pipeline.serializer(args, result)
        table = serialized if table is None else table.extend(serialized)
    if table is None:
        table = CsvTable(header=pipeline.fields)
    if args.save_to_tmpfile:
        save_to_tmpfile(f"{args.pipeline_name}_serialized_", file_ext=".json", item=table.rows)

    write_csv(args.out, table.header, table.rows)
    outputs = [args.out]
    svg = getattr(args, "svg", None)
    if svg and pipeline.plotter is not None and results:
        pipeline.plotter(results, svg)
        outputs.append(svg)
    emit_summary(table.summary, args.out)

    manifest.outputs = {path: "" for path in outputs if path != STDOUT}
    manifest.wall_clock_seconds = round(time.monotonic() - started, 3)
    write_manifest(manifest, args.out)
    return manifest


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    if args.verbose:
        ch.setLevel(logging.DEBUG)

    # add the handlers to the logger
    log.addHandler(fh)
    log.addHandler(ch)

    if args.quiet:
        log.removeHandler(ch)

    log.debug(f"args: {vars(args)}")

    pipeline = next(p for p in pipelines if p.name == args.pipeline_name)
    log.info(f"running pipeline {args.pipeline_name} writing to {args.out}")

    try:
        run(pipeline, args)
        log.info(f"pipeline {args.pipeline_name} finished")
    except Exception as e:
        code = exit_code_for(e)
        if code is None:
            log.error(f"error running {args.pipeline_name} pipeline:\n{exc_to_str()}")
            raise
        log.error(f"{args.pipeline_name} pipeline failed ({type(e).__name__}): {e}")
        log.debug(exc_to_str())
        return code
    finally:
        log.removeHandler(fh)
        log.removeHandler(ch)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

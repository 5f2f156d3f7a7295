import contextlib
import hashlib
import json
import logging
import os
import pickle
import sys
import tempfile
from typing import Any, IO, Iterator, Optional, Sequence

from dsmve.models.manifest import RunManifest
from dsmve.serialize_util import Cell, dumps, emit_csv

log = logging.getLogger("dsmve.io_util")

STDOUT = "-"
MANIFEST_SUFFIX = ".manifest.json"


def save_to_tmpfile(prefix: str, item: Any, file_ext=".json"):
    "Serializes item to JSON or pickle and saves it to a named temp file with the given prefix"
    if file_ext == ".json":
        with tempfile.NamedTemporaryFile(
            mode="w+", encoding="utf-8", prefix=prefix, suffix=file_ext, delete=False
        ) as tmpout:
            try:
                tmpout.write(dumps(item))
                log.debug("saved to {}".format(tmpout.name))
            except TypeError as e:
                log.debug("error dumping JSON to save item to {}: {}".format(tmpout.name, e))
    elif file_ext == ".pickle":
        with tempfile.NamedTemporaryFile(mode="w+b", prefix=prefix, suffix=file_ext, delete=False) as tmpout:
            try:
                pickle.dump(item, tmpout)
                log.debug("saved to {}".format(tmpout.name))
            except Exception as e:
                log.debug("error pickling to save item to {}: {}".format(tmpout.name, e))
    else:
        log.debug("unknown type {} to dump {} item to temp file".format(file_ext, type(item)))


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fin:
        for chunk in iter(lambda: fin.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@contextlib.contextmanager
def open_output(path: str) -> Iterator[IO]:
    "text output with LF line endings; '-' is stdout"
    if path == STDOUT:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as fout:
        yield fout


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Cell]]) -> int:
    with open_output(path) as fout:
        count = emit_csv(fout, header, rows)
    log.debug(f"wrote {count} rows to {path}")
    return count


def manifest_path(out_path: str) -> str:
    return out_path + MANIFEST_SUFFIX


def write_manifest(manifest: RunManifest, out_path: str) -> Optional[str]:
    """digests every output file and writes the manifest next to out_path;
    does nothing when writing to stdout
    """
    if out_path == STDOUT:
        log.debug("not writing a manifest for stdout output")
        return None
    manifest.outputs = {path: sha256_file(path) for path in sorted(manifest.outputs) if os.path.exists(path)}
    path = manifest_path(out_path)
    with open(path, "w", encoding="utf-8", newline="") as fout:
        fout.write(dumps(manifest.to_dict()))
        fout.write("\n")
    log.info(f"wrote run manifest to {path}")
    return path


def read_manifest(path: str) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fin:
        return RunManifest.from_dict(json.load(fin))

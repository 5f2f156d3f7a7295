import csv
import contextlib
import io
import json
import math
from typing import Any, Callable, Dict, IO, Iterable, Iterator, List, Optional, Sequence, Set, Union

import numpy as np

from dsmve.errors import ConfigError, UnknownKeysError, UsageError

Cell = Union[str, int, float, bool, None]


def format_float(x: float) -> str:
    "17 significant digits; parses back to the same double"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    elif isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    elif isinstance(value, (int, np.integer)):
        return str(int(value))
    elif isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def emit_csv(outfile: IO, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> int:
    """writes a header line then one line per row with LF line endings;
    returns the number of data rows written
    """
    writer = csv.writer(outfile, lineterminator="\n")
    writer.writerow(header)
    count = 0
    for row in rows:
        if len(row) != len(header):
            raise UsageError(f"row {count} has {len(row)} cells for a {len(header)} column header")
        writer.writerow([format_cell(cell) for cell in row])
        count += 1
    return count


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> str:
    buf = io.StringIO()
    emit_csv(buf, header, rows)
    return buf.getvalue()


def parse_cell(text: str) -> Cell:
    "inverse of format_cell for the cell types dsmve emits"
    if text == "":
        return None
    elif text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_csv(infile: IO) -> List[Dict[str, Cell]]:
    return [{k: parse_cell(v) for k, v in row.items()} for row in csv.DictReader(infile)]


def to_json_safe(value: Any) -> Any:
    "converts numpy scalars/arrays and non-finite floats for json.dumps"
    if isinstance(value, dict):
        return {str(k): to_json_safe(v) for k, v in value.items()}
    elif isinstance(value, (list, tuple)):
        return [to_json_safe(v) for v in value]
    elif isinstance(value, np.ndarray):
        return to_json_safe(value.tolist())
    elif isinstance(value, (bool, np.bool_)):
        return bool(value)
    elif isinstance(value, (int, np.integer)):
        return int(value)
    elif isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else format_float(value)
    return value


def dumps(value: Any) -> str:
    return json.dumps(to_json_safe(value), sort_keys=True, indent=2)


_MISSING = object()


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


class ConfigBlock:
    """Reads typed values from one JSON object of a config file and
    remembers which keys were read so leftovers can be reported.

    path is the dotted path of the block e.g. "model.initial_path"
    """

    def __init__(self, d: Any, path: str = ""):
        if not isinstance(d, dict):
            raise ConfigError(f"expected an object got {type(d).__name__}", field=path or None)
        self.d = d
        self.path = path
        self.used: Set[str] = set()

    def field(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def __contains__(self, key: str) -> bool:
        return key in self.d

    def _missing(self, key: str, default: Any) -> Any:
        if default is _MISSING:
            raise ConfigError("missing required key", field=self.field(key))
        return default

    def _raw(self, key: str) -> Any:
        self.used.add(key)
        return self.d[key]

    def _check(self, key: str, value: Any, check: Optional[Callable[[Any], bool]], expect: str) -> Any:
        if check is not None and not check(value):
            raise ConfigError(f"expected {expect} got {value!r}", field=self.field(key))
        return value

    def number(
        self,
        key: str,
        default: Any = _MISSING,
        check: Optional[Callable[[float], bool]] = None,
        expect: str = "a number",
    ) -> float:
        if key not in self.d:
            return self._missing(key, default)
        value = self._raw(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"expected a finite number got {value!r}", field=self.field(key))
        return self._check(key, float(value), check, expect)

    def integer(
        self,
        key: str,
        default: Any = _MISSING,
        check: Optional[Callable[[int], bool]] = None,
        expect: str = "an integer",
    ) -> int:
        if key not in self.d:
            return self._missing(key, default)
        value = self._raw(key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer got {value!r}", field=self.field(key))
        return self._check(key, value, check, expect)

    def string(self, key: str, default: Any = _MISSING, choices: Optional[Sequence[str]] = None) -> str:
        if key not in self.d:
            return self._missing(key, default)
        value = self._raw(key)
        if not isinstance(value, str):
            raise ConfigError(f"expected a string got {value!r}", field=self.field(key))
        if choices is not None and value not in choices:
            raise ConfigError(f"expected one of {list(choices)} got {value!r}", field=self.field(key))
        return value

    def numbers(self, key: str, default: Any = _MISSING, scalar_ok: bool = False) -> List[float]:
        if key not in self.d:
            return list(self._missing(key, default))
        value = self._raw(key)
        if scalar_ok and isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if (
            not isinstance(value, list)
            or not value
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) for v in value)
        ):
            raise ConfigError(f"expected a non-empty list of numbers got {value!r}", field=self.field(key))
        return [float(v) for v in value]

    def integers(self, key: str, default: Any = _MISSING) -> List[int]:
        if key not in self.d:
            return list(self._missing(key, default))
        value = self._raw(key)
        if not isinstance(value, list) or not value or any(not _is_int(v) for v in value):
            raise ConfigError(f"expected a non-empty list of integers got {value!r}", field=self.field(key))
        return list(value)

    def block(self, key: str, default: Any = _MISSING) -> "ConfigBlock":
        if key not in self.d:
            return ConfigBlock(self._missing(key, default), self.field(key))
        return ConfigBlock(self._raw(key), self.field(key))

    def blocks(self, key: str) -> List["ConfigBlock"]:
        value = self._raw(key) if key in self.d else self._missing(key, _MISSING)
        if not isinstance(value, list) or not value:
            raise ConfigError(f"expected a non-empty list of objects got {value!r}", field=self.field(key))
        return [ConfigBlock(v, f"{self.field(key)}[{i}]") for i, v in enumerate(value)]

    def finish(self) -> None:
        "raises UnknownKeysError listing every key that was never read"
        unknown = set(self.d) - self.used
        if unknown:
            raise UnknownKeysError(unknown, self.path)


@contextlib.contextmanager
def config_field(field: str) -> Iterator[None]:
    "reraises domain and usage errors from constructors as ConfigErrors naming field"
    try:
        yield
    except UsageError as e:
        raise ConfigError(str(e), field=field) from e

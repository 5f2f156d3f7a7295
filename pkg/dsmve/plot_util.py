"""Log-log SVG plots of study tables."""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from dsmve.errors import UsageError  # noqa: E402
from dsmve.models.study import ChaosTable, ErrorTable, MaximalProbeResult, MomentProbeTable, SlopeFit  # noqa: E402

log = logging.getLogger("dsmve.plot_util")

# fixed element ids so the same tables give the same SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "dsmve"

Points = List[Tuple[float, float]]


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    log.info(f"wrote plot to {path}")


def _fit_line(ax, xs: Sequence[float], fit: Optional[SlopeFit], color, label: str) -> None:
    if fit is None or not xs:
        return
    lo, hi = min(xs), max(xs)
    ax.plot([lo, hi], [fit.intercept + fit.slope * lo, fit.intercept + fit.slope * hi], color=color, label=label)


def _reference_line(ax, points: Points, slope: float, label: str) -> None:
    "a line of the given slope through the first point"
    if not points:
        return
    (x0, y0), x1 = points[0], points[-1][0]
    ax.plot([x0, x1], [y0, y0 + slope * (x1 - x0)], linestyle="--", color="gray", alpha=0.7, label=label)


def _log2_points(pairs: Sequence[Tuple[float, float]]) -> Points:
    return [(math.log2(x), math.log2(y)) for x, y in pairs if x > 0 and y > 0 and math.isfinite(y)]


def plot_error_tables(tables: Sequence[ErrorTable], path: str) -> None:
    "log2 dt against log2 err, one series per H with its fit and a slope H reference line"
    fig, ax = plt.subplots(figsize=(7, 5))
    for i, table in enumerate(tables):
        color = f"C{i % 10}"
        points = _log2_points([(row.dt, row.err) for row in table.rows if not row.flagged])
        ax.scatter([x for x, _ in points], [y for _, y in points], color=color, label=f"H={table.hurst:g}")
        _fit_line(ax, [x for x, _ in points], table.fit, color, f"fit slope {table.fitted_slope:.3f}")
        _reference_line(ax, points, table.hurst, f"slope {table.hurst:g}")
    ax.set_xlabel("log2 dt")
    ax.set_ylabel("log2 err")
    ax.set_title("strong error against step size")
    ax.legend(fontsize="small")
    _save(fig, path)


def plot_chaos_table(table: ChaosTable, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    points = _log2_points([(row.particles, row.gap) for row in table.rows if not row.flagged])
    ax.scatter([x for x, _ in points], [y for _, y in points], color="C0", label="gap")
    _fit_line(ax, [x for x, _ in points], table.fit, "C0", f"fit slope {table.fitted_slope:.3f}")
    _reference_line(ax, points, table.theoretical_exponent, f"bound slope {table.theoretical_exponent:.3f}")
    ax.set_xlabel("log2 N")
    ax.set_ylabel("log2 gap")
    ax.set_title(f"particle system against N_ref={table.reference_particles}")
    ax.legend(fontsize="small")
    _save(fig, path)


def plot_maximal_probe(result: MaximalProbeResult, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    points = [(math.log(row.horizon), math.log(row.estimate)) for row in result.rows if row.estimate > 0]
    ax.scatter([x for x, _ in points], [y for _, y in points], color="C0", label="estimate")
    _fit_line(ax, [x for x, _ in points], result.fit, "C0", f"fit slope {result.slope:.3f}")
    _reference_line(ax, points, result.expected, f"slope pH = {result.expected:.3f}")
    ax.set_xlabel("log t")
    ax.set_ylabel("log E sup |B^H|^p")
    ax.set_title(f"maximal functional H={result.hurst:g} p={result.p:g}")
    ax.legend(fontsize="small")
    _save(fig, path)


def plot_moment_probe(table: MomentProbeTable, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    points = _log2_points([(row.dt, row.estimate) for row in table.rows if not row.blow_up])
    ax.plot([x for x, _ in points], [y for _, y in points], marker="o", color="C0", label=table.model_id)
    blown = [math.log2(row.dt) for row in table.rows if row.blow_up]
    if blown and points:
        ax.scatter(blown, [max(y for _, y in points)] * len(blown), marker="x", color="C3", label="blow-up")
    ax.set_xlabel("log2 dt")
    ax.set_ylabel(f"log2 E sup |Z|^{table.p_bar:g}")
    ax.set_title(f"moment bound ratio {table.ratio:.3f}")
    ax.legend(fontsize="small")
    _save(fig, path)


def emit_svg(results: Sequence[object], path: str) -> None:
    """plots the results of one pipeline run: every ErrorTable on one set
    of axes, otherwise the single chaos, maximal, or moment result
    """
    if not results:
        raise UsageError("nothing to plot")
    first = results[0]
    if isinstance(first, ErrorTable):
        plot_error_tables(list(results), path)
    elif isinstance(first, ChaosTable):
        plot_chaos_table(first, path)
    elif isinstance(first, MaximalProbeResult):
        plot_maximal_probe(first, path)
    elif isinstance(first, MomentProbeTable):
        plot_moment_probe(first, path)
    else:
        raise UsageError(f"no plot for {type(first).__name__}")

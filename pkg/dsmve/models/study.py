from dataclasses import asdict, dataclass
import math
from typing import Dict, List, Optional, Tuple

from dsmve.errors import UsageError
from dsmve.models.grid import TimeGrid
from dsmve.models.model_spec import ModelSpec
from dsmve.models.noise import GeneratorMethod
from dsmve.solver import build_grid

ERROR_MODES = ("terminal", "sup")


@dataclass(frozen=True)
class SlopeFit:
    """least squares line y = slope * x + intercept with a 95% t interval
    for the slope (NaN bounds when there are fewer than three points)
    """

    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    points: int

    @property
    def ci(self) -> Tuple[float, float]:
        return (self.ci_low, self.ci_high)

    def to_dict(self: "SlopeFit") -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class ConvergenceStudy:
    """strong error of coarse levels against a fine reference level

    dt_fine = 2^-fine_level; each coarse level uses dt = 2^-level and is
    driven by block sums of the fine noise
    """

    model: ModelSpec
    hurst_list: Tuple[float, ...] = (0.6, 0.7, 0.8, 0.9)
    fine_level: int = 14
    coarse_levels: Tuple[int, ...] = (7, 8, 9, 10)
    horizon: float = 1.0
    particles: int = 200
    repeats: int = 8
    seed: int = 20200415
    p: float = 2.0
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE
    error_mode: str = "terminal"
    threads: int = 1

    def __post_init__(self):
        if self.error_mode not in ERROR_MODES:
            raise UsageError(f"error_mode must be one of {list(ERROR_MODES)} got {self.error_mode!r}")
        if self.repeats < 1 or self.particles < 1:
            raise UsageError("repeats and particles must be >= 1")
        if not self.coarse_levels or any(level >= self.fine_level for level in self.coarse_levels):
            raise UsageError(
                f"coarse levels {list(self.coarse_levels)} must be non-empty and below the fine level {self.fine_level}"
            )
        grid = self.fine_grid()
        for factor in self.factors().values():
            grid.coarsen(factor)

    def fine_grid(self) -> TimeGrid:
        delay_steps = self.model.delay * 2 ** self.fine_level
        if not float(delay_steps).is_integer():
            raise UsageError(
                f"delay {self.model.delay!r} is not a multiple of the fine step 2^-{self.fine_level}"
            )
        return build_grid(self.model.delay, int(delay_steps), self.horizon)

    def factors(self) -> Dict[int, int]:
        "coarse level -> coarsening factor 2^(fine_level - level)"
        return {level: 2 ** (self.fine_level - level) for level in sorted(self.coarse_levels)}


@dataclass
class ErrorRow:
    dt: float
    level: int
    err: float
    repeats: int
    std_error: float
    flagged: bool = False


@dataclass
class ErrorTable:
    """strong errors for one Hurst parameter, rows sorted by dt descending"""

    hurst: float
    rows: List[ErrorRow]
    fit: Optional[SlopeFit]
    theoretical_exponent: float
    p: float = 2.0
    fine_level: int = 14
    error_mode: str = "terminal"
    model_id: str = ""

    def __post_init__(self):
        self.rows.sort(key=lambda row: row.dt, reverse=True)

    @property
    def fitted_slope(self) -> float:
        return self.fit.slope if self.fit else math.nan

    @property
    def slope_ci(self) -> Tuple[float, float]:
        return self.fit.ci if self.fit else (math.nan, math.nan)

    @property
    def flagged(self) -> bool:
        return self.fit is None or any(row.flagged for row in self.rows)

    @property
    def strictly_decreasing(self) -> bool:
        "errors strictly decrease as dt decreases"
        errs = [row.err for row in self.rows]
        return all(a > b for a, b in zip(errs, errs[1:]))

    def to_dict(self: "ErrorTable") -> Dict:
        d = asdict(self)
        d["fitted_slope"] = self.fitted_slope
        d["slope_ci"] = list(self.slope_ci)
        return d


@dataclass
class ChaosRow:
    particles: int
    gap: float
    repeats: int
    std_error: float
    flagged: bool = False


@dataclass
class ChaosTable:
    """gaps between N particle systems and an N_ref particle proxy of the
    non-interacting limit, rows sorted by N ascending
    """

    reference_particles: int
    rows: List[ChaosRow]
    fit: Optional[SlopeFit]
    theoretical_exponent: float
    lambda_value: float
    epsilon: float
    regime: str
    hurst: float
    p: float = 2.0
    note: str = "the analysis leaves epsilon in (0, 1] free; the exponent is a bound, not asserted"

    def __post_init__(self):
        self.rows.sort(key=lambda row: row.particles)

    @property
    def fitted_slope(self) -> float:
        return self.fit.slope if self.fit else math.nan

    def non_increasing(self, slack: float = 1.1) -> bool:
        "each gap is at most slack times the previous one"
        gaps = [row.gap for row in self.rows]
        return all(b <= slack * a for a, b in zip(gaps, gaps[1:]))

    def to_dict(self: "ChaosTable") -> Dict:
        d = asdict(self)
        d["fitted_slope"] = self.fitted_slope
        return d


@dataclass
class MaximalProbeRow:
    horizon: float
    estimate: float
    std_error: float


@dataclass
class MaximalProbeResult:
    """E[sup_{s <= t} |B^H_s|^p] against t; the log-log slope should be p H"""

    hurst: float
    p: float
    paths: int
    grid_points: int
    rows: List[MaximalProbeRow]
    fit: SlopeFit

    @property
    def slope(self) -> float:
        return self.fit.slope

    @property
    def expected(self) -> float:
        return self.p * self.hurst

    def to_dict(self: "MaximalProbeResult") -> Dict:
        d = asdict(self)
        d["slope"] = self.slope
        d["expected"] = self.expected
        return d


@dataclass
class MomentProbeRow:
    dt: float
    estimate: float
    std_error: float
    blow_up: bool = False
    blow_up_step: Optional[int] = None


@dataclass
class MomentProbeTable:
    """E[sup_k |Z(t_k)|^p_bar] per dt; bounded when the max/min ratio over
    dt stays below ratio_bound and no particle blew up
    """

    model_id: str
    hurst: float
    p_bar: float
    rows: List[MomentProbeRow]
    ratio_bound: float = 2.0
    in_assumption_class: bool = True

    def __post_init__(self):
        self.rows.sort(key=lambda row: row.dt, reverse=True)

    @property
    def blow_up(self) -> bool:
        return any(row.blow_up for row in self.rows)

    @property
    def ratio(self) -> float:
        estimates = [row.estimate for row in self.rows if not row.blow_up]
        if not estimates:
            return math.nan
        hi, lo = max(estimates), min(estimates)
        if hi == lo:
            return 1.0
        return hi / lo if lo > 0 else math.inf

    @property
    def bounded(self) -> bool:
        return not self.blow_up and self.ratio < self.ratio_bound

    def to_dict(self: "MomentProbeTable") -> Dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        d["bounded"] = self.bounded
        return d

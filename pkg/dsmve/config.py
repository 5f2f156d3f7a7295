"""JSON config files for the dsmve subcommands.

parse_config validates everything up front (unknown keys, ranges, grid
and coarsening divisibility, the Hurst regime) and returns a typed frozen
config. Every failure is a ConfigError naming the offending field.
"""

from dataclasses import dataclass, field
import json
import logging
from typing import Any, Dict, Optional, Tuple, Union

from dsmve.dynamics import model_from_config
from dsmve.errors import ConfigError, UsageError
from dsmve.experiments import MIN_PROBE_PATHS
from dsmve.fgn import CHOLESKY_MAX_N
from dsmve.models.grid import TimeGrid
from dsmve.models.model_spec import ModelSpec
from dsmve.models.noise import GeneratorMethod, Hurst
from dsmve.models.study import ERROR_MODES, ConvergenceStudy
from dsmve.serialize_util import ConfigBlock, config_field
from dsmve.solver import MAX_GRID_STEPS, build_grid

log = logging.getLogger("dsmve.config")

DEFAULT_SEED = 20200415
MAX_LEVEL = 20
# particles x grid points x dim held in memory by one run
MAX_STATE_CELLS = 2 ** 28


@dataclass(frozen=True)
class RunOptions:
    seed: int = DEFAULT_SEED
    threads: int = 1
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE

    def to_dict(self: "RunOptions") -> Dict:
        return dict(seed=self.seed, threads=self.threads, method=self.method.value)


@dataclass(frozen=True)
class SimulateConfig:
    model: ModelSpec
    grid: TimeGrid
    particles: int
    hurst: Hurst
    options: RunOptions = field(default_factory=RunOptions)

    def to_dict(self: "SimulateConfig") -> Dict:
        return dict(
            model=self.model.to_dict(),
            grid=self.grid.to_dict(),
            particles=self.particles,
            hurst=self.hurst.h,
            **self.options.to_dict(),
        )


@dataclass(frozen=True)
class ConvergenceConfig:
    study: ConvergenceStudy

    @property
    def options(self) -> RunOptions:
        return RunOptions(seed=self.study.seed, threads=self.study.threads, method=self.study.method)

    def to_dict(self: "ConvergenceConfig") -> Dict:
        s = self.study
        return dict(
            model=s.model.to_dict(),
            hurst=list(s.hurst_list),
            fine_level=s.fine_level,
            coarse_levels=list(s.coarse_levels),
            horizon=s.horizon,
            particles=s.particles,
            repeats=s.repeats,
            p=s.p,
            error_mode=s.error_mode,
            **self.options.to_dict(),
        )


@dataclass(frozen=True)
class ChaosConfig:
    model: ModelSpec
    grid: TimeGrid
    particle_counts: Tuple[int, ...]
    reference_particles: int
    hurst: Hurst
    p: float = 2.0
    repeats: int = 16
    epsilon: float = 1.0
    options: RunOptions = field(default_factory=RunOptions)

    def to_dict(self: "ChaosConfig") -> Dict:
        return dict(
            model=self.model.to_dict(),
            grid=self.grid.to_dict(),
            particle_counts=list(self.particle_counts),
            reference_particles=self.reference_particles,
            hurst=self.hurst.h,
            p=self.p,
            repeats=self.repeats,
            epsilon=self.epsilon,
            **self.options.to_dict(),
        )


@dataclass(frozen=True)
class MaximalProbeConfig:
    hurst: Hurst
    p: float
    horizons: Tuple[float, ...]
    paths: int
    grid_points: int = 1024
    options: RunOptions = field(default_factory=RunOptions)

    def to_dict(self: "MaximalProbeConfig") -> Dict:
        return dict(
            hurst=self.hurst.h,
            p=self.p,
            horizons=list(self.horizons),
            paths=self.paths,
            grid_points=self.grid_points,
            **self.options.to_dict(),
        )


@dataclass(frozen=True)
class MomentProbeConfig:
    model: ModelSpec
    grids: Tuple[TimeGrid, ...]
    particles: int
    hurst: Hurst
    p_bar: float = 4.0
    options: RunOptions = field(default_factory=RunOptions)

    def to_dict(self: "MomentProbeConfig") -> Dict:
        return dict(
            model=self.model.to_dict(),
            grids=[grid.to_dict() for grid in self.grids],
            particles=self.particles,
            hurst=self.hurst.h,
            p_bar=self.p_bar,
            **self.options.to_dict(),
        )


AnyConfig = Union[SimulateConfig, ConvergenceConfig, ChaosConfig, MaximalProbeConfig, MomentProbeConfig]


def _positive(v: float) -> bool:
    return v > 0


def _at_least_one(v: int) -> bool:
    return v >= 1


def read_config_file(path: str) -> Dict[str, Any]:
    "an empty file reads as {}"
    with open(path, "r", encoding="utf-8") as fin:
        text = fin.read()
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"expected a JSON object at the top level got {type(data).__name__}")
    return data


def parse_hurst(
    value: float, field_name: str, allow_brownian: bool = False, model: Optional[ModelSpec] = None
) -> Hurst:
    with config_field(field_name):
        hurst = Hurst(value)
    if hurst.is_brownian:
        if not allow_brownian:
            raise ConfigError(
                "H = 1/2 is outside (0, 1/2) U (1/2, 1); pass --allow-brownian for Brownian sanity runs",
                field=field_name,
            )
        log.warning(f"{field_name}=0.5 accepted by --allow-brownian; this is a standard Brownian motion run")
    if model is not None:
        model.check_regime(hurst, field_name)
    return hurst


def _options(block: ConfigBlock, overrides: Dict[str, Any]) -> RunOptions:
    seed = block.integer("seed", DEFAULT_SEED, check=lambda v: v >= 0, expect="a non-negative seed")
    threads = block.integer("threads", 1, check=_at_least_one, expect="at least one thread")
    method_name = block.string("method", GeneratorMethod.DAVIES_HARTE.value)
    with config_field(block.field("method")):
        method = GeneratorMethod.parse(method_name)
    if overrides.get("seed") is not None:
        seed = overrides["seed"]
        if seed < 0:
            raise ConfigError(f"expected a non-negative seed got {seed!r}", field="--seed")
    if overrides.get("threads") is not None:
        threads = overrides["threads"]
        if threads < 1:
            raise ConfigError(f"expected at least one thread got {threads!r}", field="--threads")
    return RunOptions(seed=seed, threads=threads, method=method)


def _model(block: ConfigBlock) -> ModelSpec:
    if "model" not in block:
        raise ConfigError("missing model block", field="model")
    return model_from_config(block.block("model"))


def _grid(block: ConfigBlock, model: ModelSpec, default_delay_steps: int) -> TimeGrid:
    delay_steps = block.integer(
        "delay_steps", default_delay_steps, check=lambda v: 1 <= v <= MAX_GRID_STEPS, expect=f"M in 1..{MAX_GRID_STEPS}"
    )
    horizon = block.number("horizon", 1.0, check=_positive, expect="a positive horizon")
    with config_field(block.field("horizon")):
        return build_grid(model.delay, delay_steps, horizon)


def _check_state_size(particles: int, grid: TimeGrid, dim: int, field_name: str) -> None:
    cells = particles * grid.size * dim
    if cells > MAX_STATE_CELLS:
        raise ConfigError(
            f"{particles} particles on {grid.size} grid points need {cells} states over the {MAX_STATE_CELLS} limit",
            field=field_name,
        )


def _check_cholesky_length(options: RunOptions, n: int, field_name: str) -> None:
    if options.method == GeneratorMethod.CHOLESKY and n > CHOLESKY_MAX_N:
        raise ConfigError(
            f"the cholesky method is limited to {CHOLESKY_MAX_N} steps per stream got {n}; use davies-harte",
            field=field_name,
        )


def _simulate(block: ConfigBlock, overrides: Dict[str, Any]) -> SimulateConfig:
    model = _model(block)
    grid = _grid(block, model, 16)
    particles = block.integer("particles", 200, check=_at_least_one, expect="at least one particle")
    hurst = parse_hurst(block.number("hurst"), "hurst", overrides.get("allow_brownian", False), model)
    _check_state_size(particles, grid, model.dim, "particles")
    options = _options(block, overrides)
    _check_cholesky_length(options, grid.horizon_steps, "method")
    return SimulateConfig(model=model, grid=grid, particles=particles, hurst=hurst, options=options)


def _convergence(block: ConfigBlock, overrides: Dict[str, Any]) -> ConvergenceConfig:
    model = _model(block)
    hurst_list = block.numbers("hurst", [0.6, 0.7, 0.8, 0.9], scalar_ok=True)
    allow_brownian = overrides.get("allow_brownian", False)
    error_mode = block.string("error_mode", "terminal", choices=ERROR_MODES)
    for i, h in enumerate(hurst_list):
        hurst = parse_hurst(h, f"hurst[{i}]", allow_brownian, model)
        if error_mode == "sup" and hurst.h <= 0.5:
            raise ConfigError(f"sup-over-grid errors need H > 1/2 got H={hurst.h}", field="error_mode")
    fine_level = block.integer(
        "fine_level", 14, check=lambda v: 1 <= v <= MAX_LEVEL, expect=f"a level in 1..{MAX_LEVEL}"
    )
    coarse_levels = block.integers("coarse_levels", [7, 8, 9, 10])
    horizon = block.number("horizon", 1.0, check=_positive, expect="a positive horizon")
    delay_steps = model.delay * 2 ** fine_level
    if not float(delay_steps).is_integer():
        raise ConfigError(f"dt = 2^-{fine_level} does not divide the delay {model.delay!r}", field="fine_level")
    with config_field("horizon"):
        fine_grid = build_grid(model.delay, int(delay_steps), horizon)
    particles = block.integer("particles", 200, check=_at_least_one, expect="at least one particle")
    _check_state_size(particles, fine_grid, model.dim, "particles")
    options = _options(block, overrides)
    _check_cholesky_length(options, int(round(horizon * 2 ** fine_level)), "method")
    with config_field("coarse_levels"):
        study = ConvergenceStudy(
            model=model,
            hurst_list=tuple(hurst_list),
            fine_level=fine_level,
            coarse_levels=tuple(coarse_levels),
            horizon=horizon,
            particles=particles,
            repeats=block.integer("repeats", 8, check=_at_least_one, expect="at least one repeat"),
            seed=options.seed,
            p=block.number("p", 2.0, check=lambda v: v >= 1, expect="p >= 1"),
            method=options.method,
            error_mode=error_mode,
            threads=options.threads,
        )
    return ConvergenceConfig(study=study)


def _chaos(block: ConfigBlock, overrides: Dict[str, Any]) -> ChaosConfig:
    model = _model(block)
    grid = _grid(block, model, 8)
    counts = block.integers("particle_counts", [32, 64, 128, 256])
    if any(n < 1 for n in counts) or counts != sorted(counts):
        raise ConfigError(f"expected ascending positive counts got {counts}", field="particle_counts")
    reference = block.integer("reference_particles", 512)
    if reference < 2 * max(counts):
        raise ConfigError(
            f"need at least 2 * max(particle_counts) = {2 * max(counts)} reference particles got {reference}",
            field="reference_particles",
        )
    _check_state_size(reference, grid, model.dim, "reference_particles")
    hurst = parse_hurst(block.number("hurst"), "hurst", overrides.get("allow_brownian", False), model)
    options = _options(block, overrides)
    _check_cholesky_length(options, grid.horizon_steps, "method")
    return ChaosConfig(
        model=model,
        grid=grid,
        particle_counts=tuple(counts),
        reference_particles=reference,
        hurst=hurst,
        p=block.number("p", 2.0, check=lambda v: v >= 1, expect="p >= 1"),
        repeats=block.integer("repeats", 16, check=_at_least_one, expect="at least one repeat"),
        epsilon=block.number("epsilon", 1.0, check=lambda v: 0 < v <= 1, expect="epsilon in (0, 1]"),
        options=options,
    )


def _probe_maximal(block: ConfigBlock, overrides: Dict[str, Any]) -> MaximalProbeConfig:
    if "model" in block:
        raise ConfigError("the maximal inequality probe samples fBm directly and takes no model", field="model")
    hurst = parse_hurst(block.number("hurst"), "hurst", overrides.get("allow_brownian", False))
    horizons = sorted(block.numbers("horizons", [0.01, 0.1, 1.0]))
    if horizons[0] <= 0 or horizons[-1] / horizons[0] < 10:
        raise ConfigError(f"expected positive horizons spanning at least a decade got {horizons}", field="horizons")
    options = _options(block, overrides)
    grid_points = block.integer(
        "grid_points", 1024, check=lambda v: 2 <= v <= MAX_GRID_STEPS, expect=f"2..{MAX_GRID_STEPS} grid points"
    )
    _check_cholesky_length(options, grid_points, "method")
    return MaximalProbeConfig(
        hurst=hurst,
        p=block.number("p", 2.0, check=_positive, expect="p > 0"),
        horizons=tuple(horizons),
        paths=block.integer(
            "paths", MIN_PROBE_PATHS, check=lambda v: v >= MIN_PROBE_PATHS, expect=f"at least {MIN_PROBE_PATHS} paths"
        ),
        grid_points=grid_points,
        options=options,
    )


def _probe_moments(block: ConfigBlock, overrides: Dict[str, Any]) -> MomentProbeConfig:
    model = _model(block)
    levels = block.integers("levels", [5, 6, 7, 8, 9])
    horizon = block.number("horizon", 1.0, check=_positive, expect="a positive horizon")
    grids = []
    for i, level in enumerate(levels):
        if not 0 <= level <= MAX_LEVEL:
            raise ConfigError(f"expected a level in 0..{MAX_LEVEL} got {level}", field=f"levels[{i}]")
        delay_steps = model.delay * 2 ** level
        if not float(delay_steps).is_integer() or delay_steps < 1:
            raise ConfigError(
                f"dt = 2^-{level} does not divide the delay {model.delay!r}", field=f"levels[{i}]"
            )
        with config_field("horizon"):
            grids.append(build_grid(model.delay, int(delay_steps), horizon))
    hurst = parse_hurst(block.number("hurst"), "hurst", overrides.get("allow_brownian", False), model)
    options = _options(block, overrides)
    particles = block.integer("particles", 200, check=_at_least_one, expect="at least one particle")
    _check_state_size(particles, max(grids, key=lambda grid: grid.size), model.dim, "particles")
    _check_cholesky_length(options, max(grid.horizon_steps for grid in grids), "method")
    return MomentProbeConfig(
        model=model,
        grids=tuple(grids),
        particles=particles,
        hurst=hurst,
        p_bar=block.number("p_bar", 4.0, check=lambda v: v >= 1, expect="p_bar >= 1"),
        options=options,
    )


PARSERS = {
    "simulate": _simulate,
    "convergence": _convergence,
    "chaos": _chaos,
    "probe-maximal": _probe_maximal,
    "probe-moments": _probe_moments,
}


def parse_data(data: Dict[str, Any], command: str, overrides: Optional[Dict[str, Any]] = None) -> AnyConfig:
    if command not in PARSERS:
        raise UsageError(f"no config for command {command!r} expected one of {list(PARSERS)}")
    block = ConfigBlock(data)
    config = PARSERS[command](block, overrides or {})
    block.finish()
    log.debug(f"parsed {command} config {config.to_dict()}")
    return config


def parse_config(path: str, command: str, overrides: Optional[Dict[str, Any]] = None) -> AnyConfig:
    """reads and validates a JSON config for command

    overrides holds CLI values (seed, threads, allow_brownian); None values
    leave the file values in place
    """
    return parse_data(read_config_file(path), command, overrides)

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from dsmve.errors import DomainError, UsageError
from dsmve.models.measure import EmpiricalMeasure
from dsmve.models.noise import GeneratorMethod, Hurst


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k dt for k = -M..M_T with delay = M dt and
    horizon = M_T dt
    """

    dt: float
    delay_steps: int
    horizon_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError(f"step must be positive got {self.dt!r}")
        if self.delay_steps < 1 or self.horizon_steps < 1:
            raise DomainError(
                f"need M >= 1 and M_T >= 1 got M={self.delay_steps} M_T={self.horizon_steps}"
            )

    @property
    def delay(self) -> float:
        return self.delay_steps * self.dt

    @property
    def horizon(self) -> float:
        return self.horizon_steps * self.dt

    @property
    def size(self) -> int:
        "number of stored grid points M + M_T + 1"
        return self.delay_steps + self.horizon_steps + 1

    def row(self, k: int) -> int:
        "storage row of grid index k"
        if not (-self.delay_steps <= k <= self.horizon_steps):
            raise UsageError(f"grid index {k} outside [-{self.delay_steps}, {self.horizon_steps}]")
        return k + self.delay_steps

    def time(self, k: int) -> float:
        return k * self.dt

    def times(self) -> np.ndarray:
        return np.arange(-self.delay_steps, self.horizon_steps + 1) * self.dt

    def coarsen(self, factor: int) -> "TimeGrid":
        if factor < 1 or self.delay_steps % factor or self.horizon_steps % factor:
            raise UsageError(
                f"coarsening factor {factor} must divide M={self.delay_steps} and M_T={self.horizon_steps}"
            )
        return TimeGrid(
            dt=self.dt * factor,
            delay_steps=self.delay_steps // factor,
            horizon_steps=self.horizon_steps // factor,
        )

    def to_dict(self: "TimeGrid") -> Dict:
        return dict(
            dt=self.dt,
            M=self.delay_steps,
            M_T=self.horizon_steps,
            delay=self.delay,
            horizon=self.horizon,
        )


@dataclass(frozen=True)
class EnsembleTrajectory:
    """states[i][row][c] = component c of particle i at t_{row - M}

    Rows for k <= 0 hold the initial path. Replay metadata (seed, grid,
    model_id, hurst, method) identifies the run.
    """

    states: np.ndarray = field(repr=False)
    grid: TimeGrid
    model_id: str
    seed: int
    hurst: Hurst
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE

    def __post_init__(self):
        if self.states.ndim != 3 or self.states.shape[1] != self.grid.size:
            raise DomainError(
                f"states must be N x {self.grid.size} x d got shape {self.states.shape}"
            )

    @property
    def particles(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def at(self, k: int) -> np.ndarray:
        "N x d states at grid index k"
        return self.states[:, self.grid.row(k), :]

    def measure(self, k: int) -> EmpiricalMeasure:
        "the empirical measure of all N particles at grid index k"
        return EmpiricalMeasure(samples=self.at(k))

    def terminal(self) -> np.ndarray:
        return self.states[:, -1, :]

    def freeze(self) -> "EnsembleTrajectory":
        self.states.setflags(write=False)
        return self

    def metadata(self: "EnsembleTrajectory") -> Dict:
        return dict(
            model_id=self.model_id,
            seed=self.seed,
            hurst=self.hurst.h,
            method=self.method.value,
            particles=self.particles,
            grid=self.grid.to_dict(),
        )

from dataclasses import dataclass, field
import enum
from typing import Dict

import numpy as np

from dsmve.errors import DomainError


@enum.unique
class GeneratorMethod(enum.Enum):
    CHOLESKY = "cholesky"
    DAVIES_HARTE = "davies-harte"

    @staticmethod
    def parse(value: str) -> "GeneratorMethod":
        """e.g. "davies-harte" or "davies_harte" -> GeneratorMethod.DAVIES_HARTE"""
        normalized = value.strip().lower().replace("_", "-")
        for method in GeneratorMethod:
            if method.value == normalized:
                return method
        raise DomainError(
            f"unknown noise method {value!r} expected one of {[m.value for m in GeneratorMethod]}"
        )


@dataclass(frozen=True)
class Hurst:
    """The Hurst parameter of a fractional Brownian motion. h = 1/2 is
    standard Brownian motion.
    """

    h: float

    def __post_init__(self):
        if not (0.0 < self.h < 1.0):
            raise DomainError(f"Hurst parameter must be in (0, 1) got {self.h!r}")

    @property
    def is_rough(self) -> bool:
        "True when h < 1/2; coefficient diffusion must then be constant"
        return self.h < 0.5

    @property
    def is_brownian(self) -> bool:
        return self.h == 0.5

    def __float__(self) -> float:
        return float(self.h)


@dataclass(frozen=True)
class NoiseBlock:
    """fBm increments on a uniform grid for one stream (particle)

    increments[k] = B_{(k+1) step} - B_{k step}
    """

    increments: np.ndarray = field(repr=False)
    step: float
    hurst: Hurst
    stream_id: int
    seed: int
    method: GeneratorMethod = GeneratorMethod.DAVIES_HARTE

    def __post_init__(self):
        if self.step <= 0:
            raise DomainError(f"step must be positive got {self.step!r}")
        increments = np.asarray(self.increments, dtype=np.float64)
        if increments.ndim != 1:
            raise DomainError(f"increments must be one dimensional got shape {increments.shape}")
        increments.setflags(write=False)
        object.__setattr__(self, "increments", increments)

    def __len__(self) -> int:
        return len(self.increments)

    def to_dict(self: "NoiseBlock") -> Dict:
        return dict(
            step=self.step,
            hurst=self.hurst.h,
            stream_id=self.stream_id,
            seed=self.seed,
            method=self.method.value,
            length=len(self),
        )

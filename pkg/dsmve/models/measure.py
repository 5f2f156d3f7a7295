from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from dsmve.errors import DomainError


@dataclass(frozen=True)
class EmpiricalMeasure:
    """(1/N) sum_j delta_{samples[j]}, the equal-weight sample cloud of N
    particle states in R^d. Weights are implicit.
    """

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise DomainError(f"need an N x d array with N, d >= 1 got shape {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @staticmethod
    def from_points(points: Union[Sequence[float], Sequence[Sequence[float]], np.ndarray]) -> "EmpiricalMeasure":
        """e.g. [1, 2, 4] -> three atoms in R^1; [[0, 1], [2, 3]] -> two atoms in R^2"""
        return EmpiricalMeasure(samples=np.asarray(points, dtype=np.float64))

    @staticmethod
    def dirac(point: Union[float, Sequence[float]], copies: int = 1) -> "EmpiricalMeasure":
        return EmpiricalMeasure(samples=np.tile(np.atleast_1d(np.asarray(point, dtype=np.float64)), (copies, 1)))

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.size

    def shifted(self, offset: Union[float, Sequence[float]]) -> "EmpiricalMeasure":
        return EmpiricalMeasure(samples=self.samples + np.asarray(offset, dtype=np.float64))

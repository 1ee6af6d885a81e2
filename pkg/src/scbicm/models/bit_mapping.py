from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from scbicm.exceptions import InvalidParametersError


@dataclass(frozen=True, eq=False)
class BitMapping:
    """``a[i, j]`` is the fraction of VN j's bits sent over bit-channel i."""

    a: np.ndarray

    def __post_init__(self) -> None:
        grid = np.array(self.a, dtype=float)
        if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
            raise InvalidParametersError("bit mapping must be a non-empty m x V grid")
        grid.setflags(write=False)
        object.__setattr__(self, "a", grid)

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def V(self) -> int:
        return self.a.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.a[:, j]


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: int
    magnitude: float

    def __str__(self) -> str:
        return f"{self.constraint}[{self.index}] off by {self.magnitude:.3g}"


@dataclass(frozen=True)
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

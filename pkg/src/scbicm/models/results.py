"""Option and result records passed between the algorithm and service layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix

from scbicm.config import Config
from scbicm.exceptions import InvalidParametersError
from scbicm.models.bit_mapping import BitMapping
from scbicm.models.ensemble import ConnectionSpec, Protograph


@dataclass(frozen=True)
class DEOptions:
    max_iters: int = Config.DE_MAX_ITERS
    zero_tol: float = Config.DE_ZERO_TOL
    bisect_tol: float = Config.DE_BISECT_TOL

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise InvalidParametersError("max_iters must be >= 1")
        if not 0 < self.zero_tol < 1 or not 0 < self.bisect_tol < 1:
            raise InvalidParametersError("zero_tol and bisect_tol must lie in (0, 1)")

    @classmethod
    def from_config(cls, cfg=Config) -> "DEOptions":
        return cls(cfg.DE_MAX_ITERS, cfg.DE_ZERO_TOL, cfg.DE_BISECT_TOL)


@dataclass(frozen=True, eq=False)
class DEResult:
    converged: bool
    iterations: int
    residuals: np.ndarray


@dataclass(frozen=True)
class ThresholdResult:
    avg_erasure: float
    snr_db: Optional[float] = None
    ebn0_db: Optional[float] = None


@dataclass(frozen=True)
class DEHyperParams:
    population: int = Config.OPT_POPULATION
    weight: float = Config.OPT_WEIGHT
    crossover: float = Config.OPT_CROSSOVER
    generations: int = Config.OPT_GENERATIONS
    seed: int = Config.SEED
    screen_top: Optional[int] = Config.OPT_SCREEN_TOP
    workers: int = Config.OPT_WORKERS
    max_rounds: int = 20

    def __post_init__(self) -> None:
        if self.population < 4:
            raise InvalidParametersError("population must be >= 4")
        if not 0 < self.weight <= 2:
            raise InvalidParametersError("differential weight must lie in (0, 2]")
        if not 0 <= self.crossover <= 1:
            raise InvalidParametersError("crossover rate must lie in [0, 1]")
        if self.generations < 1 or self.max_rounds < 1:
            raise InvalidParametersError("generations and max_rounds must be >= 1")
        if self.screen_top is not None and self.screen_top < 1:
            raise InvalidParametersError("screen_top must be >= 1 or None")

    @classmethod
    def from_config(cls, cfg=Config, **overrides) -> "DEHyperParams":
        values = dict(
            population=cfg.OPT_POPULATION,
            weight=cfg.OPT_WEIGHT,
            crossover=cfg.OPT_CROSSOVER,
            generations=cfg.OPT_GENERATIONS,
            seed=cfg.SEED,
            screen_top=cfg.OPT_SCREEN_TOP,
            workers=cfg.OPT_WORKERS,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True, eq=False)
class Genome:
    connection_index: int
    mapping_params: np.ndarray


@dataclass(frozen=True, eq=False)
class DesignResult:
    graph: Protograph
    mapping: BitMapping
    threshold: ThresholdResult
    uniform_threshold: ThresholdResult
    history: List[float] = field(default_factory=list)
    connection: Optional[ConnectionSpec] = None
    objective: Optional[float] = None


@dataclass(frozen=True, eq=False)
class LiftedCode:
    """
    Q-fold lift of a protograph. ``checks[e]``/``bits[e]`` list the edges;
    bit b is a copy of protograph VN ``origin[b]`` (= b // Q).
    """

    checks: np.ndarray
    bits: np.ndarray
    n: int
    n_checks: int
    Q: int
    seed: int
    shifts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def origin(self) -> np.ndarray:
        return np.arange(self.n) // self.Q

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return list(zip(self.checks.tolist(), self.bits.tolist()))

    @property
    def rate(self) -> float:
        return 1.0 - self.n_checks / self.n

    @property
    def parity_check_matrix(self) -> csr_matrix:
        data = np.ones(self.checks.size, dtype=np.int8)
        return csr_matrix((data, (self.checks, self.bits)), shape=(self.n_checks, self.n))

    def syndrome(self, bits: Sequence[int]) -> np.ndarray:
        word = np.asarray(bits, dtype=np.int64)
        return np.bincount(self.checks, weights=word[self.bits], minlength=self.n_checks).astype(np.int64) % 2


@dataclass(frozen=True, eq=False)
class ChannelAssignment:
    channel_of_bit: np.ndarray
    m: int

    @property
    def n(self) -> int:
        return self.channel_of_bit.size

    def counts(self) -> np.ndarray:
        return np.bincount(self.channel_of_bit, minlength=self.m)


@dataclass(frozen=True)
class SimConfig:
    ebn0_points: Tuple[float, ...]
    max_frames: int = Config.SIM_MAX_FRAMES
    target_bit_errors: int = Config.SIM_TARGET_ERRORS
    bp_iters: int = Config.SIM_BP_ITERS
    seed: int = Config.SEED
    source: str = "zero"

    def __post_init__(self) -> None:
        points = tuple(float(p) for p in self.ebn0_points)
        if not points:
            raise InvalidParametersError("at least one E_b/N_0 point is required")
        if list(points) != sorted(points):
            raise InvalidParametersError("E_b/N_0 points must be sorted")
        if self.max_frames < 1 or self.target_bit_errors < 1 or self.bp_iters < 1:
            raise InvalidParametersError("frame, error and iteration counts must be positive")
        if self.source not in ("zero", "encoded"):
            raise InvalidParametersError("source must be 'zero' or 'encoded'")
        object.__setattr__(self, "ebn0_points", points)


@dataclass(frozen=True)
class BERRecord:
    ebn0_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    bits: int
    avg_bp_iters: float
    ber_low: float = 0.0
    ber_high: float = 1.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

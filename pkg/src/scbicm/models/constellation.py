from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from scbicm.exceptions import ChannelRangeError, InvalidParametersError


def sequential_mean(values) -> float:
    """Left-to-right mean; matches the accumulation order of effective_erasures."""
    total = 0.0
    for v in values:
        total += float(v)
    return total / len(values)


@dataclass(frozen=True, eq=False)
class LabeledConstellation:
    """
    Unit-energy constellation with one integer label per point.

    Bit level i of a label is bit (m-1-i) of the integer. ``pam_order`` is
    set when the constellation is a square Gray QAM (or BPSK) whose levels
    split over independent real dimensions.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray
    pam_order: Optional[int] = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=complex)
        labels = np.asarray(self.labels, dtype=np.int64)
        size = points.size
        if size < 2 or size & (size - 1):
            raise InvalidParametersError(f"constellation size {size} is not a power of two")
        if labels.shape != points.shape or sorted(labels.tolist()) != list(range(size)):
            raise InvalidParametersError("labels must be a bijection onto {0,1}^m")
        energy = float(np.mean(np.abs(points) ** 2))
        if abs(energy - 1.0) > 1e-9:
            raise InvalidParametersError(f"average symbol energy is {energy}, expected 1")
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return int(self.points.size).bit_length() - 1

    def bits(self) -> np.ndarray:
        """(|χ|, m) array, column i holding bit level i of every point."""
        shifts = np.arange(self.m - 1, -1, -1)
        return (self.labels[:, None] >> shifts[None, :]) & 1

    def is_gray(self) -> bool:
        """Nearest neighbours differ in exactly one bit."""
        dist = np.abs(self.points[:, None] - self.points[None, :])
        np.fill_diagonal(dist, np.inf)
        nearest = dist.min()
        rows, cols = np.nonzero(np.isclose(dist, nearest))
        bits = self.bits()
        return bool(np.all(np.sum(bits[rows] != bits[cols], axis=1) == 1))


@dataclass(frozen=True, eq=False)
class ErasureProfile:
    """
    Tabulated equivalent parallel-BEC erasure probabilities.

    ``erasures[k, i]`` is 1 - C_i at ``snr_db[k]``. Values between samples are
    piecewise linear in dB.
    """

    constellation: str
    snr_db: np.ndarray
    erasures: np.ndarray
    labeling: str = "gray"

    def __post_init__(self) -> None:
        snr = np.asarray(self.snr_db, dtype=float)
        eps = np.asarray(self.erasures, dtype=float)
        if eps.ndim == 1:
            eps = eps[:, None]
        if snr.ndim != 1 or eps.shape[0] != snr.size or snr.size < 2:
            raise InvalidParametersError("profile needs at least two SNR samples with one row each")
        if np.any(np.diff(snr) <= 0):
            raise InvalidParametersError("profile SNR grid must be strictly ascending")
        if np.any(eps < 0) or np.any(eps > 1):
            raise InvalidParametersError("erasure probabilities must lie in [0, 1]")
        snr.setflags(write=False)
        eps.setflags(write=False)
        object.__setattr__(self, "snr_db", snr)
        object.__setattr__(self, "erasures", eps)

    @property
    def m(self) -> int:
        return self.erasures.shape[1]

    @property
    def avg_erasure(self) -> np.ndarray:
        return np.array([sequential_mean(row) for row in self.erasures])

    @property
    def snr_range(self) -> Tuple[float, float]:
        return float(self.snr_db[0]), float(self.snr_db[-1])

    def at(self, snr_db: float) -> Tuple[np.ndarray, float]:
        """Per-channel erasures and their mean at ``snr_db``."""
        low, high = self.snr_range
        if not low <= snr_db <= high:
            raise ChannelRangeError(f"SNR {snr_db} dB outside profile range [{low}, {high}]")
        eps = np.array([np.interp(snr_db, self.snr_db, self.erasures[:, i]) for i in range(self.m)])
        return eps, sequential_mean(eps)

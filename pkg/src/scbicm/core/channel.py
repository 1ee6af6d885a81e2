"""
Bit-channel capacities of Gray-labelled BICM over complex AWGN and the
equivalent parallel-BEC erasure profile.

Noise is CN(0, 1); the SNR sets the constellation energy. Expectations over
the noise use Gauss-Hermite quadrature, one real dimension at a time for
square QAM and BPSK, and a 2-D product rule otherwise.
"""

from __future__ import annotations

import logging
import math
import os
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import logsumexp

from scbicm.config import Config
from scbicm.exceptions import ArtifactError, ChannelRangeError, InvalidParametersError
from scbicm.models.constellation import ErasureProfile, LabeledConstellation
from scbicm.utils.helpers import db_to_linear

logger = logging.getLogger(__name__)

QUADRATURE_NODES = 64
MAX_AVG_STEP = 0.005


def gray_pam_labels(order: int) -> np.ndarray:
    k = np.arange(order)
    return k ^ (k >> 1)


def pam_amplitudes(order: int) -> np.ndarray:
    return 2.0 * np.arange(order) - (order - 1)


def gray_qam(order: int = 16) -> LabeledConstellation:
    """
    Square Gray QAM with unit average energy.

    The in-phase Gray code occupies bit levels 0..m/2-1 and the quadrature
    code levels m/2..m-1; the first level of each half is the sign bit.
    """
    side = math.isqrt(order)
    if side * side != order or side < 2 or side & (side - 1):
        raise InvalidParametersError(f"{order}-QAM is not a square power-of-two constellation")
    half = side.bit_length() - 1
    amps = pam_amplitudes(side)
    gray = gray_pam_labels(side)
    scale = math.sqrt(2.0 * (side * side - 1) / 3.0)
    points = (amps[:, None] + 1j * amps[None, :]).ravel() / scale
    labels = ((gray[:, None] << half) | gray[None, :]).ravel()
    return LabeledConstellation(f"{order}qam-gray", points, labels, pam_order=side)


def bpsk() -> LabeledConstellation:
    return LabeledConstellation("bpsk", np.array([1.0, -1.0]), np.array([0, 1]), pam_order=2)


def constellation_by_name(name: str) -> LabeledConstellation:
    key = name.lower()
    if key == "bpsk":
        return bpsk()
    if key.endswith("qam-gray") or key.endswith("qam"):
        digits = key.split("qam")[0]
        if digits.isdigit():
            return gray_qam(int(digits))
    raise InvalidParametersError(f"unknown constellation {name!r}")


def _level_capacities(metric: np.ndarray, bits: np.ndarray, weights: np.ndarray, norm: float) -> np.ndarray:
    """
    metric[x, q, x'] is the log-likelihood of x' for transmitted x at quadrature
    node q; weights/norm turn node sums into noise expectations.
    """
    total = logsumexp(metric, axis=2)
    caps = np.empty(bits.shape[1])
    for i in range(bits.shape[1]):
        same = bits[:, i][:, None] == bits[None, :, i]
        part = logsumexp(np.where(same[:, None, :], metric, -np.inf), axis=2)
        loss = (total - part) / math.log(2.0)
        caps[i] = 1.0 - float(np.mean(loss @ weights)) / norm
    return np.clip(caps, 0.0, 1.0)


def _pam_capacities(order: int, amplitude: float, nodes: int) -> np.ndarray:
    t, w = hermgauss(nodes)
    amps = pam_amplitudes(order) * amplitude
    bits = (gray_pam_labels(order)[:, None] >> np.arange(order.bit_length() - 2, -1, -1)) & 1
    y = amps[:, None] + t[None, :]
    metric = -((y[:, :, None] - amps[None, None, :]) ** 2)
    return _level_capacities(metric, bits, w, math.sqrt(math.pi))


def _product_rule_capacities(constellation: LabeledConstellation, snr: float, nodes: int) -> np.ndarray:
    t, w = hermgauss(nodes)
    noise = (t[:, None] + 1j * t[None, :]).ravel()
    weights = (w[:, None] * w[None, :]).ravel()
    x = constellation.points * math.sqrt(snr)
    y = x[:, None] + noise[None, :]
    metric = -np.abs(y[:, :, None] - x[None, None, :]) ** 2
    return _level_capacities(metric, constellation.bits(), weights, math.pi)


def bit_channel_capacities(
    constellation: LabeledConstellation,
    snr_db: float,
    nodes: int = QUADRATURE_NODES,
    separable: bool = True,
) -> np.ndarray:
    """
    C_i = I(B_i; Y) per bit level under uniform inputs and parallel demapping.

    With ``separable`` the square-QAM levels are computed on the in-phase
    PAM and repeated for quadrature, so paired levels are exactly equal.
    """
    if not math.isfinite(snr_db):
        raise InvalidParametersError("SNR must be finite")
    snr = float(db_to_linear(snr_db))
    side = constellation.pam_order
    if separable and side == 2 and constellation.m == 1:
        return _pam_capacities(2, math.sqrt(snr), nodes)
    if separable and side is not None and side * side == constellation.points.size:
        scale = math.sqrt(2.0 * (side * side - 1) / 3.0)
        caps = _pam_capacities(side, math.sqrt(snr) / scale, nodes)
        return np.concatenate([caps, caps])
    return _product_rule_capacities(constellation, snr, nodes)


def bicm_capacity(constellation: LabeledConstellation, snr_db: float) -> float:
    return float(np.sum(bit_channel_capacities(constellation, snr_db)))


def capacity_groups(constellation: LabeledConstellation, snr_db: float = 5.0, tol: float = 1e-9) -> Tuple[Tuple[int, ...], ...]:
    """Bit levels whose capacities coincide, e.g. ((0, 2), (1, 3)) for 16-QAM."""
    caps = bit_channel_capacities(constellation, snr_db)
    groups = []
    for i, c in enumerate(caps):
        for group in groups:
            if abs(caps[group[0]] - c) < tol:
                group.append(i)
                break
        else:
            groups.append([i])
    return tuple(tuple(g) for g in groups)


def default_snr_grid(
    low: float = Config.SNR_MIN_DB, high: float = Config.SNR_MAX_DB, step: float = Config.SNR_STEP_DB
) -> np.ndarray:
    count = int(round((high - low) / step)) + 1
    return np.round(low + step * np.arange(count), 10)


def erasure_profile(
    constellation: LabeledConstellation,
    snr_grid: Optional[Sequence[float]] = None,
    nodes: int = QUADRATURE_NODES,
) -> ErasureProfile:
    grid = default_snr_grid() if snr_grid is None else np.asarray(snr_grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise InvalidParametersError("SNR grid must hold at least two strictly ascending values")
    erasures = np.array([1.0 - bit_channel_capacities(constellation, s, nodes) for s in grid])
    profile = ErasureProfile(constellation.name, grid, erasures)
    steps = -np.diff(profile.avg_erasure)
    if np.any(steps <= 0):
        raise ChannelRangeError("average erasure is not strictly decreasing over the grid")
    if np.max(steps) >= MAX_AVG_STEP:
        raise ChannelRangeError(
            f"SNR grid too coarse: average-erasure step {np.max(steps):.4f} >= {MAX_AVG_STEP}"
        )
    logger.info(
        "built erasure profile constellation=%s points=%d range=[%.2f, %.2f] dB",
        constellation.name, grid.size, grid[0], grid[-1],
    )
    return profile


def snr_for_avg_erasure(profile: ErasureProfile, avg_erasure: float) -> float:
    avg = profile.avg_erasure
    if not avg[-1] <= avg_erasure <= avg[0]:
        raise ChannelRangeError(
            f"average erasure {avg_erasure} outside profile range [{avg[-1]:.6f}, {avg[0]:.6f}]"
        )
    return float(np.interp(avg_erasure, avg[::-1], profile.snr_db[::-1]))


def _check_rate(rate: float, m: int) -> None:
    if not 0 < rate <= 1:
        raise InvalidParametersError(f"rate must lie in (0, 1], got {rate}")
    if m < 1:
        raise InvalidParametersError(f"m must be >= 1, got {m}")


def ebn0_db(snr_db: float, rate: float, m: int) -> float:
    _check_rate(rate, m)
    return float(snr_db - 10.0 * math.log10(rate * m))


def snr_db_from_ebn0(ebn0: float, rate: float, m: int) -> float:
    _check_rate(rate, m)
    return float(ebn0 + 10.0 * math.log10(rate * m))


def shannon_limit_ebn0(rate: float, m: int, profile: ErasureProfile) -> float:
    """E_b/N_0 at which the BICM capacity equals the spectral efficiency rate*m."""
    _check_rate(rate, m)
    return ebn0_db(snr_for_avg_erasure(profile, 1.0 - rate), rate, m)


def save_profile(profile: ErasureProfile, path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    columns = " ".join(["snr_db"] + [f"eps_{i}" for i in range(profile.m)] + ["eps_bar"])
    header = "\n".join(
        [f"constellation={profile.constellation}", f"labeling={profile.labeling}", f"columns={columns}"]
    )
    data = np.column_stack([profile.snr_db, profile.erasures, profile.avg_erasure])
    np.savetxt(path, data, header=header, fmt="%.12e")


def load_profile(path: str) -> ErasureProfile:
    if not os.path.exists(path):
        raise ArtifactError(f"profile file {path} not found")
    meta: Dict[str, str] = {}
    with open(path) as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
    try:
        data = np.loadtxt(path, ndmin=2)
    except ValueError as err:
        raise ArtifactError(f"profile file {path} is malformed: {err}") from err
    if "constellation" not in meta or data.shape[1] < 3:
        raise ArtifactError(f"profile file {path} lacks a header or erasure columns")
    profile = ErasureProfile(
        meta["constellation"], data[:, 0], data[:, 1:-1], labeling=meta.get("labeling", "gray")
    )
    if np.max(np.abs(profile.avg_erasure - data[:, -1])) > 1e-9:
        raise ArtifactError(f"profile file {path}: eps_bar column is not the mean of the erasures")
    return profile


def load_or_build_profile(path: str, constellation: Optional[LabeledConstellation] = None) -> ErasureProfile:
    """Read the cached profile at ``path``; build and cache it when missing."""
    constellation = constellation or gray_qam(16)
    if os.path.exists(path):
        profile = load_profile(path)
        if profile.constellation != constellation.name:
            raise ArtifactError(
                f"cached profile {path} is for {profile.constellation}, not {constellation.name}"
            )
        return profile
    profile = erasure_profile(constellation)
    save_profile(profile, path)
    logger.info("cached erasure profile at %s", path)
    return profile


def erasures_for_avg(profile: ErasureProfile, avg_erasure: float) -> np.ndarray:
    """Per-channel erasures at the SNR where the profile's mean equals ``avg_erasure``."""
    eps, _ = profile.at(snr_for_avg_erasure(profile, avg_erasure))
    return eps

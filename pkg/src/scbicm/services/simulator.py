"""
Monte Carlo BER simulation of a lifted code over Gray-labelled QAM BICM.

Frames are scrambled all-zero codewords by default: a seeded scrambler is
XORed onto the codeword before mapping and its sign pattern is removed from
the demapped LLRs, which makes every bit channel output-symmetric. With
``source="encoded"`` random messages are encoded with a GF(2) generator
instead, for small lifts.

Decoding is flooding sum-product in the phi domain, phi(x) = -log tanh(x/2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import galois
import numpy as np
from scipy.special import logsumexp
from scipy.stats import beta

from scbicm.core.channel import gray_qam, snr_db_from_ebn0
from scbicm.core.lifting import interleave
from scbicm.exceptions import InvalidParametersError
from scbicm.models.constellation import LabeledConstellation
from scbicm.models.results import BERRecord, ChannelAssignment, LiftedCode, SimConfig
from scbicm.utils.helpers import db_to_linear

logger = logging.getLogger(__name__)

LLR_CLIP = 60.0
MAX_ENCODER_LENGTH = 5000


def _phi(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -np.log(np.tanh(x / 2.0))


def demap_llr(received, noise_var: float, constellation: LabeledConstellation) -> np.ndarray:
    """
    Exact bit LLRs, positive meaning bit 0:
    log sum_{b_i=0} exp(-|y-x|^2/N0) - log sum_{b_i=1} exp(-|y-x|^2/N0).
    """
    if noise_var <= 0:
        raise InvalidParametersError("noise variance must be positive")
    y = np.atleast_1d(np.asarray(received, dtype=complex))
    metric = -np.abs(y[:, None] - constellation.points[None, :]) ** 2 / noise_var
    bits = constellation.bits()
    llr = np.empty((y.size, constellation.m))
    for i in range(constellation.m):
        zero = bits[:, i] == 0
        llr[:, i] = logsumexp(metric[:, zero], axis=1) - logsumexp(metric[:, ~zero], axis=1)
    return llr


def check_node_update(v2c: np.ndarray, checks: np.ndarray, n_checks: int) -> np.ndarray:
    """Extrinsic CN-to-VN LLRs for every edge; magnitudes clipped at LLR_CLIP."""
    mag = np.abs(v2c)
    negative = (v2c < 0).astype(np.int64)
    zero = mag == 0
    phi = np.where(zero, 0.0, _phi(np.where(zero, 1.0, mag)))
    phi_sum = np.bincount(checks, weights=phi, minlength=n_checks)
    zero_count = np.bincount(checks, weights=zero, minlength=n_checks)
    parity = np.bincount(checks, weights=negative, minlength=n_checks).astype(np.int64)

    extrinsic = np.maximum(phi_sum[checks] - phi, 0.0)
    other_zeros = zero_count[checks] - zero
    with np.errstate(divide="ignore"):
        out = np.minimum(_phi(extrinsic), LLR_CLIP)
    out[other_zeros > 0] = 0.0
    sign = 1 - 2 * ((parity[checks] - negative) % 2)
    return sign * out


def bp_decode(code: LiftedCode, llr, max_iters: int) -> Tuple[np.ndarray, bool, int]:
    """Flooding sum-product; stops once every bit is decided and the syndrome is zero."""
    llr = np.asarray(llr, dtype=float)
    if llr.shape != (code.n,) or not np.all(np.isfinite(llr)):
        raise InvalidParametersError(f"expected {code.n} finite LLRs")
    hard = (llr < 0).astype(np.int8)
    if not np.any(llr == 0) and not np.any(code.syndrome(hard)):
        return hard, True, 0
    v2c = llr[code.bits]
    for iteration in range(1, max_iters + 1):
        c2v = check_node_update(v2c, code.checks, code.n_checks)
        posterior = llr + np.bincount(code.bits, weights=c2v, minlength=code.n)
        v2c = posterior[code.bits] - c2v
        hard = (posterior < 0).astype(np.int8)
        if not np.any(posterior == 0) and not np.any(code.syndrome(hard)):
            return hard, True, iteration
    return hard, False, max_iters


def encoder_from_code(code: LiftedCode) -> np.ndarray:
    """Generator matrix (k x n, rows spanning the null space of H) over GF(2)."""
    if code.n > MAX_ENCODER_LENGTH:
        raise InvalidParametersError(
            f"dense GF(2) encoder limited to n <= {MAX_ENCODER_LENGTH}, got n={code.n}"
        )
    GF = galois.GF(2)
    H = code.parity_check_matrix.toarray() % 2
    G = np.array(GF(H.astype(np.uint8)).null_space(), dtype=np.int8)
    assert not np.any((G.astype(np.int64) @ H.T.astype(np.int64)) % 2)
    return G


def clopper_pearson(errors: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    alpha = 1.0 - confidence
    low = beta.ppf(alpha / 2, errors, trials - errors + 1) if errors > 0 else 0.0
    high = beta.ppf(1 - alpha / 2, errors + 1, trials - errors) if errors < trials else 1.0
    return float(low), float(high)


@dataclass
class BERSimulator:
    code: LiftedCode
    assignment: ChannelAssignment
    config: SimConfig
    constellation: LabeledConstellation = field(default_factory=lambda: gray_qam(16))
    generator: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.assignment.n != self.code.n:
            raise InvalidParametersError("channel assignment and code length differ")
        if self.assignment.m != self.constellation.m:
            raise InvalidParametersError("channel assignment and constellation use different m")
        self.frame = interleave(self.assignment, self.config.seed)
        self._point_of_label = np.empty(self.constellation.points.size, dtype=complex)
        self._point_of_label[self.constellation.labels] = self.constellation.points
        self._weights = 1 << np.arange(self.constellation.m - 1, -1, -1)
        if self.config.source == "encoded" and self.generator is None:
            self.generator = encoder_from_code(self.code)

    def _codeword(self, rng: np.random.Generator) -> np.ndarray:
        if self.config.source == "zero":
            return np.zeros(self.code.n, dtype=np.int8)
        message = rng.integers(0, 2, self.generator.shape[0])
        return ((message @ self.generator) % 2).astype(np.int8)

    def simulate_frame(self, noise_var: float, rng: np.random.Generator) -> Tuple[int, int]:
        """Send one frame; return (bit errors, BP iterations)."""
        codeword = self._codeword(rng)
        scrambler = rng.integers(0, 2, self.code.n).astype(np.int8)
        tx = codeword ^ scrambler
        labels = tx[self.frame] @ self._weights
        x = self._point_of_label[labels]
        noise = np.sqrt(noise_var / 2.0) * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
        llr = np.empty(self.code.n)
        llr[self.frame] = demap_llr(x + noise, noise_var, self.constellation)
        llr *= 1 - 2 * scrambler.astype(float)
        decoded, _, iterations = bp_decode(self.code, llr, self.config.bp_iters)
        return int(np.sum(decoded != codeword)), iterations

    def run_point(self, index: int, ebn0: float) -> BERRecord:
        snr_db = snr_db_from_ebn0(ebn0, self.code.rate, self.constellation.m)
        noise_var = 1.0 / float(db_to_linear(snr_db))
        frames = bit_errors = frame_errors = total_iters = 0
        while frames < self.config.max_frames and bit_errors < self.config.target_bit_errors:
            rng = np.random.default_rng([self.config.seed, index, frames])
            errors, iterations = self.simulate_frame(noise_var, rng)
            frames += 1
            bit_errors += errors
            frame_errors += errors > 0
            total_iters += iterations
        bits = frames * self.code.n
        low, high = clopper_pearson(bit_errors, bits)
        record = BERRecord(
            ebn0_db=ebn0,
            frames=frames,
            bit_errors=bit_errors,
            frame_errors=frame_errors,
            bits=bits,
            avg_bp_iters=total_iters / frames,
            ber_low=low,
            ber_high=high,
        )
        logger.info(
            "ebn0=%.2f frames=%d errors=%d ber=%.3e", ebn0, frames, bit_errors, record.ber
        )
        return record

    def run(self) -> List[BERRecord]:
        return [self.run_point(k, ebn0) for k, ebn0 in enumerate(self.config.ebn0_points)]


def run_ber(
    code: LiftedCode,
    assignment: ChannelAssignment,
    config: SimConfig,
    constellation: Optional[LabeledConstellation] = None,
) -> List[BERRecord]:
    simulator = BERSimulator(code, assignment, config, constellation or gray_qam(16))
    return simulator.run()

"""
Bit-mapping matrices: construction, validation and per-VN effective erasures.

A mapping is valid when every entry lies in [0, 1], every column sums to 1
and every row sums to V/m.
"""

from __future__ import annotations

import logging
import re
from typing import List, Optional, Sequence, Tuple

import numpy as np

from scbicm.exceptions import InvalidParametersError
from scbicm.models.bit_mapping import BitMapping, ValidationReport, Violation

logger = logging.getLogger(__name__)

Groups = Tuple[Tuple[int, ...], ...]

INTERNAL_TOL = 1e-9
ROW_TOL = 1e-6
TABLE_TOL = 1e-3

DEFAULT_GROUPS = {1: ((0,),), 2: ((0,), (1,)), 4: ((0, 2), (1, 3))}

# Optimized mapping of the designed two-chain (3,6,10,2) ensemble, 16-QAM Gray.
TABLE_I_TEXT = """\
channels: {0,2} {1,3}
1-2    0.1592 0.8408
3-4    0.5437 0.4563
5-6    0.9739 0.0261
7      0.9920 0.0080
8      0.6547 0.3453
9      0.9988 0.0012
10     0.6546 0.3454
11-12  0.4495 0.5505
13     0.9276 0.0724
14     0.7236 0.2764
15     0.3481 0.6519
16     0.5945 0.4055
17-18  0.3991 0.6009
19     0.9268 0.0732
20     0.7271 0.2729
21     0.7673 0.2327
22     0.9995 0.0005
23-24  0.5239 0.4761
25     0.3906 0.6094
26     0.3225 0.6775
27     0.5104 0.4896
28     0.4071 0.5929
29-30  0.5408 0.4592
31     0.0244 0.9756
32     0.2397 0.7603
33     0.5199 0.4801
34     0.4187 0.5813
35-36  0.2914 0.7086
37-38  0.0432 0.9568
39-40  0.0013 0.9987
"""


def uniform_mapping(m: int, V: int) -> BitMapping:
    if m < 1 or V < 1:
        raise InvalidParametersError(f"uniform mapping needs m >= 1 and V >= 1, got m={m}, V={V}")
    return BitMapping(np.full((m, V), 1.0 / m))


def validate(
    mapping: BitMapping,
    column_tol: float = INTERNAL_TOL,
    row_tol: float = ROW_TOL,
) -> ValidationReport:
    """
    Check bounds, column sums within ``column_tol`` and row sums against V/m.

    ``row_tol`` is relative: a row fails when it misses V/m by more than
    ``row_tol * max(1, V/m)``.
    """
    a = mapping.a
    violations: List[Violation] = []
    for j in range(mapping.V):
        low, high = float(a[:, j].min()), float(a[:, j].max())
        if low < 0.0 or high > 1.0:
            violations.append(Violation("bounds", j, max(-low, high - 1.0)))
    for j, total in enumerate(a.sum(axis=0)):
        if abs(total - 1.0) > column_tol:
            violations.append(Violation("column_sum", j, abs(total - 1.0)))
    target = mapping.V / mapping.m
    for i, total in enumerate(a.sum(axis=1)):
        if abs(total - target) > row_tol * max(1.0, target):
            violations.append(Violation("row_sum", i, abs(total - target)))
    return ValidationReport(violations)


def effective_erasures(mapping: BitMapping, erasures: Sequence[float]) -> np.ndarray:
    """eps'_j = sum_i eps_i a[i, j], accumulated over i in order."""
    eps = np.asarray(erasures, dtype=float)
    if eps.shape != (mapping.m,):
        raise InvalidParametersError(f"expected {mapping.m} channel erasures, got {eps.shape}")
    if np.any(eps < 0) or np.any(eps > 1):
        raise InvalidParametersError("channel erasures must lie in [0, 1]")
    out = np.zeros(mapping.V)
    for i in range(mapping.m):
        out += eps[i] * mapping.a[i]
    return out


def default_groups(m: int) -> Groups:
    return DEFAULT_GROUPS.get(m, tuple((i,) for i in range(m)))


def expand_groups(fractions: np.ndarray, groups: Groups, m: int) -> BitMapping:
    """Split each group fraction equally over the channels of the group."""
    fractions = np.asarray(fractions, dtype=float)
    a = np.zeros((m, fractions.shape[1]))
    for g, group in enumerate(groups):
        for i in group:
            a[i] = fractions[g] / len(group)
    return BitMapping(a)


def pair_fractions(mapping: BitMapping, groups: Optional[Groups] = None) -> np.ndarray:
    groups = groups or default_groups(mapping.m)
    return np.array([mapping.a[list(group)].sum(axis=0) for group in groups])


_GROUP_RE = re.compile(r"\{([^}]*)\}")


def parse_grouped_table(text: str, m: int = 4, V: Optional[int] = None) -> BitMapping:
    """
    Parse the grouped range format: an optional ``channels: {0,2} {1,3}``
    header, then one line per 1-based VN range with one fraction per group.
    """
    groups = default_groups(m)
    rows: List[Tuple[int, int, List[float]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.lower().startswith("channels:"):
            groups = tuple(
                tuple(int(tok) for tok in body.replace(" ", "").split(",") if tok)
                for body in _GROUP_RE.findall(line)
            )
            continue
        fields = line.split()
        try:
            first, _, last = fields[0].partition("-")
            start, stop = int(first), int(last or first)
            values = [float(f) for f in fields[1:]]
        except ValueError as err:
            raise InvalidParametersError(f"line {lineno}: cannot parse {raw!r}") from err
        if start < 1 or stop < start:
            raise InvalidParametersError(f"line {lineno}: bad VN range {fields[0]}")
        rows.append((start, stop, values))

    covered = sorted(c for group in groups for c in group)
    if covered != list(range(m)):
        raise InvalidParametersError(f"channel groups {groups} do not partition 0..{m - 1}")
    width = V or max((stop for _, stop, _ in rows), default=0)
    if width < 1:
        raise InvalidParametersError("grouped table lists no VNs")
    fractions = np.full((len(groups), width), np.nan)
    for start, stop, values in rows:
        if len(values) != len(groups):
            raise InvalidParametersError(
                f"range {start}-{stop}: expected {len(groups)} fractions, got {len(values)}"
            )
        if abs(sum(values) - 1.0) > TABLE_TOL:
            raise InvalidParametersError(f"range {start}-{stop}: fractions sum to {sum(values):.4f}, not 1")
        if stop > width:
            raise InvalidParametersError(f"range {start}-{stop} exceeds V={width}")
        block = fractions[:, start - 1:stop]
        if not np.all(np.isnan(block)):
            raise InvalidParametersError(f"range {start}-{stop} overlaps an earlier range")
        fractions[:, start - 1:stop] = np.asarray(values)[:, None]
    missing = np.nonzero(np.isnan(fractions[0]))[0]
    if missing.size:
        raise InvalidParametersError(f"VN positions {(missing + 1).tolist()} are not covered")
    return expand_groups(fractions, groups, m)


def format_grouped_table(mapping: BitMapping, groups: Optional[Groups] = None, decimals: int = 4) -> str:
    groups = groups or default_groups(mapping.m)
    fractions = np.round(pair_fractions(mapping, groups), decimals)
    header = "channels: " + " ".join("{" + ",".join(map(str, g)) + "}" for g in groups)
    lines = [header]
    j = 0
    while j < mapping.V:
        k = j
        while k + 1 < mapping.V and np.array_equal(fractions[:, k + 1], fractions[:, j]):
            k += 1
        span = f"{j + 1}" if k == j else f"{j + 1}-{k + 1}"
        values = " ".join(f"{v:.{decimals}f}" for v in fractions[:, j])
        lines.append(f"{span:<6} {values}")
        j = k + 1
    return "\n".join(lines) + "\n"


def table_i_mapping() -> BitMapping:
    return parse_grouped_table(TABLE_I_TEXT, m=4)

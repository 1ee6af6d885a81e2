import logging
import math
from typing import List

import numpy as np

_LOG_FORMAT = "ts=%(asctime)s level=%(levelname)s logger=%(name)s msg=%(message)s"


def configure_logging(level="INFO"):
    logging.basicConfig(level=level, format=_LOG_FORMAT)
    logging.getLogger("scbicm").setLevel(level)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Derive ``count`` independent 32-bit seeds from one run seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def parse_sweep(text: str) -> List[float]:
    """Parse ``start:step:stop`` (inclusive) or a comma list into sorted floats."""
    if ":" in text:
        start, step, stop = (float(part) for part in text.split(":"))
        if step <= 0:
            raise ValueError("sweep step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(count)]
    return sorted(float(part) for part in text.split(","))

import os

from dotenv import load_dotenv

load_dotenv()

_PREFIX = "SCBICM_"


def _env(name, default, cast):
    raw = os.getenv(_PREFIX + name)
    if raw is None or raw == "":
        return default
    return cast(raw)


class Config:
    PROFILE_PATH = "artifacts/profile_16qam_gray.txt"
    ARTIFACT_DIR = "artifacts"
    SEED = 2024
    LOG_LEVEL = "INFO"

    # density evolution
    DE_MAX_ITERS = 10000
    DE_ZERO_TOL = 1e-10
    DE_BISECT_TOL = 1e-4

    # differential evolution
    OPT_POPULATION = 60
    OPT_WEIGHT = 0.7
    OPT_CROSSOVER = 0.9
    OPT_GENERATIONS = 300
    OPT_SCREEN_TOP = 8
    OPT_WORKERS = 1

    # finite-length simulation
    SIM_BP_ITERS = 100
    SIM_TARGET_ERRORS = 200
    SIM_MAX_FRAMES = 1000

    # channel profile grid
    SNR_MIN_DB = -2.0
    SNR_MAX_DB = 12.0
    SNR_STEP_DB = 0.05

    @classmethod
    def from_env(cls) -> "Config":
        """Return a Config whose attributes reflect SCBICM_* environment overrides."""
        cfg = cls()
        for name in dir(cls):
            if not name.isupper():
                continue
            default = getattr(cls, name)
            setattr(cfg, name, _env(name, default, type(default)))
        return cfg

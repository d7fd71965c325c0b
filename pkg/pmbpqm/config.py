import os
from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, str(default))
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, str(default))
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


# Density evolution, full profile
DE_M = _env_int("PMBPQM_DE_M", 5000)
DE_N = _env_int("PMBPQM_DE_N", 100)

# Density evolution, CI profile
CI_M = _env_int("PMBPQM_CI_M", 1000)
CI_N = _env_int("PMBPQM_CI_N", 50)

SUCCESS_EPS = _env_float("PMBPQM_SUCCESS_EPS", 1e-3)
BISECT_STEPS = _env_int("PMBPQM_BISECT_STEPS", 20)

MC_TRIALS = _env_int("PMBPQM_MC_TRIALS", 100_000)
THREADS = _env_int("PMBPQM_THREADS", 1)
SEED = _env_int("PMBPQM_SEED", 0)

# 2^n-dim eigenproblem ceiling for the collective Helstrom oracle
MAX_HELSTROM_QUBITS = _env_int("PMBPQM_MAX_HELSTROM_QUBITS", 13)

LOG_LEVEL = os.getenv("PMBPQM_LOG_LEVEL", "WARNING").upper()
OUTPUT_DIR = os.getenv("PMBPQM_OUTPUT_DIR", "results")

if THREADS < 1:
    raise ValueError("PMBPQM_THREADS must be at least 1")
if min(DE_M, CI_M) < 100:
    raise ValueError("PMBPQM_DE_M and PMBPQM_CI_M must be at least 100")

PROFILES = {
    "full": (DE_M, DE_N),
    "ci": (CI_M, CI_N),
}


def profile_settings(name: str) -> tuple[int, int]:
    """
    Look up the (M, N) density-evolution settings for a named profile.

    Args:
        name: 'full' or 'ci'

    Returns:
        Population size and iteration count

    Raises:
        ValueError: If the profile is unknown
    """
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"Unknown profile {name!r}; choose from {', '.join(PROFILES)}")

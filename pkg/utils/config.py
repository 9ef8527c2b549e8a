import os
from dotenv import load_dotenv

from utils.errors import InvalidParameter

# Load environment variables
load_dotenv()

# Construction defaults
K_MIN = 3
DEFAULT_K_MAX = 6
NO_VERIFY_K_MAX = 9

# Test ceilings for the "much less than" bounds; recorded in every manifest
CONGRUENCE_CEILING = 16
TREND_CEILING = 64

DEFAULT_PRECISION_CAP = 1 << 16
DEFAULT_START_BITS = 64


def _int_from_env(name, default):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidParameter(f"{name} must be an integer, got {raw!r}")
    if value <= 0:
        raise InvalidParameter(f"{name} must be positive, got {value}")
    return value


def get_precision_cap():
    """
    Hard cap, in bits, for every precision escalation loop.

    Returns:
        int: SIDON_PRECISION_CAP if set, else 2^16
    """
    return _int_from_env("SIDON_PRECISION_CAP", DEFAULT_PRECISION_CAP)


def get_start_bits():
    """
    First precision tried when a floor or a comparison is escalated.

    Returns:
        int: SIDON_START_BITS if set, else 64
    """
    return _int_from_env("SIDON_START_BITS", DEFAULT_START_BITS)


def get_data_dir():
    return os.environ.get("SIDON_DATA_DIR", "data")


def get_workers():
    """
    Number of worker processes used by per-alpha parallel maps.

    Returns:
        int: SIDON_WORKERS if set, else 1 (run in-process)
    """
    return _int_from_env("SIDON_WORKERS", 1)

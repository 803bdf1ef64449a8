"""Environment-backed defaults for mfkit.

Values come from the process environment, optionally seeded from a ``.env``
file in the working directory. CLI flags override them.
"""

import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Step cap for Gröbner pair reductions and for linear-system unknowns
BUDGET = int(os.getenv("MFKIT_BUDGET", "200000"))

# Truncation sweep for Ext and deformation computations
MAX_DEGREE = int(os.getenv("MFKIT_MAX_DEGREE", "12"))
WINDOW = int(os.getenv("MFKIT_WINDOW", "2"))

LOG_LEVEL = os.getenv("MFKIT_LOG_LEVEL", "WARNING")


def budget_from_env() -> int:
    """Read ``MFKIT_BUDGET`` at call time, falling back to the loaded default."""
    value = os.getenv("MFKIT_BUDGET")
    if value is None:
        return BUDGET
    try:
        return int(value)
    except ValueError as exc:
        raise ValueError(f"MFKIT_BUDGET must be an integer, got {value!r}") from exc

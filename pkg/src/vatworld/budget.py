"""Enumeration budget guard.

Operations that enumerate all action-output words of a given length grow as
(|A|*|Y|)**depth; past ~1e7 words the desk-scale runtime promise breaks down,
so enumerating operations refuse to start unless forced.  The cap can be
overridden with the VATWORLD_BUDGET environment variable.
"""

import os

from .errors import BudgetExceededError

DEFAULT_BUDGET = 10_000_000


def current_budget() -> int:
    raw = os.environ.get("VATWORLD_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(float(raw))
    except ValueError:
        return DEFAULT_BUDGET


def check(n_words: float, force: bool = False, what: str = "enumeration") -> None:
    """Raise BudgetExceededError if ``n_words`` exceeds the cap (unless forced)."""
    cap = current_budget()
    if not force and n_words > cap:
        raise BudgetExceededError(
            f"{what} would visit ~{n_words:.3g} words, over the budget of {cap}; "
            "pass force=True or raise VATWORLD_BUDGET to proceed"
        )

"""Budget plumbing shared across the package.

Every potentially unbounded computation takes explicit caps and either
finishes or raises :class:`BudgetExceeded` carrying whatever partial data was
assembled.  Callers that prefer a soft answer catch the exception and surface
an ``Unknown`` verdict; nothing in the package truncates silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Budget:
    """Caps for iteration depth, path length and structural move count."""

    max_iterates: int = 64
    max_length: int = 2_000_000
    max_moves: int = 400
    refine_depth: int = 8

    def scaled(self, **kw: int) -> "Budget":
        d = {
            "max_iterates": self.max_iterates,
            "max_length": self.max_length,
            "max_moves": self.max_moves,
            "refine_depth": self.refine_depth,
        }
        d.update(kw)
        return Budget(**d)


class BudgetExceeded(Exception):
    """Raised when a cap is hit; ``partial`` holds whatever was computed."""

    def __init__(self, what: str, partial=None):
        super().__init__(what)
        self.what = what
        self.partial = partial


class Unsupported(Exception):
    """Raised for inputs outside the implemented scope (never silently wrong)."""


@dataclass
class Unknown:
    """Soft verdict: the budget ran out before a decision was reached."""

    reason: str
    partial: object = field(default=None, repr=False)

    def __bool__(self) -> bool:  # an Unknown never counts as success
        return False

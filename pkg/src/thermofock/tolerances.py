"""Project-wide numerical tolerances.

Every routine that compares against a threshold reads it from the active
:class:`ToleranceProfile`.  The profile is immutable; a different one can be
installed for a block of code with :func:`use_tolerances`.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass
from typing import Iterator


@dataclass(frozen=True)
class ToleranceProfile:
    hermitian: float = 1e-12
    eig_reconstruction: float = 1e-10
    normalization: float = 1e-10
    negative_eigenvalue: float = 1e-10
    entropy_floor: float = 1e-14
    entropy_reject: float = 1e-8
    stability: float = 1e-9
    cutoff: float = 1e-10
    support: float = 1e-10
    displaced_support: float = 1e-8
    nonnegative: float = 1e-10

    def replace(self, **overrides: float) -> "ToleranceProfile":
        return dataclasses.replace(self, **overrides)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


DEFAULT_TOLERANCES = ToleranceProfile()

_active: contextvars.ContextVar[ToleranceProfile] = contextvars.ContextVar(
    "thermofock_tolerances", default=DEFAULT_TOLERANCES
)


def tolerances() -> ToleranceProfile:
    """Return the profile in effect for the current context."""
    return _active.get()


@contextlib.contextmanager
def use_tolerances(profile: ToleranceProfile) -> Iterator[ToleranceProfile]:
    token = _active.set(profile)
    try:
        yield profile
    finally:
        _active.reset(token)

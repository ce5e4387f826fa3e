"""Global numerical tolerances.

Every check in the package reads its thresholds from :func:`get` at call
time, so :func:`configure` (or the ``JOINTMEAS_TOL_*`` environment
variables, read on first use) changes behaviour everywhere at once.
"""

from __future__ import annotations

import dataclasses
import os
from contextlib import contextmanager
from dataclasses import dataclass

ENV_PREFIX = "JOINTMEAS_TOL_"


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-10  # unit norm of kets
    herm: float = 1e-10  # Hermiticity, entrywise
    num: float = 1e-9  # generic numerical equality / inequality slack
    deg: float = 1e-12  # vanishing standard deviation
    p: float = 1e-12  # zero-probability outcome
    sat: float = 1e-7  # saturation of a relation
    rank: float = 1e-8  # singular-value cutoff for rank tests

    @classmethod
    def from_env(cls, environ=None) -> "Tolerances":
        environ = os.environ if environ is None else environ
        values = {}
        for field in dataclasses.fields(cls):
            raw = environ.get(ENV_PREFIX + field.name.upper())
            if raw is not None:
                try:
                    value = float(raw)
                except ValueError:
                    raise ValueError(f"{ENV_PREFIX}{field.name.upper()} is not a number: {raw!r}") from None
                if not value > 0:
                    raise ValueError(f"{ENV_PREFIX}{field.name.upper()} must be positive, got {raw!r}")
                values[field.name] = value
        return cls(**values)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


_current: Tolerances | None = None


def get() -> Tolerances:
    global _current
    if _current is None:
        _current = Tolerances.from_env()
    return _current


def configure(**overrides: float) -> Tolerances:
    """Replace selected tolerances globally and return the new set."""
    global _current
    for key, value in overrides.items():
        if not value > 0:
            raise ValueError(f"tolerance {key!r} must be positive, got {value!r}")
    _current = dataclasses.replace(get(), **overrides)
    return _current


@contextmanager
def override(**overrides: float):
    """Temporarily replace tolerances inside a ``with`` block."""
    global _current
    saved = get()
    configure(**overrides)
    try:
        yield _current
    finally:
        _current = saved

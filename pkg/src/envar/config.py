"""Numerical tolerances and size caps shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-10
    unitary: float = 1e-10
    state: float = 1e-9

    def __post_init__(self):
        for name in ("norm", "unitary", "state"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")


@dataclass(frozen=True)
class Caps:
    # 2**24 admits the M=10 ensemble with its counter register (4**10 * 11 amplitudes).
    max_dimension: int = 2**24
    max_branches: int = 2**12
    max_copies: int = 200

    def __post_init__(self):
        for name in ("max_dimension", "max_branches", "max_copies"):
            if getattr(self, name) < 1:
                raise ValueError(f"cap {name} must be >= 1")


DEFAULT_TOL = Tolerances()
DEFAULT_CAPS = Caps()

# Schmidt coefficients at or below this count as zero when ranking.
RANK_THRESHOLD = 1e-9
# Max relative spread for coefficients to count as equal.
EQUAL_COEFF_RTOL = 1e-9

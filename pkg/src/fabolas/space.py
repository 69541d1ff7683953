"""Search space definition and the augmented (configuration, subset size) input."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Dimension:
    """One tunable parameter with box bounds, optionally explored on a log scale."""

    name: str
    lower: float
    upper: float
    log: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"dimension {self.name!r}: lower must be < upper")
        if self.log and self.lower <= 0:
            raise ValueError(f"dimension {self.name!r}: log-scale requires lower > 0")


@dataclass(frozen=True)
class SearchSpace:
    """Box search space plus the range of the relative subset size.

    Configurations are handled internally as points in the unit cube; `to_unit`
    and `from_unit` map between the raw parameter scale and [0,1]^d.
    """

    dims: tuple[Dimension, ...]
    s_min: float = 1.0 / 128.0

    def __post_init__(self):
        if not 0.0 < self.s_min <= 1.0:
            raise ValueError("s_min must lie in (0, 1]")
        object.__setattr__(self, "dims", tuple(self.dims))

    @property
    def n_dims(self) -> int:
        return len(self.dims)

    def _axis_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([np.log(d.lower) if d.log else d.lower for d in self.dims])
        hi = np.array([np.log(d.upper) if d.log else d.upper for d in self.dims])
        return lo, hi

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        """Map a raw configuration to the unit cube."""
        x = np.asarray(x, dtype=float)
        lo, hi = self._axis_bounds()
        v = np.array([np.log(xi) if d.log else xi for xi, d in zip(x, self.dims)])
        return (v - lo) / (hi - lo)

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        """Map a unit-cube point back to the raw parameter scale."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        lo, hi = self._axis_bounds()
        v = lo + u * (hi - lo)
        return np.array([np.exp(vi) if d.log else vi for vi, d in zip(v, self.dims)])

    # Subset sizes are explored on a logarithmic scale. The internal GP
    # coordinate maps s = s_min -> 0 and s = 1 -> 1 so the loss basis keeps
    # its extremum pinned at the full dataset.
    def s_to_unit(self, s: float) -> float:
        if not self.s_min <= s <= 1.0 + 1e-12:
            raise ValueError(f"subset size {s} outside [{self.s_min}, 1]")
        if self.s_min == 1.0:
            return 1.0
        return float((np.log(s) - np.log(self.s_min)) / (-np.log(self.s_min)))

    def s_from_unit(self, s_t: float) -> float:
        s_t = min(max(float(s_t), 0.0), 1.0)
        if self.s_min == 1.0:
            return 1.0
        return float(np.exp(np.log(self.s_min) * (1.0 - s_t)))


@dataclass(frozen=True)
class AugmentedInput:
    """A normalized configuration together with the transformed subset size."""

    x: np.ndarray
    s_t: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if np.any(x < -1e-9) or np.any(x > 1.0 + 1e-9):
            raise ValueError("configuration coordinates must lie in [0, 1]")
        if not -1e-12 <= self.s_t <= 1.0 + 1e-12:
            raise ValueError("transformed subset size must lie in [0, 1]")
        object.__setattr__(self, "x", x)

    def as_vector(self) -> np.ndarray:
        return np.append(self.x, self.s_t)

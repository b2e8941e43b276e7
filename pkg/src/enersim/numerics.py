"""Grids, midpoint quadrature, discrete norms and the seeded random stream.

All grids are cell-centred. Random numbers come from numpy's ``Philox``
bit generator (Philox4x64-10, a counter-based generator), so a seed gives the
same stream on every platform numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from enersim.errors import DimensionError, InputError

RNG_ALGORITHM = "philox4x64-10"


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred grid on the interval ``(x_lo, x_hi)``."""

    x_lo: float
    x_hi: float
    n_cells: int

    def __post_init__(self):
        if not self.x_hi > self.x_lo:
            raise InputError(f"need x_hi > x_lo, got ({self.x_lo}, {self.x_hi})")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise InputError(f"n_cells must be an integer >= 2, got {self.n_cells}")

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.n_cells) + 0.5) * self.h

    @property
    def interfaces(self) -> np.ndarray:
        """The ``n_cells + 1`` face coordinates, both endpoints included."""
        return self.x_lo + np.arange(self.n_cells + 1) * self.h


@dataclass(frozen=True)
class Grid2DPeriodic:
    """Square ``n x n`` periodic grid of physical side ``side_length``."""

    side_length: float
    n_cells_per_side: int

    def __post_init__(self):
        if not self.side_length > 0:
            raise InputError(f"side_length must be positive, got {self.side_length}")
        if int(self.n_cells_per_side) != self.n_cells_per_side or self.n_cells_per_side < 1:
            raise InputError(f"n_cells_per_side must be a positive integer, got {self.n_cells_per_side}")

    @property
    def n(self) -> int:
        return self.n_cells_per_side

    @property
    def h(self) -> float:
        return self.side_length / self.n_cells_per_side

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def wrap(self, index: int) -> int:
        return index % self.n

    def neighbor(self, i: int, j: int, direction: int) -> tuple[int, int]:
        """Neighbour of ``(i, j)``; directions 0..3 are +x, -x, +y, -y."""
        di, dj = NEIGHBOR_OFFSETS[direction]
        return (i + di) % self.n, (j + dj) % self.n

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates as two ``(n, n)`` arrays (axis 0 is x)."""
        c = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(c, c, indexing="ij")


NEIGHBOR_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class RngStream:
    """Single-consumer seeded random stream.

    Thin wrapper over ``numpy.random.Generator(Philox(seed))`` exposing only
    the draws the engines need.
    """

    seed: int
    algorithm: str = RNG_ALGORITHM
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.algorithm != RNG_ALGORITHM:
            raise InputError(f"unsupported RNG algorithm {self.algorithm!r}")
        self._gen = np.random.Generator(np.random.Philox(int(self.seed)))

    def uniform(self, size=None):
        """Uniform reals in ``[0, 1)``."""
        return self._gen.random(size)

    def integers(self, low: int, high: int, size=None):
        """Uniform integers in ``[low, high)``."""
        return self._gen.integers(low, high, size=size, dtype=np.int64)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def permuted_rows(self, rows: int, n: int) -> np.ndarray:
        """``rows`` independent permutations of ``range(n)``, one per row."""
        base = np.tile(np.arange(n), (rows, 1))
        return self._gen.permuted(base, axis=1)


def make_rng(seed: int) -> RngStream:
    return RngStream(int(seed))


def _check_len(values: np.ndarray, grid: Grid1D, name: str = "values"):
    if values.ndim != 1 or values.shape[0] != grid.n_cells:
        raise DimensionError(f"{name} has shape {values.shape}, grid has {grid.n_cells} cells")


def integrate_midpoint(values, grid: Grid1D) -> float:
    """Midpoint-rule integral ``h * sum(values)`` of cell averages."""
    values = np.asarray(values, dtype=float)
    _check_len(values, grid)
    return float(grid.h * values.sum())


def norm_l1_diff(a, b, grid: Grid1D) -> float:
    """Discrete L1 distance ``h * sum|a - b|``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    _check_len(a, grid, "a")
    return float(grid.h * np.abs(a - b).sum())

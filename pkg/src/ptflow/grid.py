"""Uniform 1-D grids and the cell-average field containers used by the solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelError, ModelParams, membership_values

N_GHOST = 2  # ghost cells per side; enough for every reconstruction stencil


@dataclass(frozen=True)
class Grid:
    """Uniform cell partition of [x_left, x_right] into n_cells cells."""

    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self) -> None:
        # The transition zone around a phase interface spans six cells, so a
        # meaningful grid needs at least eight.
        if self.n_cells < 8:
            raise ModelError("grid needs at least 8 cells")
        if not self.x_right > self.x_left:
            raise ModelError("grid needs x_right > x_left")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    def centers(self) -> np.ndarray:
        dx = self.dx
        return self.x_left + dx * (np.arange(self.n_cells) + 0.5)


@dataclass
class CellField:
    """Cell-averaged solution on a grid, with per-cell phase tags."""

    grid: Grid
    rho: np.ndarray
    q: np.ndarray
    phase: np.ndarray       # int8, Phase values
    time: float = 0.0
    domain: np.ndarray | None = None  # int8, last-computed domain tags

    def copy(self) -> "CellField":
        return CellField(self.grid, self.rho.copy(), self.q.copy(),
                         self.phase.copy(), self.time,
                         None if self.domain is None else self.domain.copy())


@dataclass
class ExtendedField:
    """A field padded with N_GHOST boundary cells on each side."""

    grid: Grid
    rho: np.ndarray
    q: np.ndarray
    phase: np.ndarray


def field_from_arrays(grid: Grid, rho: np.ndarray, q: np.ndarray,
                      p: ModelParams, time: float = 0.0) -> CellField:
    """Build a field, deriving phase tags from admissible-set membership."""
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    if rho.shape != (grid.n_cells,) or q.shape != (grid.n_cells,):
        raise ModelError("field arrays must have one entry per cell")
    phase = membership_values(rho, q, p).astype(np.int8)
    return CellField(grid, rho, q, phase, time)

"""Stored time series produced by an evolution run."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Grid
from .potentials import PotentialSpec

__all__ = ["SpaceTimeTrace", "default_offsets"]


def default_offsets(grid: Grid) -> np.ndarray:
    """All offsets for d = 1; for d > 1 a coarsened sublattice (stride n/4) plus w = 0."""
    if grid.d == 1:
        return np.arange(grid.n)[:, None]
    axis = np.arange(0, grid.n, max(1, grid.n // 4))
    mesh = np.meshgrid(*([axis] * grid.d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class SpaceTimeTrace:
    """Samples at t_j = j dt, j = 0..steps.

    lam_diag / gam_diag / lam_sym_diag have shape (n_offsets, steps + 1, n**d)
    and hold Lambda(t, x, x+w), Gamma(t, x, x+w) and Lambda(t, x+w, x-w).
    Full kernels are kept at every ``store_every``-th step.
    """

    grid: Grid
    spec: PotentialSpec
    dt: float
    times: np.ndarray
    offsets: np.ndarray
    phi: np.ndarray
    lam_diag: np.ndarray
    gam_diag: np.ndarray
    lam_sym_diag: np.ndarray
    store_every: int
    snap_index: np.ndarray
    lam_snaps: np.ndarray
    gam_snaps: np.ndarray
    conserved: dict = field(default_factory=dict)
    final_state: object = None

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def T(self) -> float:
        return self.steps * self.dt

    def window_samples(self, T: float | None = None) -> int:
        """Number of left-Riemann samples covering [0, T)."""
        T = self.T if T is None else T
        m = int(round(T / self.dt))
        if m < 1 or m > self.steps or abs(m * self.dt - T) > 1e-9 * max(1.0, T):
            raise ValueError(f"window T={T} is not a positive multiple of dt within the stored range")
        return m

    def full_offsets(self) -> bool:
        return len(self.offsets) == self.grid.size

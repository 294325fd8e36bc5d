"""Interaction profiles v (through their Fourier transforms) and mean-field scalings v_N."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lattice import Grid

__all__ = [
    "ConfigError",
    "PotentialSpec",
    "PROFILES",
    "profile_function",
    "vhat_N",
    "sample_vN",
    "max_admissible_N",
    "check_resolved",
    "check_exponents",
    "majorant_check",
    "lp_norm_vN",
]


class ConfigError(ValueError):
    """Raised when a configuration violates one of the parameter inequalities."""


def bump(q: np.ndarray) -> np.ndarray:
    """exp(-1/(1-q^2)) on q < 1, zero otherwise."""
    q = np.abs(np.asarray(q, dtype=float))
    out = np.zeros_like(q)
    inside = q < 1
    out[inside] = np.exp(-1.0 / (1.0 - q[inside] ** 2))
    return out


def wide_bump(q: np.ndarray) -> np.ndarray:
    """Shipped majorant: 1.1 times the bump."""
    return 1.1 * bump(q)


def zero_profile(q: np.ndarray) -> np.ndarray:
    return np.zeros_like(np.asarray(q, dtype=float))


PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "bump": bump,
    "wide_bump": wide_bump,
    "zero": zero_profile,
}


def tabulated(table: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Radial profile linearly interpolated from samples on a uniform grid of [0, 1]."""
    table = np.asarray(table, dtype=float)
    nodes = np.linspace(0.0, 1.0, table.size)

    def prof(q):
        q = np.abs(np.asarray(q, dtype=float))
        return np.where(q < 1, np.interp(q, nodes, table), 0.0)

    return prof


@dataclass(frozen=True)
class PotentialSpec:
    """v_hat_N(xi) = amplitude * v_hat(|xi| / N^beta)."""

    beta: float
    bigN: float
    profile: str = "bump"
    amplitude: float = 1.0
    table: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ConfigError(f"beta must satisfy 0 <= beta < 1, got {self.beta}")
        if not self.bigN >= 1:
            raise ConfigError(f"N must satisfy N >= 1, got {self.bigN}")
        if self.profile == "tabulated" and self.table is None:
            raise ConfigError("tabulated profile needs a table of v_hat values on [0, 1]")
        if self.profile not in PROFILES and self.profile != "tabulated":
            raise ConfigError(f"unknown potential profile {self.profile!r}")

    @property
    def scale(self) -> float:
        return float(self.bigN) ** self.beta

    def vhat(self, q: np.ndarray) -> np.ndarray:
        """Unscaled profile v_hat(q)."""
        return self.amplitude * profile_function(self.profile, self.table)(q)


def profile_function(name: str, table=None) -> Callable[[np.ndarray], np.ndarray]:
    if name == "tabulated":
        return tabulated(np.asarray(table))
    return PROFILES[name]


def max_admissible_N(beta: float, grid: Grid) -> float:
    """Largest N whose scaled Fourier support fits under the grid Nyquist wavenumber."""
    if beta == 0:
        return np.inf
    return grid.k_nyquist ** (1.0 / beta)


def check_resolved(spec: PotentialSpec, grid: Grid) -> None:
    if spec.scale > grid.k_nyquist * (1 + 1e-12):
        raise ConfigError(
            f"unresolved regime: N^beta = {spec.scale:.6g} exceeds the Nyquist wavenumber "
            f"{grid.k_nyquist:.6g}; maximum admissible N for this grid is "
            f"{max_admissible_N(spec.beta, grid):.6g}"
        )


def check_exponents(alpha: float, beta: float) -> None:
    """Enforce alpha > 1/2 and 2*alpha*beta < 1."""
    if not alpha > 0.5:
        raise ConfigError(f"alpha > 1/2 violated: alpha = {alpha}")
    if not 2 * alpha * beta < 1:
        raise ConfigError(f"2*alpha*beta < 1 violated: 2*{alpha}*{beta} = {2 * alpha * beta}")


def vhat_N(spec: PotentialSpec, grid: Grid) -> np.ndarray:
    """Scaled Fourier profile on the grid wavevectors (FFT order, flat)."""
    check_resolved(spec, grid)
    knorm = np.sqrt(grid.ksq)
    return spec.vhat(knorm / spec.scale)


def sample_vN(spec: PotentialSpec, grid: Grid) -> np.ndarray:
    """Physical samples v_N(x) = L^-d sum_k v_hat_N(k) e^{ik.x} (real and even)."""
    vh = vhat_N(spec, grid)
    vx = grid.ifft(vh.astype(complex), "x") * grid.size / grid.L**grid.d
    return np.ascontiguousarray(vx.real)


def majorant_check(spec: PotentialSpec, grid: Grid, majorant: Callable[[np.ndarray], np.ndarray] = wide_bump) -> bool:
    """True when |v_hat_N| <= w_hat_N at every grid wavevector."""
    q = np.sqrt(grid.ksq) / spec.scale
    return bool(np.all(np.abs(spec.vhat(q)) <= majorant(q)))


def lp_norm_vN(spec: PotentialSpec, grid: Grid, p: float, refine: int = 4) -> float:
    """||v_N||_{L^p} by Riemann quadrature on a grid refined by zero-padding."""
    vh = vhat_N(spec, grid).reshape(grid.shape)
    m = grid.n * refine
    big = np.zeros((m,) * grid.d, dtype=complex)
    # place FFT-ordered coefficients into the padded spectrum
    idx = np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(int) % m
    big[np.ix_(*([idx] * grid.d))] = vh
    vx = np.fft.ifftn(big).real * m**grid.d / grid.L**grid.d
    dV = (grid.L / m) ** grid.d
    return float((np.sum(np.abs(vx) ** p) * dV) ** (1.0 / p))

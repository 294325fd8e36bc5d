"""Periodic grids, spectral transforms and kernel algebra.

Fields are stored as complex arrays of shape ``(..., n**d)`` and kernels as
``(..., n**d, n**d)`` arrays indexed by (x, y).  Integrals use the Riemann
rule with cell volume ``dx**d``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "make_grid",
    "fourier_multiplier",
    "japanese",
    "kernel_compose",
    "apply_kernel",
    "kernel_trace",
    "kernel_diag",
    "delta_kernel",
    "circulant",
    "TimeSpectrum",
    "time_fourier",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box [0, L)^d with n points per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got d={self.d}")
        if self.n % 2 or not 8 <= self.n <= 256:
            raise ValueError(f"n must be even with 8 <= n <= 256, got n={self.n}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got L={self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dV(self) -> float:
        """Quadrature weight of one grid cell."""
        return self.dx**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def k_nyquist(self) -> float:
        return np.pi * self.n / self.L

    @property
    def wavenumbers(self) -> np.ndarray:
        """Sorted per-axis table 2*pi*m/L, m = -n/2 .. n/2-1."""
        return 2 * np.pi * np.arange(-self.n // 2, self.n // 2) / self.L

    @cached_property
    def k1d(self) -> np.ndarray:
        """Per-axis wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Wavevectors in FFT order, shape (d, n, ..., n)."""
        return np.stack(np.meshgrid(*([self.k1d] * self.d), indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        """|k|^2 flattened to length n**d (FFT order)."""
        return np.sum(self.kvec**2, axis=0).ravel()

    @cached_property
    def points(self) -> np.ndarray:
        """Grid coordinates, shape (n**d, d)."""
        x = np.arange(self.n) * self.dx
        mesh = np.meshgrid(*([x] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def multi_index(self) -> np.ndarray:
        """Integer lattice coordinates of each flat index, shape (n**d, d)."""
        return np.array(np.unravel_index(np.arange(self.size), self.shape)).T

    def flat_index(self, idx: np.ndarray) -> np.ndarray:
        """Flat index of (possibly out-of-range) lattice coordinates, periodically."""
        idx = np.asarray(idx) % self.n
        return np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), self.shape)

    def fft(self, f: np.ndarray, axes: str = "x") -> np.ndarray:
        """Unnormalized forward DFT over the spatial axes of a field or kernel."""
        return _spatial_transform(self, f, axes, np.fft.fftn)

    def ifft(self, f: np.ndarray, axes: str = "x") -> np.ndarray:
        return _spatial_transform(self, f, axes, np.fft.ifftn)


def make_grid(d: int, n: int, L: float) -> Grid:
    """Validated constructor; rejects odd n and d outside {1, 2, 3}."""
    return Grid(int(d), int(n), float(L))


def _spatial_transform(grid: Grid, f: np.ndarray, axes: str, fn) -> np.ndarray:
    # axes: "x" for a field (last axis), "xy" / "x1" / "y" for a kernel (last two axes)
    f = np.asarray(f)
    d, n = grid.d, grid.n
    if axes == "x":
        lead = f.shape[:-1]
        g = f.reshape(lead + (n,) * d)
        out = fn(g, axes=tuple(range(-d, 0)))
        return out.reshape(lead + (grid.size,))
    lead = f.shape[:-2]
    g = f.reshape(lead + (n,) * (2 * d))
    if axes == "xy":
        ax = tuple(range(-2 * d, 0))
    elif axes == "x1":
        ax = tuple(range(-2 * d, -d))
    elif axes == "y":
        ax = tuple(range(-d, 0))
    else:
        raise ValueError(f"unknown axes spec {axes!r}")
    out = fn(g, axes=ax)
    return out.reshape(lead + (grid.size, grid.size))


def japanese(k: np.ndarray) -> np.ndarray:
    """<k> = (1 + |k|^2)^(1/2) for a stacked vector array (first axis = components)."""
    return np.sqrt(1.0 + np.sum(np.asarray(k) ** 2, axis=0))


def fourier_multiplier(grid: Grid, values: np.ndarray, weight, kind: str | None = None) -> np.ndarray:
    """Apply a diagonal Fourier weight to a field or kernel (or a time stack of them).

    For a field, ``weight(xi)`` receives wavevectors of shape (d, n**d).  For a
    kernel, ``weight(xi, eta)`` receives broadcastable arrays of shapes
    (d, n**d, 1) and (d, 1, n**d).  An ndarray weight of matching shape is used as is.
    """
    values = np.asarray(values)
    if kind is None:
        kind = "field" if values.ndim == 1 else "kernel"
    xi = grid.kvec.reshape(grid.d, grid.size)
    if kind == "field":
        if values.shape[-1] != grid.size:
            raise ValueError(f"field length {values.shape[-1]} does not match grid size {grid.size}")
        w = weight(xi) if callable(weight) else np.asarray(weight)
        return grid.ifft(np.broadcast_to(w, (grid.size,)) * grid.fft(values, "x"), "x")
    if kind == "kernel":
        if values.shape[-2:] != (grid.size, grid.size):
            raise ValueError(f"kernel shape {values.shape[-2:]} does not match grid size {grid.size}")
        w = weight(xi[:, :, None], xi[:, None, :]) if callable(weight) else np.asarray(weight)
        w = np.broadcast_to(w, (grid.size, grid.size))
        return grid.ifft(w * grid.fft(values, "xy"), "xy")
    raise ValueError(f"kind must be 'field' or 'kernel', got {kind!r}")


def _check_same(grid: Grid, *arrays: np.ndarray) -> None:
    for a in arrays:
        if a.shape[-2:] != (grid.size, grid.size):
            raise ValueError(f"kernel of shape {a.shape} does not live on grid with {grid.size} points")


def kernel_compose(grid: Grid, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(A o B)(x1, x2) = int A(x1, y) B(y, x2) dy."""
    _check_same(grid, A, B)
    return (A @ B) * grid.dV


def apply_kernel(grid: Grid, A: np.ndarray, f: np.ndarray) -> np.ndarray:
    """(A f)(x) = int A(x, y) f(y) dy."""
    _check_same(grid, A)
    return (A @ f) * grid.dV


def kernel_trace(grid: Grid, A: np.ndarray) -> complex:
    _check_same(grid, A)
    return complex(np.trace(A) * grid.dV)


def kernel_diag(grid: Grid, A: np.ndarray, offset: Sequence[int] | int = 0) -> np.ndarray:
    """x -> A(x, x + w) for a lattice offset w (periodic wraparound).

    Works on time stacks of kernels as well (leading axes are kept).
    """
    w = np.broadcast_to(np.atleast_1d(np.asarray(offset, dtype=int)), (grid.d,))
    rows = np.arange(grid.size)
    cols = grid.flat_index(grid.multi_index + w)
    return A[..., rows, cols]


def kernel_sym_diag(grid: Grid, A: np.ndarray, offset: Sequence[int] | int = 0) -> np.ndarray:
    """x -> A(x + w, x - w), the symmetric diagonal convention."""
    w = np.broadcast_to(np.atleast_1d(np.asarray(offset, dtype=int)), (grid.d,))
    rows = grid.flat_index(grid.multi_index + w)
    cols = grid.flat_index(grid.multi_index - w)
    return A[..., rows, cols]


def delta_kernel(grid: Grid) -> np.ndarray:
    """Discrete delta, delta_xy / dx^d, so that composing with it is the identity."""
    return np.eye(grid.size, dtype=complex) / grid.dV


def circulant(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Matrix M[i, j] = f(x_i - x_j) for a periodic field f."""
    diff = grid.multi_index[:, None, :] - grid.multi_index[None, :, :]
    return np.asarray(f)[grid.flat_index(diff)]


@dataclass(frozen=True)
class TimeSpectrum:
    """Continuous-normalized time transform of c(t)F sampled on [0, T)."""

    tau: np.ndarray
    values: np.ndarray
    dt: float

    @property
    def dtau(self) -> float:
        return 2 * np.pi / (len(self.tau) * self.dt)

    def l2_weighted(self, weight: np.ndarray | None = None) -> np.ndarray:
        """Sum of weight*|F~|^2 dtau/(2 pi) over tau (weight broadcast along axis 0)."""
        p = np.abs(self.values) ** 2
        if weight is not None:
            p = p * weight
        return np.sum(p, axis=0) * self.dtau / (2 * np.pi)


def time_fourier(samples: np.ndarray, dt: float, pad: int = 4, times: np.ndarray | None = None) -> TimeSpectrum:
    """Transform c(t)F(t) with F sampled at t_j = j dt, j < M (left Riemann rule).

    F~(tau) = int e^{-i t tau} c(t) F(t) dt is approximated by dt * DFT of the
    zero-padded samples, so Parseval holds exactly with measure dtau/(2 pi).
    """
    samples = np.asarray(samples)
    if times is not None:
        times = np.asarray(times, dtype=float)
        if times.size > 1 and not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-14):
            raise ValueError("time_fourier requires uniform sampling with step dt")
    if pad < 1:
        raise ValueError("pad factor must be >= 1")
    m = samples.shape[0]
    P = max(1, pad * m)
    vals = dt * np.fft.fft(samples, n=P, axis=0)
    tau = 2 * np.pi * np.fft.fftfreq(P, d=dt)
    return TimeSpectrum(tau=tau, values=vals, dt=dt)

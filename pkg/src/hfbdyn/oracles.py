"""Direct-summation reference implementations (explicit loops; d = 1 only).

These are deliberately naive and serve as oracles for the vectorized code.
"""
from __future__ import annotations

import numpy as np

from .lattice import Grid
from .state import HFBState

__all__ = ["loop_compose", "loop_conv", "loop_rhs", "loop_fermi_rhs", "loop_second_derivative"]


def _check(grid: Grid) -> None:
    if grid.d != 1:
        raise ValueError("loop oracles are implemented for d = 1")


def loop_compose(grid: Grid, A, B) -> np.ndarray:
    _check(grid)
    n = grid.n
    out = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            s = 0j
            for y in range(n):
                s += A[a, y] * B[y, b]
            out[a, b] = s * grid.dx
    return out


def loop_conv(grid: Grid, v, f) -> np.ndarray:
    _check(grid)
    n = grid.n
    out = np.zeros(n, dtype=complex)
    for a in range(n):
        s = 0j
        for y in range(n):
            s += v[(a - y) % n] * f[y]
        out[a] = s * grid.dx
    return out


def loop_second_derivative(grid: Grid, f) -> np.ndarray:
    """Spectral Laplacian by an explicit DFT sum (O(n^2))."""
    _check(grid)
    n = grid.n
    x = np.arange(n) * grid.dx
    k = grid.k1d
    out = np.zeros(n, dtype=complex)
    for a in range(n):
        s = 0j
        for m in range(n):
            c = 0j
            for j in range(n):
                c += f[j] * np.exp(-1j * k[m] * x[j])
            s += -(k[m] ** 2) * c * np.exp(1j * k[m] * x[a])
        out[a] = s / n
    return out


def loop_rhs(state: HFBState, v) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(R_phi, R_Lambda, R_Gamma_bar) by triple loops over (x1, x2, y)."""
    grid = state.grid
    _check(grid)
    n, dx = grid.n, grid.dx
    phi, lam, gam = state.phi, state.lam, state.gamma

    def vv(i, j):
        return v[(i - j) % n]

    W = loop_conv(grid, v, np.diagonal(gam))
    Wp = loop_conv(grid, v, np.abs(phi) ** 2)
    r_phi = np.zeros(n, dtype=complex)
    for a in range(n):
        s = -W[a] * phi[a]
        for y in range(n):
            s -= vv(a, y) * (phi[y] * gam[y, a] - np.conj(phi[y]) * phi[a] * phi[y]) * dx
            s -= vv(a, y) * (np.conj(phi[y]) * lam[a, y] - phi[y] * np.conj(phi[y]) * phi[a]) * dx
        r_phi[a] = s
    r_lam = np.zeros((n, n), dtype=complex)
    r_gb = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            sl = -(W[a] + W[b]) * lam[a, b]
            sg = -(W[a] - W[b]) * np.conj(gam[a, b])
            for y in range(n):
                v1, v2 = vv(a, y), vv(b, y)
                sl -= (v1 + v2) * lam[a, y] * gam[y, b] * dx
                sl -= (v1 + v2) * np.conj(gam[a, y]) * lam[y, b] * dx
                sl += 2 * (v1 + v2) * abs(phi[y]) ** 2 * phi[a] * phi[b] * dx
                sg -= (v1 - v2) * lam[a, y] * np.conj(lam[y, b]) * dx
                sg -= (v1 - v2) * np.conj(gam[a, y]) * np.conj(gam[y, b]) * dx
                sg += 2 * (v1 - v2) * abs(phi[y]) ** 2 * phi[a] * np.conj(phi[b]) * dx
            r_lam[a, b] = sl
            r_gb[a, b] = sg
    return r_phi, r_lam, r_gb


def loop_fermi_rhs(grid: Grid, omega, psi, v) -> tuple[np.ndarray, np.ndarray]:
    """(d omega/dt, d psi/dt) by explicit loops; Laplacians by explicit DFT sums."""
    _check(grid)
    n, dx = grid.n, grid.dx
    W = loop_conv(grid, v, np.diagonal(omega))
    lap_rows_psi = np.array([loop_second_derivative(grid, psi[:, b]) for b in range(n)]).T
    lap_cols_psi = np.array([loop_second_derivative(grid, psi[a, :]) for a in range(n)])
    lap_rows_om = np.array([loop_second_derivative(grid, omega[:, b]) for b in range(n)]).T
    lap_cols_om = np.array([loop_second_derivative(grid, omega[a, :]) for a in range(n)])
    dpsi = np.zeros((n, n), dtype=complex)
    dom = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            sp = -(lap_rows_psi[a, b] + lap_cols_psi[a, b]) + 2 * v[(a - b) % n] * psi[a, b]
            sp += (W[a] + W[b]) * psi[a, b]
            so = -lap_rows_om[a, b] + lap_cols_om[a, b] + (W[a] - W[b]) * omega[a, b]
            for y in range(n):
                v1, v2 = v[(a - y) % n], v[(b - y) % n]
                sp -= (v1 + v2) * (psi[a, y] * np.conj(omega[y, b]) + omega[a, y] * psi[y, b]) * dx
                so -= (v1 - v2) * (psi[a, y] * np.conj(psi[y, b]) + omega[a, y] * omega[y, b]) * dx
            dpsi[a, b] = 1j * sp
            dom[a, b] = 1j * so
    return dom, dpsi

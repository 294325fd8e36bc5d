"""Nonlinear right-hand sides of the phi / Lambda / Gamma_bar system.

Orientation used throughout (one convention for both assemblies):

    d/dt phi       = i (Lap phi + R_phi)
    d/dt Lambda    = i ((Lap_1 + Lap_2) Lambda - v_N(x1 - x2) Lambda / N + R_Lambda)
    d/dt Gamma_bar = i ((Lap_1 - Lap_2) Gamma_bar + R_Gamma_bar)

``RhsOutput`` holds R_phi, R_Lambda and R_Gamma_bar.  The pointwise
v_N(x1 - x2)/N term is not part of R_Lambda; the integrator treats it as an
exact phase.  Gamma is stored hermitian and updated through dGamma = conj(dGamma_bar).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lattice import Grid, apply_kernel, circulant, kernel_compose
from .potentials import PotentialSpec, sample_vN
from .state import HFBState

__all__ = [
    "Interaction",
    "RhsOutput",
    "conv_diag",
    "rhs_direct",
    "rhs_bracket",
    "bracket_comm",
    "bracket_sym",
    "fermi_rhs",
    "fermi_constraint",
]


@dataclass(frozen=True)
class Interaction:
    """Precomputed tables for a sampled potential on a grid."""

    grid: Grid
    v: np.ndarray  # real samples v(x)

    @classmethod
    def from_spec(cls, spec: PotentialSpec, grid: Grid) -> "Interaction":
        return cls(grid, sample_vN(spec, grid))

    @cached_property
    def vhat(self) -> np.ndarray:
        """Continuous-normalized transform int v e^{-ikx} dx (FFT order)."""
        return self.grid.fft(self.v.astype(complex), "x") * self.grid.dV

    @cached_property
    def matrix(self) -> np.ndarray:
        """V[x, y] = v(x - y)."""
        return circulant(self.grid, self.v)

    def conv(self, f: np.ndarray) -> np.ndarray:
        """x -> int v(x - y) f(y) dy by Fourier multiplication."""
        return self.grid.ifft(self.vhat * self.grid.fft(f, "x"), "x")


@dataclass(frozen=True)
class RhsOutput:
    dphi: np.ndarray
    dlambda: np.ndarray
    dgamma_bar: np.ndarray

    def __iter__(self):
        return iter((self.dphi, self.dlambda, self.dgamma_bar))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(np.abs(a) ** 2) for a in self)))


def _interaction(state_or_grid, vN) -> Interaction:
    if isinstance(vN, Interaction):
        return vN
    grid = state_or_grid.grid if isinstance(state_or_grid, HFBState) else state_or_grid
    return Interaction(grid, np.asarray(vN, dtype=float))


def conv_diag(grid: Grid, vN, gamma: np.ndarray) -> np.ndarray:
    """x -> int v_N(x - y) Gamma(y, y) dy."""
    return _interaction(grid, vN).conv(np.diagonal(gamma, axis1=-2, axis2=-1))


def rhs_direct(state: HFBState, vN) -> RhsOutput:
    """Term-by-term assembly of the printed integrals."""
    it = _interaction(state, vN)
    dV = state.grid.dV
    V = it.matrix
    phi, lam, gam = state.phi, state.lam, state.gamma
    gb = gam.conj()
    rho = np.abs(phi) ** 2
    W = it.conv(np.diagonal(gam))  # v_N * diag Gamma
    Wp = it.conv(rho)  # v_N * |phi|^2

    # phi: v(x-y) Gamma(y,x) phi(y) and v(x-y) Lambda(x,y) conj(phi(y)), each minus the condensate part
    exch = (V * gam.T) @ phi * dV - Wp * phi
    pair = (V * lam) @ phi.conj() * dV - Wp * phi
    r_phi = -W * phi - exch - pair

    # Lambda
    Vl = V * lam
    quad = Vl @ gam + lam @ (V * gam) + (V * gb) @ lam + gb @ Vl
    phiphi = np.outer(phi, phi)
    r_lam = -(W[:, None] + W[None, :]) * lam - quad * dV + 2 * (Wp[:, None] + Wp[None, :]) * phiphi

    # Gamma_bar
    comm = Vl @ lam.conj() - lam @ (V * lam.conj()) + (V * gb) @ gb - gb @ (V * gb)
    r_gb = -comm * dV - (W[:, None] - W[None, :]) * gb + 2 * (Wp[:, None] - Wp[None, :]) * np.outer(phi, phi.conj())
    return RhsOutput(r_phi, r_lam, r_gb)


def bracket_comm(grid: Grid, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """[A, B] = A o B - B* o A*."""
    return kernel_compose(grid, A, B) - kernel_compose(grid, B.conj().T, A.conj().T)


def bracket_sym(grid: Grid, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """{A, B} = A o B + B^T o A^T."""
    return kernel_compose(grid, A, B) + kernel_compose(grid, B.T, A.T)


def rhs_bracket(state: HFBState, vN) -> RhsOutput:
    """Assembly through commutators and symmetrizations.

    The Gamma bracket expression produces the nonlinear part of the equation
    for Gamma itself; it is conjugated to give R_Gamma_bar.
    """
    grid = state.grid
    it = _interaction(state, vN)
    V = it.matrix
    phi, lam, gam = state.phi, state.lam, state.gamma
    gb = gam.conj()
    W = it.conv(np.diagonal(gam))
    Wop = np.diag(W) / grid.dV  # multiplication operator as a kernel
    phiphi = np.outer(phi, phi)
    phibphi = np.outer(phi.conj(), phi)

    r_lam = (
        -bracket_sym(grid, Wop, lam)
        - bracket_sym(grid, V * gb, lam)
        - bracket_sym(grid, V * lam, gam)
        + bracket_sym(grid, V * np.outer(phi, phi.conj()), phiphi)
        + bracket_sym(grid, V * phiphi, phibphi)
    )
    r_gam = (
        -bracket_comm(grid, Wop, gam)
        - bracket_comm(grid, V * lam.conj(), lam)
        - bracket_comm(grid, V * gam, gam)
        + bracket_comm(grid, V * phiphi.conj(), phiphi)
        + bracket_comm(grid, V * phibphi, phibphi)
    )
    Wp = it.conv(np.abs(phi) ** 2)
    r_phi = (
        -W * phi
        - apply_kernel(grid, V * gb, phi)
        - apply_kernel(grid, V * lam, phi.conj())
        + 2 * Wp * phi
    )
    return RhsOutput(r_phi, r_lam, r_gam.conj())


def fermi_constraint(grid: Grid, omega: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """-psi o psi_bar + omega o omega - 2 omega (vanishes on admissible states)."""
    return -kernel_compose(grid, psi, psi.conj()) + kernel_compose(grid, omega, omega) - 2 * omega


def fermi_rhs(grid: Grid, omega: np.ndarray, psi: np.ndarray, v, check_tol: float | None = 1e-8):
    """Time derivatives (d omega/dt, d psi/dt) of the aligned-Fermion system.

    The pair integrals use the v(x2 - y) integrand in both the v(x1 - y) and
    v(x2 - y) terms, which keeps psi antisymmetric and omega hermitian.
    """
    it = _interaction(grid, v)
    if check_tol is not None:
        res = np.max(np.abs(fermi_constraint(grid, omega, psi)), initial=0.0) * grid.dV
        if res > check_tol:
            warnings.warn(f"fermionic constraint residual {res:.2e} exceeds {check_tol:.0e}", RuntimeWarning)
    dV = grid.dV
    V = it.matrix
    lap = -grid.ksq
    W = it.conv(np.diagonal(omega))
    Wsum = W[:, None] + W[None, :]
    Wdiff = W[:, None] - W[None, :]

    def lap1(K):
        return grid.ifft(lap[:, None] * grid.fft(K, "x1"), "x1")

    def lap2(K):
        return grid.ifft(lap[None, :] * grid.fft(K, "y"), "y")

    # int (v(x1-y) + v(x2-y)) X(x1,y) Y(y,x2) = (V o X) Y + X (V o Y)
    int_psi = ((V * psi) @ omega.conj() + psi @ (V * omega.conj()) + (V * omega) @ psi + omega @ (V * psi)) * dV
    dpsi = 1j * (-(lap1(psi) + lap2(psi)) + 2 * V * psi - int_psi + Wsum * psi)
    int_om = ((V * psi) @ psi.conj() - psi @ (V * psi.conj()) + (V * omega) @ omega - omega @ (V * omega)) * dV
    domega = 1j * (-lap1(omega) + lap2(omega) - int_om + Wdiff * omega)
    return domega, dpsi

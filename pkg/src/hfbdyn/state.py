"""The evolved triple (phi, Lambda, Gamma), pair-excitation initial data and invariant checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .lattice import Grid, kernel_compose, kernel_trace
from .potentials import PotentialSpec

__all__ = [
    "AffineKernel",
    "HFBState",
    "Violation",
    "sh_ch_series",
    "from_pair_excitation",
    "validate",
    "psd_margin",
    "operator_norm",
    "phi_profile",
    "k_profile",
    "build_initial_state",
    "gradient_sq",
]

TAIL_TOL = 1e-12
DIVERGENCE_GUARD = 10.0


@dataclass(frozen=True)
class AffineKernel:
    """scalar * delta + dense, with the delta part kept symbolic."""

    scalar: complex
    dense: np.ndarray

    def compose(self, other: "AffineKernel", grid: Grid) -> "AffineKernel":
        dense = (
            self.scalar * other.dense
            + other.scalar * self.dense
            + kernel_compose(grid, self.dense, other.dense)
        )
        return AffineKernel(self.scalar * other.scalar, dense)

    def conj(self) -> "AffineKernel":
        return AffineKernel(np.conj(self.scalar), self.dense.conj())

    def __sub__(self, other: "AffineKernel") -> "AffineKernel":
        return AffineKernel(self.scalar - other.scalar, self.dense - other.dense)

    def to_dense(self, grid: Grid) -> np.ndarray:
        """Materialize using the discrete delta (only for diagnostics)."""
        return self.dense + self.scalar * np.eye(grid.size) / grid.dV


@dataclass(frozen=True)
class HFBState:
    grid: Grid
    spec: PotentialSpec
    t: float
    phi: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray

    def replace(self, **kw: Any) -> "HFBState":
        return replace(self, **kw)

    @property
    def gamma_bar(self) -> np.ndarray:
        return self.gamma.conj()

    def scaled(self, s: complex) -> "HFBState":
        return self.replace(phi=s * self.phi, lam=s * s * self.lam, gamma=abs(s) ** 2 * self.gamma)


@dataclass(frozen=True)
class Violation:
    name: str
    residual: float
    tol: float

    def __str__(self) -> str:
        return f"{self.name}: residual {self.residual:.3e} > tol {self.tol:.1e}"


def operator_norm(grid: Grid, k: np.ndarray) -> float:
    """Operator norm of the integral operator with kernel k on L^2."""
    return float(np.linalg.norm(k * grid.dV, 2))


def sh_ch_series(grid: Grid, k: np.ndarray, depth: int = 8) -> tuple[np.ndarray, AffineKernel]:
    """Truncated series u = sh(k) and c = ch(k).

    sh(k) = k + k kbar k / 3! + ...   (depth terms)
    ch(k) = delta + kbar k / 2! + ... (depth + 1 terms, delta kept symbolic)
    """
    if depth < 1:
        raise ValueError("series depth must be >= 1")
    norm = operator_norm(grid, k)
    if norm > DIVERGENCE_GUARD:
        raise ValueError(f"pair excitation operator norm {norm:.3g} exceeds the divergence guard {DIVERGENCE_GUARD}")
    tail = norm ** (2 * depth + 1) / math.factorial(2 * depth + 1)
    if tail > TAIL_TOL:
        raise ValueError(
            f"series tail bound {tail:.2e} above {TAIL_TOL:.0e} at depth {depth}; increase depth"
        )
    kb = k.conj()
    u = np.zeros_like(k, dtype=complex)
    term = k.astype(complex)  # k (kbar k)^j
    for j in range(depth):
        u += term / math.factorial(2 * j + 1)
        term = kernel_compose(grid, kernel_compose(grid, term, kb), k)
    c_dense = np.zeros_like(u)
    term = kernel_compose(grid, kb, k)  # (kbar k)^j
    for j in range(1, depth + 1):
        c_dense += term / math.factorial(2 * j)
        term = kernel_compose(grid, kernel_compose(grid, term, kb), k)
    return u, AffineKernel(1.0, c_dense)


def from_pair_excitation(
    grid: Grid, spec: PotentialSpec, phi: np.ndarray, k: np.ndarray, depth: int = 8, t: float = 0.0
) -> HFBState:
    """Gamma = conj(phi)(x1) phi(x2) + ubar o u / N,  Lambda = phi phi + psi / (2N), psi = 2 u o c."""
    bigN = float(spec.bigN)
    u, c = sh_ch_series(grid, k, depth)
    psi = 2 * (c.scalar * u + kernel_compose(grid, u, c.dense))
    lam = np.outer(phi, phi) + psi / (2 * bigN)
    gamma = np.outer(phi.conj(), phi) + kernel_compose(grid, u.conj(), u) / bigN
    lam = 0.5 * (lam + lam.T)
    gamma = 0.5 * (gamma + gamma.conj().T)
    return HFBState(grid, spec, t, phi.astype(complex), lam, gamma)


def validate(state: HFBState, tol: float = 1e-10, psd_tol: float | None = None) -> list[Violation]:
    """List every invariant whose residual exceeds its tolerance.

    Checked: finiteness, Lambda symmetry, Gamma hermiticity, real trace, and
    (when ``psd_tol`` is given) Gamma - conj(phi) phi >= -psd_tol.
    """
    out: list[Violation] = []
    arrays = (state.phi, state.lam, state.gamma)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        out.append(Violation("finite", float("inf"), 0.0))
        return out
    r = float(np.max(np.abs(state.lam - state.lam.T), initial=0.0))
    if r > tol:
        out.append(Violation("lambda_symmetric", r, tol))
    r = float(np.max(np.abs(state.gamma - state.gamma.conj().T), initial=0.0))
    if r > tol:
        out.append(Violation("gamma_hermitian", r, tol))
    r = abs(kernel_trace(state.grid, state.gamma).imag)
    if r > tol:
        out.append(Violation("trace_real", r, tol))
    if psd_tol is not None:
        m = psd_margin(state)
        if m < -psd_tol:
            out.append(Violation("gamma_minus_phiphi_psd", -m, psd_tol))
    return out


def psd_margin(state: HFBState) -> float:
    """Smallest eigenvalue of the operator Gamma - |phi_bar><phi|."""
    g = state.grid
    m = (state.gamma - np.outer(state.phi.conj(), state.phi)) * g.dV
    m = 0.5 * (m + m.conj().T)
    return float(np.linalg.eigvalsh(m)[0])


def gradient_sq(grid: Grid, f: np.ndarray, axes: str = "x") -> float:
    """int |grad f|^2 over the given variable(s) by spectral differentiation (Parseval)."""
    ksq = grid.ksq
    if axes == "x":
        fh = grid.fft(f, "x")
        return float(np.sum(ksq * np.abs(fh) ** 2) * grid.dV / grid.size)
    fh = grid.fft(f, "xy")
    if axes == "x1":
        w = ksq[:, None]
    elif axes == "y":
        w = ksq[None, :]
    else:
        raise ValueError(axes)
    return float(np.sum(w * np.abs(fh) ** 2) * grid.dV**2 / grid.size**2)


# ----------------------------------------------------------------------------
# initial-data recipes

def _periodic_dist2(grid: Grid, x: np.ndarray, c) -> np.ndarray:
    d = (x - np.asarray(c, dtype=float) + grid.L / 2) % grid.L - grid.L / 2
    return np.sum(d**2, axis=-1)


def phi_profile(grid: Grid, name: str = "gaussian", **p) -> np.ndarray:
    """Named condensate profiles, L^2-normalized.

    gaussian: center, width, momentum (integer mode vector)
    plane_waves: modes (list of integer vectors), amplitudes
    zero: identically zero
    """
    x = grid.points
    if name == "zero":
        return np.zeros(grid.size, dtype=complex)
    if name == "gaussian":
        center = np.broadcast_to(p.get("center", grid.L / 2), (grid.d,))
        width = float(p.get("width", 0.25))
        mom = np.broadcast_to(np.asarray(p.get("momentum", 0), dtype=float), (grid.d,))
        f = np.exp(-_periodic_dist2(grid, x, center) / (2 * width**2)).astype(complex)
        f *= np.exp(1j * (2 * np.pi / grid.L) * (x @ mom))
    elif name == "plane_waves":
        modes = np.atleast_2d(np.asarray(p.get("modes", [[0] * grid.d]), dtype=float))
        amps = np.asarray(p.get("amplitudes", np.ones(len(modes))), dtype=complex)
        f = np.exp(1j * (2 * np.pi / grid.L) * (x @ modes.T)) @ amps
    else:
        raise ValueError(f"unknown phi profile {name!r}")
    nrm = np.sqrt(np.sum(np.abs(f) ** 2) * grid.dV)
    return f / nrm


def k_profile(grid: Grid, name: str = "zero", **p) -> np.ndarray:
    """Named symmetric pair-excitation kernels.

    zero: k = 0
    rank1: sigma * f(x) f(y) with f a normalized real Gaussian (center, width)
    gaussian: amplitude * exp(-|x-y|^2/(2 s^2)) * envelope around a center, times exp(i phase)
    """
    x = grid.points
    if name == "zero":
        return np.zeros((grid.size, grid.size), dtype=complex)
    center = np.broadcast_to(p.get("center", grid.L / 2), (grid.d,))
    if name == "rank1":
        f = phi_profile(grid, "gaussian", center=center, width=p.get("width", 0.25)).real
        return float(p.get("sigma", 0.5)) * np.outer(f, f).astype(complex)
    if name == "gaussian":
        amp = float(p.get("amplitude", 0.8))
        s = float(p.get("width", 0.15))
        env = float(p.get("envelope", 0.3))
        phase = float(p.get("phase", 0.3))
        dxy = (x[:, None, :] - x[None, :, :] + grid.L / 2) % grid.L - grid.L / 2
        rel = np.sum(dxy**2, axis=-1)
        e1 = np.exp(-_periodic_dist2(grid, x, center) / (2 * env**2))
        k = amp * np.exp(-rel / (2 * s**2)) * np.outer(e1, e1) * np.exp(1j * phase)
        return 0.5 * (k + k.T)
    raise ValueError(f"unknown k profile {name!r}")


def build_initial_state(
    grid: Grid,
    spec: PotentialSpec,
    phi: dict | None = None,
    k: dict | None = None,
    depth: int = 8,
    normalize: str = "phi",
) -> HFBState:
    """Instantiate a recipe.  normalize='trace' rescales phi so that tr Gamma = 1."""
    phi = dict(phi or {"name": "gaussian"})
    k = dict(k or {"name": "zero"})
    f = phi_profile(grid, phi.pop("name"), **phi)
    kk = k_profile(grid, k.pop("name"), **k)
    state = from_pair_excitation(grid, spec, f, kk, depth)
    if normalize == "trace":
        pair = kernel_trace(grid, state.gamma).real - 1.0
        if pair >= 1.0:
            raise ValueError("pair part alone exceeds unit trace; cannot normalize by rescaling phi")
        state = from_pair_excitation(grid, spec, f * np.sqrt(1.0 - pair), kk, depth)
    elif normalize != "phi":
        raise ValueError(f"normalize must be 'phi' or 'trace', got {normalize!r}")
    return state

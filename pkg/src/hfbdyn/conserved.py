"""Particle number and energy functionals."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .lattice import Grid, kernel_trace
from .rhs import Interaction
from .state import HFBState

__all__ = [
    "HermiticityWarning",
    "ConservedReport",
    "particle_number",
    "energy",
    "kinetic_trace",
    "energy_integrals",
    "FermiConserved",
    "fermi_conserved",
    "fermi_diag_integral",
]

# Weights of (kinetic, pair, exchange, direct, condensate) in the conserved energy,
# and in the alternative normalization that agrees with it on coherent states.
ENERGY_WEIGHTS = (1.0, 0.5, 0.5, 0.5, -1.0)
PRINTED_WEIGHTS = (1.0, 0.5, 0.25, 0.25, -0.5)
TERM_NAMES = ("kinetic", "pair", "exchange", "direct", "condensate")


class HermiticityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ConservedReport:
    t: float
    mass: float
    energy: float
    energy_terms: dict = field(default_factory=dict)
    energy_printed: float = float("nan")
    mass_imag: float = 0.0

    def row(self) -> dict:
        out = {"t": self.t, "mass": self.mass, "mass_imag": self.mass_imag, "energy": self.energy,
               "energy_printed": self.energy_printed}
        out.update({f"e_{k}": v for k, v in self.energy_terms.items()})
        return out


def particle_number(state: HFBState, tol: float = 1e-8) -> float:
    """M = tr Gamma; warns when the imaginary part exceeds tol."""
    tr = kernel_trace(state.grid, state.gamma)
    if abs(tr.imag) > tol:
        warnings.warn(f"tr Gamma has imaginary part {tr.imag:.3e}", HermiticityWarning)
    return float(tr.real)


def kinetic_trace(grid: Grid, gamma: np.ndarray) -> float:
    """tr(grad_1 . grad_2 Gamma), evaluated as tr(-Lap_1 Gamma) in Fourier space.

    On the trace the second frequency is minus the first, so the weight
    xi . (-eta) becomes |xi|^2 for every mode, the unpaired Nyquist mode included.
    """
    g1 = grid.ifft(grid.ksq[:, None] * grid.fft(gamma, "x1"), "x1")
    return float(np.real(np.trace(g1)) * grid.dV)


def energy_integrals(state: HFBState, it: Interaction) -> dict:
    """Unweighted integrals entering the energy."""
    g, dV = state.grid, state.grid.dV
    V = it.matrix
    rho = np.real(np.diagonal(state.gamma))
    dens = np.abs(state.phi) ** 2
    return {
        "kinetic": kinetic_trace(g, state.gamma),
        "pair": float(np.sum(V * np.abs(state.lam) ** 2) * dV * dV),
        "exchange": float(np.sum(V * np.abs(state.gamma) ** 2) * dV * dV),
        "direct": float(rho @ V @ rho * dV * dV),
        "condensate": float(dens @ V @ dens * dV * dV),
    }


def energy(state: HFBState, it: Interaction | None = None) -> ConservedReport:
    """Conserved energy together with its five summands.

    E = tr(-Lap Gamma) + 1/2 int v|Lambda|^2 + 1/2 int v|Gamma|^2
        + 1/2 int v Gamma(x1,x1) Gamma(x2,x2) - int v |phi|^2 |phi|^2.
    ``energy_printed`` uses weights (1, 1/2, 1/4, 1/4, -1/2); both agree on coherent states.
    """
    if it is None:
        it = Interaction.from_spec(state.spec, state.grid)
    raw = energy_integrals(state, it)
    terms = {k: w * raw[k] for k, w in zip(TERM_NAMES, ENERGY_WEIGHTS)}
    printed = sum(w * raw[k] for k, w in zip(TERM_NAMES, PRINTED_WEIGHTS))
    tr = kernel_trace(state.grid, state.gamma)
    return ConservedReport(
        t=state.t,
        mass=float(tr.real),
        energy=float(sum(terms.values())),
        energy_terms=terms,
        energy_printed=float(printed),
        mass_imag=float(tr.imag),
    )


class FermiConserved(NamedTuple):
    number: float  # (1/2) tr omega
    energy: float


def fermi_conserved(grid: Grid, omega: np.ndarray, psi: np.ndarray, v) -> FermiConserved:
    """Number (1/2) tr omega and energy

    E = 1/2 tr(-Lap omega) + 1/4 int v |psi|^2 + 1/4 int v (omega(x1,x1) omega(x2,x2) - |omega|^2).
    The plain diagonal integral int omega(x, x) dx is twice the number and is
    available as ``fermi_diag_integral``.
    """
    it = v if isinstance(v, Interaction) else Interaction(grid, np.asarray(v, dtype=float))
    dV = grid.dV
    V = it.matrix
    rho = np.real(np.diagonal(omega))
    kin = kinetic_trace(grid, omega)
    e = (
        0.5 * kin
        + 0.25 * np.sum(V * np.abs(psi) ** 2) * dV * dV
        + 0.25 * (rho @ V @ rho - np.sum(V * np.abs(omega) ** 2)) * dV * dV
    )
    return FermiConserved(0.5 * float(np.real(np.trace(omega)) * dV), float(e))


def fermi_diag_integral(grid: Grid, omega: np.ndarray) -> float:
    return float(np.real(np.trace(omega)) * grid.dV)

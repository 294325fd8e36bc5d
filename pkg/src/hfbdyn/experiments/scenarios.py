"""Named initial-data recipes and seeded random states."""
from __future__ import annotations

import copy

import numpy as np
from scipy.linalg import expm

from ..lattice import Grid, make_grid
from ..potentials import PotentialSpec, check_resolved
from ..state import HFBState, build_initial_state, from_pair_excitation, operator_norm

__all__ = ["STANDARD_SCENARIO", "SWEEP_SCENARIO", "scenario", "instantiate", "random_state", "random_symmetric_kernel",
           "fermi_state"]

# Moving coherent bump with a localized pair excitation, normalized to tr Gamma = 1.
STANDARD_SCENARIO = {
    "grid": {"d": 1, "n": 32, "L": 2.0},
    "potential": {"beta": 0.8, "N": 64, "profile": "bump", "amplitude": 1.0},
    "phi": {"name": "gaussian", "center": 1.0, "width": 0.3, "momentum": 2},
    "k": {"name": "gaussian", "amplitude": 0.8, "width": 0.15, "envelope": 0.3, "center": 1.0},
    "depth": 8,
    "normalize": "trace",
}

# Same recipe on a grid fine enough to resolve N = 512 at beta = 0.8.
SWEEP_SCENARIO = copy.deepcopy(STANDARD_SCENARIO)
SWEEP_SCENARIO["grid"] = {"d": 1, "n": 128, "L": 2.0}
SWEEP_SCENARIO["potential"]["N"] = [16, 32, 64, 128, 256, 512]

SCENARIOS = {"standard": STANDARD_SCENARIO, "sweep": SWEEP_SCENARIO}


def scenario(name: str = "standard") -> dict:
    """Deep copy of a named recipe."""
    try:
        return copy.deepcopy(SCENARIOS[name])
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


def instantiate(recipe: dict, bigN: float | None = None) -> HFBState:
    """Build the initial state of a recipe (optionally overriding N)."""
    g = recipe["grid"]
    grid = make_grid(int(g["d"]), int(g["n"]), float(g["L"]))
    pot = recipe["potential"]
    N = pot["N"] if bigN is None else bigN
    if isinstance(N, (list, tuple)):
        raise ValueError("recipe holds an N-list; pass bigN explicitly")
    spec = PotentialSpec(float(pot["beta"]), float(N), pot.get("profile", "bump"), float(pot.get("amplitude", 1.0)),
                         pot.get("table"))
    check_resolved(spec, grid)
    return build_initial_state(grid, spec, recipe.get("phi"), recipe.get("k"), int(recipe.get("depth", 8)),
                               recipe.get("normalize", "phi"))


def _smooth_random_field(rng: np.random.Generator, grid: Grid, decay: float = 2.0) -> np.ndarray:
    c = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    c *= (1.0 + grid.ksq) ** (-decay / 2)
    return grid.ifft(c, "x") * grid.size


def random_symmetric_kernel(rng: np.random.Generator, grid: Grid, op_norm: float = 0.5, decay: float = 2.0):
    """Symmetric k(x, y) = k(y, x) with decaying random Fourier coefficients and prescribed operator norm."""
    c = rng.standard_normal((grid.size, grid.size)) + 1j * rng.standard_normal((grid.size, grid.size))
    w = (1.0 + grid.ksq) ** (-decay / 2)
    c *= w[:, None] * w[None, :]
    k = grid.ifft(c, "xy") * grid.size**2
    k = 0.5 * (k + k.T)
    return k * (op_norm / operator_norm(grid, k))


def random_state(
    rng: np.random.Generator, grid: Grid, spec: PotentialSpec, k_norm: float = 0.5, depth: int = 10
) -> HFBState:
    """Admissible state from a random smooth phi (unit L^2) and random symmetric k."""
    phi = _smooth_random_field(rng, grid)
    phi /= np.sqrt(np.sum(np.abs(phi) ** 2) * grid.dV)
    k = random_symmetric_kernel(rng, grid, k_norm)
    return from_pair_excitation(grid, spec, phi, k, depth)


def fermi_state(rng: np.random.Generator, grid: Grid, occupied: int = 2, strength: float = 0.3, modes: int = 4):
    """Constrained (omega, psi) from a Bogoliubov rotation of a Slater projection.

    The generalized density R = [[G, A], [A*, 1 - conj(G)]] of a quasi-free
    state is a projection.  Starting from G = projection onto the lowest
    plane waves and A = 0, conjugation by U = exp(iK), with K Hermitian of
    Bogoliubov form [[h, a], [a*, -conj(h)]] (a antisymmetric), keeps R a
    projection.  Kernels are omega = 2 G / dV and psi = 2 A / dV.
    """
    n = grid.size
    order = np.argsort(grid.ksq, kind="stable")
    x = grid.points
    basis = np.exp(1j * x @ grid.kvec.reshape(grid.d, n)[:, order[: max(occupied, modes)]]) / np.sqrt(n)
    occ = basis[:, :occupied]
    G = occ @ occ.conj().T
    R = np.zeros((2 * n, 2 * n), complex)
    R[:n, :n] = G
    R[n:, n:] = np.eye(n) - G.conj()
    span = basis[:, :modes]
    h = rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))
    h = span @ (0.5 * (h + h.conj().T)) @ span.conj().T
    a = rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))
    a = span @ (0.5 * (a - a.T)) @ span.T
    K = np.block([[h, a], [a.conj().T, -h.conj()]])
    K *= strength / np.linalg.norm(K, 2)
    U = expm(1j * K)
    Rp = U @ R @ U.conj().T
    G, A = Rp[:n, :n], Rp[:n, n:]
    return 2 * G / grid.dV, 2 * A / grid.dV

"""Pass/fail ledger pairing each fast routine with an independent reference."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..conserved import kinetic_trace
from ..integrator import SchemeConfig, evolve, linear_propagator
from ..lattice import delta_kernel, kernel_compose, make_grid
from ..oracles import loop_compose, loop_conv, loop_fermi_rhs, loop_rhs, loop_second_derivative
from ..potentials import PotentialSpec, max_admissible_N, sample_vN
from ..rhs import Interaction, fermi_rhs, rhs_bracket, rhs_direct
from ..state import HFBState, from_pair_excitation, gradient_sq, k_profile, phi_profile, psd_margin, sh_ch_series
from .scenarios import STANDARD_SCENARIO, fermi_state, instantiate, random_state, random_symmetric_kernel

__all__ = ["OracleResult", "oracle_suite", "relative_residual", "free_gaussian", "TOLERANCES"]

TOLERANCES = {
    "rhs_bracket_vs_direct": 1e-11,
    "rhs_loop_vs_direct": 1e-11,
    "compose_loop": 1e-12,
    "conv_loop": 1e-12,
    "laplacian_loop": 1e-10,
    "fermi_rhs_loop": 1e-11,
    "rank1_sh_ch": 1e-12,
    "rank1_gamma_trace": 1e-12,
    "ch_ch_minus_sh_sh": 1e-10,
    "psi_double_angle": 1e-10,
    "kinetic_decomposition": 1e-9,
    "psd_margin": 1e-9,
    "free_gaussian": 1e-10,
    "strang_vs_rk4": 1e-5,
}


@dataclass(frozen=True)
class OracleResult:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def row(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tol": self.tol, "passed": self.passed}


def relative_residual(a, b) -> float:
    """max over components of ||a_i - b_i|| / ||b_i|| (absolute where b_i = 0)."""
    worst = 0.0
    for x, y in zip(a, b):
        x, y = np.asarray(x), np.asarray(y)
        ref = float(np.linalg.norm(y))
        diff = float(np.linalg.norm(x - y))
        worst = max(worst, diff / ref if ref > 0 else diff)
    return worst


def free_gaussian(grid, t: float, center: float, width: float, images: int | None = None) -> np.ndarray:
    """Periodized solution of d/dt phi = i phi'' from exp(-(x-c)^2 / (2 width^2)), d = 1.

    By default enough periodic images are summed to cover ten standard
    deviations of the spreading packet.
    """
    x = grid.points[:, 0]
    s2 = width**2 + 2j * t
    if images is None:
        images = max(3, math.ceil(10 * abs(s2) / (width * grid.L)) + 1)
    out = np.zeros(grid.size, complex)
    for m in range(-images, images + 1):
        out += width / np.sqrt(s2) * np.exp(-((x - center + m * grid.L) ** 2) / (2 * s2))
    return out


def _random_potential(rng: np.random.Generator, grid) -> PotentialSpec:
    """Random bump potential in the resolved regime of the grid."""
    beta = float(rng.uniform(0.2, 0.6))
    cap = min(32.0, math.floor(max_admissible_N(beta, grid)))
    return PotentialSpec(beta, float(rng.integers(2, int(cap) + 1)), "bump", float(rng.uniform(0.5, 2)))


def oracle_suite(
    seed: int = 0,
    n: int = 16,
    states: int = 10,
    overrides: dict[str, Callable] | None = None,
) -> list[OracleResult]:
    """Run every oracle pairing at d = 1 and return one result per pairing.

    ``overrides`` replaces the routine under test by name ('rhs_direct',
    'rhs_bracket', 'fermi_rhs'); the references are never replaced.
    """
    fns = {"rhs_direct": rhs_direct, "rhs_bracket": rhs_bracket, "fermi_rhs": fermi_rhs}
    fns.update(overrides or {})
    rng = np.random.default_rng(seed)
    grid = make_grid(1, n, 2 * np.pi)
    out: list[OracleResult] = []

    def add(name, residual):
        out.append(OracleResult(name, float(residual), TOLERANCES[name]))

    # right-hand sides on random admissible states
    r_br = r_loop = 0.0
    for _ in range(states):
        spec = _random_potential(rng, grid)
        st = random_state(rng, grid, spec)
        v = sample_vN(spec, grid)
        ref = fns["rhs_direct"](st, v)
        r_br = max(r_br, relative_residual(fns["rhs_bracket"](st, v), ref))
        r_loop = max(r_loop, relative_residual(ref, loop_rhs(st, v)))
    add("rhs_bracket_vs_direct", r_br)
    add("rhs_loop_vs_direct", r_loop)

    # kernel algebra
    A = random_symmetric_kernel(rng, grid, 1.0)
    B = random_symmetric_kernel(rng, grid, 1.0) + 1j * np.eye(grid.size)
    add("compose_loop", relative_residual([kernel_compose(grid, A, B)], [loop_compose(grid, A, B)]))
    spec = _random_potential(rng, grid)
    v = sample_vN(spec, grid)
    f = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    add("conv_loop", relative_residual([Interaction(grid, v).conv(f)], [loop_conv(grid, v, f)]))
    lap = grid.ifft(-grid.ksq * grid.fft(f, "x"), "x")
    add("laplacian_loop", relative_residual([lap], [loop_second_derivative(grid, f)]))

    # Fermionic right-hand side
    om, ps = fermi_state(rng, grid)
    add("fermi_rhs_loop", relative_residual(fns["fermi_rhs"](grid, om, ps, v), loop_fermi_rhs(grid, om, ps, v)))

    # rank-1 closed forms: k = sigma f f with f real and unit norm
    sigma = 0.7
    kr = k_profile(grid, "rank1", sigma=sigma, width=0.6, center=math.pi)
    fr = phi_profile(grid, "gaussian", center=math.pi, width=0.6).real
    P = np.outer(fr, fr)
    u, c = sh_ch_series(grid, kr, depth=10)
    add("rank1_sh_ch", relative_residual([u, c.dense], [math.sinh(sigma) * P, (math.cosh(sigma) - 1) * P]))
    phi0 = phi_profile(grid, "gaussian", center=1.0, width=0.5)
    st = from_pair_excitation(grid, spec, phi0, kr, depth=10)
    tr = float(np.real(np.trace(st.gamma)) * grid.dV)
    add("rank1_gamma_trace", abs(tr - (1 + math.sinh(sigma) ** 2 / spec.bigN)))

    # closure identities on a random kernel
    k = random_symmetric_kernel(rng, grid, 0.8)
    u, c = sh_ch_series(grid, k, depth=12)
    cc = c.compose(c, grid).to_dense(grid) - kernel_compose(grid, u.conj(), u)
    add("ch_ch_minus_sh_sh", float(np.max(np.abs(cc - delta_kernel(grid)))) * grid.dV)
    u2, _ = sh_ch_series(grid, 2 * k, depth=14)
    add("psi_double_angle", relative_residual([2 * (u + kernel_compose(grid, u, c.dense))], [u2]))
    st = from_pair_excitation(grid, spec, phi0, k, depth=12)
    kin = gradient_sq(grid, phi0) + (gradient_sq(grid, u, "x1") + gradient_sq(grid, u, "y")) / (2 * spec.bigN)
    add("kinetic_decomposition", abs(kinetic_trace(grid, st.gamma) - kin) / kin)
    add("psd_margin", max(0.0, -psd_margin(st)))

    # free evolution of a Gaussian against the closed form
    g64 = make_grid(1, 64, 2 * np.pi)
    c0, w0, t1 = 2.0, 0.4, 0.37
    p0 = free_gaussian(g64, 0.0, c0, w0)
    s0 = HFBState(g64, PotentialSpec(0.0, 1.0, "zero"), 0.0, p0, np.outer(p0, p0), np.outer(p0.conj(), p0))
    s1 = linear_propagator(s0, t1)
    exact = free_gaussian(g64, t1, c0, w0)
    add("free_gaussian", relative_residual(
        [s1.phi, s1.lam, s1.gamma], [exact, np.outer(exact, exact), np.outer(exact.conj(), exact)]
    ))

    # cross-scheme integration on the standard scenario
    s = instantiate(STANDARD_SCENARIO)
    a = evolve(s, SchemeConfig("strang", 1e-3, 0.02), record_conserved=False).final_state
    b = evolve(s, SchemeConfig("rk4", 1e-3, 0.02), record_conserved=False).final_state
    add("strang_vs_rk4", relative_residual([a.phi, a.lam, a.gamma], [b.phi, b.lam, b.gamma]))
    return out

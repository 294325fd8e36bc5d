"""Time stepping: Strang splitting with exact linear and potential flows, and
an integrating-factor RK4 reference scheme."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .conserved import energy
from .lattice import Grid, kernel_diag, kernel_sym_diag
from .rhs import Interaction, rhs_direct
from .state import HFBState
from .trace import SpaceTimeTrace, default_offsets

__all__ = [
    "SchemeConfig",
    "EvolutionAborted",
    "StepRejected",
    "linear_propagator",
    "potential_flow",
    "nonlinear_field",
    "step_strang",
    "step_rk4",
    "evolve",
    "evolve_fermi",
]

log = logging.getLogger(__name__)

SYMMETRY_REJECT = 1e-6


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "strang"
    dt: float = 1e-3
    T: float = 0.1
    store_every: int = 1
    offsets: tuple | None = None
    nonlinear: bool = True

    def __post_init__(self):
        if self.scheme not in ("strang", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt > 0 violated")
        if self.T < 0:
            raise ValueError("T >= 0 violated")
        if self.store_every < 1:
            raise ValueError("store_every >= 1 violated")
        m = self.T / self.dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ValueError(f"T = {self.T} is not an integer multiple of dt = {self.dt}")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


class EvolutionAborted(RuntimeError):
    """Non-finite values appeared; carries the last good state and the partial trace."""

    def __init__(self, msg: str, state: HFBState, trace: SpaceTimeTrace | None = None):
        super().__init__(msg)
        self.state = state
        self.trace = trace


class StepRejected(EvolutionAborted):
    pass


@lru_cache(maxsize=64)
def _phases(grid: Grid, h: float):
    k2 = grid.ksq
    e = np.exp(-1j * h * k2)
    return e, np.outer(e, e), np.exp(1j * h * (k2[:, None] - k2[None, :]))


def linear_propagator(state: HFBState, dt: float) -> HFBState:
    """Exact free flow: phi under e^{i dt Lap}, Lambda under e^{i dt (Lap_1 + Lap_2)},
    Gamma_bar under e^{i dt (Lap_1 - Lap_2)}."""
    g = state.grid
    e1, e2, eg = _phases(g, float(dt))
    phi = g.ifft(e1 * g.fft(state.phi, "x"), "x")
    lam = g.ifft(e2 * g.fft(state.lam, "xy"), "xy")
    gam = g.ifft(eg * g.fft(state.gamma, "xy"), "xy")
    return state.replace(phi=phi, lam=lam, gamma=gam, t=state.t + dt)


def potential_flow(state: HFBState, dt: float, it: Interaction) -> HFBState:
    """Exact flow of the pointwise term: Lambda <- exp(-i dt v_N(x-y)/N) Lambda."""
    return state.replace(lam=np.exp(-1j * dt * it.matrix / state.spec.bigN) * state.lam)


def nonlinear_field(state: HFBState, it: Interaction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives of (phi, Lambda, Gamma) from the nonlinear terms alone."""
    r = rhs_direct(state, it)
    return 1j * r.dphi, 1j * r.dlambda, np.conj(1j * r.dgamma_bar)


def _hartree_multipliers(state: HFBState, it: Interaction):
    # diagonal part of the nonlinear field: the v_N * diag(Gamma) potentials
    W = it.conv(np.diagonal(state.gamma)).real
    return -1j * W, -1j * (W[:, None] + W[None, :]), 1j * (W[:, None] - W[None, :])


def _axpy(state: HFBState, fields, h: float) -> HFBState:
    return state.replace(phi=state.phi + h * fields[0], lam=state.lam + h * fields[1], gamma=state.gamma + h * fields[2])


def _nonlinear_substep(state: HFBState, h: float, it: Interaction) -> HFBState:
    """Exponential midpoint: the diagonal Hartree multipliers are frozen at the
    midpoint and integrated exactly; the remaining terms use the midpoint rule."""
    arrays = (state.phi, state.lam, state.gamma)

    def rest(s, mult):
        f = nonlinear_field(s, it)
        return [fi - mi * ai for fi, mi, ai in zip(f, mult, (s.phi, s.lam, s.gamma))]

    m0 = _hartree_multipliers(state, it)
    r0 = rest(state, m0)
    mid = [np.exp(0.5 * h * m) * a + 0.5 * h * r for m, a, r in zip(m0, arrays, r0)]
    smid = state.replace(phi=mid[0], lam=mid[1], gamma=mid[2])
    mm = _hartree_multipliers(smid, it)
    rm = rest(smid, mm)
    new = [np.exp(h * m) * a + h * np.exp(0.5 * h * m) * r for m, a, r in zip(mm, arrays, rm)]
    return state.replace(phi=new[0], lam=new[1], gamma=new[2])


def step_strang(state: HFBState, dt: float, it: Interaction, nonlinear: bool = True) -> HFBState:
    """half linear, half potential, full nonlinear, half potential, half linear."""
    s = linear_propagator(state, dt / 2)
    s = potential_flow(s, dt / 2, it)
    if nonlinear:
        s = _nonlinear_substep(s, dt, it)
    s = potential_flow(s, dt / 2, it)
    s = linear_propagator(s, dt / 2)
    return s


def step_rk4(state: HFBState, dt: float, it: Interaction, nonlinear: bool = True) -> HFBState:
    """Classical RK4 in the interaction picture of the free flow (Lawson scheme).

    The vector field is the potential term plus the nonlinear terms; the free
    part is carried exactly by the spectral propagator.
    """
    bigN = state.spec.bigN
    V = it.matrix

    def field(s: HFBState):
        zero = np.zeros_like
        f = nonlinear_field(s, it) if nonlinear else (zero(s.phi), zero(s.lam), zero(s.gamma))
        return f[0], f[1] - 1j * V / bigN * s.lam, f[2]

    def flow(fields, h):
        tmp = HFBState(state.grid, state.spec, 0.0, *fields)
        out = linear_propagator(tmp, h)
        return out.phi, out.lam, out.gamma

    u0 = (state.phi, state.lam, state.gamma)
    h = dt

    def at(fields, t):
        return HFBState(state.grid, state.spec, t, *fields)

    k1 = field(state)
    a = flow([u + h / 2 * k for u, k in zip(u0, k1)], h / 2)
    k2 = field(at(a, state.t + h / 2))
    eu = flow(u0, h / 2)
    b = [u + h / 2 * k for u, k in zip(eu, k2)]
    k3 = field(at(b, state.t + h / 2))
    c = [u + h * k for u, k in zip(flow(u0, h), flow(k3, h / 2))]
    k4 = field(at(c, state.t + h))
    ek1 = flow(k1, h)
    ek23 = flow([x + y for x, y in zip(k2, k3)], h / 2)
    eu0 = flow(u0, h)
    new = [e + h / 6 * (a1 + 2 * a23 + a4) for e, a1, a23, a4 in zip(eu0, ek1, ek23, k4)]
    return state.replace(phi=new[0], lam=new[1], gamma=new[2], t=state.t + dt)


STEPPERS: dict[str, Callable] = {"strang": step_strang, "rk4": step_rk4}


def evolve(
    state: HFBState,
    scheme: SchemeConfig,
    it: Interaction | None = None,
    sinks: Iterable[Callable[[int, HFBState], None]] = (),
    record_conserved: bool = True,
) -> SpaceTimeTrace:
    """Fixed-step march recording phi, diagonal slices, strided kernels and conserved quantities."""
    grid = state.grid
    if it is None:
        it = Interaction.from_spec(state.spec, grid)
    steps = scheme.steps
    offsets = default_offsets(grid) if scheme.offsets is None else np.atleast_2d(np.asarray(scheme.offsets, dtype=int))
    if offsets.shape[1] != grid.d:
        offsets = offsets.reshape(-1, grid.d)
    nsnap = steps // scheme.store_every + 1
    N = grid.size
    phi = np.empty((steps + 1, N), complex)
    lam_diag = np.empty((len(offsets), steps + 1, N), complex)
    gam_diag = np.empty_like(lam_diag)
    lam_sym = np.empty_like(lam_diag)
    lam_snaps = np.empty((nsnap, N, N), complex)
    gam_snaps = np.empty((nsnap, N, N), complex)
    cons: dict[str, list] = {}
    stepper = STEPPERS[scheme.scheme]
    sinks = list(sinks)
    t0 = state.t

    def record(j: int, s: HFBState):
        phi[j] = s.phi
        for i, w in enumerate(offsets):
            lam_diag[i, j] = kernel_diag(grid, s.lam, w)
            gam_diag[i, j] = kernel_diag(grid, s.gamma, w)
            lam_sym[i, j] = kernel_sym_diag(grid, s.lam, w)
        if j % scheme.store_every == 0:
            lam_snaps[j // scheme.store_every] = s.lam
            gam_snaps[j // scheme.store_every] = s.gamma
        if record_conserved:
            for k, v in energy(s, it).row().items():
                cons.setdefault(k, []).append(v)
        for sink in sinks:
            sink(j, s)

    def build(upto: int) -> SpaceTimeTrace:
        ns = upto // scheme.store_every + 1
        return SpaceTimeTrace(
            grid=grid,
            spec=state.spec,
            dt=scheme.dt,
            times=t0 + scheme.dt * np.arange(upto + 1),
            offsets=offsets,
            phi=phi[: upto + 1],
            lam_diag=lam_diag[:, : upto + 1],
            gam_diag=gam_diag[:, : upto + 1],
            lam_sym_diag=lam_sym[:, : upto + 1],
            store_every=scheme.store_every,
            snap_index=np.arange(ns) * scheme.store_every,
            lam_snaps=lam_snaps[:ns],
            gam_snaps=gam_snaps[:ns],
            conserved={k: np.asarray(v) for k, v in cons.items()},
        )

    record(0, state)
    s = state
    for j in range(1, steps + 1):
        new = stepper(s, scheme.dt, it, scheme.nonlinear)
        new = new.replace(t=t0 + j * scheme.dt)
        if not (np.all(np.isfinite(new.phi)) and np.all(np.isfinite(new.lam)) and np.all(np.isfinite(new.gamma))):
            raise EvolutionAborted(f"non-finite values at step {j}", s, build(j - 1))
        asym = float(np.max(np.abs(new.lam - new.lam.T)))
        if asym > SYMMETRY_REJECT:
            raise StepRejected(f"Lambda symmetry residual {asym:.2e} at step {j}", s, build(j - 1))
        s = new
        record(j, s)
    log.debug("evolved %d steps of %s to t=%g", steps, scheme.scheme, s.t)
    trace = build(steps)
    trace.final_state = s
    return trace


def evolve_fermi(grid: Grid, omega: np.ndarray, psi: np.ndarray, v, dt: float, T: float):
    """Integrating-factor RK4 for the aligned-Fermion system.

    Returns the final (omega, psi) and per-step arrays of number, energy and
    constraint residual.
    """
    from .conserved import fermi_conserved
    from .rhs import fermi_constraint, fermi_rhs

    it = v if isinstance(v, Interaction) else Interaction(grid, np.asarray(v, dtype=float))
    k2 = grid.ksq
    steps = int(round(T / dt))

    def free(om, ps, h):
        # psi: d/dt = -i(Lap_1 + Lap_2) psi ; omega: d/dt = i(-Lap_1 + Lap_2) omega
        ep = np.exp(1j * h * (k2[:, None] + k2[None, :]))
        eo = np.exp(1j * h * (k2[:, None] - k2[None, :]))
        return grid.ifft(eo * grid.fft(om, "xy"), "xy"), grid.ifft(ep * grid.fft(ps, "xy"), "xy")

    def field(om, ps):
        # full derivative minus the free part
        dom, dps = fermi_rhs(grid, om, ps, it, check_tol=None)
        fo, fp = free_rate(om, ps)
        return dom - fo, dps - fp

    def free_rate(om, ps):
        ohat = grid.fft(om, "xy")
        phat = grid.fft(ps, "xy")
        ro = grid.ifft(1j * (k2[:, None] - k2[None, :]) * ohat, "xy")
        rp = grid.ifft(1j * (k2[:, None] + k2[None, :]) * phat, "xy")
        return ro, rp

    def resid(om, ps):
        return float(np.max(np.abs(fermi_constraint(grid, om, ps))) * grid.dV)

    hist = {"number": [], "energy": [], "constraint": []}

    def rec(om, ps):
        c = fermi_conserved(grid, om, ps, it)
        hist["number"].append(c.number)
        hist["energy"].append(c.energy)
        hist["constraint"].append(resid(om, ps))

    om, ps = omega.astype(complex), psi.astype(complex)
    rec(om, ps)
    h = dt
    for _ in range(steps):
        k1 = field(om, ps)
        a = free(om + h / 2 * k1[0], ps + h / 2 * k1[1], h / 2)
        k2_ = field(*a)
        e = free(om, ps, h / 2)
        k3 = field(e[0] + h / 2 * k2_[0], e[1] + h / 2 * k2_[1])
        f = free(om, ps, h)
        fk3 = free(*k3, h / 2)
        k4 = field(f[0] + h * fk3[0], f[1] + h * fk3[1])
        ek1 = free(*k1, h)
        ek23 = free(k2_[0] + k3[0], k2_[1] + k3[1], h / 2)
        om = f[0] + h / 6 * (ek1[0] + 2 * ek23[0] + k4[0])
        ps = f[1] + h / 6 * (ek1[1] + 2 * ek23[1] + k4[1])
        rec(om, ps)
    return om, ps, {k: np.asarray(v) for k, v in hist.items()}

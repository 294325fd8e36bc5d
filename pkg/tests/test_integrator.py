import numpy as np
import pytest

from hfbdyn.experiments.oracle_suite import free_gaussian
from hfbdyn.experiments.scenarios import STANDARD_SCENARIO, instantiate, random_state
from hfbdyn.integrator import (
    EvolutionAborted,
    SchemeConfig,
    StepRejected,
    evolve,
    linear_propagator,
    potential_flow,
    step_rk4,
    step_strang,
)
from hfbdyn.lattice import kernel_trace, make_grid
from hfbdyn.potentials import PotentialSpec
from hfbdyn.rhs import Interaction
from hfbdyn.state import HFBState

from conftest import rel_err


def coherent(grid, spec, phi):
    return HFBState(grid, spec, 0.0, phi.astype(complex), np.outer(phi, phi), np.outer(phi.conj(), phi))


def distance(a: HFBState, b: HFBState) -> float:
    return rel_err(np.concatenate([a.phi, a.lam.ravel(), a.gamma.ravel()]),
                   np.concatenate([b.phi, b.lam.ravel(), b.gamma.ravel()]))


class TestLinearPropagator:
    @pytest.mark.parametrize("m", [0, 1, -3, 5])
    def test_plane_wave_phase(self, m, grid16, spec16):
        x = grid16.points[:, 0]
        phi = np.exp(1j * m * x)
        t = 0.37
        out = linear_propagator(coherent(grid16, spec16, phi), t)
        assert np.allclose(out.phi, np.exp(-1j * m * m * t) * phi, atol=1e-13)
        assert np.allclose(out.lam, np.exp(-2j * m * m * t) * np.outer(phi, phi), atol=1e-13)
        # Gamma_bar(x1, x2) = phi(x1) conj(phi(x2)) picks up no phase
        assert np.allclose(out.gamma, np.outer(phi.conj(), phi), atol=1e-13)

    def test_unitary(self, rng, grid16, spec16):
        st = random_state(rng, grid16, spec16)
        out = linear_propagator(st, 0.8)
        for a, b in ((st.phi, out.phi), (st.lam, out.lam), (st.gamma, out.gamma)):
            assert np.linalg.norm(b) == pytest.approx(np.linalg.norm(a), rel=1e-13)

    def test_group_property(self, rng, grid16, spec16):
        st = random_state(rng, grid16, spec16)
        a = linear_propagator(linear_propagator(st, 0.2), 0.3)
        b = linear_propagator(st, 0.5)
        assert distance(a, b) < 1e-13

    def test_free_gaussian(self):
        g = make_grid(1, 64, 2 * np.pi)
        p0 = free_gaussian(g, 0.0, 2.0, 0.4)
        out = linear_propagator(coherent(g, PotentialSpec(0.0, 1.0, "zero"), p0), 0.37)
        assert rel_err(out.phi, free_gaussian(g, 0.37, 2.0, 0.4)) < 1e-10


class TestPotentialFlow:
    def test_closed_form(self, rng, grid16, spec16):
        st = random_state(rng, grid16, spec16)
        it = Interaction.from_spec(spec16, grid16)
        out = potential_flow(st, 0.4, it)
        assert np.allclose(out.lam, np.exp(-0.4j * it.matrix / spec16.bigN) * st.lam, atol=0)
        assert out.phi is st.phi and out.gamma is st.gamma

    def test_constant_potential_is_global_phase(self, rng, grid16):
        spec = PotentialSpec(0.0, 4.0, "zero")
        st = random_state(rng, grid16, spec)
        it = Interaction(grid16, np.full(grid16.size, 2.5))
        out = potential_flow(st, 0.3, it)
        assert np.allclose(out.lam, np.exp(-0.3j * 2.5 / 4.0) * st.lam, atol=1e-14)

    def test_half_steps_compose(self, rng, grid16, spec16):
        st = random_state(rng, grid16, spec16)
        it = Interaction.from_spec(spec16, grid16)
        a = potential_flow(potential_flow(st, 0.1, it), 0.1, it)
        assert rel_err(a.lam, potential_flow(st, 0.2, it).lam) < 1e-14


class TestSteppers:
    def test_strang_without_nonlinear_is_linear_flow(self, rng, grid16):
        spec = PotentialSpec(0.0, 4.0, "zero")
        st = random_state(rng, grid16, spec)
        it = Interaction.from_spec(spec, grid16)
        out = step_strang(st, 0.05, it, nonlinear=False)
        assert distance(out, linear_propagator(st, 0.05)) < 1e-13

    def test_rk4_without_nonlinear_and_potential(self, rng, grid16):
        spec = PotentialSpec(0.0, 4.0, "zero")
        st = random_state(rng, grid16, spec)
        it = Interaction.from_spec(spec, grid16)
        out = step_rk4(st, 0.05, it, nonlinear=False)
        assert distance(out, linear_propagator(st, 0.05)) < 1e-13

    def test_zero_steps_returns_initial(self, standard_state):
        tr = evolve(standard_state, SchemeConfig("strang", 1e-3, 0.0))
        assert tr.steps == 0
        assert np.array_equal(tr.final_state.phi, standard_state.phi)
        assert len(tr.times) == 1

    def test_strang_close_to_rk4(self, standard_state):
        a = evolve(standard_state, SchemeConfig("strang", 1e-3, 0.02), record_conserved=False).final_state
        b = evolve(standard_state, SchemeConfig("rk4", 1e-3, 0.02), record_conserved=False).final_state
        assert distance(a, b) < 1e-5

    def test_mass_conserved_over_short_run(self, standard_state):
        tr = evolve(standard_state, SchemeConfig("strang", 1e-3, 0.01))
        m = tr.conserved["mass"]
        assert np.max(np.abs(m - m[0])) < 1e-10
        t = kernel_trace(standard_state.grid, tr.final_state.gamma)
        assert t.real == pytest.approx(m[-1], abs=1e-12)


class TestRichardsonOrder:
    """Observed order from three step sizes on a short window of the standard run."""

    @staticmethod
    def order(scheme, dts, T=0.04):
        s = instantiate(STANDARD_SCENARIO)
        finals = [evolve(s, SchemeConfig(scheme, dt, T), record_conserved=False).final_state for dt in dts]
        return np.log2(distance(finals[0], finals[1]) / distance(finals[1], finals[2]))

    def test_strang_second_order(self):
        assert self.order("strang", [4e-3, 2e-3, 1e-3]) >= 1.9

    def test_rk4_fourth_order(self):
        assert self.order("rk4", [2e-3, 1e-3, 5e-4]) >= 3.8


class TestFailures:
    def test_nan_aborts_with_partial_trace(self, standard_state):
        bad = standard_state.replace(phi=standard_state.phi.copy())
        bad.phi[3] = np.nan
        with pytest.raises(EvolutionAborted) as exc:
            evolve(bad, SchemeConfig("strang", 1e-3, 0.005))
        assert not isinstance(exc.value, StepRejected)
        assert exc.value.trace is not None and exc.value.trace.steps == 0
        assert exc.value.state is bad

    def test_asymmetric_lambda_rejected(self, standard_state):
        n = standard_state.grid.size
        lam = standard_state.lam.copy()
        lam[0, 1] += 1e-3 * n
        bad = standard_state.replace(lam=lam)
        with pytest.raises(StepRejected, match="symmetry"):
            evolve(bad, SchemeConfig("strang", 1e-3, 0.003))

    @pytest.mark.parametrize(
        "kw, match",
        [
            ({"scheme": "euler"}, "unknown scheme"),
            ({"dt": 0.0}, "dt > 0"),
            ({"T": -1.0}, "T >= 0"),
            ({"store_every": 0}, "store_every"),
            ({"dt": 0.003, "T": 0.01}, "integer multiple"),
        ],
    )
    def test_scheme_config_errors(self, kw, match):
        with pytest.raises(ValueError, match=match):
            SchemeConfig(**kw)

    def test_store_every_strides_snapshots(self, standard_state):
        tr = evolve(standard_state, SchemeConfig("strang", 1e-3, 0.006, store_every=3), record_conserved=False)
        assert list(tr.snap_index) == [0, 3, 6]
        assert np.array_equal(tr.lam_snaps[-1], tr.final_state.lam)

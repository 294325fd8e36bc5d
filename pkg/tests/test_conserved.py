import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfbdyn.conserved import (
    HermiticityWarning,
    energy,
    energy_integrals,
    fermi_conserved,
    fermi_diag_integral,
    kinetic_trace,
    particle_number,
)
from hfbdyn.experiments.scenarios import fermi_state, random_state
from hfbdyn.lattice import make_grid
from hfbdyn.potentials import PotentialSpec, sample_vN
from hfbdyn.rhs import Interaction
from hfbdyn.state import HFBState, gradient_sq, phi_profile

# frozen values for the standard scenario at t = 0
E0 = 45.25934153663644
E0_TERMS = {
    "kinetic": 45.01726673184391,
    "pair": 0.2410814925755238,
    "exchange": 0.24104111777655793,
    "direct": 0.24108640219996824,
    "condensate": -0.4811342077595251,
}
E0_PRINTED = 45.25884488052794


def coherent(grid, spec, phi):
    return HFBState(grid, spec, 0.0, phi.astype(complex), np.outer(phi, phi), np.outer(phi.conj(), phi))


class TestCoherent:
    def test_constant_field_closed_form(self):
        """Constant phi of unit mass: E = (1/2) vhat_N(0) / L^d with vhat_N(0) = amp / e."""
        grid = make_grid(1, 32, 2.0)
        spec = PotentialSpec(0.5, 16.0, "bump", 1.7)
        phi = np.full(grid.size, 1 / math.sqrt(grid.L), complex)
        rep = energy(coherent(grid, spec, phi))
        exact = 0.5 * 1.7 * math.exp(-1) / grid.L
        assert rep.energy == pytest.approx(exact, rel=1e-13)
        assert rep.energy_printed == pytest.approx(exact, rel=1e-13)
        assert rep.mass == pytest.approx(1.0, rel=1e-14)

    def test_weightings_agree_on_coherent_states(self, grid16, spec16):
        phi = phi_profile(grid16, "gaussian", center=2.0, width=0.5, momentum=2)
        rep = energy(coherent(grid16, spec16, phi))
        assert rep.energy == pytest.approx(rep.energy_printed, rel=1e-13)
        assert rep.energy_terms["kinetic"] == pytest.approx(gradient_sq(grid16, phi), rel=1e-12)

    def test_doubling_gamma_doubles_mass(self, rng, grid16, spec16):
        s = random_state(rng, grid16, spec16)
        assert particle_number(s.replace(gamma=2 * s.gamma)) == pytest.approx(2 * particle_number(s), rel=1e-14)

    def test_zero_state(self, grid16, spec16):
        n = grid16.size
        s = HFBState(grid16, spec16, 0.0, np.zeros(n, complex), np.zeros((n, n), complex), np.zeros((n, n), complex))
        rep = energy(s)
        assert rep.energy == 0.0 and rep.mass == 0.0


class TestEnergy:
    def test_frozen_standard_value(self, standard_state):
        rep = energy(standard_state)
        assert rep.energy == pytest.approx(E0, rel=1e-12)
        assert rep.energy_printed == pytest.approx(E0_PRINTED, rel=1e-12)
        assert rep.mass == pytest.approx(1.0, abs=1e-13)
        for k, v in E0_TERMS.items():
            assert rep.energy_terms[k] == pytest.approx(v, rel=1e-11)

    def test_terms_sum_to_energy(self, standard_state):
        rep = energy(standard_state)
        assert sum(rep.energy_terms.values()) == pytest.approx(rep.energy, rel=1e-15)

    @pytest.mark.parametrize("seed", range(6))
    def test_nonnegative_for_random_pair_excitations(self, seed, grid16):
        rng = np.random.default_rng(seed)
        spec = PotentialSpec(0.5, 8.0)
        assert energy(random_state(rng, grid16, spec)).energy >= 0

    def test_kinetic_trace_of_plane_wave(self, grid16):
        x = grid16.points[:, 0]
        phi = np.exp(3j * x) / math.sqrt(grid16.L)
        assert kinetic_trace(grid16, np.outer(phi.conj(), phi)) == pytest.approx(9.0, rel=1e-13)

    def test_integrals_scale_with_amplitude(self, rng, grid16, spec16):
        s = random_state(rng, grid16, spec16)
        it = Interaction.from_spec(spec16, grid16)
        a = energy_integrals(s, it)
        b = energy_integrals(s.replace(lam=2 * s.lam, gamma=2 * s.gamma, phi=math.sqrt(2) * s.phi), it)
        for k in a:
            factor = 2 if k == "kinetic" else 4
            assert b[k] == pytest.approx(factor * a[k], rel=1e-12)

    def test_hermiticity_warning(self, rng, grid16, spec16):
        s = random_state(rng, grid16, spec16)
        bad = s.replace(gamma=s.gamma + 1e-3j * np.eye(grid16.size))
        with pytest.warns(HermiticityWarning):
            particle_number(bad)


class TestFermi:
    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_number_of_slater_projection(self, rank):
        grid = make_grid(1, 12, 2 * np.pi)
        rng = np.random.default_rng(rank)
        om, ps = fermi_state(rng, grid, occupied=rank, strength=0.0)
        v = sample_vN(PotentialSpec(0.3, 4.0), grid)
        out = fermi_conserved(grid, om, ps, v)
        assert out.number == pytest.approx(rank, rel=1e-13)
        assert fermi_diag_integral(grid, om) == pytest.approx(2 * rank, rel=1e-13)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.8))
    def test_rotated_states_have_bounded_number(self, seed, strength):
        """Generalized densities are projections, so 0 <= (1/2) tr omega <= number of sites."""
        grid = make_grid(1, 8, 2 * np.pi)
        om, ps = fermi_state(np.random.default_rng(seed), grid, occupied=2, strength=strength)
        v = sample_vN(PotentialSpec(0.3, 4.0), grid)
        out = fermi_conserved(grid, om, ps, v)
        assert math.isfinite(out.energy)
        assert 0 <= out.number <= grid.size

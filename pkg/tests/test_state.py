import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfbdyn.experiments.scenarios import random_state, random_symmetric_kernel
from hfbdyn.integrator import SchemeConfig, evolve
from hfbdyn.lattice import delta_kernel, kernel_compose, kernel_trace, make_grid
from hfbdyn.potentials import PotentialSpec
from hfbdyn.state import (
    AffineKernel,
    build_initial_state,
    from_pair_excitation,
    gradient_sq,
    k_profile,
    operator_norm,
    phi_profile,
    psd_margin,
    sh_ch_series,
    validate,
)
from hfbdyn.conserved import kinetic_trace

from conftest import rel_err


class TestSeries:
    def test_zero_kernel(self, grid16):
        u, c = sh_ch_series(grid16, np.zeros((16, 16)))
        assert np.all(u == 0)
        assert c.scalar == 1.0 and np.all(c.dense == 0)

    @pytest.mark.parametrize("sigma", [0.1, 0.7, 1.5])
    def test_rank_one_closed_form(self, grid16, sigma):
        k = k_profile(grid16, "rank1", sigma=sigma, width=0.6, center=math.pi)
        f = phi_profile(grid16, "gaussian", center=math.pi, width=0.6).real
        P = np.outer(f, f)
        u, c = sh_ch_series(grid16, k, depth=12)
        assert rel_err(u, math.sinh(sigma) * P) < 1e-12
        assert rel_err(c.dense, (math.cosh(sigma) - 1) * P) < 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_ch_ch_minus_sh_sh_is_delta(self, grid16, seed):
        k = random_symmetric_kernel(np.random.default_rng(seed), grid16, 0.6)
        u, c = sh_ch_series(grid16, k, depth=10)
        lhs = c.compose(c, grid16).to_dense(grid16) - kernel_compose(grid16, u.conj(), u)
        assert np.max(np.abs(lhs - delta_kernel(grid16))) * grid16.dV < 1e-10

    def test_depth_difference_below_tail_bound(self, grid16):
        k = random_symmetric_kernel(np.random.default_rng(3), grid16, 0.5)
        p = 6
        u5, _ = sh_ch_series(grid16, k, depth=p)
        u6, _ = sh_ch_series(grid16, k, depth=p + 1)
        nk = operator_norm(grid16, k)
        assert operator_norm(grid16, u6 - u5) <= nk ** (2 * p + 1) / math.factorial(2 * p + 1) + 1e-15

    def test_divergence_guard(self, grid16):
        k = random_symmetric_kernel(np.random.default_rng(0), grid16, 11.0)
        with pytest.raises(ValueError, match="divergence guard"):
            sh_ch_series(grid16, k, depth=40)

    def test_tail_guard(self, grid16):
        k = random_symmetric_kernel(np.random.default_rng(0), grid16, 3.0)
        with pytest.raises(ValueError, match="increase depth"):
            sh_ch_series(grid16, k, depth=3)

    def test_affine_kernel_algebra(self, grid16, rng):
        A = AffineKernel(2.0, rng.standard_normal((16, 16)))
        B = AffineKernel(-1.0, rng.standard_normal((16, 16)))
        dense = kernel_compose(grid16, A.to_dense(grid16), B.to_dense(grid16))
        assert rel_err(A.compose(B, grid16).to_dense(grid16), dense) < 1e-12


class TestPairExcitation:
    def test_coherent_state(self, grid16, spec16):
        phi = phi_profile(grid16, "gaussian", center=2.0, width=0.7)
        s = from_pair_excitation(grid16, spec16, phi, np.zeros((16, 16)))
        np.testing.assert_allclose(s.lam, np.outer(phi, phi), atol=1e-15)
        np.testing.assert_allclose(s.gamma, np.outer(phi.conj(), phi), atol=1e-15)
        assert kernel_trace(grid16, s.gamma).real == pytest.approx(1.0, abs=1e-13)

    def test_rank_one_trace(self, grid16):
        spec = PotentialSpec(0.5, 10.0)
        k = k_profile(grid16, "rank1", sigma=0.8, width=0.5, center=3.0)
        s = from_pair_excitation(grid16, spec, np.zeros(16, complex), k, depth=10)
        assert kernel_trace(grid16, s.gamma).real == pytest.approx(math.sinh(0.8) ** 2 / 10, rel=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_kinetic_decomposition(self, grid16, spec16, seed):
        rng = np.random.default_rng(seed)
        phi = phi_profile(grid16, "gaussian", center=2.0, width=0.7, momentum=1)
        k = random_symmetric_kernel(rng, grid16, 0.7)
        u, _ = sh_ch_series(grid16, k, depth=10)
        s = from_pair_excitation(grid16, spec16, phi, k, depth=10)
        expected = gradient_sq(grid16, phi) + (gradient_sq(grid16, u, "x1") + gradient_sq(grid16, u, "y")) / (
            2 * spec16.bigN
        )
        assert kinetic_trace(grid16, s.gamma) == pytest.approx(expected, rel=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.05, 1.2))
    def test_psi_gradient_inequality(self, seed, knorm):
        g = make_grid(1, 16, 2 * np.pi)
        k = random_symmetric_kernel(np.random.default_rng(seed), g, knorm)
        u, c = sh_ch_series(g, k, depth=12)
        psi = 2 * (u + kernel_compose(g, u, c.dense))
        lhs = gradient_sq(g, psi, "x1") + gradient_sq(g, psi, "y")
        gu = gradient_sq(g, u, "x1") + gradient_sq(g, u, "y")
        rhs = 4 * gu * (1 + np.sum(np.abs(u) ** 2) * g.dV**2)
        assert lhs <= rhs * (1 + 1e-12)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_states_are_admissible(self, seed):
        g = make_grid(1, 16, 2 * np.pi)
        s = random_state(np.random.default_rng(seed), g, PotentialSpec(0.5, 16))
        assert validate(s, psd_tol=1e-9) == []


class TestValidate:
    def test_fresh_state(self, standard_state):
        assert validate(standard_state, psd_tol=1e-9) == []

    def test_asymmetric_perturbation(self, standard_state):
        lam = standard_state.lam.copy()
        lam[3, 7] += 1e-3
        v = validate(standard_state.replace(lam=lam))
        assert [x.name for x in v] == ["lambda_symmetric"]
        assert v[0].residual == pytest.approx(1e-3, rel=1e-6)

    def test_non_finite(self, standard_state):
        phi = standard_state.phi.copy()
        phi[0] = np.nan
        assert validate(standard_state.replace(phi=phi))[0].name == "finite"

    def test_non_hermitian(self, standard_state):
        gam = standard_state.gamma.copy()
        gam[1, 2] += 1e-6j
        names = {x.name for x in validate(standard_state.replace(gamma=gam))}
        assert "gamma_hermitian" in names

    def test_psd_violation(self, standard_state):
        gam = standard_state.gamma - 0.5 * np.outer(standard_state.phi.conj(), standard_state.phi)
        names = {x.name for x in validate(standard_state.replace(gamma=gam), psd_tol=1e-9)}
        assert "gamma_minus_phiphi_psd" in names

    def test_evolved_state_psd(self, standard_state):
        tr = evolve(standard_state, SchemeConfig("strang", 1e-3, 0.02), record_conserved=False)
        assert psd_margin(tr.final_state) > -1e-6


class TestRecipes:
    def test_phi_normalized(self):
        g = make_grid(2, 16, 2.0)
        for name, kw in [("gaussian", {"width": 0.3}), ("plane_waves", {"modes": [[1, 0], [0, 2]]})]:
            f = phi_profile(g, name, **kw)
            assert np.sum(np.abs(f) ** 2) * g.dV == pytest.approx(1.0)

    def test_k_symmetric(self, grid16):
        k = k_profile(grid16, "gaussian", center=3.0)
        np.testing.assert_array_equal(k, k.T)

    def test_unknown_profiles(self, grid16):
        with pytest.raises(ValueError):
            phi_profile(grid16, "nope")
        with pytest.raises(ValueError):
            k_profile(grid16, "nope")

    def test_trace_normalization(self):
        g = make_grid(1, 32, 2.0)
        s = build_initial_state(g, PotentialSpec(0.8, 64), {"name": "gaussian", "center": 1.0},
                                {"name": "gaussian", "amplitude": 0.8, "center": 1.0}, normalize="trace")
        assert kernel_trace(g, s.gamma).real == pytest.approx(1.0, abs=1e-13)

    def test_bad_normalize(self, grid16, spec16):
        with pytest.raises(ValueError, match="normalize"):
            build_initial_state(grid16, spec16, normalize="other")

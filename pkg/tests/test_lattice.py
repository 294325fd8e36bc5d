import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hfbdyn.lattice import (
    circulant,
    delta_kernel,
    fourier_multiplier,
    japanese,
    kernel_compose,
    kernel_diag,
    kernel_sym_diag,
    kernel_trace,
    make_grid,
    time_fourier,
)
from hfbdyn.oracles import loop_compose

from conftest import random_field, random_kernel, rel_err


class TestGrid:
    def test_wavenumbers_d1(self):
        g = make_grid(1, 8, 2 * np.pi)
        np.testing.assert_allclose(g.wavenumbers, np.arange(-4, 4), atol=1e-14)

    def test_d3_size_and_nyquist(self):
        g = make_grid(3, 16, 1.0)
        assert g.size == 4096
        assert np.max(np.abs(g.kvec)) == pytest.approx(16 * np.pi)

    @pytest.mark.parametrize("d,n,L", [(1, 7, 1.0), (4, 8, 1.0), (1, 6, 1.0), (1, 8, 0.0), (2, 512, 1.0)])
    def test_rejects_bad_parameters(self, d, n, L):
        with pytest.raises(ValueError):
            make_grid(d, n, L)

    def test_wavenumber_table_symmetric_except_nyquist(self):
        g = make_grid(1, 16, 3.0)
        k = np.sort(g.k1d)
        np.testing.assert_allclose(k[1:], -k[1:][::-1], atol=1e-12)
        assert k[0] == pytest.approx(-np.pi * 16 / 3.0)

    def test_dx_times_n(self):
        g = make_grid(2, 32, 2.0)
        assert g.dx * g.n == 2.0

    def test_flat_index_wraps(self):
        g = make_grid(2, 8, 1.0)
        assert g.flat_index(np.array([8, -1])) == g.flat_index(np.array([0, 7]))


class TestFourierMultiplier:
    def test_unit_weight_is_identity(self, rng):
        g = make_grid(2, 8, 1.0)
        f = random_field(rng, g)
        assert rel_err(fourier_multiplier(g, f, lambda xi: np.ones(xi.shape[1])), f) < 1e-13

    def test_plane_wave_eigenfunction(self):
        g = make_grid(1, 16, 2 * np.pi)
        x = g.points[:, 0]
        f = np.exp(3j * x)
        out = fourier_multiplier(g, f, lambda xi: japanese(xi) ** 0.7)
        np.testing.assert_allclose(out, (1 + 9) ** 0.35 * f, atol=1e-12)

    def test_inverse_weights(self, rng, grid16):
        K = random_kernel(rng, grid16)

        def w(a):
            return lambda xi, eta: japanese(xi) ** a * japanese(eta) ** a

        back = fourier_multiplier(grid16, fourier_multiplier(grid16, K, w(0.6)), w(-0.6))
        assert rel_err(back, K) < 1e-12

    def test_shape_mismatch(self, grid16):
        with pytest.raises(ValueError):
            fourier_multiplier(grid16, np.zeros(8), lambda xi: 1.0, kind="field")


class TestKernelAlgebra:
    def test_delta_is_identity(self, rng, grid16):
        B = random_kernel(rng, grid16)
        assert rel_err(kernel_compose(grid16, delta_kernel(grid16), B), B) < 1e-13

    def test_associativity(self, rng, grid16):
        A, B, C = (random_kernel(rng, grid16) for _ in range(3))
        left = kernel_compose(grid16, kernel_compose(grid16, A, B), C)
        right = kernel_compose(grid16, A, kernel_compose(grid16, B, C))
        assert rel_err(left, right) < 1e-12

    def test_rank_one_against_loop(self, rng, grid16):
        f, g_, h, e = (random_field(rng, grid16) for _ in range(4))
        A, B = np.outer(f, g_), np.outer(h, e)
        expected = np.sum(g_ * h) * grid16.dV * np.outer(f, e)
        assert rel_err(kernel_compose(grid16, A, B), expected) < 1e-12
        assert rel_err(loop_compose(grid16, A, B), expected) < 1e-12

    def test_grid_mismatch(self, rng, grid16):
        with pytest.raises(ValueError):
            kernel_compose(grid16, np.eye(8), np.eye(8))

    def test_trace_of_delta(self):
        g = make_grid(2, 8, 3.0)
        assert kernel_trace(g, delta_kernel(g)) == pytest.approx(g.size)

    def test_diag_of_rank_one(self, rng, grid16):
        f, h = random_field(rng, grid16), random_field(rng, grid16)
        np.testing.assert_allclose(kernel_diag(grid16, np.outer(f, h)), f * h)

    def test_offset_diagonals(self, rng):
        g = make_grid(2, 8, 1.0)
        A = random_kernel(rng, g)
        w = np.array([2, -3])
        idx = g.multi_index
        d = kernel_diag(g, A, w)
        s = kernel_sym_diag(g, A, w)
        for i in (0, 17, 63):
            assert d[i] == A[i, g.flat_index(idx[i] + w)]
            assert s[i] == A[g.flat_index(idx[i] + w), g.flat_index(idx[i] - w)]

    def test_circulant(self, rng, grid16):
        f = random_field(rng, grid16)
        M = circulant(grid16, f)
        assert M[5, 2] == f[3] and M[2, 5] == f[-3]


class TestTimeFourier:
    def test_box_window_is_sinc(self):
        dt, M = 1e-2, 100
        sp = time_fourier(np.ones((M, 1)), dt, pad=8)
        T = M * dt
        tau = sp.tau
        expected = np.abs(2 * np.sin(tau * T / 2) / np.where(tau == 0, 1, tau))
        expected[tau == 0] = T
        # discrete sinc: exact up to the Dirichlet-kernel correction at small tau*dt
        small = np.abs(tau) < 0.2 / dt
        np.testing.assert_allclose(np.abs(sp.values[small, 0]), expected[small], rtol=1e-2, atol=1e-3)

    def test_peak_at_modulation(self):
        dt, M, tau0 = 1e-2, 256, 12.0
        t = np.arange(M) * dt
        sp = time_fourier(np.exp(1j * tau0 * t)[:, None], dt, pad=4)
        assert abs(sp.tau[np.argmax(np.abs(sp.values[:, 0]))] - tau0) <= sp.dtau

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 60), st.integers(1, 6), st.floats(1e-3, 1.0))
    def test_parseval(self, M, pad, dt):
        rng = np.random.default_rng(M * 31 + pad)
        F = rng.standard_normal((M, 3)) + 1j * rng.standard_normal((M, 3))
        sp = time_fourier(F, dt, pad)
        direct = np.sum(np.abs(F) ** 2, axis=0) * dt
        np.testing.assert_allclose(sp.l2_weighted(), direct, rtol=1e-10)

    def test_non_uniform_sampling_rejected(self):
        with pytest.raises(ValueError):
            time_fourier(np.ones((3, 1)), 0.1, times=np.array([0.0, 0.1, 0.25]))

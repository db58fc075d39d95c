"""Cross-checks between the numba kernels and the pure-numpy fallback."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mcforge import backend
from mcforge import _kernels_numpy as knp

numba_kernels = pytest.importorskip("mcforge._kernels_numba")


def test_active_backend_reports_selection():
    assert backend.active_backend() in ("numba", "numpy")


class TestConvAgreement:
    def test_forward(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((5, 24, 20))
        k = rng.standard_normal((7, 5, 3, 3))
        b = rng.standard_normal(7)
        assert_allclose(numba_kernels.conv2d_forward(x, k, b),
                        knp.conv2d_forward(x, k, b), atol=1e-12)

    def test_backward_input(self):
        rng = np.random.default_rng(1)
        gy = rng.standard_normal((7, 12, 10))
        k = rng.standard_normal((7, 5, 3, 3))
        assert_allclose(numba_kernels.conv2d_backward_input(gy, k),
                        knp.conv2d_backward_input(gy, k), atol=1e-12)

    def test_backward_params(self):
        rng = np.random.default_rng(2)
        gy = rng.standard_normal((6, 16, 16))
        x = rng.standard_normal((3, 16, 16))
        gk_a, gb_a = numba_kernels.conv2d_backward_params(gy, x)
        gk_b, gb_b = knp.conv2d_backward_params(gy, x)
        assert_allclose(gk_a, gk_b, atol=1e-10)
        assert_allclose(gb_a, gb_b, atol=1e-10)


class TestSpectrumAgreement:
    def test_dft_eval(self):
        rng = np.random.default_rng(3)
        img = rng.random((32, 32))
        kx = rng.uniform(-0.5, 0.5, 300)
        ky = rng.uniform(-0.5, 0.5, 300)
        assert_allclose(numba_kernels.dft_eval(img, kx, ky),
                        knp.dft_eval(img, kx, ky), atol=1e-9)

    def test_grid_interp(self):
        rng = np.random.default_rng(4)
        grid = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
        u = rng.uniform(0, 64, 200)
        v = rng.uniform(0, 64, 200)
        lut = np.i0(np.linspace(3.0, 0.0, 4097))
        a = numba_kernels.grid_interp(grid, u, v, 6.0, lut)
        b = knp.grid_interp(grid, u, v, 6.0, lut)
        assert_allclose(a, b, atol=1e-10 * np.max(np.abs(a)))


def test_thread_cap_does_not_change_results():
    import numba

    rng = np.random.default_rng(5)
    x = rng.standard_normal((4, 32, 32))
    k = rng.standard_normal((8, 4, 3, 3))
    b = rng.standard_normal(8)
    base = numba_kernels.conv2d_forward(x, k, b)
    saved = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        single = numba_kernels.conv2d_forward(x, k, b)
    finally:
        numba.set_num_threads(saved)
    assert np.array_equal(base, single)

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mcforge import (CorruptionOptions, build_dataset, constant_trajectory,
                     corrupt, dft_eval_oracle, fft2, ifft2, nufft_eval,
                     phantom, read_manifest, ssim)
from mcforge.errors import ConfigError, DimensionError, DomainError, ParameterError

DIRECT = CorruptionOptions(engine="direct")


def rel_sup_error(approx, exact):
    """Sup-norm error normalized by the sup of the exact values."""
    return np.max(np.abs(approx - exact)) / np.max(np.abs(exact))


def grid_points(h, w):
    ky, kx = np.meshgrid((np.arange(h) - h // 2) / h,
                         (np.arange(w) - w // 2) / w, indexing="ij")
    return np.column_stack([kx.ravel(), ky.ravel()])


def bilinear_rotate(img, theta_deg):
    """Image-space rotation oracle: inverse-map bilinear sampling."""
    h, w = img.shape
    th = math.radians(theta_deg)
    ct, st = math.cos(th), math.sin(th)
    yc, xc = h // 2, w // 2
    out = np.zeros_like(img)
    for r in range(h):
        for c in range(w):
            x, y = c - xc, r - yc
            xs = ct * x + st * y + xc
            ys = -st * x + ct * y + yc
            x0, y0 = int(np.floor(xs)), int(np.floor(ys))
            fx, fy = xs - x0, ys - y0
            acc = 0.0
            for yy, xx, wt in ((y0, x0, (1 - fy) * (1 - fx)),
                               (y0, x0 + 1, (1 - fy) * fx),
                               (y0 + 1, x0, fy * (1 - fx)),
                               (y0 + 1, x0 + 1, fy * fx)):
                if 0 <= yy < h and 0 <= xx < w:
                    acc += wt * img[yy, xx]
            out[r, c] = acc
    return out


def smooth_phantom(size, cutoff=0.15):
    """Band-limited head phantom: Gaussian-apodized spectrum.

    Keeps the rotation-consistency comparison about geometry rather than
    interpolation ringing on hard edges.
    """
    img = phantom("shepp_logan", size)
    f = (np.arange(size) - size // 2) / size
    apod = np.exp(-(f**2)[:, None] / (2 * cutoff**2) - (f**2)[None, :] / (2 * cutoff**2))
    out = np.real(ifft2(fft2(img) * apod))
    return (out - out.min()) / (out.max() - out.min())


def raster_shepp_logan_reference(n):
    """Independent scalar rasterization of the ten-ellipse head phantom."""
    table = [
        (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
        (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
        (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
        (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
        (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
        (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
        (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
        (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
        (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
    ]
    img = np.zeros((n, n))
    for r in range(n):
        for c in range(n):
            x = -1.0 + 2.0 * c / (n - 1)
            y = 1.0 - 2.0 * r / (n - 1)
            v = 0.0
            for a, ea, eb, x0, y0, phi in table:
                ph = math.radians(phi)
                xr = (x - x0) * math.cos(ph) + (y - y0) * math.sin(ph)
                yr = -(x - x0) * math.sin(ph) + (y - y0) * math.cos(ph)
                if (xr / ea) ** 2 + (yr / eb) ** 2 <= 1.0:
                    v += a
            img[r, c] = min(max(v, 0.0), 1.0)
    return img


class TestDftOracle:
    def test_center_pixel_flat_spectrum(self):
        img = np.zeros((16, 16))
        img[8, 8] = 1.0
        rng = np.random.default_rng(0)
        pts = rng.uniform(-0.5, 0.5, (64, 2))
        vals = dft_eval_oracle(img, pts)
        assert_allclose(np.abs(vals), 1.0 / 16, atol=1e-14)
        assert_allclose(np.angle(vals), 0.0, atol=1e-14)

    def test_conjugate_symmetry_for_real_images(self):
        rng = np.random.default_rng(1)
        img = rng.random((12, 12))
        pts = rng.uniform(-0.49, 0.49, (50, 2))
        plus = dft_eval_oracle(img, pts)
        minus = dft_eval_oracle(img, -pts)
        assert np.max(np.abs(minus - np.conj(plus))) <= 1e-12

    def test_matches_fft_on_grid(self):
        rng = np.random.default_rng(2)
        img = rng.random((16, 12))
        vals = dft_eval_oracle(img, grid_points(16, 12))
        assert np.max(np.abs(vals - fft2(img).ravel())) <= 1e-10

    def test_dc_is_scaled_pixel_sum(self):
        rng = np.random.default_rng(3)
        img = rng.random((8, 8))
        val = dft_eval_oracle(img, np.zeros((1, 2)))[0]
        assert val == pytest.approx(img.sum() / 8.0, abs=1e-12)

    def test_out_of_domain_rejected(self):
        with pytest.raises(DomainError):
            dft_eval_oracle(np.ones((8, 8)), np.array([[0.5, 0.0]]))
        with pytest.raises(DomainError):
            dft_eval_oracle(np.ones((8, 8)), np.array([[0.0, -0.51]]))


class TestNufft:
    def test_on_grid_matches_fft(self):
        rng = np.random.default_rng(4)
        img = rng.random((64, 64))
        vals = nufft_eval(img, grid_points(64, 64))
        k = fft2(img).ravel()
        assert rel_sup_error(vals, k) <= 1e-6

    def test_dc_is_scaled_pixel_sum(self):
        rng = np.random.default_rng(5)
        img = rng.random((32, 32))
        val = nufft_eval(img, np.zeros((1, 2)))[0]
        assert abs(val - img.sum() / 32.0) <= 1e-8 * img.sum()

    def test_random_points_match_oracle(self):
        rng = np.random.default_rng(6)
        img = rng.random((64, 64))
        pts = rng.uniform(-0.5, 0.5, (256, 2))
        assert rel_sup_error(nufft_eval(img, pts), dft_eval_oracle(img, pts)) <= 1e-5

    def test_phantom_image_matches_oracle(self):
        rng = np.random.default_rng(7)
        img = phantom("shepp_logan", 64)
        pts = rng.uniform(-0.5, 0.5, (256, 2))
        assert rel_sup_error(nufft_eval(img, pts), dft_eval_oracle(img, pts)) <= 1e-5

    def test_odd_sizes(self):
        rng = np.random.default_rng(8)
        img = rng.random((33, 47))
        pts = rng.uniform(-0.5, 0.5, (200, 2))
        assert rel_sup_error(nufft_eval(img, pts), dft_eval_oracle(img, pts)) <= 1e-5

    def test_out_of_domain_rejected(self):
        with pytest.raises(DomainError):
            nufft_eval(np.ones((16, 16)), np.array([[0.6, 0.0]]))

    def test_option_bounds(self):
        with pytest.raises(ParameterError):
            CorruptionOptions(oversampling=1.0)
        with pytest.raises(ParameterError):
            CorruptionOptions(kernel_width=1)
        with pytest.raises(ParameterError):
            CorruptionOptions(engine="magic")


class TestCorrupt:
    def test_zero_motion_is_identity(self):
        img = phantom("shepp_logan", 64)
        traj = constant_trajectory(64)
        out = corrupt(img, traj, DIRECT)
        assert np.max(np.abs(out - img)) <= 1e-9
        out_g = corrupt(img, traj)
        assert ssim(out_g, img) >= 0.999

    def test_integer_translation_is_circular_shift(self):
        img = phantom("shepp_logan", 64)
        traj = constant_trajectory(64, tx=3.0, ty=-2.0)
        out = corrupt(img, traj, DIRECT)
        expect = np.roll(img, shift=(-2, 3), axis=(0, 1))
        assert np.max(np.abs(out - expect)) <= 1e-6

    def test_constant_rotation_matches_image_space_oracle(self):
        img = smooth_phantom(64)
        traj = constant_trajectory(64, theta=10.0)
        out = corrupt(img, traj, DIRECT)
        assert ssim(out, bilinear_rotate(img, 10.0)) >= 0.98

    def test_engines_agree(self):
        rng = np.random.default_rng(9)
        img = phantom("random_ellipses", 64, seed=1)
        traj = np.column_stack([rng.uniform(-3, 3, 64), rng.uniform(-3, 3, 64),
                                rng.uniform(-8, 8, 64)])
        k_grid = fft2(corrupt(img, traj, complex_output=True))
        k_direct = fft2(corrupt(img, traj, DIRECT, complex_output=True))
        assert rel_sup_error(k_grid, k_direct) <= 1e-5

    def test_linear_in_image_at_complex_stage(self):
        rng = np.random.default_rng(10)
        x = rng.random((32, 32))
        y = rng.random((32, 32))
        traj = np.column_stack([rng.uniform(-2, 2, 32), rng.uniform(-2, 2, 32),
                                rng.uniform(-5, 5, 32)])
        a, b = 1.7, -0.6
        combined = corrupt(a * x + b * y, traj, DIRECT, complex_output=True)
        separate = (a * corrupt(x, traj, DIRECT, complex_output=True)
                    + b * corrupt(y, traj, DIRECT, complex_output=True))
        assert np.max(np.abs(combined - separate)) <= 1e-9

    def test_state_count_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            corrupt(np.ones((16, 16)), constant_trajectory(8))


class TestPhantom:
    def test_deterministic_per_seed(self):
        a = phantom("random_ellipses", 48, seed=5)
        b = phantom("random_ellipses", 48, seed=5)
        assert_array_equal(a, b)
        assert not np.array_equal(a, phantom("random_ellipses", 48, seed=6))

    def test_values_in_unit_interval(self):
        for seed in range(5):
            img = phantom("random_ellipses", 32, seed=seed)
            assert img.min() >= 0.0 and img.max() <= 1.0
        sl = phantom("shepp_logan", 32)
        assert sl.min() >= 0.0 and sl.max() <= 1.0

    def test_shepp_logan_matches_independent_rasterization(self):
        assert np.max(np.abs(phantom("shepp_logan", 64)
                             - raster_shepp_logan_reference(64))) <= 1.0 / 255

    def test_too_small_rejected(self):
        with pytest.raises(ParameterError):
            phantom("shepp_logan", 15)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ParameterError):
            phantom("cube", 32)


class TestBuildDataset:
    def test_disjoint_splits(self, tmp_path):
        records = build_dataset(tmp_path / "d", n_images=10, n_trajectories=6,
                                size=32, seed=0)
        by_split = {}
        for rec in records:
            by_split.setdefault(rec.split, set()).add(rec.trajectory)
        assert set(by_split) == {"train", "val", "test"}
        assert not (by_split["train"] & by_split["val"])
        assert not (by_split["train"] & by_split["test"])
        assert not (by_split["val"] & by_split["test"])
        cleans = [rec.clean for rec in records]
        assert len(set(cleans)) == len(cleans)

    def test_severities_within_range(self, tmp_path):
        records = build_dataset(tmp_path / "d", n_images=8, n_trajectories=5,
                                size=32, severity_range=(0.0, 15.0), seed=1)
        for rec in records:
            assert 0.0 <= rec.severity <= 15.0 + 1e-9

    def test_rerun_is_bit_identical(self, tmp_path):
        build_dataset(tmp_path / "a", n_images=6, n_trajectories=4, size=32, seed=2)
        build_dataset(tmp_path / "b", n_images=6, n_trajectories=4, size=32, seed=2)
        a = (tmp_path / "a" / "manifest.csv").read_bytes()
        b = (tmp_path / "b" / "manifest.csv").read_bytes()
        assert a == b
        for rec in read_manifest(tmp_path / "a" / "manifest.csv"):
            for rel in (rec.clean, rec.corrupted, rec.trajectory):
                assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_absolute_count_split(self, tmp_path):
        records = build_dataset(tmp_path / "d", n_images=10, n_trajectories=6,
                                size=32, seed=3, split=(6, 2, 2))
        counts = {}
        for rec in records:
            counts[rec.split] = counts.get(rec.split, 0) + 1
        assert counts == {"train": 6, "val": 2, "test": 2}

    def test_insufficient_trajectories_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            build_dataset(tmp_path / "d", n_images=10, n_trajectories=2, size=32, seed=4)

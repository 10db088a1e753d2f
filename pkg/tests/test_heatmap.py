import math

import numpy as np
import pytest

from pegalign.geometry import PixelPoint
from pegalign.heatmap import (
    AugmentParams,
    Heatmap,
    HeatmapParams,
    argmax_point,
    augment,
    augment_with_points,
    composite_overlay,
    gaussian_heatmap,
    heatmap_mse,
    luma,
)


def flat_image(r, g, b, h=32, w=32):
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[..., 0], img[..., 1], img[..., 2] = r, g, b
    return img


class TestGaussianHeatmap:
    def test_peak_value_is_one(self):
        h = gaussian_heatmap(PixelPoint(50, 60), HeatmapParams(), 224, 224)
        assert h.values[60, 50] == 1.0

    def test_value_at_radius_sigma_is_exp_half(self):
        # sigma=3, |p - p*| = 3 -> exp(-9 / (2*9)) = exp(-1/2)
        h = gaussian_heatmap(PixelPoint(100, 100), HeatmapParams(sigma=3.0), 224, 224)
        expected = math.exp(-0.5)
        assert h.values[100, 103] == pytest.approx(expected, abs=1e-12)
        assert h.values[97, 100] == pytest.approx(expected, abs=1e-12)

    def test_radial_symmetry(self):
        h = gaussian_heatmap(PixelPoint(100, 100), HeatmapParams(), 224, 224)
        assert abs(h.values[100, 105] - h.values[105, 100]) < 1e-12
        assert abs(h.values[96, 100] - h.values[100, 104]) < 1e-12

    def test_peak_outside_image_still_defined(self):
        h = gaussian_heatmap(PixelPoint(-10, -10), HeatmapParams(), 32, 32)
        assert np.all(h.values >= 0)
        assert np.all(h.values < 1.0)

    def test_values_in_unit_interval(self):
        h = gaussian_heatmap(PixelPoint(10.5, 20.25), HeatmapParams(), 64, 48)
        assert np.all((h.values >= 0) & (h.values <= 1))

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValueError):
            HeatmapParams(sigma=0.0)

    def test_default_sigma_is_three_px(self):
        assert HeatmapParams().sigma == 3.0


class TestArgmax:
    def test_recovers_generating_peak(self):
        p, v = argmax_point(gaussian_heatmap(PixelPoint(50, 60), HeatmapParams(), 224, 224))
        assert (p.x, p.y) == (50.0, 60.0)
        assert v == 1.0

    def test_tie_breaks_to_smallest_row_major_index(self):
        # peaks at (x=3, y=4) -> index 4*224+3 = 899 and (x=10, y=2) -> 458
        values = np.zeros((224, 224))
        values[4, 3] = 1.0
        values[2, 10] = 1.0
        p, v = argmax_point(Heatmap(values))
        assert (p.x, p.y) == (10.0, 2.0)
        assert v == 1.0

    def test_all_zero_map(self):
        p, v = argmax_point(Heatmap(np.zeros((8, 8))))
        assert (p.x, p.y, v) == (0.0, 0.0, 0.0)

    def test_grid_of_peaks(self):
        params = HeatmapParams()
        for x in range(10, 224, 40):
            for y in range(15, 224, 40):
                p, _ = argmax_point(gaussian_heatmap(PixelPoint(x, y), params, 224, 224))
                assert (p.x, p.y) == (float(x), float(y))


class TestMse:
    def test_zero_on_identical(self):
        h = gaussian_heatmap(PixelPoint(5, 5), HeatmapParams(), 16, 16)
        assert heatmap_mse(h, h) == 0.0

    def test_hand_value(self):
        a = Heatmap(np.array([[0.0, 0.0]]))
        b = Heatmap(np.array([[1.0, 0.0]]))
        assert heatmap_mse(a, b) == pytest.approx(0.5)

    def test_symmetric(self):
        a = gaussian_heatmap(PixelPoint(3, 3), HeatmapParams(), 16, 16)
        b = gaussian_heatmap(PixelPoint(9, 5), HeatmapParams(), 16, 16)
        assert heatmap_mse(a, b) == heatmap_mse(b, a)

    def test_dimension_mismatch(self):
        a = Heatmap(np.zeros((4, 4)))
        b = Heatmap(np.zeros((4, 5)))
        with pytest.raises(ValueError):
            heatmap_mse(a, b)


class TestCompositeOverlay:
    def test_black_alpha_returns_render(self):
        render = flat_image(10, 200, 30)
        overlay = flat_image(250, 1, 2)
        out = composite_overlay(render, overlay, flat_image(0, 0, 0))
        np.testing.assert_array_equal(out, render)

    def test_white_alpha_returns_overlay(self):
        render = flat_image(10, 200, 30)
        overlay = flat_image(250, 1, 2)
        out = composite_overlay(render, overlay, flat_image(255, 255, 255))
        np.testing.assert_array_equal(out, overlay)

    def test_half_alpha_blend(self):
        # a=128: (100*127 + 200*128)/255 = 150.196 -> 150
        out = composite_overlay(flat_image(100, 100, 100), flat_image(200, 200, 200),
                                flat_image(128, 128, 128))
        np.testing.assert_array_equal(out, flat_image(150, 150, 150))

    def test_output_in_byte_range(self):
        rng = np.random.default_rng(0)
        render = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        overlay = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        alpha = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        out = composite_overlay(render, overlay, alpha)
        assert out.dtype == np.uint8

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            composite_overlay(flat_image(0, 0, 0, 8, 8), flat_image(0, 0, 0, 8, 9),
                              flat_image(0, 0, 0, 8, 8))

    def test_luma_bt601_weights(self):
        # (299*50 + 587*100 + 114*150) // 1000 = (14950+58700+17100)//1000 = 90
        img = flat_image(50, 100, 150)
        assert luma(img)[0, 0] == 90


def _identity_params(**overrides):
    defaults = dict(crop=False, flip_prob=0.0, blur_prob=0.0, out_size=224)
    defaults.update(overrides)
    return AugmentParams(**defaults)


class TestAugment:
    def test_identity_when_all_disabled(self):
        rng = np.random.default_rng(0)
        img = np.random.default_rng(1).integers(0, 256, size=(224, 224, 3), dtype=np.uint8)
        target = gaussian_heatmap(PixelPoint(50, 60), HeatmapParams(), 224, 224)
        out_img, out_targets = augment(img, [target], _identity_params(), rng)
        np.testing.assert_array_equal(out_img, img)
        p, _ = argmax_point(out_targets[0])
        assert (p.x, p.y) == (50.0, 60.0)

    def test_flip_moves_peak(self):
        # x' = 224 - 1 - 50 = 173
        rng = np.random.default_rng(0)
        img = np.zeros((224, 224, 3), dtype=np.uint8)
        target = gaussian_heatmap(PixelPoint(50, 60), HeatmapParams(), 224, 224)
        _, out_targets = augment(img, [target], _identity_params(flip_prob=1.0), rng)
        p, _ = argmax_point(out_targets[0])
        assert (p.x, p.y) == (173.0, 60.0)

    def test_flip_twice_is_identity(self):
        img = np.random.default_rng(2).integers(0, 256, size=(224, 224, 3), dtype=np.uint8)
        params = _identity_params(flip_prob=1.0)
        once_img, once_pts = augment_with_points(img, [PixelPoint(50, 60)], params,
                                                 np.random.default_rng(0))
        twice_img, twice_pts = augment_with_points(once_img, once_pts, params,
                                                   np.random.default_rng(0))
        np.testing.assert_array_equal(twice_img, img)
        assert (twice_pts[0].x, twice_pts[0].y) == (50.0, 60.0)

    def test_flip_mirrors_image_columns(self):
        img = np.zeros((224, 224, 3), dtype=np.uint8)
        img[:, 0, 0] = 255
        out, _ = augment_with_points(img, [], _identity_params(flip_prob=1.0),
                                     np.random.default_rng(0))
        assert out[0, 223, 0] == 255
        assert out[0, 0, 0] == 0

    def test_crop_and_resize_map_points(self):
        # fixed crop box via crop_size; peak transform follows pixel centers
        img = np.zeros((256, 256, 3), dtype=np.uint8)
        params = AugmentParams(crop=True, crop_size=128, flip_prob=0.0, blur_prob=0.0,
                               out_size=224)
        rng = np.random.default_rng(12)
        out_img, pts = augment_with_points(img, [PixelPoint(100, 90)], params, rng)
        assert out_img.shape == (224, 224, 3)
        p = pts[0]
        assert math.isfinite(p.x) and math.isfinite(p.y)

    def test_crop_larger_than_image_errors(self):
        img = np.zeros((64, 64, 3), dtype=np.uint8)
        params = AugmentParams(crop=True, crop_size=100)
        with pytest.raises(ValueError):
            augment_with_points(img, [], params, np.random.default_rng(0))

    def test_blur_applies_to_image_only(self):
        img = np.zeros((224, 224, 3), dtype=np.uint8)
        img[112, 112] = 255
        target = gaussian_heatmap(PixelPoint(112, 112), HeatmapParams(), 224, 224)
        params = _identity_params(blur_prob=1.0)
        out_img, out_targets = augment(img, [target], params, np.random.default_rng(0))
        assert out_img[112, 112, 0] < 255  # image blurred
        assert out_targets[0].values[112, 112] == 1.0  # target regenerated, not blurred

    def test_box_blur_kernel_average(self):
        # 3x3 box blur of a single 255 pixel spreads 255/9 = 28.33 -> 28
        img = np.zeros((32, 32, 3), dtype=np.uint8)
        img[16, 16] = 255
        params = AugmentParams(crop=False, flip_prob=0.0, blur_prob=1.0,
                               blur_kernels=(3,), out_size=32)
        out, _ = augment_with_points(img, [], params, np.random.default_rng(0))
        assert out[16, 16, 0] in (28, 29)
        assert out[15, 15, 0] in (28, 29)
        assert out[14, 14, 0] == 0

    def test_same_seed_same_output(self):
        img = np.random.default_rng(5).integers(0, 256, size=(300, 280, 3), dtype=np.uint8)
        target = gaussian_heatmap(PixelPoint(100, 100), HeatmapParams(), 280, 300)
        params = AugmentParams()
        a_img, a_t = augment(img, [target], params, np.random.default_rng(99))
        b_img, b_t = augment(img, [target], params, np.random.default_rng(99))
        np.testing.assert_array_equal(a_img, b_img)
        np.testing.assert_array_equal(a_t[0].values, b_t[0].values)

    def test_target_dimension_mismatch(self):
        img = np.zeros((64, 64, 3), dtype=np.uint8)
        target = gaussian_heatmap(PixelPoint(5, 5), HeatmapParams(), 32, 32)
        with pytest.raises(ValueError):
            augment(img, [target], AugmentParams(), np.random.default_rng(0))

    def test_training_augmentation_defaults(self):
        # 50% blur chance with 3 or 5 px kernels, 50% flips, 224x224 output
        p = AugmentParams()
        assert p.blur_prob == 0.5
        assert p.blur_kernels == (3, 5)
        assert p.flip_prob == 0.5
        assert p.out_size == 224

    def test_blur_kernel_frequencies(self):
        # with blur_prob 0.5 roughly half the draws blur, split over kernels
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        img[4, 4] = 255
        rng = np.random.default_rng(77)
        params = AugmentParams(crop=False, flip_prob=0.0, blur_prob=0.5, out_size=8)
        blurred = 0
        n = 2000
        for _ in range(n):
            out, _ = augment_with_points(img, [], params, rng)
            blurred += out[4, 4, 0] != 255
        assert abs(blurred / n - 0.5) < 3 * math.sqrt(0.25 / n)

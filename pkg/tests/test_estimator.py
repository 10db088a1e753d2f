import math

import numpy as np
import pytest

from pegalign.estimator import (
    ESTIMATOR_PRESETS,
    EstimatePair,
    NoiseModel,
    accuracy_csv,
    accuracy_curve,
    oracle_estimate,
)
from pegalign.geometry import (
    BehindCameraError,
    CameraIntrinsics,
    CameraModel,
    PixelPoint,
    RigidTransform,
    project,
)


def default_camera():
    return CameraModel(CameraIntrinsics(675.0, 675.0, 112.0, 112.0, 224, 224),
                       RigidTransform.identity())


PEG = np.array([0.001, -0.002, 0.14])
HOLE = np.array([-0.003, 0.001, 0.14])


class TestOracleEstimate:
    def test_zero_noise_equals_projection(self):
        cam = default_camera()
        est = oracle_estimate(PEG, HOLE, cam, NoiseModel(), np.random.default_rng(0))
        exact_peg, exact_hole = project(cam, PEG), project(cam, HOLE)
        assert (est.peg.x, est.peg.y) == (exact_peg.x, exact_peg.y)
        assert (est.hole.x, est.hole.y) == (exact_hole.x, exact_hole.y)
        assert est.peg_detected and est.hole_detected

    def test_behind_camera_raises(self):
        with pytest.raises(BehindCameraError):
            oracle_estimate([0, 0, -0.1], HOLE, default_camera(), NoiseModel(),
                            np.random.default_rng(0))

    def test_gaussian_radial_error_matches_rayleigh_mean(self):
        # isotropic 2-D Gaussian, sigma=2: E|r| = 2 sqrt(pi/2) = 2.5066
        cam = default_camera()
        noise = NoiseModel(gaussian_sigma=2.0)
        rng = np.random.default_rng(7)
        exact = project(cam, PEG)
        errors = []
        for _ in range(10_000):
            est = oracle_estimate(PEG, HOLE, cam, noise, rng)
            errors.append(math.hypot(est.peg.x - exact.x, est.peg.y - exact.y))
        expected = 2.0 * math.sqrt(math.pi / 2.0)
        assert np.mean(errors) == pytest.approx(expected, rel=0.02)

    def test_forced_outliers_uniform_over_roi(self):
        # chi-square uniformity over a 4x4 grid at the 1% level
        cam = default_camera()
        noise = NoiseModel(outlier_prob=1.0, roi=(0.0, 0.0, 224.0, 224.0))
        rng = np.random.default_rng(11)
        n = 8000
        counts = np.zeros((4, 4))
        for _ in range(n):
            est = oracle_estimate(PEG, HOLE, cam, noise, rng)
            counts[min(int(est.peg.y / 56), 3), min(int(est.peg.x / 56), 3)] += 1
        expected = n / 16.0
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        # chi-square with 15 dof, 1% critical value
        assert chi2 < 30.58

    def test_miss_probability(self):
        cam = default_camera()
        noise = NoiseModel(miss_prob=0.3)
        rng = np.random.default_rng(13)
        missed = sum(
            not oracle_estimate(PEG, HOLE, cam, noise, rng).peg_detected
            for _ in range(5000)
        )
        assert abs(missed / 5000 - 0.3) < 3 * math.sqrt(0.3 * 0.7 / 5000)

    def test_estimates_clamped_into_roi(self):
        cam = default_camera()
        noise = NoiseModel(gaussian_sigma=500.0)  # wild noise
        rng = np.random.default_rng(17)
        for _ in range(200):
            est = oracle_estimate(PEG, HOLE, cam, noise, rng)
            assert noise.contains(est.peg) and noise.contains(est.hole)

    def test_determinism(self):
        cam = default_camera()
        noise = ESTIMATOR_PRESETS["synth"]
        a = oracle_estimate(PEG, HOLE, cam, noise, np.random.default_rng(3))
        b = oracle_estimate(PEG, HOLE, cam, noise, np.random.default_rng(3))
        assert a == b

    def test_presets(self):
        assert ESTIMATOR_PRESETS["synth"].gaussian_sigma == 1.5
        assert ESTIMATOR_PRESETS["synth"].outlier_prob == 0.005
        assert ESTIMATOR_PRESETS["metal_on_plastic"].outlier_prob == 0.40
        assert ESTIMATOR_PRESETS["exact"].gaussian_sigma == 0.0

    def test_invalid_probabilities_rejected(self):
        with pytest.raises(ValueError):
            NoiseModel(outlier_prob=1.5)
        with pytest.raises(ValueError):
            NoiseModel(gaussian_sigma=-1.0)


def _pair(x, y):
    return EstimatePair(peg=PixelPoint(x, y), hole=PixelPoint(x, y))


class TestAccuracyCurve:
    def test_perfect_estimates(self):
        pairs = [_pair(10, 10), _pair(50, 50)]
        rates = accuracy_curve(pairs, pairs, [0.5, 1, 2])
        assert rates == [1.0, 1.0, 1.0]

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(5)
        truths = [_pair(100, 100) for _ in range(500)]
        estimates = [_pair(100 + rng.normal(0, 3), 100 + rng.normal(0, 3)) for _ in range(500)]
        rates = accuracy_curve(estimates, truths, [0.5, 1, 2, 4, 8, 16])
        assert all(0.0 <= r <= 1.0 for r in rates)
        assert all(a <= b for a, b in zip(rates, rates[1:]))

    def test_rayleigh_cdf_single_noisy_point(self):
        # peg noisy (sigma=2), hole exact: P(within t) = 1 - exp(-t^2/8)
        rng = np.random.default_rng(19)
        n = 10_000
        truths, estimates = [], []
        for _ in range(n):
            truths.append(_pair(100, 100))
            estimates.append(EstimatePair(
                peg=PixelPoint(100 + rng.normal(0, 2), 100 + rng.normal(0, 2)),
                hole=PixelPoint(100, 100)))
        t = 2.0
        rate = accuracy_curve(estimates, truths, [t])[0]
        p = 1.0 - math.exp(-t * t / 8.0)  # 0.39347
        assert abs(rate - p) < 3 * math.sqrt(p * (1 - p) / n)

    def test_undetected_points_never_count(self):
        truths = [_pair(10, 10)]
        estimates = [EstimatePair(peg=PixelPoint(10, 10), hole=PixelPoint(10, 10),
                                  peg_detected=False)]
        assert accuracy_curve(estimates, truths, [5.0]) == [0.0]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy_curve([_pair(0, 0)], [], [1.0])

    def test_unsorted_thresholds(self):
        with pytest.raises(ValueError):
            accuracy_curve([_pair(0, 0)], [_pair(0, 0)], [2.0, 1.0])

    def test_csv_format(self):
        out = accuracy_csv([1.0, 2.0], [0.5, 0.75])
        lines = out.strip().split("\n")
        assert lines[0] == "threshold_px,success_rate"
        assert lines[1] == "1.0,0.5"
        assert lines[2] == "2.0,0.75"


def test_default_scene_peg_diameter_spans_about_50px():
    # the default intrinsics are calibrated so a 10 mm peg at sampling
    # distances covers roughly 50 px (within +-30%)
    from pegalign.scene import CameraSamplingRanges, sample_camera_pose, scenario_by_name

    s = scenario_by_name("plastic")
    rng = np.random.default_rng(0)
    for _ in range(100):
        pose = sample_camera_pose(CameraSamplingRanges(), s.hole_center(), rng)
        cam = CameraModel(
            CameraIntrinsics(675.0, 675.0, 112.0, 112.0, 224, 224), pose)
        right = pose.inverse().rotate([1.0, 0.0, 0.0])  # image-horizontal in world
        a = project(cam, s.hole_center() - 0.5 * s.peg_diameter * right)
        b = project(cam, s.hole_center() + 0.5 * s.peg_diameter * right)
        span = math.hypot(a.x - b.x, a.y - b.y)
        assert 50.0 * 0.7 <= span <= 50.0 * 1.3

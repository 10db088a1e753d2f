"""Geometry tests: every expected value is hand-derived from the pinhole
formulas (u = fx*x/z + cx, v = fy*y/z + cy) or from quaternion identities."""

import math

import numpy as np
import pytest

from pegalign.geometry import (
    BehindCameraError,
    CameraIntrinsics,
    CameraModel,
    InvalidDepthError,
    PixelPoint,
    RigidTransform,
    backproject_at_depth,
    matrix_to_quat,
    optical_depth,
    perturb_extrinsics,
    project,
    quat_angle,
    quat_from_axis_angle,
    quat_multiply,
    quat_rotate,
    quat_to_matrix,
    random_unit_vector,
    rotation_between,
)


def default_camera():
    return CameraModel(CameraIntrinsics(500.0, 500.0, 112.0, 112.0, 224, 224),
                       RigidTransform.identity())


class TestQuaternions:
    def test_rotate_90_about_z(self):
        q = quat_from_axis_angle([0, 0, 1], math.pi / 2)
        np.testing.assert_allclose(quat_rotate(q, [1, 0, 0]), [0, 1, 0], atol=1e-12)

    def test_multiply_matches_matrix_product(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            qa = quat_from_axis_angle(random_unit_vector(rng), rng.uniform(-3, 3))
            qb = quat_from_axis_angle(random_unit_vector(rng), rng.uniform(-3, 3))
            lhs = quat_to_matrix(quat_multiply(qa, qb))
            rhs = quat_to_matrix(qa) @ quat_to_matrix(qb)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_matrix_quat_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            q = quat_from_axis_angle(random_unit_vector(rng), rng.uniform(-math.pi, math.pi))
            m = quat_to_matrix(q)
            q2 = matrix_to_quat(m)
            # q and -q encode the same rotation
            assert min(np.linalg.norm(q - q2), np.linalg.norm(q + q2)) < 1e-9

    def test_quat_angle(self):
        q = quat_from_axis_angle([0, 1, 0], 0.3)
        assert quat_angle(q) == pytest.approx(0.3, abs=1e-12)


class TestRigidTransform:
    def test_norm_maintained(self):
        t = RigidTransform(np.array([2.0, 0, 0, 0]), np.zeros(3))
        assert abs(np.linalg.norm(t.rotation) - 1.0) < 1e-9

    def test_compose_invert_is_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            t = RigidTransform(quat_from_axis_angle(random_unit_vector(rng), rng.uniform(-3, 3)),
                               rng.normal(size=3))
            ident = t.compose(t.inverse())
            assert quat_angle(ident.rotation) < 1e-9
            np.testing.assert_allclose(ident.translation, 0.0, atol=1e-9)
            p = rng.normal(size=3)
            np.testing.assert_allclose(t.inverse().apply(t.apply(p)), p, atol=1e-9)

    def test_compose_associative(self):
        rng = np.random.default_rng(6)
        ts = [RigidTransform(quat_from_axis_angle(random_unit_vector(rng), rng.uniform(-3, 3)),
                             rng.normal(size=3)) for _ in range(3)]
        a = ts[0].compose(ts[1]).compose(ts[2])
        b = ts[0].compose(ts[1].compose(ts[2]))
        p = rng.normal(size=3)
        np.testing.assert_allclose(a.apply(p), b.apply(p), atol=1e-9)

    def test_compose_order(self):
        # translate after rotating: (T_trans ∘ T_rot)(p) = T_trans(T_rot(p))
        rot = RigidTransform(quat_from_axis_angle([0, 0, 1], math.pi / 2), np.zeros(3))
        trans = RigidTransform.identity()
        trans = RigidTransform(trans.rotation, np.array([1.0, 0, 0]))
        combined = trans.compose(rot)
        np.testing.assert_allclose(combined.apply([1, 0, 0]), [1, 1, 0], atol=1e-12)


class TestProjection:
    def test_principal_point(self):
        p = project(default_camera(), [0, 0, 0.14])
        assert (p.x, p.y) == (112.0, 112.0)

    def test_offset_point(self):
        # u = 500 * 0.014 / 0.14 + 112 = 50 + 112 = 162
        p = project(default_camera(), [0.014, 0, 0.14])
        assert p.x == pytest.approx(162.0, abs=1e-12)
        assert p.y == pytest.approx(112.0, abs=1e-12)

    def test_behind_camera(self):
        with pytest.raises(BehindCameraError):
            project(default_camera(), [0, 0, -0.1])
        with pytest.raises(BehindCameraError):
            project(default_camera(), [0, 0, 0.0])

    def test_backproject_principal_ray(self):
        p = backproject_at_depth(default_camera(), PixelPoint(112, 112), 0.14)
        np.testing.assert_allclose(p, [0, 0, 0.14], atol=1e-12)

    def test_backproject_inverse_of_project(self):
        p = backproject_at_depth(default_camera(), PixelPoint(162, 112), 0.14)
        np.testing.assert_allclose(p, [0.014, 0, 0.14], atol=1e-12)

    def test_backproject_invalid_depth(self):
        with pytest.raises(InvalidDepthError):
            backproject_at_depth(default_camera(), PixelPoint(10, 10), 0.0)
        with pytest.raises(InvalidDepthError):
            backproject_at_depth(default_camera(), PixelPoint(10, 10), -0.5)

    def test_round_trip_random_poses(self):
        # project∘backproject identity on pixels; backproject∘project on points
        rng = np.random.default_rng(7)
        for _ in range(100):
            pose = RigidTransform(quat_from_axis_angle(random_unit_vector(rng), rng.uniform(-3, 3)),
                                  rng.normal(size=3) * 0.1)
            cam = CameraModel(CameraIntrinsics(600.0, 480.0, 100.0, 130.0, 224, 224), pose)
            z = rng.uniform(0.05, 0.5)
            pix = PixelPoint(rng.uniform(0, 224), rng.uniform(0, 224))
            point = backproject_at_depth(cam, pix, z)
            assert optical_depth(cam, point) == pytest.approx(z, abs=1e-12)
            pix2 = project(cam, point)
            assert pix2.x == pytest.approx(pix.x, abs=1e-9)
            assert pix2.y == pytest.approx(pix.y, abs=1e-9)

            world_pt = backproject_at_depth(cam, project(cam, point), optical_depth(cam, point))
            np.testing.assert_allclose(world_pt, point, atol=1e-9)


class TestIntrinsicsValidation:
    def test_rejects_bad_focal(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(0.0, 500.0, 112.0, 112.0, 224, 224)

    def test_rejects_out_of_image_principal_point(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(500.0, 500.0, 300.0, 112.0, 224, 224)


class TestPerturbExtrinsics:
    def test_zero_perturbation_is_identity(self):
        cam = default_camera()
        rng = np.random.default_rng(0)
        out = perturb_extrinsics(cam, 0.0, 0.0, rng)
        np.testing.assert_array_equal(out.pose.rotation, cam.pose.rotation)
        np.testing.assert_array_equal(out.pose.translation, cam.pose.translation)

    def test_bounds_hold_for_every_draw(self):
        cam = default_camera()
        rng = np.random.default_rng(11)
        max_rot_deg, max_trans = 2.0, 0.01
        for _ in range(10_000):
            out = perturb_extrinsics(cam, max_rot_deg, max_trans, rng)
            angle = rotation_between(cam.pose, out.pose)
            assert angle <= math.radians(max_rot_deg) + 1e-12
            shift = np.linalg.norm(out.pose.translation - cam.pose.translation)
            assert shift <= max_trans + 1e-15

    def test_same_seed_bit_identical(self):
        cam = default_camera()
        a = perturb_extrinsics(cam, 2.0, 0.01, np.random.default_rng(42))
        b = perturb_extrinsics(cam, 2.0, 0.01, np.random.default_rng(42))
        np.testing.assert_array_equal(a.pose.rotation, b.pose.rotation)
        np.testing.assert_array_equal(a.pose.translation, b.pose.translation)

    def test_negative_bounds_rejected(self):
        with pytest.raises(ValueError):
            perturb_extrinsics(default_camera(), -1.0, 0.0, np.random.default_rng(0))

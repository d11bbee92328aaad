# SPDX-License-Identifier: MIT
#
"""Test module for the HHA encoding on analytic planes"""
import unittest

import numpy as np

from hha.encoding import (CameraIntrinsics, DepthMap, HHAEncodingError, angle_with_gravity, depth_to_disparity, encode_hha, estimate_normals,
                          height_above_ground)

SIZE = 32
CAMERA = CameraIntrinsics.for_image(SIZE)


def tilted_plane(tilt_degrees, distance=2.0, k=CAMERA, size=SIZE):
    """Depth of the plane sin(t) * Y - cos(t) * Z = -distance; its camera-facing normal is (0, sin t, -cos t)"""
    t = np.radians(tilt_degrees)
    rows = np.arange(size, dtype=np.float64)[:, None]
    y_ray = (k.cy - rows) / k.fy
    return np.broadcast_to(distance / (np.cos(t) - np.sin(t) * y_ray), (size, size)).copy()


def floor_plane(camera_height=1.0, k=CAMERA, size=SIZE):
    """Horizontal floor below the camera; rows at or above the horizon are invalid"""
    rows = np.arange(size, dtype=np.float64)[:, None]
    y_ray = (k.cy - rows) / k.fy
    with np.errstate(divide='ignore'):
        depth = np.where(y_ray < 0, camera_height / -y_ray, 0.0)
    return DepthMap.from_array(np.broadcast_to(depth, (size, size)))


class TestDisparity(unittest.TestCase):
    """Test cases for the disparity channel"""

    def test_constant_plane_is_zero(self):
        channel = depth_to_disparity(DepthMap.from_array(np.full((4, 4), 3.0)))
        self.assertTrue(np.array_equal(channel, np.zeros((4, 4))))

    def test_two_pixels(self):
        channel = depth_to_disparity(DepthMap.from_array([[1.0, 2.0]]))
        self.assertAlmostEqual(channel[0, 0], 1.0, places=12)
        self.assertAlmostEqual(channel[0, 1], 0.0, places=12)

    def test_scale_invariance(self):
        depth = np.random.default_rng(0).uniform(0.5, 5.0, (8, 8))
        d = DepthMap.from_array(depth)
        self.assertTrue(np.allclose(depth_to_disparity(d), depth_to_disparity(d.scaled(2.0)), atol=1e-12))

    def test_antitone(self):
        depth = np.random.default_rng(1).uniform(0.5, 5.0, 200)
        channel = depth_to_disparity(DepthMap.from_array(depth.reshape(10, 20))).ravel()
        order = np.argsort(depth)
        self.assertTrue(np.all(np.diff(channel[order]) <= 0))

    def test_all_invalid(self):
        with self.assertRaises(HHAEncodingError):
            depth_to_disparity(DepthMap.from_array(np.zeros((3, 3))))


class TestNormals(unittest.TestCase):
    """Test cases for surface normal estimation"""

    def test_fronto_parallel_plane(self):
        normals, valid = estimate_normals(DepthMap.from_array(np.full((6, 6), 2.0)), CameraIntrinsics.for_image(6))
        self.assertTrue(valid[1:-1, 1:-1].all())
        self.assertFalse(valid[0].any() or valid[-1].any() or valid[:, 0].any() or valid[:, -1].any())
        self.assertTrue(np.allclose(normals[valid], [0.0, 0.0, -1.0], atol=1e-12))

    def test_unit_length(self):
        depth = DepthMap.from_array(np.random.default_rng(2).uniform(1.0, 3.0, (12, 12)))
        normals, valid = estimate_normals(depth, CameraIntrinsics.for_image(12))
        self.assertTrue(np.allclose(np.linalg.norm(normals[valid], axis=-1), 1.0, atol=1e-6))

    def test_inclined_plane(self):
        normals, valid = estimate_normals(DepthMap.from_array(tilted_plane(45.0)), CAMERA)
        expected = np.array([0.0, np.sin(np.radians(45.0)), -np.cos(np.radians(45.0))])
        angles = np.degrees(np.arccos(np.clip(normals[valid] @ expected, -1.0, 1.0)))
        self.assertTrue(valid[1:-1, 1:-1].all())
        self.assertLess(angles.max(), 2.0)

    def test_invalid_neighbourhood(self):
        depth = np.full((5, 5), 2.0)
        depth[2, 3] = 0.0
        _, valid = estimate_normals(DepthMap.from_array(depth), CameraIntrinsics.for_image(5))
        self.assertFalse(valid[2, 2])
        self.assertTrue(valid[1, 1])


class TestEncodeHHA(unittest.TestCase):
    """Test cases for the complete encoding"""

    def test_floor_angle_is_zero(self):
        d = floor_plane()
        _, valid = estimate_normals(d, CAMERA)
        angle = angle_with_gravity(d, CAMERA)
        self.assertGreater(valid.sum(), 0)
        self.assertLess(np.abs(angle[valid]).max(), 1e-3)

    def test_wall_angle_is_half(self):
        d = DepthMap.from_array(np.full((SIZE, SIZE), 2.5))
        _, valid = estimate_normals(d, CAMERA)
        self.assertTrue(np.allclose(encode_hha(d, CAMERA)[..., 2][valid], 0.5, atol=1e-3))

    def test_angle_scale_invariance(self):
        depth = tilted_plane(30.0)
        depth[8:20, 10:24] = 1.2
        d = DepthMap.from_array(depth)
        self.assertTrue(np.allclose(angle_with_gravity(d, CAMERA), angle_with_gravity(d.scaled(3.7), CAMERA), atol=1e-6))

    def test_height_ignores_horizontal_shift(self):
        depth = tilted_plane(20.0)
        depth[:, :SIZE // 2] = 1.5
        d = DepthMap.from_array(depth)
        shifted = CameraIntrinsics(CAMERA.fx, CAMERA.fy, CAMERA.cx + 7.0, CAMERA.cy)
        self.assertTrue(np.array_equal(height_above_ground(d, CAMERA), height_above_ground(d, shifted)))

    def test_height_grows_upwards(self):
        height = height_above_ground(DepthMap.from_array(np.full((6, 6), 2.0)), CameraIntrinsics.for_image(6))
        self.assertEqual(height[0, 0], 1.0)
        self.assertEqual(height[-1, 0], 0.0)

    def test_range_and_invalid_pixels(self):
        depth = tilted_plane(30.0)
        depth[3:6, 3:6] = 0.0
        depth[10, 10] = np.nan
        hha = encode_hha(DepthMap.from_array(depth), CAMERA)
        self.assertEqual(hha.shape, (SIZE, SIZE, 3))
        self.assertTrue(((hha >= 0.0) & (hha <= 1.0)).all())
        self.assertTrue(np.array_equal(hha[3:6, 3:6], np.zeros((3, 3, 3))))
        self.assertTrue(np.array_equal(hha[10, 10], np.zeros(3)))

    def test_bad_intrinsics(self):
        with self.assertRaises(HHAEncodingError):
            CameraIntrinsics(0.0, 1.0, 0.0, 0.0)


if __name__ == '__main__':
    unittest.main()

import numpy as np
import pytest

from menagerie.motion import Joint, SkeletonHierarchy, forward_kinematics
from menagerie.motion import quat

from conftest import random_clip, random_skeleton
from oracles import fk_matrix_oracle


def chain(offsets, orders=None):
    joints = []
    for i, off in enumerate(offsets):
        order = "ZXY" if orders is None else orders[i]
        channels = (
            ("Xposition", "Yposition", "Zposition") + tuple(f"{a}rotation" for a in order)
            if i == 0
            else tuple(f"{a}rotation" for a in order)
        )
        joints.append(
            Joint(name=f"j{i}", parent=i - 1, offset=np.array(off, dtype=float), channels=channels)
        )
    return SkeletonHierarchy(tuple(joints))


def test_zero_channels_positions_are_offset_sums():
    sk = chain([(0, 1, 0), (1, 0, 0), (0, 0, 2)])
    pos = forward_kinematics(sk, np.zeros(sk.channel_count))
    assert np.allclose(pos[0], [0, 1, 0])
    assert np.allclose(pos[1], [1, 1, 0])
    assert np.allclose(pos[2], [1, 1, 2])


def test_single_axis_rotation():
    sk = chain([(0, 0, 0), (1, 0, 0)])
    frame = np.zeros(sk.channel_count)
    frame[3] = 90.0  # root Zrotation
    pos = forward_kinematics(sk, frame)
    assert np.allclose(pos[1], [0, 1, 0], atol=1e-6)


def test_frame_length_checked():
    sk = chain([(0, 0, 0), (1, 0, 0)])
    with pytest.raises(Exception):
        forward_kinematics(sk, np.zeros(sk.channel_count + 1))


def test_fk_matches_matrix_oracle():
    rng = np.random.default_rng(11)
    for _ in range(50):
        skeleton = random_skeleton(rng)
        clip = random_clip(rng, skeleton, num_frames=3)
        for frame in clip.frames:
            ours = forward_kinematics(skeleton, frame)
            ref = fk_matrix_oracle(skeleton, frame)
            assert np.allclose(ours, ref, atol=1e-6)


def test_offset_scaling_scales_world_positions():
    rng = np.random.default_rng(3)
    for _ in range(20):
        skeleton = random_skeleton(rng)
        clip = random_clip(rng, skeleton, num_frames=2)
        s = float(rng.uniform(0.2, 4.0))
        scaled = skeleton.scaled(s)
        for frame in clip.frames:
            frame_scaled = frame.copy()
            a, _ = skeleton.channel_slices()[0]
            for ci, label in enumerate(skeleton.joints[0].channels):
                if label.endswith("position"):
                    frame_scaled[a + ci] *= s
            pos = forward_kinematics(skeleton, frame)
            pos_scaled = forward_kinematics(scaled, frame_scaled)
            assert np.allclose(pos_scaled, s * pos, atol=1e-6 * max(1.0, s))


def test_euler_conversions_against_scipy():
    from scipy.spatial.transform import Rotation

    rng = np.random.default_rng(5)
    for order in ["XYZ", "ZXY", "YZX", "ZYX", "XZY", "YXZ"]:
        angles = rng.uniform(-170, 170, (100, 3))
        q = quat.from_euler_deg(order, angles)
        m = quat.to_matrix(q)
        # intrinsic composition in declaration order matches uppercase scipy orders
        ref = Rotation.from_euler(order, angles, degrees=True).as_matrix()
        assert np.allclose(m, ref, atol=1e-9)
        back = quat.to_euler_deg(q, order)
        q2 = quat.from_euler_deg(order, back)
        # same rotation, possibly different euler representation
        assert np.allclose(quat.to_matrix(q2), m, atol=1e-9)


def test_rot6d_round_trip():
    rng = np.random.default_rng(6)
    angles = rng.uniform(-180, 180, (200, 3))
    q = quat.from_euler_deg("ZXY", angles)
    r6 = quat.to_6d(q)
    q2 = quat.from_6d(r6)
    assert np.allclose(quat.to_matrix(q2), quat.to_matrix(q), atol=1e-9)


def test_rot6d_degenerate_input_is_identity():
    q = quat.from_6d(np.zeros(6))
    assert np.allclose(quat.to_matrix(q), np.eye(3), atol=1e-12)

"""Motion feature matrices: a pose representation suitable for learning.

Layout per frame (D = 4 + 9J for J joints):

    [0:2]          root linear velocity in the heading-local XZ plane
    [2]            heading (yaw) angular velocity, radians per frame
    [3]            root height (world Y)
    [4 : 4+6J]     per-joint local rotations, 6D continuous representation
    [4+6J : 4+9J]  per-joint positions in the heading-local, root-centered
                   frame (Y kept absolute)

First-frame velocities are zero by definition. The inverse transform places
the first frame's root XZ at the origin; heading and height are absolute, so
clips that start at the XZ origin reconstruct exactly (up to float noise).
"""

import struct
from dataclasses import dataclass
from typing import BinaryIO, Union

import numpy as np

from . import quat
from .skeleton import (
    MotionClip,
    POSITION_CHANNELS,
    SkeletonHierarchy,
    forward_kinematics,
    joint_locals,
)

MAFM_MAGIC = b"MAFM"
MAFM_VERSION = 1


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSpec:
    """Feature layout for a fixed skeleton at a fixed frame rate."""

    skeleton: SkeletonHierarchy
    frame_time: float

    @property
    def num_joints(self) -> int:
        return self.skeleton.num_joints

    @property
    def dim(self) -> int:
        return 4 + 9 * self.num_joints

    def rotation_block(self):
        return slice(4, 4 + 6 * self.num_joints)

    def position_block(self):
        return slice(4 + 6 * self.num_joints, self.dim)


@dataclass(frozen=True)
class FeatureMatrix:
    data: np.ndarray  # (N, D)
    spec: FeatureSpec

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        if data.ndim != 2:
            raise FeatureError("feature data must be 2-D")
        if data.shape[1] != self.spec.dim:
            raise FeatureError(
                f"feature width {data.shape[1]} != spec dimension {self.spec.dim}"
            )
        if not np.all(np.isfinite(data)):
            raise FeatureError("feature data contains non-finite values")

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]


def _check_layout(skeleton: SkeletonHierarchy):
    root = skeleton.joints[0]
    if root.position_axes != "XYZ" and set(root.position_axes) != {"X", "Y", "Z"}:
        raise FeatureError(
            "unsupported channel layout: root must carry all three position channels"
        )
    for j in skeleton.joints[1:]:
        if j.position_axes:
            raise FeatureError(
                f"unsupported channel layout: non-root joint {j.name!r} has position channels"
            )
    for j in skeleton.joints:
        order = j.rotation_order
        if len(set(order)) != len(order):
            raise FeatureError(
                f"unsupported channel layout: joint {j.name!r} repeats a rotation axis"
            )


def to_features(clip: MotionClip, spec: FeatureSpec) -> FeatureMatrix:
    """Convert a motion clip to its feature-matrix form."""
    skeleton = spec.skeleton
    if not clip.skeleton.structurally_equal(skeleton):
        raise FeatureError("clip skeleton does not match the feature spec")
    _check_layout(skeleton)
    N = clip.num_frames
    J = skeleton.num_joints
    data = np.zeros((N, spec.dim))

    local_rots = np.zeros((N, J, 4))
    root_pos = np.zeros((N, 3))
    for t, frame in enumerate(clip.frames):
        locals_ = joint_locals(skeleton, frame)
        for j, (trans, rot) in enumerate(locals_):
            local_rots[t, j] = rot
        root_pos[t] = skeleton.joints[0].offset + locals_[0][0]

    yaw = quat.yaw_of(local_rots[:, 0])
    data[:, 3] = root_pos[:, 1]
    if N > 1:
        delta = root_pos[1:] - root_pos[:-1]
        local_delta = quat.rotate(quat.yaw_quat(-yaw[:-1]), delta)
        data[1:, 0] = local_delta[:, 0]
        data[1:, 1] = local_delta[:, 2]
        dyaw = yaw[1:] - yaw[:-1]
        data[1:, 2] = (dyaw + np.pi) % (2 * np.pi) - np.pi

    data[:, spec.rotation_block()] = quat.to_6d(local_rots).reshape(N, 6 * J)

    positions = np.stack([forward_kinematics(skeleton, f) for f in clip.frames])
    centered = positions - np.stack(
        [root_pos[:, 0], np.zeros(N), root_pos[:, 2]], axis=-1
    )[:, None, :]
    local_pos = quat.rotate(quat.yaw_quat(-yaw)[:, None, :], centered)
    data[:, spec.position_block()] = local_pos.reshape(N, 3 * J)
    return FeatureMatrix(data, spec)


def from_features(features: FeatureMatrix) -> MotionClip:
    """Reconstruct a motion clip from features (root XZ starts at the origin)."""
    spec = features.spec
    skeleton = spec.skeleton
    _check_layout(skeleton)
    data = features.data
    N = data.shape[0]
    J = spec.num_joints

    rot6d = data[:, spec.rotation_block()].reshape(N, J, 6)
    rots = quat.from_6d(rot6d)
    yaw = quat.yaw_of(rots[:, 0])

    root_pos = np.zeros((N, 3))
    root_pos[:, 1] = data[:, 3]
    for t in range(1, N):
        step = quat.rotate(quat.yaw_quat(yaw[t - 1]), np.array([data[t, 0], 0.0, data[t, 1]]))
        root_pos[t, 0] = root_pos[t - 1, 0] + step[0]
        root_pos[t, 2] = root_pos[t - 1, 2] + step[2]

    frames = np.zeros((N, skeleton.channel_count))
    slices = skeleton.channel_slices()
    for j, joint in enumerate(skeleton.joints):
        a, _ = slices[j]
        order = joint.rotation_order
        if order:
            full_order = order + "".join(ax for ax in "XYZ" if ax not in order)
            euler = quat.to_euler_deg(rots[:, j], full_order)
        for ci, label in enumerate(joint.channels):
            axis = label[0]
            if label in POSITION_CHANNELS:
                frames[:, a + ci] = root_pos[:, "XYZ".index(axis)] - joint.offset["XYZ".index(axis)]
            else:
                frames[:, a + ci] = euler[:, order.index(axis)]
    return MotionClip(skeleton, spec.frame_time, frames)


def write_feature_file(target: Union[str, BinaryIO], data: np.ndarray) -> None:
    """Write an (N, D) matrix as a MAFM file (row-major float32, little-endian)."""
    data = np.asarray(data, dtype="<f4")
    if data.ndim != 2:
        raise FeatureError("feature data must be 2-D")
    header = MAFM_MAGIC + struct.pack("<III", MAFM_VERSION, data.shape[0], data.shape[1])
    payload = header + data.tobytes(order="C")
    if hasattr(target, "write"):
        target.write(payload)
    else:
        with open(target, "wb") as fh:
            fh.write(payload)


def read_feature_file(source: Union[str, BinaryIO]) -> np.ndarray:
    """Read a MAFM file back into a float64 (N, D) matrix."""
    if hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    if len(raw) < 16 or raw[:4] != MAFM_MAGIC:
        raise FeatureError("not a MAFM feature file")
    version, n, d = struct.unpack("<III", raw[4:16])
    if version != MAFM_VERSION:
        raise FeatureError(f"unsupported MAFM version {version}")
    expected = 16 + 4 * n * d
    if len(raw) != expected:
        raise FeatureError(f"MAFM payload length {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<f4", count=n * d, offset=16)
    return data.reshape(n, d).astype(float)

"""Skeletal hierarchy and motion clip containers, plus forward kinematics."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quat

POSITION_CHANNELS = ("Xposition", "Yposition", "Zposition")
ROTATION_CHANNELS = ("Xrotation", "Yrotation", "Zrotation")
VALID_CHANNELS = POSITION_CHANNELS + ROTATION_CHANNELS


class SkeletonError(ValueError):
    pass


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int  # -1 for the root
    offset: np.ndarray  # (3,)
    channels: tuple  # channel label strings, in file order
    end_site: Optional[np.ndarray] = None  # leaf tip offset, if any

    @property
    def rotation_order(self) -> str:
        return "".join(c[0] for c in self.channels if c in ROTATION_CHANNELS)

    @property
    def position_axes(self) -> str:
        return "".join(c[0] for c in self.channels if c in POSITION_CHANNELS)


@dataclass(frozen=True)
class SkeletonHierarchy:
    joints: tuple

    def __post_init__(self):
        if not self.joints:
            raise SkeletonError("skeleton has no joints")
        roots = [i for i, j in enumerate(self.joints) if j.parent < 0]
        if roots != [0]:
            raise SkeletonError("skeleton must have exactly one root, first in order")
        names = set()
        for i, j in enumerate(self.joints):
            if i > 0 and not (0 <= j.parent < i):
                raise SkeletonError(f"joint {j.name!r}: parent must precede it")
            if j.name in names:
                raise SkeletonError(f"duplicate joint name {j.name!r}")
            names.add(j.name)
            for c in j.channels:
                if c not in VALID_CHANNELS:
                    raise SkeletonError(f"joint {j.name!r}: unknown channel {c!r}")

    @property
    def num_joints(self) -> int:
        return len(self.joints)

    @property
    def channel_count(self) -> int:
        return sum(len(j.channels) for j in self.joints)

    def channel_slices(self):
        """Per-joint (start, stop) into a flat frame vector."""
        slices = []
        pos = 0
        for j in self.joints:
            slices.append((pos, pos + len(j.channels)))
            pos += len(j.channels)
        return slices

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def children_of(self, index: int):
        return [i for i, j in enumerate(self.joints) if j.parent == index]

    def scaled(self, factor: float) -> "SkeletonHierarchy":
        return SkeletonHierarchy(
            tuple(
                Joint(
                    name=j.name,
                    parent=j.parent,
                    offset=j.offset * factor,
                    channels=j.channels,
                    end_site=None if j.end_site is None else j.end_site * factor,
                )
                for j in self.joints
            )
        )

    def to_dict(self) -> dict:
        return {
            "joints": [
                {
                    "name": j.name,
                    "parent": j.parent,
                    "offset": [float(v) for v in j.offset],
                    "channels": list(j.channels),
                    "end_site": None if j.end_site is None else [float(v) for v in j.end_site],
                }
                for j in self.joints
            ]
        }

    @staticmethod
    def from_dict(raw: dict) -> "SkeletonHierarchy":
        return SkeletonHierarchy(
            tuple(
                Joint(
                    name=j["name"],
                    parent=int(j["parent"]),
                    offset=np.asarray(j["offset"], dtype=float),
                    channels=tuple(j["channels"]),
                    end_site=None if j.get("end_site") is None else np.asarray(j["end_site"], dtype=float),
                )
                for j in raw["joints"]
            )
        )

    def structurally_equal(self, other: "SkeletonHierarchy", tol: float = 0.0) -> bool:
        if self.num_joints != other.num_joints:
            return False
        for a, b in zip(self.joints, other.joints):
            if a.name != b.name or a.parent != b.parent or a.channels != b.channels:
                return False
            if not np.allclose(a.offset, b.offset, atol=tol, rtol=0):
                return False
        return True


@dataclass(frozen=True)
class MotionClip:
    skeleton: SkeletonHierarchy
    frame_time: float
    frames: np.ndarray  # (N, C) channel values; degrees for rotations

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float)
        object.__setattr__(self, "frames", frames)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise SkeletonError("frames must be a non-empty (N, C) matrix")
        if frames.shape[1] != self.skeleton.channel_count:
            raise SkeletonError(
                f"frame width {frames.shape[1]} != skeleton channel count "
                f"{self.skeleton.channel_count}"
            )
        if not (self.frame_time > 0):
            raise SkeletonError("frame_time must be positive")
        if not np.all(np.isfinite(frames)):
            raise SkeletonError("frames contain non-finite values")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def duration(self) -> float:
        return self.num_frames * self.frame_time

    def with_frames(self, frames: np.ndarray) -> "MotionClip":
        return MotionClip(self.skeleton, self.frame_time, frames)


def _local_transform(joint: Joint, values: np.ndarray):
    """Local translation (added to offset) and rotation quaternion from
    a joint's channel values, applied in declared channel order."""
    trans = np.zeros(3)
    rot = quat.identity()
    for label, v in zip(joint.channels, values):
        axis = label[0]
        if label in POSITION_CHANNELS:
            trans["XYZ".index(axis)] += v
        else:
            rot = quat.mul(rot, quat.from_axis_angle_deg(axis, v))
    return trans, rot


def joint_locals(skeleton: SkeletonHierarchy, frame: np.ndarray):
    """Per-joint local (translation, rotation quaternion) for one frame."""
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (skeleton.channel_count,):
        raise SkeletonError(
            f"frame length {frame.shape} != channel count {skeleton.channel_count}"
        )
    out = []
    for joint, (a, b) in zip(skeleton.joints, skeleton.channel_slices()):
        out.append(_local_transform(joint, frame[a:b]))
    return out


def forward_kinematics(skeleton: SkeletonHierarchy, frame: np.ndarray) -> np.ndarray:
    """World positions (J, 3) of every joint for one frame of channel values."""
    locals_ = joint_locals(skeleton, frame)
    J = skeleton.num_joints
    world_pos = np.zeros((J, 3))
    world_rot = quat.identity((J,))
    for i, joint in enumerate(skeleton.joints):
        trans, rot = locals_[i]
        local_pos = joint.offset + trans
        if joint.parent < 0:
            world_pos[i] = local_pos
            world_rot[i] = rot
        else:
            p = joint.parent
            world_pos[i] = world_pos[p] + quat.rotate(world_rot[p], local_pos)
            world_rot[i] = quat.mul(world_rot[p], rot)
    return world_pos


def forward_kinematics_clip(skeleton: SkeletonHierarchy, clip: MotionClip) -> np.ndarray:
    """World positions (N, J, 3) for every frame."""
    return np.stack([forward_kinematics(skeleton, f) for f in clip.frames])


def world_rotations(skeleton: SkeletonHierarchy, frame: np.ndarray) -> np.ndarray:
    """World rotation quaternions (J, 4) for one frame."""
    locals_ = joint_locals(skeleton, frame)
    J = skeleton.num_joints
    world_rot = quat.identity((J,))
    for i, joint in enumerate(skeleton.joints):
        _, rot = locals_[i]
        if joint.parent < 0:
            world_rot[i] = rot
        else:
            world_rot[i] = quat.mul(world_rot[joint.parent], rot)
    return world_rot

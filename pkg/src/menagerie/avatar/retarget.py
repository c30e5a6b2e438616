"""Motion retargeting onto a rigged mesh's skeleton."""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..motion import quat
from ..motion.skeleton import (
    MotionClip,
    POSITION_CHANNELS,
    SkeletonHierarchy,
)
from .rig import RiggedMesh


class RetargetError(ValueError):
    pass


@dataclass(frozen=True)
class JointMap:
    """source joint name -> target joint name; unmapped-source policy."""

    pairs: Tuple[Tuple[str, str], ...]
    unmapped_policy: str = "drop"  # "drop" | "inherit-parent"

    def __post_init__(self):
        if self.unmapped_policy not in ("drop", "inherit-parent"):
            raise RetargetError(f"unknown policy {self.unmapped_policy!r}")
        sources = [s for s, _ in self.pairs]
        targets = [t for _, t in self.pairs]
        if len(set(sources)) != len(sources):
            raise RetargetError("joint map is not functional: duplicate source")
        if len(set(targets)) != len(targets):
            raise RetargetError("two sources map to one target joint")

    @property
    def mapping(self) -> Dict[str, str]:
        return dict(self.pairs)

    @staticmethod
    def identity(skeleton: SkeletonHierarchy, policy: str = "drop") -> "JointMap":
        return JointMap(tuple((j.name, j.name) for j in skeleton.joints), policy)


def _rest_root_height(skeleton: SkeletonHierarchy) -> float:
    return float(skeleton.joints[0].offset[1])


def _local_rotation(clip: MotionClip, joint_index: int) -> np.ndarray:
    """(N, 4) local rotation quaternions for one joint across all frames."""
    joint = clip.skeleton.joints[joint_index]
    a, _ = clip.skeleton.channel_slices()[joint_index]
    order = joint.rotation_order
    if not order:
        return quat.identity((clip.num_frames,))
    cols = [a + ci for ci, lab in enumerate(joint.channels) if lab not in POSITION_CHANNELS]
    return quat.from_euler_deg(order, clip.frames[:, cols])


def retarget(clip: MotionClip, joint_map: JointMap, target: RiggedMesh) -> MotionClip:
    """Copy mapped joint rotations onto the target rig and scale the root
    translation by the bind-pose root-height ratio.

    Unmapped target joints stay at bind (zero rotation). Unmapped source
    joints are dropped, or, under "inherit-parent", their rotations are
    composed into the nearest mapped descendant's chain so world orientation
    is preserved.
    """
    source = clip.skeleton
    rig = target.rig
    mapping = joint_map.mapping
    src_names = {j.name for j in source.joints}
    tgt_index = {j.name: i for i, j in enumerate(rig.joints)}
    for s, t in mapping.items():
        if s not in src_names:
            raise RetargetError(f"mapped source joint {s!r} missing from the clip skeleton")
        if t not in tgt_index:
            raise RetargetError(f"mapped target joint {t!r} missing from the rig")

    src_h = _rest_root_height(source)
    tgt_h = target.root_height
    scale = tgt_h / src_h if abs(src_h) > 1e-9 else 1.0

    N = clip.num_frames
    out = np.zeros((N, rig.channel_count))
    tgt_slices = rig.channel_slices()
    src_slices = source.channel_slices()
    src_name_to_idx = {j.name: i for i, j in enumerate(source.joints)}

    for s_idx, s_joint in enumerate(source.joints):
        t_name = mapping.get(s_joint.name)
        if t_name is None:
            continue
        t_idx = tgt_index[t_name]
        t_joint = rig.joints[t_idx]
        ta, _ = tgt_slices[t_idx]

        # unmapped ancestors between this joint and its nearest mapped
        # ancestor contribute their rotation under the inherit policy
        chain = []
        if joint_map.unmapped_policy == "inherit-parent":
            p = s_joint.parent
            while p >= 0 and source.joints[p].name not in mapping:
                chain.append(p)
                p = source.joints[p].parent
        chain.reverse()

        src_order = s_joint.rotation_order
        tgt_order = t_joint.rotation_order
        if not chain and src_order == tgt_order and src_order:
            # verbatim channel copy keeps rotations bit-identical
            sa, _ = src_slices[s_idx]
            s_rot_cols = [sa + ci for ci, lab in enumerate(s_joint.channels) if lab not in POSITION_CHANNELS]
            t_rot_cols = [ta + ci for ci, lab in enumerate(t_joint.channels) if lab not in POSITION_CHANNELS]
            out[:, t_rot_cols] = clip.frames[:, s_rot_cols]
        elif tgt_order:
            rot = quat.identity((N,))
            for idx in chain:
                rot = quat.mul(rot, _local_rotation(clip, idx))
            rot = quat.mul(rot, _local_rotation(clip, s_idx))
            full = tgt_order + "".join(ax for ax in "XYZ" if ax not in tgt_order)
            euler = quat.to_euler_deg(rot, full)
            t_rot_cols = [ta + ci for ci, lab in enumerate(t_joint.channels) if lab not in POSITION_CHANNELS]
            for ci, axis in enumerate(tgt_order):
                out[:, t_rot_cols[ci]] = euler[:, ci]

        # root translation: channel values scaled by the bind height ratio
        sa, _ = src_slices[s_idx]
        s_pos = {lab[0]: sa + ci for ci, lab in enumerate(s_joint.channels) if lab in POSITION_CHANNELS}
        t_pos = {lab[0]: ta + ci for ci, lab in enumerate(t_joint.channels) if lab in POSITION_CHANNELS}
        for axis, t_col in t_pos.items():
            if axis in s_pos:
                out[:, t_col] = clip.frames[:, s_pos[axis]] * scale

    return MotionClip(rig, clip.frame_time, out)

"""Deterministic kinematic augmentation of motion clips.

Each operation is a small serializable value; applying a recorded sequence of
operations to the same source clip reproduces the same frames bit for bit
(noise operations carry their seed).
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..motion import quat
from ..motion.ops import ClipOpError, crop as crop_clip, resample
from ..motion.skeleton import MotionClip, POSITION_CHANNELS

KINDS = ("mirror", "time_warp", "crop", "splice", "jitter")

MIRROR_AFFIXES = (("Left", "Right"), ("left", "right"), ("L_", "R_"), ("_L", "_R"))


class AugmentError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentOp:
    kind: str
    factor: float = 1.0          # time_warp
    start: int = 0               # crop
    end: int = 0                 # crop
    other_id: str = ""           # splice
    blend_frames: int = 0        # splice
    sigma: float = 0.0           # jitter
    seed: int = 0                # jitter

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AugmentError(f"unknown augmentation {self.kind!r}")
        if self.kind == "time_warp" and not self.factor > 0:
            raise AugmentError("time_warp factor must be positive")
        if self.kind == "crop" and not (0 <= self.start < self.end):
            raise AugmentError("crop needs 0 <= start < end")
        if self.kind == "splice" and self.blend_frames < 0:
            raise AugmentError("blend_frames must be >= 0")
        if self.kind == "jitter" and self.sigma < 0:
            raise AugmentError("sigma must be >= 0")

    def signature(self) -> str:
        if self.kind == "mirror":
            return "mirror"
        if self.kind == "time_warp":
            return f"time_warp({self.factor:g})"
        if self.kind == "crop":
            return f"crop({self.start},{self.end})"
        if self.kind == "splice":
            return f"splice({self.other_id},{self.blend_frames})"
        return f"jitter({self.sigma:g},seed={self.seed})"

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "time_warp":
            out["factor"] = self.factor
        elif self.kind == "crop":
            out.update(start=self.start, end=self.end)
        elif self.kind == "splice":
            out.update(other_id=self.other_id, blend_frames=self.blend_frames)
        elif self.kind == "jitter":
            out.update(sigma=self.sigma, seed=self.seed)
        return out

    @staticmethod
    def from_dict(raw: dict) -> "AugmentOp":
        return AugmentOp(**raw)


def mirror_pairs(skeleton) -> List[Tuple[int, int]]:
    """Left/right joint index pairs detected from name affixes."""
    index = {j.name: i for i, j in enumerate(skeleton.joints)}
    pairs = []
    seen = set()
    for name, i in index.items():
        for left, right in MIRROR_AFFIXES:
            if left in name:
                partner = name.replace(left, right, 1)
                if partner in index and i not in seen and index[partner] not in seen:
                    pairs.append((i, index[partner]))
                    seen.add(i)
                    seen.add(index[partner])
                break
    return pairs


def _mirror(clip: MotionClip, pairs: Optional[Sequence[Tuple[int, int]]] = None) -> MotionClip:
    skeleton = clip.skeleton
    if pairs is None:
        pairs = mirror_pairs(skeleton)
    for a, b in pairs:
        if skeleton.joints[a].channels != skeleton.joints[b].channels:
            raise AugmentError(
                f"mirrored joints {skeleton.joints[a].name!r}/{skeleton.joints[b].name!r} "
                "have different channel layouts"
            )
    frames = clip.frames.copy()
    slices = skeleton.channel_slices()
    swap = {a: b for a, b in pairs}
    swap.update({b: a for a, b in pairs})
    for j in range(skeleton.num_joints):
        src = swap.get(j, j)
        a_dst, b_dst = slices[j]
        a_src, _ = slices[src]
        width = b_dst - a_dst
        block = clip.frames[:, a_src : a_src + width].copy()
        for ci, label in enumerate(skeleton.joints[j].channels):
            if label in ("Xposition", "Yrotation", "Zrotation"):
                block[:, ci] = -block[:, ci]
        frames[:, a_dst:b_dst] = block
    return clip.with_frames(frames)


def _time_warp(clip: MotionClip, factor: float) -> MotionClip:
    if factor == 1.0:
        return clip.with_frames(clip.frames.copy())
    warped = resample(clip, clip.frame_time / factor)
    return MotionClip(clip.skeleton, clip.frame_time, warped.frames)


def _splice(a: MotionClip, b: MotionClip, blend_frames: int) -> MotionClip:
    if not a.skeleton.structurally_equal(b.skeleton):
        raise AugmentError("splice requires structurally equal skeletons")
    if blend_frames > b.num_frames:
        raise AugmentError("blend_frames exceeds the second clip's length")
    frames_b = b.frames.copy()
    skeleton = a.skeleton
    slices = skeleton.channel_slices()
    last = a.frames[-1]
    for i in range(blend_frames):
        t = (i + 1) / (blend_frames + 1)
        for j, joint in enumerate(skeleton.joints):
            s, _ = slices[j]
            order = joint.rotation_order
            rot_cols = [s + ci for ci, lab in enumerate(joint.channels) if lab not in POSITION_CHANNELS]
            pos_cols = [s + ci for ci, lab in enumerate(joint.channels) if lab in POSITION_CHANNELS]
            for c in pos_cols:
                frames_b[i, c] = (1 - t) * last[c] + t * b.frames[i, c]
            if order:
                qa = quat.from_euler_deg(order, last[rot_cols])
                qb = quat.from_euler_deg(order, b.frames[i, rot_cols])
                qi = quat.slerp(qa, qb, np.array(t))
                full = order + "".join(ax for ax in "XYZ" if ax not in order)
                euler = quat.to_euler_deg(qi, full)
                for ci in range(len(order)):
                    frames_b[i, rot_cols[ci]] = euler[ci]
    return MotionClip(skeleton, a.frame_time, np.vstack([a.frames, frames_b]))


def _jitter(clip: MotionClip, sigma: float, seed: int) -> MotionClip:
    rng = np.random.default_rng(seed)
    frames = clip.frames.copy()
    slices = clip.skeleton.channel_slices()
    for j, joint in enumerate(clip.skeleton.joints):
        s, _ = slices[j]
        for ci, label in enumerate(joint.channels):
            if label not in POSITION_CHANNELS:
                frames[:, s + ci] += rng.normal(0.0, sigma, clip.num_frames)
    return clip.with_frames(frames)


def augment(clip: MotionClip, op: AugmentOp, other: Optional[MotionClip] = None,
            pairs: Optional[Sequence[Tuple[int, int]]] = None) -> MotionClip:
    """Apply one augmentation; `other` supplies the second clip for splice."""
    if op.kind == "mirror":
        return _mirror(clip, pairs)
    if op.kind == "time_warp":
        return _time_warp(clip, op.factor)
    if op.kind == "crop":
        return crop_clip(clip, op.start, op.end)
    if op.kind == "splice":
        if other is None:
            raise AugmentError("splice needs the other clip")
        return _splice(clip, other, op.blend_frames)
    return _jitter(clip, op.sigma, op.seed)


def apply_sequence(clip: MotionClip, ops: Sequence[AugmentOp],
                   others: Optional[Dict[str, MotionClip]] = None) -> MotionClip:
    out = clip
    for op in ops:
        other = (others or {}).get(op.other_id) if op.kind == "splice" else None
        out = augment(out, op, other=other)
    return out


def enumerate_variants(clip: MotionClip, op_grid: Sequence[AugmentOp], budget: int,
                       others: Optional[Dict[str, MotionClip]] = None):
    """All op sequences of length 1 and 2 over the grid, in grid order,
    deduplicated by signature and truncated to `budget`. Sequences whose
    ops cannot apply to the (possibly shortened) clip are skipped."""
    if budget < 1:
        raise AugmentError("budget must be >= 1")
    sequences = [(op,) for op in op_grid]
    sequences += [(a, b) for a in op_grid for b in op_grid]
    seen = set()
    out = []
    for seq in sequences:
        sig = tuple(op.signature() for op in seq)
        if sig in seen:
            continue
        seen.add(sig)
        try:
            variant = apply_sequence(clip, seq, others)
        except (AugmentError, ClipOpError):
            continue
        out.append((list(seq), variant))
        if len(out) >= budget:
            break
    return out

"""Clip-level editing primitives: cropping and temporal resampling."""

import numpy as np

from . import quat
from .skeleton import MotionClip, POSITION_CHANNELS


class ClipOpError(ValueError):
    pass


def crop(clip: MotionClip, start: int, end: int) -> MotionClip:
    """Slice frames [start, end)."""
    if not (0 <= start < end <= clip.num_frames):
        raise ClipOpError(
            f"invalid crop range [{start}, {end}) for {clip.num_frames} frames"
        )
    return clip.with_frames(clip.frames[start:end].copy())


def resample(clip: MotionClip, new_frame_time: float) -> MotionClip:
    """Resample to a new frame time.

    Rotation channels are interpolated spherically on quaternions, position
    channels linearly. Resampling to the same frame time is an exact copy.
    """
    if not new_frame_time > 0:
        raise ClipOpError("new_frame_time must be positive")
    if new_frame_time == clip.frame_time:
        return clip.with_frames(clip.frames.copy())

    skeleton = clip.skeleton
    N = clip.num_frames
    duration = (N - 1) * clip.frame_time
    new_n = int(np.floor(duration / new_frame_time + 1e-9)) + 1
    new_n = max(new_n, 1)

    s = np.arange(new_n) * (new_frame_time / clip.frame_time)
    i0 = np.clip(np.floor(s).astype(int), 0, N - 1)
    i1 = np.clip(i0 + 1, 0, N - 1)
    alpha = np.clip(s - i0, 0.0, 1.0)

    out = np.zeros((new_n, skeleton.channel_count))
    slices = skeleton.channel_slices()
    for j, joint in enumerate(skeleton.joints):
        a, b = slices[j]
        order = joint.rotation_order
        rot_cols = [a + ci for ci, lab in enumerate(joint.channels) if lab not in POSITION_CHANNELS]
        pos_cols = [a + ci for ci, lab in enumerate(joint.channels) if lab in POSITION_CHANNELS]
        for c in pos_cols:
            out[:, c] = (1 - alpha) * clip.frames[i0, c] + alpha * clip.frames[i1, c]
        if order:
            angles = clip.frames[:, rot_cols]
            q = quat.from_euler_deg(order, angles)
            interp = quat.slerp(q[i0], q[i1], alpha)
            full_order = order + "".join(ax for ax in "XYZ" if ax not in order)
            euler = quat.to_euler_deg(interp, full_order)
            for ci, axis in enumerate(order):
                out[:, rot_cols[ci]] = euler[:, ci]
    return MotionClip(skeleton, new_frame_time, out)

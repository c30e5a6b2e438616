"""Caption generation and refinement for motion clips.

Backends speak the chat-completion protocol. Without a backend, captioning
falls back to a deterministic template and refinement is the identity; both
paths keep the builder fully offline.
"""

import json
import warnings
from typing import Optional

import numpy as np

from ..backends import BackendError, ChatBackend
from ..motion.skeleton import MotionClip, forward_kinematics

CAPTION_SYSTEM = (
    "You write one short paragraph describing an animal motion clip from "
    "category labels and numeric statistics. Mention the animal and the "
    "motion; do not invent extra context."
)

REFINE_SYSTEM = (
    "Rewrite the following motion caption concisely. Keep the animal and "
    "motion mentions. Reply with the rewritten caption only."
)


def motion_statistics(clip: MotionClip) -> dict:
    """Summary numbers handed to caption backends in place of rendered video."""
    positions = np.stack([forward_kinematics(clip.skeleton, f) for f in clip.frames])
    root = positions[:, 0]
    steps = np.linalg.norm(np.diff(root, axis=0), axis=1) if clip.num_frames > 1 else np.zeros(1)
    return {
        "duration_s": round(clip.duration, 3),
        "frames": clip.num_frames,
        "mean_root_speed": round(float(steps.mean() / clip.frame_time), 4),
        "path_length": round(float(steps.sum()), 4),
        "net_displacement": round(float(np.linalg.norm(root[-1] - root[0])), 4),
    }


def caption_motion(clip: MotionClip, animal: str, motion: str,
                   backend: Optional[ChatBackend] = None) -> str:
    """Produce a caption; the offline default is a fixed template."""
    if not animal or not motion:
        raise ValueError("animal and motion categories are required")
    if backend is None:
        return f"a {animal} performs {motion} for {clip.duration:.1f}s"
    stats = motion_statistics(clip)
    user = (
        f"animal: {animal}\nmotion: {motion}\nstatistics: {json.dumps(stats, sort_keys=True)}"
    )
    reply = backend.complete(
        [{"role": "system", "content": CAPTION_SYSTEM}, {"role": "user", "content": user}]
    ).strip()
    if not reply:
        raise BackendError("caption backend returned empty text")
    return reply


def refine_caption_checked(text: str, backend: Optional[ChatBackend] = None):
    """Like refine_caption, but also reports whether refinement succeeded."""
    if not text or not text.strip():
        raise ValueError("caption text is empty")
    if backend is None:
        return text, True
    try:
        reply = backend.complete(
            [{"role": "system", "content": REFINE_SYSTEM}, {"role": "user", "content": text}]
        ).strip()
    except BackendError as exc:
        warnings.warn(f"caption refinement failed, keeping original: {exc}")
        return text, False
    if not reply or len(reply) > 2 * len(text):
        return text, True
    return reply, True


def refine_caption(text: str, backend: Optional[ChatBackend] = None) -> str:
    """Ask the backend for a concise rewrite; keep the original on transport
    failure or when the rewrite is empty or more than twice the original
    length. Without a backend this is the identity."""
    return refine_caption_checked(text, backend)[0]

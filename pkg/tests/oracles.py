"""Independent re-implementations used as test oracles.

Everything here is deliberately written against different primitives than the
library (scipy rotations and explicit 4x4 matrices instead of quaternions;
plain loops instead of vectorized code) so that agreement is meaningful.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from menagerie.motion.skeleton import (
    MotionClip,
    POSITION_CHANNELS,
    SkeletonHierarchy,
)


def fk_matrix_oracle(skeleton: SkeletonHierarchy, frame: np.ndarray) -> np.ndarray:
    """Forward kinematics via homogeneous 4x4 matrix composition."""
    frame = np.asarray(frame, dtype=float)
    slices = skeleton.channel_slices()
    world = []
    for i, joint in enumerate(skeleton.joints):
        a, b = slices[i]
        values = frame[a:b]
        local = np.eye(4)
        local[:3, 3] = joint.offset
        trans = np.zeros(3)
        rot = np.eye(3)
        for label, v in zip(joint.channels, values):
            if label in POSITION_CHANNELS:
                trans["XYZ".index(label[0])] += v
            else:
                rot = rot @ Rotation.from_euler(label[0].lower(), v, degrees=True).as_matrix()
        local[:3, 3] += trans
        local[:3, :3] = rot
        if joint.parent < 0:
            world.append(local)
        else:
            world.append(world[joint.parent] @ local)
    return np.array([m[:3, 3] for m in world])


def fk_clip_oracle(skeleton: SkeletonHierarchy, clip: MotionClip) -> np.ndarray:
    return np.stack([fk_matrix_oracle(skeleton, f) for f in clip.frames])


def nearest_code_oracle(latents: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    """Exhaustive nearest-neighbour indices, first index wins ties."""
    out = np.empty(latents.shape[0], dtype=int)
    for i, row in enumerate(latents):
        best, best_d = 0, np.inf
        for k, code in enumerate(codebook):
            d = float(np.sum((row - code) ** 2))
            if d < best_d:
                best, best_d = k, d
        out[i] = best
    return out


def residual_quantize_oracle(latents: np.ndarray, codebooks: np.ndarray):
    """Layer-by-layer exhaustive residual quantization."""
    layers = []
    residual = latents.astype(float).copy()
    total = np.zeros_like(residual)
    for codebook in codebooks:
        idx = nearest_code_oracle(residual, codebook)
        chosen = codebook[idx]
        layers.append(idx)
        residual = residual - chosen
        total = total + chosen
    return np.stack(layers), total


def r_precision_oracle(text_emb, motion_emb, k, pool_size, seed):
    """Exhaustive ranking with ties counted against the matched text."""
    rng = np.random.default_rng(seed)
    B = motion_emb.shape[0]
    hits = 0
    for i in range(B):
        others = [j for j in range(B) if j != i]
        distractors = rng.choice(others, size=pool_size - 1, replace=False)
        d_true = float(np.linalg.norm(motion_emb[i] - text_emb[i]))
        rank = 1
        for j in distractors:
            d = float(np.linalg.norm(motion_emb[i] - text_emb[j]))
            if d <= d_true:
                rank += 1
        if rank <= k:
            hits += 1
    return hits / B


def fid_diagonal_oracle(mu1, var1, mu2, var2):
    """Closed-form Frechet distance for diagonal Gaussians."""
    mu1, var1, mu2, var2 = (np.asarray(x, dtype=float) for x in (mu1, var1, mu2, var2))
    return float(np.sum((mu1 - mu2) ** 2) + np.sum((np.sqrt(var1) - np.sqrt(var2)) ** 2))


def euler_characteristic(vertices, faces):
    """V - E + F per connected component of a triangle mesh."""
    parent = list(range(len(vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    edges = set()
    for f in faces:
        for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            union(u, v)
            edges.add((min(u, v), max(u, v)))
    comp_v, comp_e, comp_f = {}, {}, {}
    for v in range(len(vertices)):
        comp_v[find(v)] = comp_v.get(find(v), 0) + 1
    for u, v in edges:
        comp_e[find(u)] = comp_e.get(find(u), 0) + 1
    for f in faces:
        comp_f[find(f[0])] = comp_f.get(find(f[0]), 0) + 1
    chis = {}
    for c in comp_v:
        chis[c] = comp_v.get(c, 0) - comp_e.get(c, 0) + comp_f.get(c, 0)
    return list(chis.values())

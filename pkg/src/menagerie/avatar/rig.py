"""Automatic rigging: fit a template skeleton into a mesh and skin it."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..motion.skeleton import Joint, SkeletonHierarchy, forward_kinematics
from .mesh import Mesh

MAX_INFLUENCES = 4


class RigError(ValueError):
    pass


@dataclass(frozen=True)
class RiggedMesh:
    mesh: Mesh
    rig: SkeletonHierarchy
    bind_pose: np.ndarray  # (J, 4, 4) world transforms at bind
    weights: tuple  # per vertex: tuple of (joint_index, weight)

    def __post_init__(self):
        for vertex_weights in self.weights:
            total = sum(w for _, w in vertex_weights)
            if abs(total - 1.0) > 1e-5:
                raise RigError(f"vertex weights sum to {total}, expected 1")
            if len(vertex_weights) > MAX_INFLUENCES:
                raise RigError("more than 4 influences on a vertex")
            if any(w < 0 for _, w in vertex_weights):
                raise RigError("negative skin weight")

    @property
    def root_height(self) -> float:
        return float(self.bind_pose[0][1, 3])


def _rest_positions(skeleton: SkeletonHierarchy) -> np.ndarray:
    return forward_kinematics(skeleton, np.zeros(skeleton.channel_count))


def _point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-18:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def fit_template(mesh: Mesh, template: SkeletonHierarchy) -> SkeletonHierarchy:
    """Scale/translate the template so its rest bounding box matches the mesh's."""
    lo, hi = mesh.bounds
    extent = hi - lo
    if np.all(extent < 1e-9):
        raise RigError("mesh has zero extent")
    rest = _rest_positions(template)
    pts = [rest]
    for i, joint in enumerate(template.joints):
        if joint.end_site is not None:
            pts.append(rest[i] + joint.end_site[None])
    rest_all = np.vstack(pts)
    t_lo, t_hi = rest_all.min(axis=0), rest_all.max(axis=0)
    t_extent = t_hi - t_lo
    scale = np.where(t_extent > 1e-9, extent / np.where(t_extent > 1e-9, t_extent, 1.0), 1.0)
    shift = lo - scale * t_lo

    joints: List[Joint] = []
    for i, joint in enumerate(template.joints):
        if joint.parent < 0:
            offset = scale * rest[i] + shift
        else:
            offset = scale * joint.offset
        end = None if joint.end_site is None else scale * joint.end_site
        joints.append(Joint(joint.name, joint.parent, offset, joint.channels, end))
    return SkeletonHierarchy(tuple(joints))


def _bone_segments(skeleton: SkeletonHierarchy, rest: np.ndarray) -> List[Tuple[int, np.ndarray, np.ndarray]]:
    """(owning joint, start, end) per bone; a bone is owned by its parent-side
    joint, whose transform carries it. Single-joint rigs get a point bone."""
    segments = []
    for i, joint in enumerate(skeleton.joints):
        if joint.parent >= 0:
            segments.append((joint.parent, rest[joint.parent], rest[i]))
        if joint.end_site is not None:
            segments.append((i, rest[i], rest[i] + joint.end_site))
    if not segments:
        segments.append((0, rest[0], rest[0]))
    return segments


def auto_rig(mesh: Mesh, template: SkeletonHierarchy) -> RiggedMesh:
    """Embed a bounding-box-fitted copy of the template and skin the mesh.

    Per vertex, the four nearest bone segments contribute inverse-square-
    distance weights, which are then merged per owning joint and normalized.
    """
    if len(mesh.vertices) == 0:
        raise RigError("mesh has no vertices")
    return skin_mesh(mesh, fit_template(mesh, template))


def skin_mesh(mesh: Mesh, rig: SkeletonHierarchy) -> RiggedMesh:
    """Skin a mesh against an already-positioned rig (no bounding-box fit)."""
    rest = _rest_positions(rig)
    bind = np.tile(np.eye(4), (rig.num_joints, 1, 1))
    bind[:, :3, 3] = rest

    segments = _bone_segments(rig, rest)
    dists = np.stack(
        [_point_segment_distance(mesh.vertices, a, b) for _, a, b in segments], axis=1
    )
    owners = np.array([owner for owner, _, _ in segments])

    weights = []
    k = min(MAX_INFLUENCES, len(segments))
    for row in dists:
        nearest = np.argsort(row)[:k]
        w = 1.0 / (row[nearest] ** 2 + 1e-12)
        joint_w = {}
        for seg_idx, wi in zip(nearest, w):
            j = int(owners[seg_idx])
            joint_w[j] = joint_w.get(j, 0.0) + float(wi)
        total = sum(joint_w.values())
        weights.append(tuple((j, wi / total) for j, wi in sorted(joint_w.items())))
    return RiggedMesh(mesh=mesh, rig=rig, bind_pose=bind, weights=tuple(weights))

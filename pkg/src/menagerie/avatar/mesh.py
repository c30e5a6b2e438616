"""Triangle meshes and procedural body construction.

Bodies are unions of closed primitives (capsule torso, cylinder limbs,
sphere head); parts are kept as separate watertight components, so every
connected component is a topological sphere.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

BODY_PLANS = ("quadruped", "biped", "serpent", "winged")


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (V, 3) float
    faces: np.ndarray  # (F, 3) int
    uvs: Optional[np.ndarray] = None
    colors: Optional[np.ndarray] = None

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)
        if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError("face index out of range")
        for f in faces:
            if f[0] == f[1] or f[1] == f[2] or f[0] == f[2]:
                raise MeshError(f"degenerate face {f.tolist()}")

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def translated(self, delta) -> "Mesh":
        return Mesh(self.vertices + np.asarray(delta, dtype=float), self.faces, self.uvs, self.colors)


def merge(meshes: List[Mesh]) -> Mesh:
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    return Mesh(np.vstack(verts), np.vstack(faces))


def _orient_frame(axis: np.ndarray) -> np.ndarray:
    """Orthonormal frame whose +Y column aligns with `axis`."""
    y = axis / np.linalg.norm(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(y[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
    x = np.cross(helper, y)
    x /= np.linalg.norm(x)
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=1)


def uv_sphere(center, radius: float, rings: int = 6, segments: int = 10) -> Mesh:
    center = np.asarray(center, dtype=float)
    verts = [center + [0, radius, 0]]
    for r in range(1, rings):
        phi = np.pi * r / rings
        for s in range(segments):
            theta = 2 * np.pi * s / segments
            verts.append(
                center
                + radius * np.array([np.sin(phi) * np.cos(theta), np.cos(phi), np.sin(phi) * np.sin(theta)])
            )
    verts.append(center + [0, -radius, 0])
    bottom = len(verts) - 1
    faces = []
    for s in range(segments):
        faces.append([0, 1 + (s + 1) % segments, 1 + s])
    for r in range(rings - 2):
        a = 1 + r * segments
        b = 1 + (r + 1) * segments
        for s in range(segments):
            s2 = (s + 1) % segments
            faces.append([a + s, a + s2, b + s])
            faces.append([a + s2, b + s2, b + s])
    last = 1 + (rings - 2) * segments
    for s in range(segments):
        faces.append([bottom, last + s, last + (s + 1) % segments])
    return Mesh(np.array(verts), np.array(faces))


def capped_cylinder(p0, p1, radius: float, segments: int = 10) -> Mesh:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    axis = p1 - p0
    if np.linalg.norm(axis) < 1e-9:
        raise MeshError("cylinder endpoints coincide")
    frame = _orient_frame(axis)
    ring = [
        radius * (frame[:, 0] * np.cos(2 * np.pi * s / segments) + frame[:, 2] * np.sin(2 * np.pi * s / segments))
        for s in range(segments)
    ]
    verts = [p0, p1]
    verts += [p0 + r for r in ring]
    verts += [p1 + r for r in ring]
    faces = []
    for s in range(segments):
        s2 = (s + 1) % segments
        a, b = 2 + s, 2 + s2
        c, d = 2 + segments + s, 2 + segments + s2
        faces.append([0, b, a])
        faces.append([1, c, d])
        faces.append([a, b, c])
        faces.append([b, d, c])
    return Mesh(np.array(verts), np.array(faces))


def capsule(p0, p1, radius: float, rings: int = 4, segments: int = 10) -> Mesh:
    """Cylinder with hemispherical caps, built as a stretched uv sphere."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length < 1e-9:
        return uv_sphere(p0, radius, rings=2 * rings, segments=segments)
    sphere = uv_sphere(np.zeros(3), radius, rings=2 * rings, segments=segments)
    verts = sphere.vertices.copy()
    shift = np.where(verts[:, 1] >= 0, length / 2, -length / 2)
    verts[:, 1] += shift
    frame = _orient_frame(axis)
    center = (p0 + p1) / 2
    return Mesh(verts @ frame.T + center, sphere.faces)


def _flatten(mesh: Mesh, axis: int, factor: float) -> Mesh:
    verts = mesh.vertices.copy()
    center = verts.mean(axis=0)
    verts[:, axis] = center[axis] + (verts[:, axis] - center[axis]) * factor
    return Mesh(verts, mesh.faces)


_DEFAULT_PARAMS = {
    "scale": 1.0,
    "torso_radius": 0.45,
    "limb_radius": 0.12,
    "head_radius": 0.35,
    "segments": 10,
}


def procedural_mesh(body_plan: str, params: Optional[Dict] = None) -> Mesh:
    """Deterministic parametric body for a plan in BODY_PLANS."""
    if body_plan not in BODY_PLANS:
        raise MeshError(f"unknown body plan {body_plan!r}; expected one of {BODY_PLANS}")
    p = dict(_DEFAULT_PARAMS)
    p.update(params or {})
    if p["scale"] <= 0 or p["torso_radius"] <= 0 or p["limb_radius"] <= 0 or p["head_radius"] <= 0:
        raise MeshError("size parameters must be positive")
    if not 3 <= int(p["segments"]) <= 64:
        raise MeshError("segments must be in [3, 64]")
    seg = int(p["segments"])
    tr, lr, hr = p["torso_radius"], p["limb_radius"], p["head_radius"]

    parts: List[Mesh] = []
    if body_plan == "quadruped":
        parts.append(capsule([0, 1.0, -0.8], [0, 1.0, 0.8], tr, segments=seg))
        parts.append(uv_sphere([0, 1.35, 1.15], hr, segments=seg))
        for x in (-0.35, 0.35):
            for z in (-0.55, 0.55):
                parts.append(capped_cylinder([x, 0.95, z], [x, 0.0, z], lr, segments=seg))
        parts.append(capsule([0, 1.05, -0.95], [0, 1.25, -1.55], lr * 0.8, segments=seg))
    elif body_plan == "biped":
        parts.append(capsule([0, 0.95, 0], [0, 1.7, 0], tr * 0.8, segments=seg))
        parts.append(uv_sphere([0, 2.0, 0], hr * 0.9, segments=seg))
        for x in (-0.18, 0.18):
            parts.append(capped_cylinder([x, 0.95, 0], [x, 0.0, 0], lr, segments=seg))
        for x in (-0.42, 0.42):
            parts.append(capped_cylinder([x * 0.8, 1.55, 0], [x, 0.9, 0.1], lr * 0.8, segments=seg))
    elif body_plan == "serpent":
        radii = [tr * f for f in (0.55, 0.5, 0.45, 0.38, 0.3)]
        z = 0.9
        for r in radii:
            parts.append(capsule([0, r, z], [0, r, z - 0.55], r, segments=seg))
            z -= 0.62
        parts.append(uv_sphere([0, radii[0] * 1.1, 1.25], hr * 0.8, segments=seg))
    elif body_plan == "winged":
        parts.append(capsule([0, 1.0, -0.45], [0, 1.0, 0.45], tr * 0.7, segments=seg))
        parts.append(uv_sphere([0, 1.3, 0.8], hr * 0.8, segments=seg))
        for x in (-0.15, 0.15):
            parts.append(capped_cylinder([x, 0.85, -0.1], [x, 0.0, -0.1], lr, segments=seg))
        for x in (-1.0, 1.0):
            wing = capsule([x * 0.25, 1.1, 0], [x, 1.25, -0.15], tr * 0.4, segments=seg)
            parts.append(_flatten(wing, 1, 0.25))

    mesh = merge(parts)
    if p["scale"] != 1.0:
        mesh = Mesh(mesh.vertices * p["scale"], mesh.faces)
    return mesh


def connected_components(mesh: Mesh) -> List[np.ndarray]:
    """Vertex index sets of each face-connected component."""
    parent = list(range(len(mesh.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f in mesh.faces:
        a = find(int(f[0]))
        for v in f[1:]:
            b = find(int(v))
            if a != b:
                parent[b] = a
                a = find(a)
    groups: Dict[int, list] = {}
    for v in range(len(mesh.vertices)):
        groups.setdefault(find(v), []).append(v)
    return [np.array(g) for g in groups.values()]

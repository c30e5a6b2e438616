"""Animated export: binary glTF 2.0 with skin + sampled animation, or BVH."""

import json
import struct

import numpy as np

from ..motion import quat
from ..motion.bvh import write_bvh
from ..motion.skeleton import (
    MotionClip,
    POSITION_CHANNELS,
    joint_locals,
)
from .rig import MAX_INFLUENCES, RiggedMesh

GLB_MAGIC = 0x46546C67
CHUNK_JSON = 0x4E4F534A
CHUNK_BIN = 0x004E4942

FLOAT = 5126
USHORT = 5123
UINT = 5125


class ExportError(ValueError):
    pass


class _Buffer:
    def __init__(self):
        self.blob = b""
        self.views = []
        self.accessors = []

    def _pad(self):
        if len(self.blob) % 4:
            self.blob += b"\0" * (4 - len(self.blob) % 4)

    def add(self, array: np.ndarray, component: int, kind: str,
            minmax: bool = False, target: int = None) -> int:
        dtype = {FLOAT: "<f4", USHORT: "<u2", UINT: "<u4"}[component]
        data = np.ascontiguousarray(array, dtype=dtype)
        self._pad()
        view = {"buffer": 0, "byteOffset": len(self.blob), "byteLength": data.nbytes}
        if target is not None:
            view["target"] = target
        self.views.append(view)
        self.blob += data.tobytes()
        count = data.shape[0]
        accessor = {
            "bufferView": len(self.views) - 1,
            "componentType": component,
            "count": count,
            "type": kind,
        }
        if minmax:
            flat = data.reshape(count, -1)
            accessor["min"] = [float(v) for v in flat.min(axis=0)]
            accessor["max"] = [float(v) for v in flat.max(axis=0)]
        self.accessors.append(accessor)
        return len(self.accessors) - 1


def _joint_quats(clip: MotionClip) -> np.ndarray:
    """(N, J, 4) local rotations, glTF order (x, y, z, w), unit length."""
    N, J = clip.num_frames, clip.skeleton.num_joints
    out = np.zeros((N, J, 4))
    for t, frame in enumerate(clip.frames):
        for j, (_, rot) in enumerate(joint_locals(clip.skeleton, frame)):
            out[t, j] = rot
    out = quat.normalize(out)
    return np.concatenate([out[..., 1:], out[..., :1]], axis=-1)


def export_glb(rigged: RiggedMesh, clip: MotionClip) -> bytes:
    """Binary glTF with the skinned mesh and one sampled animation."""
    if not clip.skeleton.structurally_equal(rigged.rig):
        raise ExportError("clip skeleton does not match the rig")
    rig = rigged.rig
    J = rig.num_joints
    buf = _Buffer()

    positions = buf.add(rigged.mesh.vertices, FLOAT, "VEC3", minmax=True, target=34962)
    indices = buf.add(rigged.mesh.faces.reshape(-1), UINT, "SCALAR", target=34963)

    joints4 = np.zeros((len(rigged.mesh.vertices), MAX_INFLUENCES), dtype=np.uint16)
    weights4 = np.zeros((len(rigged.mesh.vertices), MAX_INFLUENCES), dtype=np.float32)
    for i, vertex_weights in enumerate(rigged.weights):
        for k, (j, w) in enumerate(vertex_weights[:MAX_INFLUENCES]):
            joints4[i, k] = j
            weights4[i, k] = w
    joints_acc = buf.add(joints4, USHORT, "VEC4", target=34962)
    weights_acc = buf.add(weights4, FLOAT, "VEC4", target=34962)

    ibm = np.linalg.inv(rigged.bind_pose)  # (J, 4, 4)
    ibm_acc = buf.add(
        np.ascontiguousarray(ibm.transpose(0, 2, 1).reshape(J, 16)), FLOAT, "MAT4"
    )

    times = np.arange(clip.num_frames, dtype=np.float32) * clip.frame_time
    time_acc = buf.add(times[:, None], FLOAT, "SCALAR", minmax=True)

    quats = _joint_quats(clip)
    samplers, channels = [], []
    for j in range(J):
        out_acc = buf.add(np.ascontiguousarray(quats[:, j]), FLOAT, "VEC4")
        samplers.append({"input": time_acc, "output": out_acc, "interpolation": "LINEAR"})
        channels.append(
            {"sampler": len(samplers) - 1, "target": {"node": j, "path": "rotation"}}
        )

    slices = rig.channel_slices()
    for j, joint in enumerate(rig.joints):
        pos_cols = {
            lab[0]: slices[j][0] + ci
            for ci, lab in enumerate(joint.channels)
            if lab in POSITION_CHANNELS
        }
        if not pos_cols:
            continue
        trans = np.tile(joint.offset.astype(np.float32), (clip.num_frames, 1))
        for axis, col in pos_cols.items():
            trans[:, "XYZ".index(axis)] = joint.offset["XYZ".index(axis)] + clip.frames[:, col]
        out_acc = buf.add(trans, FLOAT, "VEC3")
        samplers.append({"input": time_acc, "output": out_acc, "interpolation": "LINEAR"})
        channels.append(
            {"sampler": len(samplers) - 1, "target": {"node": j, "path": "translation"}}
        )

    nodes = []
    for j, joint in enumerate(rig.joints):
        node = {"name": joint.name, "translation": [float(v) for v in joint.offset]}
        children = rig.children_of(j)
        if children:
            node["children"] = children
        nodes.append(node)
    mesh_node = {"name": "body", "mesh": 0, "skin": 0}
    nodes.append(mesh_node)

    tree = {
        "asset": {"version": "2.0", "generator": "menagerie"},
        "scene": 0,
        "scenes": [{"nodes": [0, J]}],
        "nodes": nodes,
        "meshes": [
            {
                "primitives": [
                    {
                        "attributes": {
                            "POSITION": positions,
                            "JOINTS_0": joints_acc,
                            "WEIGHTS_0": weights_acc,
                        },
                        "indices": indices,
                        "mode": 4,
                    }
                ]
            }
        ],
        "skins": [
            {
                "inverseBindMatrices": ibm_acc,
                "joints": list(range(J)),
                "skeleton": 0,
            }
        ],
        "animations": [
            {"name": "clip", "samplers": samplers, "channels": channels}
        ],
        "buffers": [{"byteLength": 0}],
        "bufferViews": buf.views,
        "accessors": buf.accessors,
    }
    buf._pad()
    tree["buffers"][0]["byteLength"] = len(buf.blob)

    payload = json.dumps(tree, separators=(",", ":")).encode("utf-8")
    if len(payload) % 4:
        payload += b" " * (4 - len(payload) % 4)
    total = 12 + 8 + len(payload) + 8 + len(buf.blob)
    out = struct.pack("<III", GLB_MAGIC, 2, total)
    out += struct.pack("<II", len(payload), CHUNK_JSON) + payload
    out += struct.pack("<II", len(buf.blob), CHUNK_BIN) + buf.blob
    return out


def export_animated(rigged: RiggedMesh, clip: MotionClip, fmt: str) -> bytes:
    """Serialize the animated avatar; fmt is "gltf" (binary .glb) or "bvh"."""
    if fmt == "bvh":
        if not clip.skeleton.structurally_equal(rigged.rig):
            raise ExportError("clip skeleton does not match the rig")
        return write_bvh(rigged.rig, clip).encode("utf-8")
    if fmt in ("gltf", "glb"):
        return export_glb(rigged, clip)
    raise ExportError(f"unknown export format {fmt!r}")

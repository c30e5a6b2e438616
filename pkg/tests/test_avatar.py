import json
import struct
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from menagerie.avatar import (
    BODY_PLANS,
    AvatarImage,
    HttpMeshBackend,
    JointMap,
    Mesh,
    MeshError,
    MockImageBackend,
    MockMeshBackend,
    RigError,
    auto_rig,
    capped_cylinder,
    connected_components,
    export_animated,
    parse_obj,
    procedural_mesh,
    request_avatar_image,
    request_mesh,
    retarget,
    skin_mesh,
    uv_sphere,
)
from menagerie.backends import BackendError
from menagerie.motion import (
    Joint,
    MotionClip,
    SkeletonHierarchy,
    forward_kinematics_clip,
    parse_bvh,
)
from menagerie.planner import default_taxonomy

from oracles import euler_characteristic

TAXONOMY = default_taxonomy()


# ------------------------------------------------------------- meshes

def test_mesh_rejects_bad_faces():
    with pytest.raises(MeshError):
        Mesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))
    with pytest.raises(MeshError):
        Mesh(np.zeros((3, 3)), np.array([[0, 1, 1]]))


@pytest.mark.parametrize("plan", BODY_PLANS)
def test_procedural_mesh_components_are_closed(plan):
    mesh = procedural_mesh(plan)
    chis = euler_characteristic(mesh.vertices, mesh.faces)
    assert all(chi == 2 for chi in chis), f"{plan}: chi per component = {chis}"


def test_primitive_topology():
    for prim in (uv_sphere([0, 0, 0], 1.0), capped_cylinder([0, 0, 0], [0, 2, 0], 0.3)):
        assert euler_characteristic(prim.vertices, prim.faces) == [2]


def test_quadruped_has_four_legs():
    mesh = procedural_mesh("quadruped")
    comps = connected_components(mesh)
    torso_top = max(mesh.vertices[c][:, 1].max() for c in comps)
    legs = [
        c
        for c in comps
        if mesh.vertices[c][:, 1].min() < 0.05 and mesh.vertices[c][:, 1].max() < torso_top * 0.8
    ]
    assert len(legs) == 4


def test_procedural_mesh_deterministic():
    a = procedural_mesh("winged", {"scale": 1.5})
    b = procedural_mesh("winged", {"scale": 1.5})
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.faces, b.faces)


def test_procedural_mesh_rejects_bad_input():
    with pytest.raises(MeshError):
        procedural_mesh("octopus")
    with pytest.raises(MeshError):
        procedural_mesh("biped", {"scale": -1})
    with pytest.raises(MeshError):
        procedural_mesh("biped", {"segments": 2})


# ------------------------------------------------------------- rigging

def simple_rig(num_joints=3, root_y=1.0):
    joints = [
        Joint(
            "root",
            -1,
            np.array([0.0, root_y, 0.0]),
            ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation"),
        )
    ]
    for i in range(1, num_joints):
        joints.append(
            Joint(
                f"seg{i}",
                i - 1,
                np.array([0.0, 0.0, 0.6]),
                ("Zrotation", "Xrotation", "Yrotation"),
                end_site=np.array([0.0, 0.0, 0.3]) if i == num_joints - 1 else None,
            )
        )
    return SkeletonHierarchy(tuple(joints))


def test_single_joint_template_gives_unit_weights():
    mesh = procedural_mesh("quadruped")
    rig = SkeletonHierarchy(
        (
            Joint(
                "only",
                -1,
                np.array([0.0, 1.0, 0.0]),
                ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation"),
            ),
        )
    )
    rigged = auto_rig(mesh, rig)
    for vw in rigged.weights:
        assert vw == ((0, 1.0),)


@pytest.mark.parametrize("plan", BODY_PLANS)
def test_skin_weights_partition_of_unity(plan):
    mesh = procedural_mesh(plan)
    rigged = auto_rig(mesh, simple_rig(4))
    for vw in rigged.weights:
        total = sum(w for _, w in vw)
        assert abs(total - 1.0) <= 1e-5
        assert len(vw) <= 4
        assert all(w >= 0 for _, w in vw)


def test_vertex_on_bone_dominated_by_it():
    # two long bones far apart; probe vertex sits on the first
    joints = (
        Joint("root", -1, np.array([0.0, 0.0, 0.0]),
              ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation")),
        Joint("a", 0, np.array([0.0, 0.0, 2.0]), ("Zrotation", "Xrotation", "Yrotation")),
        Joint("b", 0, np.array([0.0, 10.0, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
    )
    rig = SkeletonHierarchy(joints)
    verts = np.array([[0.0, 0.001, 1.0], [0, 5, 0], [0, 10, 0], [1, 1, 1]])
    mesh = Mesh(verts, np.array([[0, 1, 2], [0, 1, 3]]))
    rigged = skin_mesh(mesh, rig)
    w = dict(rigged.weights[0])
    assert w.get(0, 0.0) > 0.9  # bone root->a owned by the root joint


def test_auto_rig_rejects_degenerate_mesh():
    flat = Mesh(np.zeros((4, 3)), np.array([[0, 1, 2], [0, 2, 3]]))
    with pytest.raises(RigError, match="zero extent"):
        auto_rig(flat, simple_rig())


def test_auto_rig_fits_bounding_box():
    mesh = procedural_mesh("quadruped")
    rigged = auto_rig(mesh, simple_rig(4))
    lo, hi = mesh.bounds
    rest = forward_kinematics_clip(
        rigged.rig,
        MotionClip(rigged.rig, 1 / 30, np.zeros((1, rigged.rig.channel_count))),
    )[0]
    assert np.all(rest.min(axis=0) >= lo - 1e-6)
    assert np.all(rest.max(axis=0) <= hi + 1e-6)


# ---------------------------------------------------------- retargeting

def walk_clip(skeleton, n=12, seed=0):
    rng = np.random.default_rng(seed)
    frames = rng.uniform(-30, 30, (n, skeleton.channel_count))
    return MotionClip(skeleton, 1 / 30, frames)


def test_retarget_identity_fixpoint():
    rig = simple_rig(4)
    clip = walk_clip(rig)
    mesh = procedural_mesh("quadruped")
    rigged = skin_mesh(mesh, rig)
    out = retarget(clip, JointMap.identity(rig), rigged)
    assert np.max(np.abs(out.frames - clip.frames)) < 1e-6
    assert out.frame_time == clip.frame_time


def test_retarget_uniform_scale_law():
    rig = simple_rig(4, root_y=1.0)
    clip = walk_clip(rig)
    scaled = rig.scaled(2.0)
    mesh = procedural_mesh("quadruped", {"scale": 2.0})
    rigged = skin_mesh(mesh, scaled)
    name_map = JointMap(tuple((j.name, j.name) for j in rig.joints))
    out = retarget(clip, name_map, rigged)
    slices = rig.channel_slices()
    a, _ = slices[0]
    for ci, label in enumerate(rig.joints[0].channels):
        col = a + ci
        if label.endswith("position"):
            assert np.allclose(out.frames[:, col], 2.0 * clip.frames[:, col], atol=1e-6)
        else:
            assert np.array_equal(out.frames[:, col], clip.frames[:, col])
    assert np.array_equal(out.frames[:, slices[1][0]:], clip.frames[:, slices[1][0]:])


def test_retarget_renamed_joints_matches_fk():
    rig = simple_rig(4)
    clip = walk_clip(rig)
    renamed = SkeletonHierarchy(
        tuple(
            Joint(f"T_{j.name}", j.parent, j.offset * 3.0, j.channels, j.end_site)
            for j in rig.joints
        )
    )
    mesh = procedural_mesh("quadruped", {"scale": 3.0})
    rigged = skin_mesh(mesh, renamed)
    jmap = JointMap(tuple((j.name, f"T_{j.name}") for j in rig.joints))
    out = retarget(clip, jmap, rigged)
    pos_src = forward_kinematics_clip(rig, clip)
    pos_out = forward_kinematics_clip(renamed, out)
    assert np.max(np.abs(pos_out - 3.0 * pos_src)) < 1e-3


def test_retarget_inherit_parent_preserves_world_orientation():
    rig = simple_rig(4)
    clip = walk_clip(rig)
    # target skeleton drops seg2: seg3's offset spans the gap
    joints = (
        rig.joints[0],
        Joint("seg1", 0, rig.joints[1].offset, rig.joints[1].channels),
        Joint("seg3", 1, rig.joints[2].offset + rig.joints[3].offset,
              rig.joints[3].channels, rig.joints[3].end_site),
    )
    target_rig = SkeletonHierarchy(joints)
    mesh = procedural_mesh("quadruped")
    rigged = skin_mesh(mesh, target_rig)
    jmap = JointMap(
        (("root", "root"), ("seg1", "seg1"), ("seg3", "seg3")),
        unmapped_policy="inherit-parent",
    )
    out = retarget(clip, jmap, rigged)
    from menagerie.motion import world_rotations

    for t in range(clip.num_frames):
        src_rot = world_rotations(rig, clip.frames[t])
        out_rot = world_rotations(target_rig, out.frames[t])
        # world orientation of the retained deepest joint is preserved
        dot = abs(np.dot(src_rot[3], out_rot[2]))
        assert dot > 1 - 1e-9


def test_retarget_missing_mapped_joint_errors():
    rig = simple_rig(3)
    clip = walk_clip(rig)
    rigged = skin_mesh(procedural_mesh("quadruped"), rig)
    with pytest.raises(Exception, match="missing"):
        retarget(clip, JointMap((("nope", "root"),)), rigged)


def test_joint_map_validation():
    with pytest.raises(Exception, match="policy"):
        JointMap((("a", "b"),), unmapped_policy="teleport")
    with pytest.raises(Exception, match="duplicate source"):
        JointMap((("a", "b"), ("a", "c")))
    with pytest.raises(Exception, match="one target"):
        JointMap((("a", "b"), ("c", "b")))


# ------------------------------------------------------------- exports

def test_bvh_export_round_trips():
    rig = simple_rig(4)
    clip = walk_clip(rig)
    rigged = skin_mesh(procedural_mesh("quadruped"), rig)
    data = export_animated(rigged, clip, "bvh")
    skeleton, clip2 = parse_bvh(data.decode("utf-8"))
    assert skeleton.structurally_equal(rig, tol=1e-5)
    assert np.allclose(clip2.frames, clip.frames, atol=1e-5)


def test_glb_structure_and_animation_duration():
    rig = simple_rig(3)
    frames = np.zeros((1, rig.channel_count))
    clip = MotionClip(rig, 0.04, frames)
    rigged = skin_mesh(procedural_mesh("quadruped"), rig)
    data = export_animated(rigged, clip, "gltf")
    assert data[:4] == b"glTF"
    total = struct.unpack("<I", data[8:12])[0]
    assert total == len(data)
    json_len = struct.unpack("<I", data[12:16])[0]
    tree = json.loads(data[20 : 20 + json_len])
    assert tree["asset"]["version"] == "2.0"
    assert len(tree["skins"][0]["joints"]) == 3
    input_acc = tree["accessors"][tree["animations"][0]["samplers"][0]["input"]]
    assert input_acc["max"][0] == pytest.approx(0.0)  # single frame at t = 0
    assert len(tree["animations"][0]["channels"]) == 4  # 3 rotations + root translation


def test_glb_passes_khronos_validator(tmp_path):
    from gltf_validation import validate_glb, validator_available

    if not validator_available():
        pytest.skip("node/gltf-validator not installed")
    rig = simple_rig(4)
    clip = walk_clip(rig, n=8)
    rigged = auto_rig(procedural_mesh("quadruped"), rig)
    fitted_clip = retarget(clip, JointMap.identity(rig), rigged)
    path = tmp_path / "avatar.glb"
    path.write_bytes(export_animated(rigged, fitted_clip, "gltf"))
    report = validate_glb(str(path))
    assert report["issues"]["numErrors"] == 0, json.dumps(report["issues"], indent=2)


def test_export_rejects_mismatched_clip():
    rig = simple_rig(3)
    other = simple_rig(4)
    clip = walk_clip(other)
    rigged = skin_mesh(procedural_mesh("quadruped"), rig)
    with pytest.raises(Exception, match="does not match"):
        export_animated(rigged, clip, "bvh")


# ------------------------------------------------------------ services

def test_mock_image_backend_is_deterministic():
    backend = MockImageBackend()
    a = request_avatar_image("a full-body photo of a Fox", backend)
    b = request_avatar_image("a full-body photo of a Fox", backend)
    assert a.pixels == b.pixels
    assert a.provenance["prompt"].endswith("Fox")


def test_empty_prompt_rejected():
    with pytest.raises(ValueError, match="empty"):
        request_avatar_image("  ", MockImageBackend())


def test_png_round_trip():
    img = MockImageBackend().generate("a Cat", 64, 48, 0)
    back = AvatarImage.from_png(img.to_png())
    assert (back.width, back.height) == (64, 48)
    assert back.pixels == img.pixels


def test_mock_mesh_backend_uses_body_plan():
    backend = MockMeshBackend(TAXONOMY)
    img = MockImageBackend().generate("a full-body photo of a Cobra", 32, 32, 0)
    mesh = request_mesh(img, backend)
    ref = procedural_mesh("serpent")
    assert np.array_equal(mesh.vertices, ref.vertices)


def test_parse_obj():
    obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1/1 2/2 4/4\n"
    mesh = parse_obj(obj)
    assert len(mesh.vertices) == 4
    assert len(mesh.faces) == 2
    with pytest.raises(MeshError):
        parse_obj("v 0 0 0\n")


class _MeshHandler(BaseHTTPRequestHandler):
    payload_kind = "obj"

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        self.rfile.read(length)
        if self.payload_kind == "obj":
            body = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
            ctype = "model/obj"
        else:
            body = b"not a mesh at all"
            ctype = "model/obj"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def mesh_server():
    server = HTTPServer(("127.0.0.1", 0), _MeshHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


def test_http_mesh_backend_obj(mesh_server):
    _MeshHandler.payload_kind = "obj"
    url = f"http://127.0.0.1:{mesh_server.server_address[1]}/mesh"
    img = MockImageBackend().generate("a Fox", 16, 16, 0)
    mesh = request_mesh(img, HttpMeshBackend(url))
    assert len(mesh.vertices) == 3


def test_http_mesh_backend_rejects_garbage(mesh_server):
    _MeshHandler.payload_kind = "garbage"
    url = f"http://127.0.0.1:{mesh_server.server_address[1]}/mesh"
    img = MockImageBackend().generate("a Fox", 16, 16, 0)
    with pytest.raises(BackendError):
        request_mesh(img, HttpMeshBackend(url))


def test_glb_payload_round_trip_through_service_parser():
    from menagerie.avatar import parse_glb_mesh

    rig = simple_rig(3)
    clip = MotionClip(rig, 1 / 30, np.zeros((2, rig.channel_count)))
    mesh = procedural_mesh("biped")
    rigged = skin_mesh(mesh, rig)
    blob = export_animated(rigged, clip, "gltf")
    back = parse_glb_mesh(blob)
    assert np.allclose(back.vertices, mesh.vertices, atol=1e-6)
    assert np.array_equal(back.faces, mesh.faces)

from .mesh import (
    BODY_PLANS,
    Mesh,
    MeshError,
    capped_cylinder,
    capsule,
    connected_components,
    merge,
    procedural_mesh,
    uv_sphere,
)
from .rig import MAX_INFLUENCES, RigError, RiggedMesh, auto_rig, fit_template, skin_mesh
from .retarget import JointMap, RetargetError, retarget
from .gltf import ExportError, export_animated, export_glb
from .services import (
    AvatarImage,
    HttpImageBackend,
    HttpMeshBackend,
    MockImageBackend,
    MockMeshBackend,
    parse_glb_mesh,
    parse_obj,
    request_avatar_image,
    request_mesh,
)

__all__ = [
    "BODY_PLANS",
    "Mesh",
    "MeshError",
    "capped_cylinder",
    "capsule",
    "connected_components",
    "merge",
    "procedural_mesh",
    "uv_sphere",
    "MAX_INFLUENCES",
    "RigError",
    "RiggedMesh",
    "auto_rig",
    "fit_template",
    "skin_mesh",
    "JointMap",
    "RetargetError",
    "retarget",
    "ExportError",
    "export_animated",
    "export_glb",
    "AvatarImage",
    "HttpImageBackend",
    "HttpMeshBackend",
    "MockImageBackend",
    "MockMeshBackend",
    "parse_glb_mesh",
    "parse_obj",
    "request_avatar_image",
    "request_mesh",
]

"""External image and image-to-mesh services, with deterministic mocks.

Image protocol: HTTP POST {"prompt", "width", "height", "seed"} -> PNG bytes.
Mesh protocol: HTTP POST of PNG bytes (image/png) -> OBJ (text) or binary
glTF, discriminated by the response content type.
"""

import io
import json
import struct
import zlib
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import requests
from PIL import Image, ImageDraw

from ..backends import BackendError
from ..planner.taxonomy import Taxonomy, match_taxonomy
from .mesh import Mesh, MeshError, procedural_mesh


@dataclass(frozen=True)
class AvatarImage:
    width: int
    height: int
    pixels: bytes  # RGBA8, row-major
    provenance: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.pixels) != 4 * self.width * self.height:
            raise ValueError(
                f"pixel buffer has {len(self.pixels)} bytes, expected {4 * self.width * self.height}"
            )

    def to_png(self) -> bytes:
        img = Image.frombytes("RGBA", (self.width, self.height), self.pixels)
        out = io.BytesIO()
        img.save(out, format="PNG")
        return out.getvalue()

    @staticmethod
    def from_png(data: bytes, provenance: Optional[Dict[str, str]] = None) -> "AvatarImage":
        try:
            img = Image.open(io.BytesIO(data)).convert("RGBA")
        except Exception as exc:
            raise BackendError(f"payload is not a decodable image: {exc}") from exc
        return AvatarImage(img.width, img.height, img.tobytes(), provenance or {})


class MockImageBackend:
    """Solid-color silhouette keyed by a hash of the prompt."""

    name = "mock-image"

    def generate(self, prompt: str, width: int, height: int, seed: int) -> AvatarImage:
        key = zlib.crc32(prompt.strip().casefold().encode("utf-8"))
        color = (64 + key % 160, 64 + (key >> 8) % 160, 64 + (key >> 16) % 160, 255)
        img = Image.new("RGBA", (width, height), (255, 255, 255, 255))
        draw = ImageDraw.Draw(img)
        draw.ellipse([width * 0.2, height * 0.25, width * 0.8, height * 0.85], fill=color)
        draw.ellipse([width * 0.55, height * 0.1, width * 0.85, height * 0.4], fill=color)
        return AvatarImage(width, height, img.tobytes(), {"service": self.name, "prompt": prompt})


class HttpImageBackend:
    name = "http-image"

    def __init__(self, url: str, timeout: float = 60.0, session: Optional[requests.Session] = None):
        self.url = url
        self.timeout = timeout
        self.session = session or requests.Session()

    def generate(self, prompt: str, width: int, height: int, seed: int) -> AvatarImage:
        try:
            resp = self.session.post(
                self.url,
                json={"prompt": prompt, "width": width, "height": height, "seed": seed},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendError(f"image request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"image service returned HTTP {resp.status_code}")
        return AvatarImage.from_png(resp.content, {"service": self.name, "prompt": prompt})


def request_avatar_image(prompt: str, backend, width: int = 512, height: int = 512,
                         seed: int = 0) -> AvatarImage:
    if not prompt or not prompt.strip():
        raise ValueError("avatar prompt is empty")
    return backend.generate(prompt, width, height, seed)


def parse_obj(text: str) -> Mesh:
    """Minimal OBJ reader: v and f records, polygons fan-triangulated."""
    vertices, faces = [], []
    for line_no, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshError(f"OBJ line {line_no}: vertex needs 3 coordinates")
            vertices.append([float(v) for v in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
            if len(idx) < 3:
                raise MeshError(f"OBJ line {line_no}: face needs 3+ vertices")
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    if not vertices or not faces:
        raise MeshError("OBJ contains no geometry")
    return Mesh(np.array(vertices), np.array(faces))


def parse_glb_mesh(data: bytes) -> Mesh:
    """Extract POSITION + indices of the first primitive from a binary glTF."""
    if len(data) < 20 or struct.unpack("<I", data[:4])[0] != 0x46546C67:
        raise BackendError("payload is not a binary glTF")
    _, _, _ = struct.unpack("<III", data[:12])
    json_len, json_type = struct.unpack("<II", data[12:20])
    if json_type != 0x4E4F534A:
        raise BackendError("first glb chunk is not JSON")
    tree = json.loads(data[20 : 20 + json_len])
    bin_off = 20 + json_len
    blob = b""
    if bin_off + 8 <= len(data):
        bin_len, bin_type = struct.unpack("<II", data[bin_off : bin_off + 8])
        if bin_type != 0x004E4942:
            raise BackendError("second glb chunk is not BIN")
        blob = data[bin_off + 8 : bin_off + 8 + bin_len]

    def read_accessor(index):
        acc = tree["accessors"][index]
        view = tree["bufferViews"][acc["bufferView"]]
        dtype = {5126: "<f4", 5123: "<u2", 5125: "<u4", 5121: "<u1"}[acc["componentType"]]
        count = acc["count"] * {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4}[acc["type"]]
        offset = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
        return np.frombuffer(blob, dtype=dtype, count=count, offset=offset)

    try:
        prim = tree["meshes"][0]["primitives"][0]
        pos = read_accessor(prim["attributes"]["POSITION"]).reshape(-1, 3).astype(float)
        idx = read_accessor(prim["indices"]).reshape(-1, 3).astype(np.int64)
    except (KeyError, IndexError) as exc:
        raise BackendError(f"glb payload has no readable mesh: {exc}") from exc
    return Mesh(pos, idx)


class MockMeshBackend:
    """Ignores pixels; picks a procedural body plan from the prompt category."""

    name = "mock-mesh"

    def __init__(self, taxonomy: Taxonomy):
        self.taxonomy = taxonomy

    def reconstruct(self, image: AvatarImage) -> Mesh:
        prompt = image.provenance.get("prompt", "")
        animals, _ = match_taxonomy(prompt, self.taxonomy)
        plan = self.taxonomy.body_plan(animals[0].category) if animals else "quadruped"
        return procedural_mesh(plan)


class HttpMeshBackend:
    name = "http-mesh"

    def __init__(self, url: str, timeout: float = 120.0, session: Optional[requests.Session] = None):
        self.url = url
        self.timeout = timeout
        self.session = session or requests.Session()

    def reconstruct(self, image: AvatarImage) -> Mesh:
        try:
            resp = self.session.post(
                self.url,
                data=image.to_png(),
                headers={"Content-Type": "image/png"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise BackendError(f"mesh request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"mesh service returned HTTP {resp.status_code}")
        ctype = resp.headers.get("Content-Type", "").split(";")[0].strip()
        if ctype in ("model/obj", "text/plain", "application/x-tgif"):
            try:
                return parse_obj(resp.content.decode("utf-8"))
            except (UnicodeDecodeError, MeshError) as exc:
                raise BackendError(f"OBJ payload rejected: {exc}") from exc
        if ctype in ("model/gltf-binary", "application/octet-stream"):
            return parse_glb_mesh(resp.content)
        raise BackendError(f"mesh service returned unsupported content type {ctype!r}")


def request_mesh(image: AvatarImage, backend) -> Mesh:
    mesh = backend.reconstruct(image)
    if len(mesh.vertices) == 0 or len(mesh.faces) == 0:
        raise BackendError("mesh service returned empty geometry")
    return mesh

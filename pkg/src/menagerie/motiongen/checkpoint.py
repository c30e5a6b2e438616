"""Binary model checkpoints and token datasets.

Checkpoint layout ("MAGM"): magic, u32 version, u32 header length, JSON
header (model kind, config, parameter manifest, extras such as the feature
skeleton), then raw little-endian float32 parameter data in manifest order.

Token files ("MATK"): magic, u32 version, u32 K, u32 record count, then per
record u32 layer count, u32 length, and the row-major u32 indices.
"""

import dataclasses
import json
import struct
from typing import List, Tuple

import numpy as np
import torch

from ..motion.features import FeatureSpec
from ..motion.skeleton import SkeletonHierarchy
from .rvq import (
    ConvDecoder,
    ConvEncoder,
    IdentityCoder,
    RvqConfig,
    RvqModel,
    TokenGrid,
)
from .schedule import cosine_schedule
from .textenc import HashedTrigramEncoder
from .training import GeneratorConfig, GeneratorModel
from .transformers import MaskTransformer, ResidualTransformer

MAGM_MAGIC = b"MAGM"
MAGM_VERSION = 1
MATK_MAGIC = b"MATK"
MATK_VERSION = 1


class CheckpointError(ValueError):
    pass


def _named_tensors(pairs) -> Tuple[list, bytes]:
    manifest, blobs = [], []
    for name, tensor in pairs:
        arr = tensor.detach().cpu().numpy().astype("<f4")
        manifest.append([name, list(arr.shape)])
        blobs.append(arr.tobytes(order="C"))
    return manifest, b"".join(blobs)


def _write(path: str, header: dict, blob: bytes) -> None:
    payload = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGM_MAGIC)
        fh.write(struct.pack("<II", MAGM_VERSION, len(payload)))
        fh.write(payload)
        fh.write(blob)


def _read(path: str) -> Tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGM_MAGIC:
        raise CheckpointError("not a MAGM checkpoint")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != MAGM_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    data = np.frombuffer(raw, dtype="<f4", offset=12 + hlen)
    return header, data


def _load_params(module: torch.nn.Module, manifest, data: np.ndarray, cursor: int) -> int:
    state = {}
    for name, shape in manifest:
        count = int(np.prod(shape)) if shape else 1
        state[name] = torch.as_tensor(
            data[cursor : cursor + count].reshape(shape).copy()
        )
        cursor += count
    module.load_state_dict(state)
    return cursor


def save_rvq_checkpoint(path: str, model: RvqModel) -> None:
    pairs = [(f"encoder.{k}", v) for k, v in model.encoder.state_dict().items()]
    pairs += [(f"decoder.{k}", v) for k, v in model.decoder.state_dict().items()]
    pairs += [("codebooks", model.codebooks)]
    manifest, blob = _named_tensors(pairs)
    header = {
        "kind": "rvq",
        "config": dataclasses.asdict(model.config),
        "in_dim": model.in_dim,
        "manifest": manifest,
        "extra": {},
    }
    if model.feature_spec is not None:
        header["extra"]["skeleton"] = model.feature_spec.skeleton.to_dict()
        header["extra"]["frame_time"] = model.feature_spec.frame_time
    _write(path, header, blob)


def load_rvq_checkpoint(path: str) -> RvqModel:
    header, data = _read(path)
    if header.get("kind") != "rvq":
        raise CheckpointError(f"expected an rvq checkpoint, found {header.get('kind')!r}")
    config = RvqConfig(**header["config"])
    in_dim = int(header["in_dim"])
    if config.encoder == "identity":
        encoder, decoder = IdentityCoder(), IdentityCoder()
    else:
        encoder = ConvEncoder(in_dim, config.latent_dim, config.downsample, config.width)
        decoder = ConvDecoder(config.latent_dim, in_dim, config.downsample, config.width)
    enc_manifest = [(n[len("encoder."):], s) for n, s in header["manifest"] if n.startswith("encoder.")]
    dec_manifest = [(n[len("decoder."):], s) for n, s in header["manifest"] if n.startswith("decoder.")]
    cursor = _load_params(encoder, enc_manifest, data, 0)
    cursor = _load_params(decoder, dec_manifest, data, cursor)
    cb_shape = next(s for n, s in header["manifest"] if n == "codebooks")
    count = int(np.prod(cb_shape))
    codebooks = torch.as_tensor(data[cursor : cursor + count].reshape(cb_shape).copy())
    spec = None
    extra = header.get("extra", {})
    if "skeleton" in extra:
        spec = FeatureSpec(
            SkeletonHierarchy.from_dict(extra["skeleton"]), float(extra["frame_time"])
        )
    return RvqModel(encoder, decoder, codebooks, config, in_dim, feature_spec=spec)


def save_generator_checkpoint(path: str, model: GeneratorModel) -> None:
    pairs = [(f"mask.{k}", v) for k, v in model.mask_net.state_dict().items()]
    if model.res_net is not None:
        pairs += [(f"res.{k}", v) for k, v in model.res_net.state_dict().items()]
    manifest, blob = _named_tensors(pairs)
    header = {
        "kind": "generator",
        "config": dataclasses.asdict(model.config),
        "manifest": manifest,
        "extra": {"text_encoder": "hashed-trigram"},
    }
    _write(path, header, blob)


def load_generator_checkpoint(path: str) -> GeneratorModel:
    header, data = _read(path)
    if header.get("kind") != "generator":
        raise CheckpointError(f"expected a generator checkpoint, found {header.get('kind')!r}")
    config = GeneratorConfig(**header["config"])
    mask_net = MaskTransformer(
        config.num_codes, config.max_len, config.d_model, config.heads,
        config.layers, config.ff, config.text_dim,
    )
    res_net = None
    if config.residual_depth >= 1:
        res_net = ResidualTransformer(
            config.num_codes, config.residual_depth, config.max_len, config.d_model,
            config.heads, config.layers, config.ff, config.text_dim,
        )
    mask_manifest = [(n[len("mask."):], s) for n, s in header["manifest"] if n.startswith("mask.")]
    res_manifest = [(n[len("res."):], s) for n, s in header["manifest"] if n.startswith("res.")]
    cursor = _load_params(mask_net, mask_manifest, data, 0)
    if res_net is not None:
        _load_params(res_net, res_manifest, data, cursor)
    return GeneratorModel(
        mask_net=mask_net,
        res_net=res_net,
        text_encoder=HashedTrigramEncoder(config.text_dim),
        config=config,
        schedule=cosine_schedule(config.iterations),
    )


def save_token_file(path: str, grids: List[TokenGrid], num_codes: int) -> None:
    with open(path, "wb") as fh:
        fh.write(MATK_MAGIC)
        fh.write(struct.pack("<III", MATK_VERSION, num_codes, len(grids)))
        for grid in grids:
            layers = np.asarray(grid.layers, dtype="<u4")
            fh.write(struct.pack("<II", layers.shape[0], layers.shape[1]))
            fh.write(layers.tobytes(order="C"))


def load_token_file(path: str) -> Tuple[List[TokenGrid], int]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MATK_MAGIC:
        raise CheckpointError("not a MATK token file")
    version, num_codes, count = struct.unpack("<III", raw[4:16])
    if version != MATK_VERSION:
        raise CheckpointError(f"unsupported token file version {version}")
    grids, cursor = [], 16
    for _ in range(count):
        layers, length = struct.unpack("<II", raw[cursor : cursor + 8])
        cursor += 8
        n_vals = layers * length
        vals = np.frombuffer(raw, dtype="<u4", count=n_vals, offset=cursor)
        cursor += 4 * n_vals
        grids.append(TokenGrid(vals.reshape(layers, length).astype(np.int64), num_codes))
    return grids, num_codes

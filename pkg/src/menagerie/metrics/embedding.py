"""Joint text-motion embedding spaces for evaluation.

The motion tower pools a feature matrix into a fixed-width descriptor that is
independent of the joint count, so one evaluator covers skeletons of any
size. Towers are either trained contrastively (symmetric InfoNCE) or frozen
seeded random projections.
"""

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from ..motiongen.textenc import HashedTrigramEncoder

DESCRIPTOR_DIM = 20
_BAG_DIM = 2048


class EmbeddingError(ValueError):
    pass


def motion_descriptor(features: np.ndarray) -> np.ndarray:
    """Fixed-size summary of an (N, 4+9J) feature matrix."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or (features.shape[1] - 4) % 9 != 0:
        raise EmbeddingError(f"feature width {features.shape} is not 4 + 9J")
    J = (features.shape[1] - 4) // 9
    N = features.shape[0]
    root = features[:, :4]
    rot = features[:, 4 : 4 + 6 * J].reshape(N, J, 6)
    pos = features[:, 4 + 6 * J :].reshape(N, J, 3)

    ident = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    rot_dev = np.linalg.norm(rot - ident, axis=2).mean(axis=1)
    if N > 1:
        speed = np.linalg.norm(np.diff(pos, axis=0), axis=2).mean(axis=1)
    else:
        speed = np.zeros(1)
    spread = np.linalg.norm(pos, axis=2).mean(axis=1)
    extent = pos.reshape(-1, 3).max(axis=0) - pos.reshape(-1, 3).min(axis=0)

    out = np.concatenate(
        [
            root.mean(axis=0),
            root.std(axis=0),
            [rot_dev.mean(), rot_dev.std()],
            [speed.mean(), speed.std()],
            [spread.mean(), spread.std()],
            extent,
            [np.log1p(N)],
            [np.abs(root[:, 2]).mean()],
            [np.linalg.norm(pos, axis=2).max()],
        ]
    )
    assert out.shape == (DESCRIPTOR_DIM,)
    return out


@dataclass
class EmbeddingSpace:
    dim: int
    provenance: str  # "trained-contrastive" | "deterministic"
    text_weight: np.ndarray      # (BAG, e)
    motion_w1: np.ndarray        # (DESC, h)
    motion_b1: np.ndarray        # (h,)
    motion_w2: np.ndarray        # (h, e)
    motion_b2: np.ndarray        # (e,)
    _encoder: HashedTrigramEncoder = field(default=None, repr=False)

    def __post_init__(self):
        if self._encoder is None:
            self._encoder = HashedTrigramEncoder(self.dim)

    def text_embed(self, text: str) -> np.ndarray:
        bag = self._encoder.encode_bag(text).astype(float)
        out = bag @ self.text_weight
        return _unit(out)

    def motion_embed(self, features: np.ndarray) -> np.ndarray:
        desc = motion_descriptor(features)
        h = np.tanh(desc @ self.motion_w1 + self.motion_b1)
        return _unit(h @ self.motion_w2 + self.motion_b2)

    def save(self, path: str) -> None:
        np.savez(
            path,
            meta=json.dumps({"dim": self.dim, "provenance": self.provenance}),
            text_weight=self.text_weight,
            motion_w1=self.motion_w1,
            motion_b1=self.motion_b1,
            motion_w2=self.motion_w2,
            motion_b2=self.motion_b2,
        )

    @staticmethod
    def load(path: str) -> "EmbeddingSpace":
        raw = np.load(path, allow_pickle=False)
        meta = json.loads(str(raw["meta"]))
        return EmbeddingSpace(
            dim=meta["dim"],
            provenance=meta["provenance"],
            text_weight=raw["text_weight"],
            motion_w1=raw["motion_w1"],
            motion_b1=raw["motion_b1"],
            motion_w2=raw["motion_w2"],
            motion_b2=raw["motion_b2"],
        )


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    return v / n if n > 1e-12 else v


@dataclass
class EvalSpaceConfig:
    dim: int = 32
    hidden: int = 64
    epochs: int = 300
    lr: float = 1e-2
    weight_decay: float = 1e-3
    seed: int = 0
    temperature: float = 0.07
    train: bool = True


def deterministic_space(config: EvalSpaceConfig) -> EmbeddingSpace:
    """Frozen random-projection towers; no data needed."""
    rng = np.random.default_rng(config.seed + 7_001)
    return EmbeddingSpace(
        dim=config.dim,
        provenance="deterministic",
        text_weight=rng.standard_normal((_BAG_DIM, config.dim)) / np.sqrt(_BAG_DIM),
        motion_w1=rng.standard_normal((DESCRIPTOR_DIM, config.hidden)) / np.sqrt(DESCRIPTOR_DIM),
        motion_b1=np.zeros(config.hidden),
        motion_w2=rng.standard_normal((config.hidden, config.dim)) / np.sqrt(config.hidden),
        motion_b2=np.zeros(config.dim),
    )


def train_eval_space(
    pairs: Sequence[Tuple[str, np.ndarray]],
    config: EvalSpaceConfig = EvalSpaceConfig(),
    categories: Optional[Sequence[str]] = None,
) -> EmbeddingSpace:
    """Fit the contrastive evaluator on (caption, feature-matrix) pairs.

    With config.train False, returns the deterministic random-projection
    space instead. Training is full-batch symmetric InfoNCE, seeded.
    """
    if not config.train:
        return deterministic_space(config)
    if len(pairs) < 2:
        raise EmbeddingError("need at least two pairs to train")
    if categories is not None and len(set(categories)) < 2:
        raise EmbeddingError("training needs at least two distinct categories")

    torch.set_num_threads(1)
    torch.manual_seed(config.seed)
    enc = HashedTrigramEncoder(config.dim)
    bags = torch.as_tensor(
        np.stack([enc.encode_bag(text) for text, _ in pairs]), dtype=torch.float32
    )
    descs = torch.as_tensor(
        np.stack([motion_descriptor(f) for _, f in pairs]), dtype=torch.float32
    )
    # center per dim, but scale by one global factor: per-dim unit variance
    # would amplify noise-only descriptor dimensions and wreck generalization
    mu = descs.mean(dim=0)
    sd = descs.std(dim=0).max().clamp(min=1e-6).expand(DESCRIPTOR_DIM).clone()

    text_w = torch.randn(_BAG_DIM, config.dim) / np.sqrt(_BAG_DIM)
    w1 = torch.randn(DESCRIPTOR_DIM, config.hidden) / np.sqrt(DESCRIPTOR_DIM)
    b1 = torch.zeros(config.hidden)
    w2 = torch.randn(config.hidden, config.dim) / np.sqrt(config.hidden)
    b2 = torch.zeros(config.dim)
    for p in (text_w, w1, b1, w2, b2):
        p.requires_grad_(True)
    opt = torch.optim.AdamW([text_w, w1, b1, w2, b2], lr=config.lr,
                            weight_decay=config.weight_decay)

    for _ in range(config.epochs):
        t = F.normalize(bags @ text_w, dim=1)
        h = torch.tanh((descs - mu) / sd @ w1 + b1)
        m = F.normalize(h @ w2 + b2, dim=1)
        logits = (t @ m.t()) / config.temperature
        labels = torch.arange(len(pairs))
        loss = (F.cross_entropy(logits, labels) + F.cross_entropy(logits.t(), labels)) / 2
        opt.zero_grad()
        loss.backward()
        opt.step()

    with torch.no_grad():
        w1_folded = (w1 / sd[:, None]).numpy().astype(float)
        b1_folded = (b1 - (mu / sd) @ w1).numpy().astype(float)
    return EmbeddingSpace(
        dim=config.dim,
        provenance="trained-contrastive",
        text_weight=text_w.detach().numpy().astype(float),
        motion_w1=w1_folded,
        motion_b1=b1_folded,
        motion_w2=w2.detach().numpy().astype(float),
        motion_b2=b2.detach().numpy().astype(float),
    )

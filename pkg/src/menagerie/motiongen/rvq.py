"""Residual vector quantization: codebooks, the temporal encoder/decoder pair,
quantization, decoding, and training with EMA codebook updates.

Layer 0 quantizes the encoder latent directly; each further layer quantizes
what the previous layers left over. Index 0 of every residual layer's
codebook is pinned to the zero vector, which makes per-row residual norms
provably non-increasing across layers.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..motion.features import FeatureMatrix, FeatureSpec


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TokenGrid:
    """(V+1, n) code indices; layer 0 is the base layer."""

    layers: np.ndarray
    num_codes: int

    def __post_init__(self):
        layers = np.asarray(self.layers, dtype=np.int64)
        object.__setattr__(self, "layers", layers)
        if layers.ndim != 2 or layers.shape[0] < 1:
            raise ValueError("token grid must be (V+1, n) with V >= 0")
        if layers.min() < 0 or layers.max() >= self.num_codes:
            raise ValueError("token indices out of range")

    @property
    def residual_depth(self) -> int:
        return self.layers.shape[0] - 1

    @property
    def length(self) -> int:
        return self.layers.shape[1]


def quantize_residual(latent: np.ndarray, codebooks: np.ndarray):
    """Residual-quantize rows of `latent` against stacked codebooks.

    Returns (TokenGrid, quantized_sum, residual_norms) where residual_norms
    is (V+1, n): the L2 norm of each row's residual after each layer. Ties
    in the nearest-entry search break toward the lowest index.
    """
    latent = np.asarray(latent, dtype=float)
    codebooks = np.asarray(codebooks, dtype=float)
    if codebooks.ndim != 3 or latent.ndim != 2 or latent.shape[1] != codebooks.shape[2]:
        raise ValueError("latent must be (n, d) and codebooks (V+1, K, d)")
    num_layers, K, _ = codebooks.shape
    tokens = np.empty((num_layers, latent.shape[0]), dtype=np.int64)
    norms = np.empty((num_layers, latent.shape[0]))
    residual = latent.copy()
    total = np.zeros_like(latent)
    for v in range(num_layers):
        d2 = ((residual[:, None, :] - codebooks[v][None, :, :]) ** 2).sum(axis=2)
        idx = np.argmin(d2, axis=1)  # first minimum wins ties
        chosen = codebooks[v][idx]
        residual = residual - chosen
        total = total + chosen
        tokens[v] = idx
        norms[v] = np.linalg.norm(residual, axis=1)
    return TokenGrid(tokens, K), total, norms


class ConvEncoder(nn.Module):
    """(B, N, D) -> (B, N/f, d) with stride-2 stages; f a power of two."""

    def __init__(self, in_dim: int, latent_dim: int, downsample: int, width: int):
        super().__init__()
        if downsample < 1 or downsample & (downsample - 1):
            raise ValueError("downsample factor must be a power of two")
        stages = [nn.Conv1d(in_dim, width, 3, padding=1), nn.ReLU()]
        for _ in range(int(math.log2(downsample))):
            stages += [nn.Conv1d(width, width, 4, stride=2, padding=1), nn.ReLU()]
        stages.append(nn.Conv1d(width, latent_dim, 3, padding=1))
        self.net = nn.Sequential(*stages)

    def forward(self, x):
        return self.net(x.transpose(1, 2)).transpose(1, 2)


class ConvDecoder(nn.Module):
    def __init__(self, latent_dim: int, out_dim: int, upsample: int, width: int):
        super().__init__()
        if upsample < 1 or upsample & (upsample - 1):
            raise ValueError("upsample factor must be a power of two")
        stages = [nn.Conv1d(latent_dim, width, 3, padding=1), nn.ReLU()]
        for _ in range(int(math.log2(upsample))):
            stages += [
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv1d(width, width, 3, padding=1),
                nn.ReLU(),
            ]
        stages.append(nn.Conv1d(width, out_dim, 3, padding=1))
        self.net = nn.Sequential(*stages)

    def forward(self, z):
        return self.net(z.transpose(1, 2)).transpose(1, 2)


class IdentityCoder(nn.Module):
    def forward(self, x):
        return x


@dataclass
class RvqConfig:
    num_codes: int = 512          # K
    residual_depth: int = 2       # V
    latent_dim: int = 64          # d
    downsample: int = 4           # f
    width: int = 64
    epochs: int = 100
    batch_size: int = 16
    window: int = 40
    beta: float = 0.25
    lr: float = 1e-3
    seed: int = 0
    ema_decay: float = 0.99
    dead_code_epochs: int = 10
    encoder: str = "conv"         # "conv" | "identity"
    codebook_init: str = "normal"  # "normal" | "data"
    deterministic: bool = True


@dataclass
class RvqModel:
    encoder: nn.Module
    decoder: nn.Module
    codebooks: torch.Tensor  # (V+1, K, d)
    config: RvqConfig
    in_dim: int
    feature_spec: Optional[FeatureSpec] = None
    loss_history: List[float] = field(default_factory=list)

    @property
    def num_codes(self) -> int:
        return self.codebooks.shape[1]

    @property
    def residual_depth(self) -> int:
        return self.codebooks.shape[0] - 1

    def encode(self, data: np.ndarray) -> np.ndarray:
        x = torch.as_tensor(np.asarray(data, dtype=np.float32))[None]
        with torch.no_grad():
            z = self.encoder(x)[0]
        return z.numpy().astype(float)

    def tokenize(self, data: np.ndarray) -> TokenGrid:
        grid, _, _ = quantize_residual(self.encode(data), self.codebooks.numpy())
        return grid


def decode_tokens(grid: TokenGrid, model: RvqModel) -> np.ndarray:
    """Sum each layer's code entries and run the decoder; (n, ) -> (n*f, D)."""
    if grid.num_codes != model.num_codes or grid.residual_depth != model.residual_depth:
        raise ValueError("token grid does not match the model's codebooks")
    with torch.no_grad():
        latent = model.codebooks[
            torch.arange(grid.layers.shape[0])[:, None], torch.as_tensor(grid.layers)
        ].sum(dim=0)
        out = model.decoder(latent[None].float())[0]
    return out.numpy().astype(float)


def _as_matrices(dataset: Sequence[Union[FeatureMatrix, np.ndarray]]):
    mats, spec = [], None
    for item in dataset:
        if isinstance(item, FeatureMatrix):
            mats.append(item.data)
            spec = spec or item.spec
        else:
            mats.append(np.asarray(item, dtype=float))
    return mats, spec


def _torch_residual_quantize(z: torch.Tensor, codebooks: torch.Tensor):
    """Training-path quantization; returns (indices list, quantized sum,
    per-layer residual inputs)."""
    residual = z
    total = torch.zeros_like(z)
    indices, residual_inputs = [], []
    for v in range(codebooks.shape[0]):
        residual_inputs.append(residual)
        flat = residual.reshape(-1, residual.shape[-1])
        d2 = (
            flat.pow(2).sum(1, keepdim=True)
            - 2 * flat @ codebooks[v].t()
            + codebooks[v].pow(2).sum(1)[None]
        )
        idx = d2.argmin(dim=1).reshape(residual.shape[:-1])
        chosen = codebooks[v][idx]
        residual = residual - chosen
        total = total + chosen
        indices.append(idx)
    return indices, total, residual_inputs


def train_rvq(dataset, config: RvqConfig) -> RvqModel:
    """Train the residual VQ autoencoder.

    Reconstruction MSE plus a commitment term; gradients pass the quantizer
    via the straight-through estimator; codebooks follow an EMA of assigned
    latents, with dead entries re-seeded from batch latents. Deterministic
    for a fixed seed.
    """
    mats, spec = _as_matrices(dataset)
    if not mats:
        raise ValueError("dataset is empty")
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"dataset feature dimensions differ: {sorted(dims)}")
    in_dim = dims.pop()

    if config.deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(config.seed)
    gen = torch.Generator().manual_seed(config.seed)

    K, V, d, f = config.num_codes, config.residual_depth, config.latent_dim, config.downsample
    if config.encoder == "identity":
        if d != in_dim or f != 1:
            raise ValueError("identity coder requires latent_dim == D and downsample == 1")
        encoder, decoder = IdentityCoder(), IdentityCoder()
        params = []
    elif config.encoder == "conv":
        encoder = ConvEncoder(in_dim, d, f, config.width)
        decoder = ConvDecoder(d, in_dim, f, config.width)
        params = list(encoder.parameters()) + list(decoder.parameters())
    else:
        raise ValueError(f"unknown encoder kind {config.encoder!r}")

    window = min(config.window, min(m.shape[0] for m in mats))
    window = max(f, (window // f) * f)
    tensors = [torch.as_tensor(m, dtype=torch.float32) for m in mats]

    def sample_batch():
        xs = []
        for _ in range(config.batch_size):
            m = tensors[int(torch.randint(len(tensors), (1,), generator=gen))]
            start = int(torch.randint(max(1, m.shape[0] - window + 1), (1,), generator=gen))
            xs.append(m[start : start + window])
        return torch.stack(xs)

    with torch.no_grad():
        if config.codebook_init == "data":
            pool = torch.cat([encoder(t[None])[0] for t in tensors]).reshape(-1, d)
            unique = torch.unique(pool, dim=0)
            if unique.shape[0] >= K:
                pick = torch.randperm(unique.shape[0], generator=gen)[:K]
                seeds = unique[pick]
            else:
                extra = pool[torch.randint(pool.shape[0], (K - unique.shape[0],), generator=gen)]
                seeds = torch.cat([unique, extra])
            codebooks = seeds[None].repeat(V + 1, 1, 1).contiguous()
        else:
            codebooks = torch.randn(V + 1, K, d, generator=gen) * 0.1
        codebooks[1:, 0, :] = 0.0  # pinned zero entries on residual layers

    # seed the EMA as if each entry had one observation at its own value,
    # so the first update blends instead of exploding
    ema_counts = torch.ones(V + 1, K)
    ema_sums = codebooks.clone()
    unused_epochs = torch.zeros(V + 1, K, dtype=torch.long)
    opt = torch.optim.Adam(params, lr=config.lr) if params else None

    model = RvqModel(encoder, decoder, codebooks, config, in_dim, feature_spec=spec)
    steps = max(1, sum(m.shape[0] for m in mats) // (config.batch_size * window))
    for epoch in range(config.epochs):
        used = torch.zeros(V + 1, K, dtype=torch.bool)
        for _ in range(steps):
            x = sample_batch()
            z = encoder(x)
            indices, quantized, residual_inputs = _torch_residual_quantize(z.detach(), codebooks)
            # straight-through: decoder sees the quantized latent, encoder gets
            # the reconstruction gradient as if quantization were identity
            z_q = z + (quantized - z).detach()
            recon = decoder(z_q)
            commit = F.mse_loss(z, quantized.detach())
            loss = F.mse_loss(recon, x) + config.beta * commit
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f"loss became non-finite at epoch {epoch}; "
                    f"lr={config.lr}, beta={config.beta}"
                )
            if opt is not None:
                opt.zero_grad()
                loss.backward()
                opt.step()
            model.loss_history.append(float(loss.detach()))

            with torch.no_grad():
                decay = config.ema_decay
                for v in range(V + 1):
                    flat_idx = indices[v].reshape(-1)
                    flat_lat = residual_inputs[v].reshape(-1, d)
                    onehot = F.one_hot(flat_idx, K).float()
                    counts = onehot.sum(0)
                    sums = onehot.t() @ flat_lat
                    ema_counts[v] = decay * ema_counts[v] + (1 - decay) * counts
                    ema_sums[v] = decay * ema_sums[v] + (1 - decay) * sums
                    alive = ema_counts[v] > 1e-5
                    if v >= 1:
                        alive[0] = False  # keep the zero entry pinned
                    codebooks[v][alive] = ema_sums[v][alive] / ema_counts[v][alive, None]
                    used[v] |= counts > 0

        with torch.no_grad():
            unused_epochs = torch.where(used, torch.zeros_like(unused_epochs), unused_epochs + 1)
            dead = unused_epochs >= config.dead_code_epochs
            dead[1:, 0] = False
            if dead.any():
                x = sample_batch()
                pool = encoder(x).reshape(-1, d)
                for v in range(V + 1):
                    for k in torch.nonzero(dead[v]).flatten().tolist():
                        pick = int(torch.randint(pool.shape[0], (1,), generator=gen))
                        codebooks[v, k] = pool[pick]
                        ema_counts[v, k] = 1.0
                        ema_sums[v, k] = pool[pick]
                        unused_epochs[v, k] = 0
    return model


def quantization_mse(model: RvqModel, dataset) -> float:
    """Mean squared latent quantization error over a dataset."""
    mats, _ = _as_matrices(dataset)
    errs, count = 0.0, 0
    for m in mats:
        z = model.encode(m)
        _, total, _ = quantize_residual(z, model.codebooks.numpy())
        errs += float(((z - total) ** 2).sum())
        count += z.size
    return errs / count

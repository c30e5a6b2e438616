"""Training loops for the masked and residual token transformers."""

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .rvq import TokenGrid, TrainingDiverged
from .schedule import MaskSchedule, cosine_schedule
from .textenc import HashedTrigramEncoder
from .transformers import MaskTransformer, ResidualTransformer


@dataclass
class GeneratorConfig:
    num_codes: int = 512
    residual_depth: int = 2
    d_model: int = 256
    heads: int = 4
    layers: int = 4
    ff: int = 512
    text_dim: int = 64
    max_len: int = 64
    epochs: int = 200
    batch_size: int = 8
    lr: float = 3e-4
    seed: int = 0
    iterations: int = 10  # L
    deterministic: bool = True


@dataclass
class GeneratorModel:
    mask_net: MaskTransformer
    res_net: Optional[ResidualTransformer]
    text_encoder: object
    config: GeneratorConfig
    schedule: MaskSchedule
    mask_loss_history: List[float] = field(default_factory=list)
    res_loss_history: List[float] = field(default_factory=list)

    def embed_text(self, prompt: str) -> torch.Tensor:
        return torch.as_tensor(
            np.asarray(self.text_encoder.encode(prompt), dtype=np.float32)
        )[None]


def new_generator(config: GeneratorConfig, text_encoder=None) -> GeneratorModel:
    if config.deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(config.seed)
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
    return GeneratorModel(
        mask_net=mask_net,
        res_net=res_net,
        text_encoder=text_encoder or HashedTrigramEncoder(config.text_dim),
        config=config,
        schedule=cosine_schedule(config.iterations),
    )


def _stack_tokens(grids: Sequence[TokenGrid]) -> torch.Tensor:
    lengths = {g.length for g in grids}
    if len(lengths) != 1:
        raise ValueError("token sequences must share one length per batch")
    return torch.as_tensor(np.stack([g.layers for g in grids]))  # (B, V+1, n)


def _text_batch(model: GeneratorModel, texts, indices) -> torch.Tensor:
    embs = [np.asarray(texts[i], dtype=np.float32) for i in indices]
    return torch.as_tensor(np.stack(embs))


def train_masked(
    token_dataset: Sequence[TokenGrid],
    text_embeddings: Sequence[np.ndarray],
    model: GeneratorModel,
    config: Optional[GeneratorConfig] = None,
) -> GeneratorModel:
    """Train the base-layer masked transformer.

    Each step samples a mask ratio from the schedule, replaces that many
    base-layer positions with [MASK], and minimizes cross-entropy of the true
    tokens at the masked positions given the text embedding.
    """
    config = config or model.config
    if len(token_dataset) != len(text_embeddings):
        raise ValueError("token and text datasets must align")
    if config.deterministic:
        torch.set_num_threads(1)
    gen = torch.Generator().manual_seed(config.seed)
    tokens_all = _stack_tokens(token_dataset)
    n = tokens_all.shape[2]
    net = model.mask_net
    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    B = min(config.batch_size, len(token_dataset))
    for _ in range(config.epochs):
        idx = torch.randperm(len(token_dataset), generator=gen)[:B]
        base = tokens_all[idx, 0]
        text = _text_batch(model, text_embeddings, idx.tolist())
        tau = float(torch.rand((), generator=gen))
        num_mask = max(1, math.ceil(model.schedule.ratio(tau) * n))
        scores = torch.rand(base.shape, generator=gen)
        mask = scores.argsort(dim=1) < num_mask
        corrupted = base.masked_fill(mask, net.mask_id)
        logits = net(corrupted, text)
        loss = F.cross_entropy(logits[mask], base[mask])
        if not torch.isfinite(loss):
            raise TrainingDiverged("masked-transformer loss became non-finite")
        opt.zero_grad()
        loss.backward()
        opt.step()
        model.mask_loss_history.append(float(loss.detach()))
    return model


def train_residual(
    token_dataset: Sequence[TokenGrid],
    text_embeddings: Sequence[np.ndarray],
    model: GeneratorModel,
    config: Optional[GeneratorConfig] = None,
) -> GeneratorModel:
    """Train the residual transformer: pick a layer j in [1, V] per step and
    predict its tokens from the summed embeddings of layers 0..j-1."""
    config = config or model.config
    V = config.residual_depth
    if V == 0 or model.res_net is None:
        warnings.warn("residual depth is 0; train_residual is a no-op")
        return model
    if config.deterministic:
        torch.set_num_threads(1)
    gen = torch.Generator().manual_seed(config.seed + 1)
    tokens_all = _stack_tokens(token_dataset)
    if tokens_all.shape[1] != V + 1:
        raise ValueError(f"token grids have {tokens_all.shape[1] - 1} residual layers, config says {V}")
    net = model.res_net
    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    B = min(config.batch_size, len(token_dataset))
    for _ in range(config.epochs):
        idx = torch.randperm(len(token_dataset), generator=gen)[:B]
        text = _text_batch(model, text_embeddings, idx.tolist())
        j = int(torch.randint(1, V + 1, (1,), generator=gen))
        prefix = tokens_all[idx, :j]
        target = tokens_all[idx, j]
        logits = net(prefix, j, text)
        loss = F.cross_entropy(logits.reshape(-1, logits.shape[-1]), target.reshape(-1))
        if not torch.isfinite(loss):
            raise TrainingDiverged("residual-transformer loss became non-finite")
        opt.zero_grad()
        loss.backward()
        opt.step()
        model.res_loss_history.append(float(loss.detach()))
    return model

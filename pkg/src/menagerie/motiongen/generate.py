"""Iterative masked decoding and the prompt-to-clip pipeline."""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import torch
import torch.nn.functional as F

from ..motion.features import FeatureMatrix, from_features
from ..motion.skeleton import MotionClip
from .rvq import RvqModel, TokenGrid, decode_tokens
from .schedule import MaskSchedule
from .training import GeneratorModel


@dataclass
class DecodeTrace:
    """Per-iteration bookkeeping captured during generate_base."""

    masked_before: List[int] = field(default_factory=list)
    masked_after: List[int] = field(default_factory=list)
    prob_sums: List[float] = field(default_factory=list)
    logits_finite: bool = True


def generate_base(
    text_emb: torch.Tensor,
    n: int,
    schedule: MaskSchedule,
    model: GeneratorModel,
    seed: int,
    temperature: float = 1.0,
    trace: Optional[DecodeTrace] = None,
) -> np.ndarray:
    """Fill an all-[MASK] sequence over schedule.iterations passes.

    Each pass predicts every masked position, then keeps the most confident
    predictions (log-probability, ties to the lower position index) so that
    exactly schedule.masked_count(step, n) positions stay masked for the next
    pass. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    net = model.mask_net
    net.eval()
    gen = torch.Generator().manual_seed(seed)
    tokens = torch.full((1, n), net.mask_id, dtype=torch.long)
    masked = torch.ones(n, dtype=torch.bool)
    L = schedule.iterations
    with torch.no_grad():
        for step in range(1, L + 1):
            if trace is not None:
                trace.masked_before.append(int(masked.sum()))
            target_masked = schedule.masked_count(step, n)
            logits = net(tokens, text_emb)[0]  # (n, K)
            if trace is not None:
                trace.logits_finite &= bool(torch.isfinite(logits).all())
                probs_all = F.softmax(logits, dim=-1)
                trace.prob_sums.append(float(probs_all.sum(dim=-1).mean()))
            if temperature <= 0:
                choice = logits.argmax(dim=-1)
            else:
                probs = F.softmax(logits / temperature, dim=-1)
                choice = torch.multinomial(probs, 1, generator=gen).squeeze(-1)
            logprob = F.log_softmax(logits, dim=-1).gather(1, choice[:, None]).squeeze(-1)

            mask_idx = torch.nonzero(masked).flatten()
            keep = int(masked.sum()) - target_masked
            if keep > 0:
                conf = logprob[mask_idx]
                order = np.lexsort((mask_idx.numpy(), -conf.numpy()))
                chosen_positions = mask_idx[order[:keep]]
                tokens[0, chosen_positions] = choice[chosen_positions]
                masked[chosen_positions] = False
            if trace is not None:
                trace.masked_after.append(int(masked.sum()))
    assert not masked.any(), "schedule left masked positions after the final pass"
    return tokens[0].numpy().astype(np.int64)


def generate_residuals(
    base_tokens: np.ndarray,
    text_emb: torch.Tensor,
    model: GeneratorModel,
) -> TokenGrid:
    """Greedy layer-by-layer prediction of the residual token layers."""
    V = model.config.residual_depth
    layers = [np.asarray(base_tokens, dtype=np.int64)]
    if V == 0 or model.res_net is None:
        return TokenGrid(np.stack(layers), model.config.num_codes)
    net = model.res_net
    net.eval()
    with torch.no_grad():
        for j in range(1, V + 1):
            prefix = torch.as_tensor(np.stack(layers))[None]  # (1, j, n)
            logits = net(prefix, j, text_emb)[0]
            layers.append(logits.argmax(dim=-1).numpy().astype(np.int64))
    return TokenGrid(np.stack(layers), model.config.num_codes)


def generate_motion(
    prompt: str,
    target_frames: int,
    rvq_model: RvqModel,
    gen_model: GeneratorModel,
    seed: int,
    temperature: float = 1.0,
    schedule: Optional[MaskSchedule] = None,
) -> MotionClip:
    """Prompt -> tokens -> features -> clip of exactly `target_frames` frames."""
    if target_frames < 1:
        raise ValueError("target_frames must be >= 1")
    if rvq_model.feature_spec is None:
        raise ValueError("the quantizer model carries no feature spec; cannot emit a clip")
    schedule = schedule or gen_model.schedule
    f = rvq_model.config.downsample
    n = math.ceil(target_frames / f)
    text = gen_model.embed_text(prompt)
    base = generate_base(text, n, schedule, gen_model, seed, temperature)
    grid = generate_residuals(base, text, gen_model)
    data = decode_tokens(grid, rvq_model)[:target_frames]
    return from_features(FeatureMatrix(data, rvq_model.feature_spec))

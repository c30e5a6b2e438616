"""Bidirectional token transformers: the masked base-layer model and the
residual-layer model conditioned on all preceding layers."""

import torch
import torch.nn as nn


def _encoder_stack(d_model: int, heads: int, layers: int, ff: int) -> nn.TransformerEncoder:
    layer = nn.TransformerEncoderLayer(
        d_model=d_model,
        nhead=heads,
        dim_feedforward=ff,
        batch_first=True,
        norm_first=True,
        dropout=0.0,
    )
    return nn.TransformerEncoder(layer, num_layers=layers, enable_nested_tensor=False)


class MaskTransformer(nn.Module):
    """Predicts base-layer tokens at masked positions.

    Vocabulary is K codes plus the [MASK] token with id K. The text embedding
    is projected and prepended as a conditioning position.
    """

    def __init__(self, num_codes: int, max_len: int, d_model: int, heads: int,
                 layers: int, ff: int, text_dim: int):
        super().__init__()
        self.num_codes = num_codes
        self.mask_id = num_codes
        self.max_len = max_len
        self.token_emb = nn.Embedding(num_codes + 1, d_model)
        self.pos_emb = nn.Parameter(torch.zeros(max_len, d_model))
        nn.init.trunc_normal_(self.pos_emb, std=0.02)
        self.text_proj = nn.Linear(text_dim, d_model)
        self.encoder = _encoder_stack(d_model, heads, layers, ff)
        self.head = nn.Linear(d_model, num_codes)
        # uniform prediction at initialization
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, tokens: torch.Tensor, text_emb: torch.Tensor) -> torch.Tensor:
        B, n = tokens.shape
        if n > self.max_len:
            raise ValueError(f"sequence length {n} exceeds max_len {self.max_len}")
        x = self.token_emb(tokens) + self.pos_emb[:n][None]
        cond = self.text_proj(text_emb)[:, None, :]
        h = self.encoder(torch.cat([cond, x], dim=1))
        return self.head(h[:, 1:])


class ResidualTransformer(nn.Module):
    """Predicts layer-j tokens from the summed embeddings of layers 0..j-1,
    the text embedding, and a learned layer indicator."""

    def __init__(self, num_codes: int, residual_depth: int, max_len: int, d_model: int,
                 heads: int, layers: int, ff: int, text_dim: int):
        super().__init__()
        if residual_depth < 1:
            raise ValueError("residual transformer requires depth >= 1")
        self.num_codes = num_codes
        self.residual_depth = residual_depth
        self.max_len = max_len
        self.layer_embs = nn.ModuleList(
            nn.Embedding(num_codes, d_model) for _ in range(residual_depth + 1)
        )
        self.indicator_emb = nn.Embedding(residual_depth, d_model)
        self.pos_emb = nn.Parameter(torch.zeros(max_len, d_model))
        nn.init.trunc_normal_(self.pos_emb, std=0.02)
        self.text_proj = nn.Linear(text_dim, d_model)
        self.encoder = _encoder_stack(d_model, heads, layers, ff)
        self.head = nn.Linear(d_model, num_codes)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, prefix_layers: torch.Tensor, layer_index: int,
                text_emb: torch.Tensor) -> torch.Tensor:
        """prefix_layers: (B, j, n) tokens for layers 0..j-1."""
        if not 1 <= layer_index <= self.residual_depth:
            raise ValueError(f"layer index {layer_index} outside [1, {self.residual_depth}]")
        B, j, n = prefix_layers.shape
        if j != layer_index:
            raise ValueError(f"got {j} prefix layers for layer index {layer_index}")
        x = torch.zeros(B, n, self.pos_emb.shape[1], dtype=self.pos_emb.dtype,
                        device=prefix_layers.device)
        for v in range(j):
            x = x + self.layer_embs[v](prefix_layers[:, v])
        indicator = self.indicator_emb(
            torch.full((B,), layer_index - 1, dtype=torch.long, device=prefix_layers.device)
        )
        x = x + self.pos_emb[:n][None] + indicator[:, None, :]
        cond = self.text_proj(text_emb)[:, None, :]
        h = self.encoder(torch.cat([cond, x], dim=1))
        return self.head(h[:, 1:])

"""Prompt embeddings for conditioning the generators.

The default encoder hashes character trigrams into a signed bag and projects
it through a fixed random matrix; it is deterministic across processes
(crc32, seeded projection) and injective enough for toy-scale conditioning.
An HTTP client for an external embedding service implements the same
interface.
"""

import zlib
from typing import Optional

import numpy as np
import requests

from ..backends import BackendError

_BAG_DIM = 2048
_PROJECTION_SEED = 0x5EEDBA6


class HashedTrigramEncoder:
    def __init__(self, dim: int = 64):
        self.dim = dim
        rng = np.random.default_rng(_PROJECTION_SEED)
        self._projection = (
            rng.standard_normal((_BAG_DIM, dim)) / np.sqrt(_BAG_DIM)
        ).astype(np.float32)

    def encode(self, text: str) -> np.ndarray:
        padded = f"^^{text.casefold()}$$"
        bag = np.zeros(_BAG_DIM, dtype=np.float32)
        for i in range(len(padded) - 2):
            h = zlib.crc32(padded[i : i + 3].encode("utf-8"))
            sign = 1.0 if (h >> 16) & 1 else -1.0
            bag[h % _BAG_DIM] += sign
        out = bag @ self._projection
        norm = float(np.linalg.norm(out))
        return out / norm if norm > 1e-12 else out

    def encode_bag(self, text: str) -> np.ndarray:
        """Raw signed trigram bag, before projection (used by the evaluator)."""
        padded = f"^^{text.casefold()}$$"
        bag = np.zeros(_BAG_DIM, dtype=np.float32)
        for i in range(len(padded) - 2):
            h = zlib.crc32(padded[i : i + 3].encode("utf-8"))
            sign = 1.0 if (h >> 16) & 1 else -1.0
            bag[h % _BAG_DIM] += sign
        return bag


class HttpTextEncoder:
    """POST {"text": ...} -> {"embedding": [...]} against an external service."""

    def __init__(self, url: str, dim: int, timeout: float = 30.0, session: Optional[requests.Session] = None):
        self.url = url
        self.dim = dim
        self.timeout = timeout
        self.session = session or requests.Session()

    def encode(self, text: str) -> np.ndarray:
        try:
            resp = self.session.post(self.url, json={"text": text}, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"embedding request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"embedding service returned HTTP {resp.status_code}")
        try:
            vec = np.asarray(resp.json()["embedding"], dtype=np.float32)
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(f"malformed embedding payload: {exc}") from exc
        if vec.shape != (self.dim,):
            raise BackendError(f"embedding has shape {vec.shape}, expected ({self.dim},)")
        return vec

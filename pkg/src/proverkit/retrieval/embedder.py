"""Embedding providers for declaration retrieval.

The shipped default is a deterministic hashed bag-of-words embedder:
it needs no model, is stable across platforms and runs, and makes
rankings reproducible in tests.  Real embedding services can be plugged
in behind the same protocol.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class Embedder(Protocol):
    dimension: int
    model_id: str

    def embed(self, texts: list[str]) -> np.ndarray:
        """Return an (n, dimension) float32 array of unit-norm vectors."""
        ...


class HashedBagOfWordsEmbedder:
    """Token counts hashed into a fixed number of buckets, L2-normalized.

    Tokens are lowercase alphanumeric runs; camelCase and snake_case both
    fragment into comparable pieces.  Bucket assignment uses sha256 so the
    mapping never depends on interpreter hash randomization.
    """

    def __init__(self, dimension: int = 256):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.model_id = f"hashed-bow-{dimension}"
        self._bucket_cache: dict[str, int] = {}

    def _bucket(self, token: str) -> int:
        cached = self._bucket_cache.get(token)
        if cached is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            cached = int.from_bytes(digest[:8], "little") % self.dimension
            self._bucket_cache[token] = cached
        return cached

    def tokenize(self, text: str) -> list[str]:
        # split camelCase first so NatAddComm and add_comm share tokens
        spaced = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", text)
        return _TOKEN_RE.findall(spaced.lower())

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension), dtype=np.float32)
        for row, text in enumerate(texts):
            for token in self.tokenize(text):
                out[row, self._bucket(token)] += 1.0
            norm = float(np.linalg.norm(out[row]))
            if norm > 0:
                out[row] /= norm
        return out

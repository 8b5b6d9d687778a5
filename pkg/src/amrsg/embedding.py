"""Deterministic token embeddings standing in for a pretrained encoder."""
from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

from .errors import EmptyText
from .retrieval import tokenize


class HashEmbedding:
    """Each token maps to a fixed vector in [-1, 1]^d seeded by a hash of the token.

    ``embed`` returns the l x d token matrix of a text; ``cls`` max-pools over
    every token of the given texts and stands in for a sequence-level vector.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._vector = lru_cache(maxsize=65536)(self._make_vector)

    def _make_vector(self, token: str) -> np.ndarray:
        digest = hashlib.blake2b(f"{self.seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        vec = rng.uniform(-1.0, 1.0, self.dim)
        vec.flags.writeable = False
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise EmptyText(f"no tokens in {text!r}")
        return np.stack([self._vector(t) for t in tokens])

    def cls(self, texts: list[str]) -> np.ndarray:
        return self.embed(" ".join(texts)).max(axis=0)

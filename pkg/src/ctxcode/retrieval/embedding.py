"""Embedding providers.

``NGramEmbedder`` is the deterministic test embedder: lower-cased,
whitespace-collapsed text is cut into character n-grams, each hashed
(blake2b) to a bucket and a sign in a fixed 256-dim vector, which is then
L2-normalized. ``HttpEmbedder`` talks to an OpenAI-compatible
``/embeddings`` endpoint.
"""

from __future__ import annotations

import hashlib
import json
import re
import urllib.error
import urllib.request
from typing import Protocol

import numpy as np

from ..errors import ProviderUnavailable

_WS = re.compile(r"\s+")


class Embedder(Protocol):
    id: str
    dims: int

    def embed(self, text: str) -> np.ndarray: ...


def normalize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        out = np.zeros_like(vec)
        out[0] = 1.0
        return out.astype(np.float32)
    return (vec / norm).astype(np.float32)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a64, b64 = np.asarray(a, np.float64), np.asarray(b, np.float64)
    return float(a64 @ b64 / (np.linalg.norm(a64) * np.linalg.norm(b64)))


class NGramEmbedder:
    def __init__(self, dims: int = 256, n: int = 3):
        if dims <= 0 or n <= 0:
            raise ValueError("dims and n must be positive")
        self.dims, self.n = dims, n
        self.id = f"ngram{n}-{dims}"
        self._cache: dict[str, tuple[int, float]] = {}

    def _slot(self, gram: str) -> tuple[int, float]:
        slot = self._cache.get(gram)
        if slot is None:
            h = int.from_bytes(hashlib.blake2b(gram.encode("utf-8", "surrogatepass"), digest_size=8).digest(), "little")
            slot = (h % self.dims, 1.0 if (h >> 63) & 1 else -1.0)
            self._cache[gram] = slot
        return slot

    def grams(self, text: str) -> list[str]:
        norm = _WS.sub(" ", text.lower())
        if len(norm) <= self.n:
            return [norm]
        return [norm[i : i + self.n] for i in range(len(norm) - self.n + 1)]

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        vec = np.zeros(self.dims, dtype=np.float64)
        for gram in self.grams(text):
            idx, sign = self._slot(gram)
            vec[idx] += sign
        return normalize(vec)


class HttpEmbedder:
    """OpenAI-compatible embeddings client; dims are whatever the service returns."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        dims: int | None = None,
        timeout: float = 30.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dims = dims or 0
        self.timeout = timeout
        self.id = f"http:{model}"

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        body = json.dumps({"model": self.model, "input": text}).encode()
        req = urllib.request.Request(
            f"{self.base_url}/embeddings",
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        if self.api_key:
            req.add_header("Authorization", f"Bearer {self.api_key}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.load(resp)
            values = payload["data"][0]["embedding"]
        except (urllib.error.URLError, OSError, KeyError, IndexError, ValueError) as err:
            raise ProviderUnavailable(f"embedding service at {self.base_url}: {err}") from err
        vec = normalize(np.asarray(values, dtype=np.float64))
        if self.dims and vec.shape[0] != self.dims:
            raise ProviderUnavailable(
                f"embedding service returned {vec.shape[0]} dims, expected {self.dims}"
            )
        self.dims = vec.shape[0]
        return vec

"""Signed feature hashing of opcode n-grams."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from ..errors import EmptySequence
from ..features import FeatureMatrix
from .riscv import OpcodeSequence

FNV_OFFSET = 0x811C9DC5
FNV_PRIME = 0x01000193
SIGN_BIT = 31


def fnv1a_32(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFF
    return h


def ngram_key(gram: tuple[str, ...]) -> bytes:
    """Tokens joined by single spaces, UTF-8 encoded."""
    return " ".join(gram).encode("utf-8")


def ngram_features(seq: OpcodeSequence, n_values: Iterable[int] = (1, 2, 3),
                   dim: int = 1024) -> np.ndarray:
    """Term frequencies of all n-grams hashed into ``dim`` buckets, L2-normalized.

    Bucket = FNV-1a(key) mod dim; the sign is -1 when bit 31 of the hash is set.
    """
    tokens = tuple(seq.tokens if isinstance(seq, OpcodeSequence) else seq)
    if not tokens:
        raise EmptySequence("cannot hash an empty opcode sequence")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    vec = np.zeros(dim)
    counts: dict[bytes, int] = {}
    for n in sorted(set(n_values)):
        if n < 1:
            raise ValueError("n-gram order must be >= 1")
        for i in range(len(tokens) - n + 1):
            key = ngram_key(tokens[i:i + n])
            counts[key] = counts.get(key, 0) + 1
    for key, c in counts.items():
        h = fnv1a_32(key)
        vec[h % dim] += -c if (h >> SIGN_BIT) & 1 else c
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def feature_names(dim: int) -> tuple[str, ...]:
    return tuple(f"ngram_{i:04d}" for i in range(dim))


def ngram_matrix(seqs, row_ids, labels: Optional[list] = None, n_values=(1, 2, 3),
                 dim: int = 1024) -> FeatureMatrix:
    rows = np.array([ngram_features(s, n_values, dim) for s in seqs]).reshape(len(row_ids), dim)
    signs = None if labels is None else np.array([lab.sign for lab in labels], dtype=np.int8)
    return FeatureMatrix(rows, feature_names(dim), tuple(row_ids), signs)

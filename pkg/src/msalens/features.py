"""Hashed bag-of-unigram features for the native linear classifier.

Target-sentence tokens and context tokens are hashed into disjoint halves of
the feature space so the model can weigh them separately. Counts get
sublinear tf scaling (1 + ln count).
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter

DEFAULT_DIMENSION = 2**18

# Sparse vector: feature index -> non-negative weight.
FeatureVector = dict[int, float]


def stable_hash(token: str) -> int:
    """Process-independent 64-bit hash of a token."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _accumulate(text: str, dimension: int, offset: int, out: FeatureVector) -> None:
    half = dimension // 2
    for token, count in Counter(text.lower().split()).items():
        index = offset + stable_hash(token) % half
        out[index] = out.get(index, 0.0) + 1.0 + math.log(count)


def featurize(
    sentence_text: str,
    context_text: str = "",
    dimension: int = DEFAULT_DIMENSION,
) -> FeatureVector:
    """Hash a target sentence (and optional context) into a sparse vector.

    Sentence tokens land in [0, dimension/2), context tokens in
    [dimension/2, dimension). Deterministic for fixed inputs and dimension;
    empty inputs produce an empty vector.
    """
    if dimension < 2 or dimension & (dimension - 1):
        raise ValueError("dimension must be a power of two >= 2")
    out: FeatureVector = {}
    _accumulate(sentence_text, dimension, 0, out)
    if context_text:
        _accumulate(context_text, dimension, dimension // 2, out)
    return out


def context_text(before_text: str, after_text: str) -> str:
    """Join the two context sides into the text that feeds the context subspace."""
    return " ".join(part for part in (before_text, after_text) if part)

"""Token vocabulary and pretrained word-vector loading.

Vectors come from a plain-text file of ``word v1 ... v300`` lines.  Tokens
missing from the file get a seeded uniform draw from [-0.25, 0.25], so two
loads with the same seed and vocabulary are identical; the padding entry is
pinned to the zero vector.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1


@dataclass
class Vocabulary:
    """Token <-> index map with reserved padding and unknown entries."""

    tokens: list[str]
    index: dict[str, int]

    @staticmethod
    def build(sentences: Iterable[Sequence[str]]) -> "Vocabulary":
        """Collect tokens in first-seen order after the reserved entries."""
        tokens = [PAD_TOKEN, UNK_TOKEN]
        index = {PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX}
        for sentence in sentences:
            for token in sentence:
                if token not in index:
                    index[token] = len(tokens)
                    tokens.append(token)
        return Vocabulary(tokens=tokens, index=index)

    @staticmethod
    def from_tokens(tokens: Sequence[str]) -> "Vocabulary":
        if list(tokens[:2]) != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError("token list must start with the reserved entries")
        return Vocabulary(tokens=list(tokens), index={t: i for i, t in enumerate(tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.index.get(t, UNK_INDEX) for t in tokens]

    def content_hash(self) -> str:
        digest = hashlib.sha256("\n".join(self.tokens).encode("utf-8"))
        return digest.hexdigest()


@dataclass
class EmbeddingTable:
    """Dense word vectors aligned with a vocabulary; row 0 is all zero."""

    vocab: Vocabulary
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @staticmethod
    def random(vocab: Vocabulary, dim: int = 300, seed: int = 1) -> "EmbeddingTable":
        """Synthetic table: seeded uniform vectors, zero padding row."""
        rng = np.random.RandomState(seed)
        vectors = rng.uniform(-0.25, 0.25, size=(len(vocab), dim)).astype(np.float32)
        vectors[PAD_INDEX] = 0.0
        return EmbeddingTable(vocab=vocab, vectors=vectors)


def _read_vector_file(path: str | Path, wanted: set[str], dim: int) -> dict[str, np.ndarray]:
    found: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2:
                continue  # word2vec-style count header
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DimensionError(
                    f"line {lineno}: expected {dim} values, found {len(values)}"
                )
            if word in wanted and word not in found:
                found[word] = np.asarray(values, dtype=np.float32)
    return found


def load_embeddings(
    path: str | Path, vocab: Vocabulary, dim: int = 300, seed: int = 1
) -> EmbeddingTable:
    """Load file vectors for in-vocabulary tokens, seeded uniform otherwise.

    Lookup tries the surface form first and falls back to its lowercase
    form, which is how mixed-case corpora meet lowercased vector files.
    """
    wanted = set(vocab.tokens) | {t.lower() for t in vocab.tokens}
    found = _read_vector_file(path, wanted, dim)

    rng = np.random.RandomState(seed)
    vectors = np.zeros((len(vocab), dim), dtype=np.float32)
    for i, token in enumerate(vocab.tokens):
        if i == PAD_INDEX:
            continue
        vec = found.get(token)
        if vec is None:
            vec = found.get(token.lower())
        if vec is None:
            vec = rng.uniform(-0.25, 0.25, size=dim).astype(np.float32)
        vectors[i] = vec
    return EmbeddingTable(vocab=vocab, vectors=vectors)

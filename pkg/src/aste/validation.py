"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from typing import Sequence

import torch

from .corpus import AnnotatedSentence
from .errors import ConfigError
from .graph import edgeless
from .vectors import EmbeddingTable


def check_sentences(
    sentences: Sequence[AnnotatedSentence], what: str = "training set"
) -> list[AnnotatedSentence]:
    """Reject empty corpora and attach edgeless graphs where parses are missing."""
    sentences = list(sentences)
    if not sentences:
        raise ConfigError(f"{what} is empty")
    for s in sentences:
        if not isinstance(s, AnnotatedSentence):
            raise TypeError(f"expected AnnotatedSentence, got {type(s).__name__}")
        if s.dep_graph is None:
            s.dep_graph = edgeless(s.length)
    return sentences


def token_ids(table: EmbeddingTable, tokens: Sequence[str]) -> torch.Tensor:
    return torch.as_tensor(table.vocab.encode(tokens), dtype=torch.long)

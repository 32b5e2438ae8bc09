"""Stage two: candidate aspect-opinion pairing and validity classification.

The candidate pool for a sentence is the cross product of its aspect and
opinion spans.  Each candidate gets a position-index vector: the floor of
the distance between the two span centers (at least 1, capped), stamped on
every token of both spans and zero elsewhere.  Word vectors concatenated
with trainable position embeddings feed a BLSTM; the mean hidden states
over the two spans, concatenated, feed a binary softmax classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch
from torch import Tensor, nn

from .corpus import AnnotatedSentence, Triplet
from .errors import OverlapError
from .tags import Polarity, Span

POSITION_CAP = 50


def position_indices(
    aspect: Span, opinion: Span, length: int, cap: int = POSITION_CAP
) -> np.ndarray:
    """Center-distance index stamped onto both spans, zero elsewhere."""
    aspect, opinion = Span(*aspect), Span(*opinion)
    if aspect.overlaps(opinion):
        raise OverlapError(f"aspect {aspect} overlaps opinion {opinion}")
    for span in (aspect, opinion):
        if span.start < 0 or span.end >= length:
            raise IndexError(f"span {span} outside sentence of length {length}")
    distance = min(max(1, math.floor(abs(aspect.center() - opinion.center()))), cap)
    indices = np.zeros(length, dtype=np.int64)
    indices[aspect.start : aspect.end + 1] = distance
    indices[opinion.start : opinion.end + 1] = distance
    return indices


@dataclass
class CandidatePair:
    """One aspect-opinion candidate with its position-index vector."""

    aspect: Span
    polarity: Optional[Polarity]
    opinion: Span
    position_indices: np.ndarray = field(repr=False)

    @staticmethod
    def make(
        aspect: Span,
        polarity: Optional[Polarity],
        opinion: Span,
        length: int,
        cap: int = POSITION_CAP,
    ) -> "CandidatePair":
        return CandidatePair(
            aspect=Span(*aspect),
            polarity=polarity,
            opinion=Span(*opinion),
            position_indices=position_indices(aspect, opinion, length, cap),
        )


def generate_candidates(
    aspects: Sequence[tuple[Span, Optional[Polarity]]],
    opinions: Sequence[Span],
    length: int,
    cap: int = POSITION_CAP,
) -> list[CandidatePair]:
    """Cross product in (aspect order, opinion order).

    Candidates whose spans overlap (possible only with malformed upstream
    decodes) are skipped; callers can count drops as n*m - len(result).
    """
    pool = []
    for aspect, polarity in aspects:
        for opinion in opinions:
            if Span(*aspect).overlaps(Span(*opinion)):
                continue
            pool.append(CandidatePair.make(aspect, polarity, opinion, length, cap))
    return pool


def build_training_pairs(
    sentence: AnnotatedSentence, cap: int = POSITION_CAP
) -> list[tuple[CandidatePair, bool]]:
    """Gold cross product labeled true on gold pairs, false elsewhere."""
    gold = {(t.aspect, t.opinion) for t in sentence.triplets}
    pool = generate_candidates(sentence.aspects(), sentence.opinions(), sentence.length, cap)
    return [(pair, (pair.aspect, pair.opinion) in gold) for pair in pool]


class PairNetwork(nn.Module):
    """BLSTM pair encoder over word plus position embeddings."""

    def __init__(
        self,
        embeddings: np.ndarray,
        hidden_size: int = 50,
        position_dim: int = 25,
        position_cap: int = POSITION_CAP,
        dropout: float = 0.5,
        freeze_embeddings: bool = True,
        dtype: torch.dtype = torch.float32,
    ) -> None:
        super().__init__()
        embed = torch.as_tensor(np.asarray(embeddings), dtype=dtype)
        self.embedding = nn.Embedding.from_pretrained(
            embed, freeze=freeze_embeddings, padding_idx=0
        )
        self.position_cap = position_cap
        # index 0 marks off-span tokens; padding_idx pins its row to zero
        # and keeps it out of gradient updates
        self.position_embedding = nn.Embedding(position_cap + 1, position_dim, padding_idx=0)
        self.lstm = nn.LSTM(
            embed.shape[1] + position_dim, hidden_size, bidirectional=True, batch_first=True
        )
        self.classifier = nn.Linear(4 * hidden_size, 2)
        self.drop = nn.Dropout(dropout)
        self.to(dtype)

    def forward(self, token_ids: Tensor, pair: CandidatePair) -> Tensor:
        """Class probabilities (invalid, valid) for one candidate."""
        length = token_ids.shape[0]
        for span in (pair.aspect, pair.opinion):
            if span.start < 0 or span.end >= length:
                raise IndexError(f"span {span} outside sentence of length {length}")
        positions = torch.as_tensor(pair.position_indices, dtype=torch.long)
        vectors = torch.cat(
            [self.embedding(token_ids), self.position_embedding(positions)], dim=-1
        )
        hidden, _ = self.lstm(vectors.unsqueeze(0))
        hidden = hidden.squeeze(0)
        feature = torch.cat(
            [
                hidden[pair.aspect.start : pair.aspect.end + 1].mean(dim=0),
                hidden[pair.opinion.start : pair.opinion.end + 1].mean(dim=0),
            ]
        )
        return torch.softmax(self.classifier(self.drop(feature)), dim=-1)

    def pair_probability(self, token_ids: Tensor, pair: CandidatePair) -> Tensor:
        return self.forward(token_ids, pair)[1]


def pair_loss(probs: Tensor, label: bool) -> Tensor:
    """Binary cross entropy against the (invalid, valid) head."""
    return -probs[1 if label else 0].clamp_min(1e-12).log()


def pair_decode(probability: float, threshold: float = 0.5) -> bool:
    """Valid iff the probability reaches the threshold (closed boundary)."""
    return probability >= threshold


def assemble_triplets(
    valid_pairs: Sequence[tuple[CandidatePair, float]]
) -> list[tuple[Triplet, float]]:
    """One triplet per surviving pair, polarity copied from its aspect."""
    triplets = []
    for pair, score in valid_pairs:
        if pair.polarity is None:
            raise ValueError(f"pair {pair.aspect}-{pair.opinion} has no aspect polarity")
        triplets.append((Triplet(pair.aspect, pair.polarity, pair.opinion), score))
    return triplets

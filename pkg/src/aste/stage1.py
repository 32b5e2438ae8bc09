"""Stage one: the joint aspect-sentiment and opinion sequence tagger.

One network produces four per-token probability heads:

* boundary tags over {B, I, E, S, O} from a first BLSTM,
* unified aspect+sentiment tags from a second BLSTM whose states pass
  through a consistency gate, reinforced with the opinion encoder state and
  fused with the boundary head through a constant transition matrix,
* an auxiliary target-guided opinion head over the concatenation of the
  boundary encoder and graph-convolution states,
* the opinion head proper, from a BLSTM over the graph-convolution states.

Training minimizes the sum of the four per-token cross entropies; decoding
takes the per-token argmax of the fused unified head and the opinion head
and reads spans off leniently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor, nn

from .corpus import AnnotatedSentence
from .errors import ShapeError
from .tags import (
    SCHEMA,
    Polarity,
    Span,
    TagSchema,
    plain_spans,
    tags_to_spans,
    transition_matrix,
)


@dataclass
class Stage1Output:
    """All intermediate states and probability heads for one sentence.

    Every ``*_probs`` field holds one probability distribution per token.
    """

    boundary_hidden: Tensor
    boundary_probs: Tensor
    sentiment_hidden: Tensor
    transition_probs: Tensor
    reinforced_probs: Tensor
    unified_probs: Tensor
    graph_hidden: Tensor
    guided_opinion_probs: Tensor
    opinion_hidden: Tensor
    opinion_probs: Tensor


class TaggerNetwork(nn.Module):
    """Joint tagger over frozen word vectors and a dependency adjacency."""

    def __init__(
        self,
        embeddings: np.ndarray,
        hidden_size: int = 50,
        gcn_size: int | None = None,
        gcn_layers: int = 1,
        dropout: float = 0.5,
        epsilon: float = 0.5,
        freeze_embeddings: bool = True,
        schema: TagSchema = SCHEMA,
        dtype: torch.dtype = torch.float32,
    ) -> None:
        super().__init__()
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"fusion constant {epsilon} not in (0, 1)")
        if gcn_layers not in (1, 2):
            raise ValueError("graph convolution supports 1 or 2 layers")
        self.schema = schema
        self.epsilon = epsilon
        embed = torch.as_tensor(np.asarray(embeddings), dtype=dtype)
        self.embedding = nn.Embedding.from_pretrained(
            embed, freeze=freeze_embeddings, padding_idx=0
        )
        embed_dim = embed.shape[1]
        h2 = 2 * hidden_size
        gcn_size = h2 if gcn_size is None else gcn_size
        n_boundary = len(schema.boundary)
        n_unified = len(schema.unified)

        self.boundary_lstm = nn.LSTM(embed_dim, hidden_size, bidirectional=True, batch_first=True)
        self.sentiment_lstm = nn.LSTM(h2, hidden_size, bidirectional=True, batch_first=True)
        self.gate = nn.Linear(h2, h2)
        self.boundary_head = nn.Linear(h2, n_boundary, bias=False)
        self.unified_head = nn.Linear(2 * h2, n_unified, bias=False)
        self.guidance_head = nn.Linear(h2 + gcn_size, n_boundary, bias=False)
        self.opinion_head = nn.Linear(h2, n_boundary, bias=False)
        self.opinion_lstm = nn.LSTM(gcn_size, hidden_size, bidirectional=True, batch_first=True)
        gcn_dims = [embed_dim] + [gcn_size] * gcn_layers
        self.gcn = nn.ModuleList(
            nn.Linear(gcn_dims[i], gcn_dims[i + 1], bias=False) for i in range(gcn_layers)
        )
        self.drop = nn.Dropout(dropout)
        self.register_buffer(
            "transition", torch.as_tensor(transition_matrix(schema), dtype=dtype)
        )
        self.to(dtype)

    @property
    def dtype(self) -> torch.dtype:
        return self.transition.dtype

    def _bilstm(self, lstm: nn.LSTM, states: Tensor) -> Tensor:
        out, _ = lstm(states.unsqueeze(0))
        return out.squeeze(0)

    def consistency_gate(self, states: Tensor) -> Tensor:
        """Gated carry across time steps; the initial carry is zero."""
        carry = torch.zeros_like(states[0])
        gated = []
        for t in range(states.shape[0]):
            g = torch.sigmoid(self.gate(states[t]))
            carry = g * states[t] + (1.0 - g) * carry
            gated.append(carry)
        return torch.stack(gated)

    def boundary_transition(self, boundary_probs: Tensor) -> Tensor:
        """Map boundary distributions onto legal unified distributions."""
        return boundary_probs @ self.transition

    def fuse(self, boundary_probs: Tensor, transitioned: Tensor, reinforced: Tensor) -> Tensor:
        """Confidence-weighted mix of the transitioned and reinforced heads.

        The weight is the fusion constant times the self inner product of
        the boundary distribution, so it lives in [epsilon/5, epsilon].
        """
        concentration = (boundary_probs * boundary_probs).sum(dim=-1, keepdim=True)
        alpha = self.epsilon * concentration
        return alpha * transitioned + (1.0 - alpha) * reinforced

    def graph_conv(self, vectors: Tensor, adjacency: Tensor) -> Tensor:
        hidden = vectors
        for layer in self.gcn:
            hidden = torch.relu(adjacency @ layer(hidden))
        return hidden

    def forward(self, token_ids: Tensor, adjacency: Tensor) -> Stage1Output:
        length = token_ids.shape[0]
        if adjacency.shape != (length, length):
            raise ShapeError(
                f"adjacency shape {tuple(adjacency.shape)} does not match length {length}"
            )
        adjacency = adjacency.to(self.dtype)
        vectors = self.embedding(token_ids)

        boundary_hidden = self._bilstm(self.boundary_lstm, vectors)
        boundary_probs = torch.softmax(self.boundary_head(self.drop(boundary_hidden)), dim=-1)

        sentiment_hidden = self.consistency_gate(
            self._bilstm(self.sentiment_lstm, boundary_hidden)
        )

        graph_hidden = self.graph_conv(vectors, adjacency)
        guided_opinion_probs = torch.softmax(
            self.guidance_head(self.drop(torch.cat([boundary_hidden, graph_hidden], dim=-1))),
            dim=-1,
        )
        opinion_hidden = self._bilstm(self.opinion_lstm, graph_hidden)
        opinion_probs = torch.softmax(self.opinion_head(self.drop(opinion_hidden)), dim=-1)

        reinforced_probs = torch.softmax(
            self.unified_head(self.drop(torch.cat([sentiment_hidden, opinion_hidden], dim=-1))),
            dim=-1,
        )
        transition_probs = self.boundary_transition(boundary_probs)
        unified_probs = self.fuse(boundary_probs, transition_probs, reinforced_probs)

        return Stage1Output(
            boundary_hidden=boundary_hidden,
            boundary_probs=boundary_probs,
            sentiment_hidden=sentiment_hidden,
            transition_probs=transition_probs,
            reinforced_probs=reinforced_probs,
            unified_probs=unified_probs,
            graph_hidden=graph_hidden,
            guided_opinion_probs=guided_opinion_probs,
            opinion_hidden=opinion_hidden,
            opinion_probs=opinion_probs,
        )


def _nll(probs: Tensor, gold: Tensor) -> Tensor:
    # mean over tokens of -log p(gold); probs are already normalized rows
    picked = probs.gather(1, gold.view(-1, 1)).clamp_min(1e-12)
    return -picked.log().mean()


def stage1_loss_from_ids(
    output: Stage1Output, boundary: Tensor, unified: Tensor, opinion: Tensor
) -> Tensor:
    """Sum of the four per-token mean cross entropies."""
    for probs, gold in (
        (output.boundary_probs, boundary),
        (output.unified_probs, unified),
        (output.guided_opinion_probs, opinion),
        (output.opinion_probs, opinion),
    ):
        if probs.shape[0] != gold.shape[0]:
            raise ShapeError(
                f"{probs.shape[0]} predictions for {gold.shape[0]} gold tags"
            )
    return (
        _nll(output.boundary_probs, boundary)
        + _nll(output.unified_probs, unified)
        + _nll(output.guided_opinion_probs, opinion)
        + _nll(output.opinion_probs, opinion)
    )


def gold_tag_ids(
    sentence: AnnotatedSentence, schema: TagSchema = SCHEMA
) -> tuple[Tensor, Tensor, Tensor]:
    """Boundary, unified, and opinion gold id tensors for one sentence.

    Boundary gold is the unified gold with polarities factored away; the
    guided and plain opinion heads share the same opinion gold.
    """
    unified = schema.unified.encode(sentence.unified_tags)
    boundary = schema.boundary_of(unified)
    opinion = schema.opinion.encode(sentence.opinion_tags)
    as_tensor = lambda ids: torch.as_tensor(ids, dtype=torch.long)
    return as_tensor(boundary), as_tensor(unified), as_tensor(opinion)


def stage1_loss(
    output: Stage1Output, sentence: AnnotatedSentence, schema: TagSchema = SCHEMA
) -> Tensor:
    boundary, unified, opinion = gold_tag_ids(sentence, schema)
    return stage1_loss_from_ids(output, boundary, unified, opinion)


def decode_tags(probs: Tensor | np.ndarray, vocab_tags: tuple[str, ...]) -> list[str]:
    """Per-token argmax; ties go to the lowest tag index."""
    rows = np.asarray(probs.detach().cpu() if isinstance(probs, Tensor) else probs)
    return [vocab_tags[i] for i in rows.argmax(axis=1)]


def stage1_decode(
    unified_probs: Tensor | np.ndarray,
    opinion_probs: Tensor | np.ndarray,
    schema: TagSchema = SCHEMA,
) -> tuple[list[tuple[Span, Polarity]], list[Span]]:
    """Decode the fused unified head and the opinion head into spans."""
    aspect_labels = tags_to_spans(decode_tags(unified_probs, schema.unified.tags), schema)
    aspects = [(span, pol) for span, pol in aspect_labels if pol is not None]
    opinions = plain_spans(tags_to_spans(decode_tags(opinion_probs, schema.opinion.tags), schema))
    return aspects, opinions

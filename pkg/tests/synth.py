"""Synthetic corpora, parses, and vector files used across the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from aste.corpus import AnnotatedSentence, Triplet, check_sentence
from aste.graph import build_adjacency, heads_to_edges
from aste.tags import Polarity, Span, spans_to_tags

WORDS = (
    "the service was great but battery life felt short and screen looked "
    "crisp while keyboard stayed mushy over time for most users overall"
).split()


def random_spans(rng: random.Random, length: int, count: int, max_len: int = 2) -> list[Span]:
    """Disjoint spans separated by at least one token, left to right."""
    lengths = [rng.randint(1, max_len) for _ in range(count)]
    needed = sum(lengths) + (count - 1)
    if needed > length:
        raise ValueError(f"cannot fit {count} spans into {length} tokens")
    slack = length - needed
    gaps = [0] * (count + 1)
    for _ in range(slack):
        gaps[rng.randrange(count + 1)] += 1
    spans = []
    cursor = 0
    for i, span_len in enumerate(lengths):
        cursor += gaps[i] + (1 if i else 0)
        spans.append(Span(cursor, cursor + span_len - 1))
        cursor += span_len
    return spans


def random_sentence(
    rng: random.Random,
    length: int | None = None,
    groups: int | None = None,
    max_span_len: int = 2,
) -> AnnotatedSentence:
    """Sentence with complete-bipartite aspect-opinion groups."""
    length = length or rng.randint(8, 14)
    groups = groups or rng.randint(1, 2)
    per_group = [(rng.randint(1, 2), rng.randint(1, 2)) for _ in range(groups)]
    total = sum(a + o for a, o in per_group)
    while total * (max_span_len + 1) - 1 > length:
        per_group = [(1, 1) for _ in range(groups)]
        total = 2 * groups
        max_span_len = 1

    spans = random_spans(rng, length, total, max_span_len)
    rng.shuffle(spans)
    triplets = []
    for n_aspects, n_opinions in per_group:
        aspects = [(spans.pop(), rng.choice(list(Polarity))) for _ in range(n_aspects)]
        opinions = [spans.pop() for _ in range(n_opinions)]
        triplets += [Triplet(a, pol, o) for a, pol in aspects for o in opinions]
    triplets.sort()

    tokens = [rng.choice(WORDS) for _ in range(length)]
    sentence = AnnotatedSentence(
        tokens=tokens,
        triplets=triplets,
        unified_tags=spans_to_tags(
            sorted({(t.aspect, t.polarity) for t in triplets}), length, "unified"
        ),
        opinion_tags=spans_to_tags(sorted({t.opinion for t in triplets}), length, "opinion"),
    )
    check_sentence(sentence)
    return sentence


def random_corpus(seed: int, size: int, **kwargs) -> list[AnnotatedSentence]:
    rng = random.Random(seed)
    return [random_sentence(rng, **kwargs) for _ in range(size)]


def random_heads(rng: random.Random, length: int) -> list[int]:
    """A random dependency tree as 1-based head indices, 0 at the root."""
    order = list(range(length))
    rng.shuffle(order)
    heads = [0] * length
    for pos, token in enumerate(order[1:], 1):
        heads[token] = order[rng.randrange(pos)] + 1
    return heads


def attach_random_graphs(sentences, seed: int = 0) -> list[list[int]]:
    rng = random.Random(seed)
    all_heads = []
    for s in sentences:
        heads = random_heads(rng, s.length)
        s.dep_graph = build_adjacency(heads_to_edges(heads), s.length)
        all_heads.append(heads)
    return all_heads


def write_heads_file(path: Path, all_heads: list[list[int]]) -> None:
    path.write_text("\n".join(" ".join(map(str, h)) for h in all_heads) + "\n")


def write_vector_file(path: Path, words: list[str], dim: int, seed: int = 7) -> None:
    rng = random.Random(seed)
    lines = []
    for word in words:
        values = " ".join(f"{rng.uniform(-1, 1):.5f}" for _ in range(dim))
        lines.append(f"{word} {values}")
    path.write_text("\n".join(lines) + "\n")

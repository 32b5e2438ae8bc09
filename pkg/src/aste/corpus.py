"""Reading and writing the annotated triplet corpus.

A sample is three consecutive non-empty lines: the plain sentence, a line
of ``word=TAG`` items carrying collapsed aspect tags (``O`` or ``T-POS``,
``TT-NEG``, ...), and a line carrying collapsed opinion tags (``O`` or
``S``, ``SS``, ...).  Samples are separated by blank lines.

Repeated-letter markers are pair-group ids: every aspect whose marker has
k letters pairs with every opinion whose marker has k letters (many-to-many
within a group), and the polarity suffix of the aspect tag is the polarity
of all triplets it takes part in.  Contiguous runs of one collapsed tag
form a single span; training tags use the BIOES schemas from :mod:`.tags`.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

from .errors import (
    DanglingGroupError,
    EmptyAnnotationError,
    FormatError,
    OverlapError,
)
from .graph import DependencyGraph, build_adjacency, edgeless, heads_to_edges
from .tags import Polarity, Span, spans_to_tags, tags_to_spans

_ASPECT_TAG = re.compile(r"^(T+)-(POS|NEG|NEU)$")
_OPINION_TAG = re.compile(r"^(S+)$")


class Triplet(NamedTuple):
    """One (aspect span, polarity, opinion span) extraction unit."""

    aspect: Span
    polarity: Polarity
    opinion: Span


@dataclass
class AnnotatedSentence:
    """Tokens plus gold triplets plus the derived training tag sequences."""

    tokens: list[str]
    triplets: list[Triplet]
    unified_tags: list[str]
    opinion_tags: list[str]
    dep_graph: Optional[DependencyGraph] = field(default=None)

    @property
    def length(self) -> int:
        return len(self.tokens)

    def aspects(self) -> list[tuple[Span, Polarity]]:
        """Distinct aspect spans with polarity, in positional order."""
        seen: dict[Span, Polarity] = {}
        for t in self.triplets:
            seen.setdefault(t.aspect, t.polarity)
        return sorted(seen.items())

    def opinions(self) -> list[Span]:
        return sorted({t.opinion for t in self.triplets})


def check_sentence(sentence: AnnotatedSentence) -> None:
    """Raise if any structural invariant of the sentence is violated."""
    T = sentence.length
    if len(sentence.unified_tags) != T or len(sentence.opinion_tags) != T:
        raise FormatError(f"tag sequences do not match sentence length {T}")
    if not sentence.triplets:
        raise EmptyAnnotationError("sentence carries no triplets")

    aspects = sentence.aspects()
    opinions = sentence.opinions()
    all_spans = sorted([s for s, _ in aspects] + opinions)
    for prev, cur in zip(all_spans, all_spans[1:]):
        if cur.start <= prev.end:
            raise OverlapError(f"spans {prev} and {cur} overlap")

    if spans_to_tags(aspects, T, "unified") != sentence.unified_tags:
        raise FormatError("unified tags do not encode the triplet aspects")
    if spans_to_tags(opinions, T, "opinion") != sentence.opinion_tags:
        raise FormatError("opinion tags do not encode the triplet opinions")


def _split_items(line: str) -> tuple[list[str], list[str]]:
    words, tags = [], []
    for item in line.split():
        word, sep, tag = item.rpartition("=")
        if not sep:
            raise FormatError(f"item {item!r} is not of the form word=TAG")
        words.append(word)
        tags.append(tag)
    return words, tags


def _collapsed_runs(tags: list[str]) -> list[tuple[Span, str]]:
    """Maximal runs of one identical non-O collapsed tag."""
    runs: list[tuple[Span, str]] = []
    start = 0
    for t in range(1, len(tags) + 1):
        if t == len(tags) or tags[t] != tags[start]:
            if tags[start] != "O":
                runs.append((Span(start, t - 1), tags[start]))
            start = t
    return runs


def parse_sample(line1: str, line2: str, line3: str) -> AnnotatedSentence:
    """Parse one three-line sample into an :class:`AnnotatedSentence`.

    Aspects in pair group k are matched with opinions in group k; a group
    present on only one side raises :class:`DanglingGroupError`.
    """
    tokens = line1.split()
    words2, aspect_tags = _split_items(line2)
    words3, opinion_tags = _split_items(line3)
    if not (len(tokens) == len(words2) == len(words3)):
        raise FormatError(
            f"token counts differ: {len(tokens)} words, "
            f"{len(words2)} aspect tags, {len(words3)} opinion tags"
        )

    aspect_groups: dict[int, list[tuple[Span, Polarity]]] = {}
    for span, tag in _collapsed_runs(aspect_tags):
        m = _ASPECT_TAG.match(tag)
        if not m:
            raise FormatError(f"bad aspect tag {tag!r}")
        aspect_groups.setdefault(len(m.group(1)), []).append((span, Polarity(m.group(2))))

    opinion_groups: dict[int, list[Span]] = {}
    for span, tag in _collapsed_runs(opinion_tags):
        if not _OPINION_TAG.match(tag):
            raise FormatError(f"bad opinion tag {tag!r}")
        opinion_groups.setdefault(len(tag), []).append(span)

    if not aspect_groups or not opinion_groups:
        raise EmptyAnnotationError(
            "sample needs at least one aspect and one opinion expression"
        )
    for k in aspect_groups:
        if k not in opinion_groups:
            raise DanglingGroupError(f"aspect group {k} has no opinion group")
    for k in opinion_groups:
        if k not in aspect_groups:
            raise DanglingGroupError(f"opinion group {k} has no aspect group")

    triplets = [
        Triplet(aspect, pol, opinion)
        for k, aspects in aspect_groups.items()
        for aspect, pol in aspects
        for opinion in opinion_groups[k]
    ]
    triplets.sort()

    sentence = AnnotatedSentence(
        tokens=tokens,
        triplets=triplets,
        unified_tags=spans_to_tags(
            sorted({(t.aspect, t.polarity) for t in triplets}), len(tokens), "unified"
        ),
        opinion_tags=spans_to_tags(
            sorted({t.opinion for t in triplets}), len(tokens), "opinion"
        ),
    )
    check_sentence(sentence)
    return sentence


def _pair_components(triplets: Sequence[Triplet]) -> list[tuple[list, list]]:
    """Connected components of the aspect-opinion pairing graph."""
    aspect_of: dict[Span, set[Span]] = {}
    for t in triplets:
        aspect_of.setdefault(t.aspect, set()).add(t.opinion)

    components: list[tuple[set[Span], set[Span]]] = []
    remaining = dict(aspect_of)
    while remaining:
        seed_aspect = next(iter(remaining))
        aspects = {seed_aspect}
        opinions = set(remaining.pop(seed_aspect))
        changed = True
        while changed:
            changed = False
            for aspect, ops in list(remaining.items()):
                if ops & opinions:
                    aspects.add(aspect)
                    opinions |= ops
                    del remaining[aspect]
                    changed = True
        components.append((aspects, opinions))

    components.sort(key=lambda c: min(c[0]))
    pairs = {(t.aspect, t.opinion) for t in triplets}
    for aspects, opinions in components:
        for a in aspects:
            for o in opinions:
                if (a, o) not in pairs:
                    raise FormatError(
                        "pairing is not complete within a group; the collapsed "
                        "tag format cannot express it"
                    )
    return [(sorted(a), sorted(o)) for a, o in components]


def sample_to_lines(sentence: AnnotatedSentence) -> tuple[str, str, str]:
    """Serialize back to the three-line collapsed-tag format.

    Group markers are renumbered by first aspect position, which re-parses
    to the identical sentence.  Adjacent spans that would merge into one
    collapsed run raise :class:`FormatError`.
    """
    polarity_of = {t.aspect: t.polarity for t in sentence.triplets}
    aspect_line = ["O"] * sentence.length
    opinion_line = ["O"] * sentence.length
    for group, (aspects, opinions) in enumerate(_pair_components(sentence.triplets), 1):
        for span in aspects:
            tag = "T" * group + "-" + polarity_of[span].value
            for t in span.tokens():
                aspect_line[t] = tag
        for span in opinions:
            tag = "S" * group
            for t in span.tokens():
                opinion_line[t] = tag

    for line, spans in (
        (aspect_line, [s for s, _ in sentence.aspects()]),
        (opinion_line, sentence.opinions()),
    ):
        for prev, cur in zip(spans, spans[1:]):
            if cur.start == prev.end + 1 and line[prev.end] == line[cur.start]:
                raise FormatError(
                    f"adjacent spans {prev} and {cur} share tag {line[cur.start]!r} "
                    "and cannot be told apart in the collapsed format"
                )

    return (
        " ".join(sentence.tokens),
        " ".join(f"{w}={t}" for w, t in zip(sentence.tokens, aspect_line)),
        " ".join(f"{w}={t}" for w, t in zip(sentence.tokens, opinion_line)),
    )


def parse_corpus(text: str) -> list[AnnotatedSentence]:
    """Parse a whole corpus: 3-line samples separated by blank lines."""
    sentences = []
    block: list[str] = []
    lines = text.split("\n")
    for lineno, raw in enumerate(lines + [""], 1):
        line = raw.strip()
        if line:
            block.append(line)
            continue
        if not block:
            continue
        if len(block) != 3:
            raise FormatError(
                f"sample ending at line {lineno} has {len(block)} lines, expected 3"
            )
        sentences.append(parse_sample(*block))
        block = []
    return sentences


def write_corpus(sentences: Sequence[AnnotatedSentence], path: str | Path) -> None:
    blocks = ["\n".join(sample_to_lines(s)) for s in sentences]
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def read_heads(path: str | Path) -> list[list[int]]:
    """Read a dependency file: one line of 1-based head indices per sentence."""
    heads = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            heads.append([int(h) for h in line.split()])
        except ValueError as exc:
            raise FormatError(f"dependency line {lineno}: {exc}") from None
    return heads


def attach_graphs(
    sentences: Sequence[AnnotatedSentence], heads: Optional[Sequence[Sequence[int]]]
) -> None:
    """Attach dependency graphs in corpus order; edgeless when heads is None."""
    if heads is None:
        for s in sentences:
            s.dep_graph = edgeless(s.length)
        return
    if len(heads) != len(sentences):
        raise FormatError(
            f"dependency file covers {len(heads)} sentences, corpus has {len(sentences)}"
        )
    for s, h in zip(sentences, heads):
        if len(h) != s.length:
            raise FormatError(
                f"dependency line has {len(h)} heads for a {s.length}-token sentence"
            )
        s.dep_graph = build_adjacency(heads_to_edges(h), s.length)


def load_corpus(
    corpus_path: str | Path, dep_path: Optional[str | Path] = None
) -> list[AnnotatedSentence]:
    """Read and parse a corpus file, attaching dependency graphs."""
    sentences = parse_corpus(Path(corpus_path).read_text(encoding="utf-8"))
    attach_graphs(sentences, read_heads(dep_path) if dep_path is not None else None)
    return sentences


class CorpusStats(NamedTuple):
    sentences: int
    pairs: int


def corpus_stats(sentences: Sequence[AnnotatedSentence]) -> CorpusStats:
    return CorpusStats(len(sentences), sum(len(s.triplets) for s in sentences))


def split_validation(
    sentences: Sequence[AnnotatedSentence], fraction: float = 0.2, seed: int = 1
) -> tuple[list[AnnotatedSentence], list[AnnotatedSentence]]:
    """Carve a seeded random validation subset out of a training corpus."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction {fraction} not in (0, 1)")
    n_valid = max(1, int(len(sentences) * fraction))
    if n_valid >= len(sentences):
        raise ValueError("validation split would consume the whole corpus")
    picks = set(random.Random(seed).sample(range(len(sentences)), n_valid))
    train = [s for i, s in enumerate(sentences) if i not in picks]
    valid = [s for i, s in enumerate(sentences) if i in picks]
    return train, valid

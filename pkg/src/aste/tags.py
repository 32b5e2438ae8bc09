"""Tag schemas and span <-> tag-sequence codecs.

Three closed tag sets are used throughout:

* boundary tags ``{B, I, E, S, O}`` locating spans without sentiment,
* unified tags ``{B, I, E, S} x {POS, NEG, NEU} + {O}`` locating aspect
  spans together with their sentiment polarity (13 tags),
* opinion tags, identical in form to the boundary tags.

Encoding is strict (spans must be disjoint and in range); decoding is
lenient so that arbitrary model output can always be interpreted: a stray
``I`` or ``E`` opens a new span, and a multi-token span whose tokens carry
mixed polarities takes the polarity of its first token.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import OverlapError


class Polarity(str, Enum):
    POS = "POS"
    NEG = "NEG"
    NEU = "NEU"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.value


class Span(NamedTuple):
    """Inclusive token-index range ``[start, end]``."""

    start: int
    end: int

    def tokens(self) -> range:
        return range(self.start, self.end + 1)

    def center(self) -> float:
        return (self.start + self.end) / 2.0

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end


SpanLabel = tuple[Span, Optional[Polarity]]

POLARITIES = (Polarity.POS, Polarity.NEG, Polarity.NEU)
BOUNDARY_LETTERS = ("B", "I", "E", "S")


@dataclass(frozen=True)
class TagVocab:
    """A closed, ordered tag set with both directions of the index codec."""

    tags: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tags)

    def to_id(self, tag: str) -> int:
        return self.tags.index(tag)

    def from_id(self, idx: int) -> str:
        return self.tags[idx]

    def encode(self, tags: Sequence[str]) -> list[int]:
        return [self.to_id(t) for t in tags]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.tags[i] for i in ids]


def _unified_tags() -> tuple[str, ...]:
    return tuple(f"{b}-{p.value}" for p in POLARITIES for b in BOUNDARY_LETTERS) + ("O",)


@dataclass(frozen=True)
class TagSchema:
    """The three tag sets plus the boundary -> unified factoring."""

    boundary: TagVocab
    unified: TagVocab
    opinion: TagVocab

    @staticmethod
    def default() -> "TagSchema":
        plain = TagVocab(BOUNDARY_LETTERS + ("O",))
        return TagSchema(boundary=plain, unified=TagVocab(_unified_tags()), opinion=plain)

    def split_unified(self, tag: str) -> tuple[str, Optional[Polarity]]:
        """Factor a tag into (boundary letter, polarity); plain tags get None."""
        letter, sep, pol = tag.partition("-")
        return letter, Polarity(pol) if sep else None

    def join_unified(self, letter: str, polarity: Optional[Polarity]) -> str:
        if letter == "O":
            return "O"
        if polarity is None:
            raise ValueError(f"boundary letter {letter!r} needs a polarity")
        return f"{letter}-{polarity.value}"

    def boundary_of(self, unified_ids: Sequence[int]) -> list[int]:
        """Project unified tag ids onto boundary tag ids."""
        out = []
        for i in unified_ids:
            letter, _ = self.split_unified(self.unified.from_id(i))
            out.append(self.boundary.to_id(letter))
        return out


SCHEMA = TagSchema.default()


def transition_matrix(schema: TagSchema = SCHEMA) -> np.ndarray:
    """Constant boundary -> unified probability transition matrix.

    Row ``b`` spreads its mass uniformly over the unified tags whose
    boundary component is ``b`` (1/3 each over the three polarities);
    row ``O`` maps to ``O`` with probability one.  Every other entry is
    exactly zero, which is what makes illegal transitions impossible.
    """
    mat = np.zeros((len(schema.boundary), len(schema.unified)))
    for bi, letter in enumerate(schema.boundary.tags):
        if letter == "O":
            mat[bi, schema.unified.to_id("O")] = 1.0
        else:
            for pol in POLARITIES:
                mat[bi, schema.unified.to_id(f"{letter}-{pol.value}")] = 1.0 / 3.0
    return mat


def _check_spans(spans: list[SpanLabel], length: int) -> list[SpanLabel]:
    ordered = sorted(spans, key=lambda sp: sp[0])
    prev: Optional[Span] = None
    for span, _ in ordered:
        if span.start > span.end:
            raise ValueError(f"empty span {span}")
        if span.start < 0 or span.end >= length:
            raise IndexError(f"span {span} outside sequence of length {length}")
        if prev is not None and span.start <= prev.end:
            raise OverlapError(f"spans {prev} and {span} overlap")
        prev = span
    return ordered


def _normalize(spans: Sequence[Span | SpanLabel]) -> list[SpanLabel]:
    out: list[SpanLabel] = []
    for item in spans:
        if isinstance(item, Span):
            out.append((item, None))
        else:
            span, pol = item
            out.append((Span(*span), pol))
    return out


def spans_to_tags(
    spans: Sequence[Span | SpanLabel],
    length: int,
    kind: str = "boundary",
    schema: TagSchema = SCHEMA,
) -> list[str]:
    """Encode disjoint spans as a tag sequence of the given schema kind.

    Single-token spans become ``S``, longer ones ``B I* E``; with
    ``kind="unified"`` each letter carries the span's polarity suffix.
    """
    if kind not in ("boundary", "unified", "opinion"):
        raise ValueError(f"unknown schema kind {kind!r}")
    labelled = _check_spans(_normalize(spans), length)
    tags = ["O"] * length
    for span, pol in labelled:
        if kind == "unified":
            if pol is None:
                raise ValueError(f"span {span} lacks a polarity for the unified schema")
            suffix = "-" + pol.value
        else:
            suffix = ""
        if span.start == span.end:
            tags[span.start] = "S" + suffix
        else:
            tags[span.start] = "B" + suffix
            tags[span.end] = "E" + suffix
            for t in range(span.start + 1, span.end):
                tags[t] = "I" + suffix
    return tags


def tags_to_spans(tags: Sequence[str], schema: TagSchema = SCHEMA) -> list[SpanLabel]:
    """Decode a tag sequence into (span, polarity) pairs, leniently.

    Exact inverse of :func:`spans_to_tags` on well-formed input.  On
    ill-formed input a stray ``I`` or ``E`` opens a new span, an open run
    is closed by ``O``/``B``/``S``/end-of-sequence, and the polarity of a
    span is the polarity of its first token.
    """
    spans: list[SpanLabel] = []
    start: Optional[int] = None
    first_pol: Optional[Polarity] = None

    def close(end: int) -> None:
        nonlocal start
        if start is not None:
            spans.append((Span(start, end), first_pol))
            start = None

    for t, tag in enumerate(tags):
        letter, pol = schema.split_unified(tag)
        if letter == "O":
            close(t - 1)
        elif letter == "B":
            close(t - 1)
            start, first_pol = t, pol
        elif letter == "S":
            close(t - 1)
            spans.append((Span(t, t), pol))
        elif letter in ("I", "E"):
            if start is None:
                start, first_pol = t, pol
            if letter == "E":
                close(t)
        else:
            raise ValueError(f"unknown tag {tag!r}")
    close(len(tags) - 1)
    return spans


def plain_spans(labelled: Sequence[SpanLabel]) -> list[Span]:
    return [span for span, _ in labelled]

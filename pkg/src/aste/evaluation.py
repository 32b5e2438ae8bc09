"""Exact-match precision/recall/F1 over sentence-level predictions.

Five modes share one micro-averaged counting core; they differ only in the
item each prediction or gold annotation is projected to:

* ``unified``: (aspect span, polarity)
* ``aspect_only``: aspect span, ignoring polarity
* ``opinion``: opinion span
* ``pair``: (aspect span, opinion span)
* ``triplet``: (aspect span, polarity, opinion span)

Counts are micro-averaged across the corpus; items are matched exactly and
duplicates within a sentence count once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import AnnotatedSentence, Triplet
from .errors import AlignmentError
from .tags import Polarity, Span

MODES = ("unified", "aspect_only", "opinion", "pair", "triplet")


@dataclass
class SentencePrediction:
    """Decoded output for one sentence, aligned to gold by ``sid``."""

    sid: int
    tokens: list[str]
    aspects: list[tuple[Span, Polarity]]
    opinions: list[Span]
    triplets: Optional[list[tuple[Triplet, float]]] = None

    def to_record(self) -> dict:
        record = {
            "id": self.sid,
            "tokens": list(self.tokens),
            "aspects": [[s.start, s.end, p.value] for s, p in self.aspects],
            "opinions": [[s.start, s.end] for s in self.opinions],
            "triplets": [
                {
                    "aspect": [t.aspect.start, t.aspect.end],
                    "polarity": t.polarity.value,
                    "opinion": [t.opinion.start, t.opinion.end],
                    "score": score,
                }
                for t, score in (self.triplets or [])
            ],
        }
        return record

    @staticmethod
    def from_record(record: dict) -> "SentencePrediction":
        return SentencePrediction(
            sid=int(record["id"]),
            tokens=list(record["tokens"]),
            aspects=[
                (Span(int(s), int(e)), Polarity(p)) for s, e, p in record.get("aspects", [])
            ],
            opinions=[Span(int(s), int(e)) for s, e in record.get("opinions", [])],
            triplets=[
                (
                    Triplet(
                        Span(*map(int, t["aspect"])),
                        Polarity(t["polarity"]),
                        Span(*map(int, t["opinion"])),
                    ),
                    float(t.get("score", 1.0)),
                )
                for t in record.get("triplets", [])
            ],
        )

    @staticmethod
    def from_gold(sid: int, sentence: AnnotatedSentence) -> "SentencePrediction":
        return SentencePrediction(
            sid=sid,
            tokens=list(sentence.tokens),
            aspects=sentence.aspects(),
            opinions=sentence.opinions(),
            triplets=[(t, 1.0) for t in sentence.triplets],
        )


@dataclass
class EvalReport:
    mode: str
    precision: float
    recall: float
    f1: float
    num_pred: int
    num_gold: int
    num_correct: int

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "num_pred": self.num_pred,
            "num_gold": self.num_gold,
            "num_correct": self.num_correct,
        }


def prf(num_pred: int, num_gold: int, num_correct: int) -> tuple[float, float, float]:
    precision = num_correct / num_pred if num_pred else 0.0
    recall = num_correct / num_gold if num_gold else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


def prediction_items(prediction: SentencePrediction, mode: str) -> list:
    if mode == "unified":
        return [(Span(*s), p) for s, p in prediction.aspects]
    if mode == "aspect_only":
        return [Span(*s) for s, _ in prediction.aspects]
    if mode == "opinion":
        return [Span(*s) for s in prediction.opinions]
    if prediction.triplets is None:
        raise ValueError(f"mode {mode!r} needs triplet predictions")
    if mode == "pair":
        return [(t.aspect, t.opinion) for t, _ in prediction.triplets]
    if mode == "triplet":
        return [t for t, _ in prediction.triplets]
    raise ValueError(f"unknown mode {mode!r}")


def gold_items(sentence: AnnotatedSentence, mode: str) -> list:
    return prediction_items(SentencePrediction.from_gold(0, sentence), mode)


def evaluate_predictions(
    predictions: Sequence[SentencePrediction],
    gold: Sequence[SentencePrediction],
    mode: str,
) -> EvalReport:
    """Micro-averaged exact match of predicted items against gold items."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    gold_by_id = {g.sid: g for g in gold}
    if len(gold_by_id) != len(gold):
        raise AlignmentError("duplicate sentence ids in gold annotations")
    pred_ids = [p.sid for p in predictions]
    if len(set(pred_ids)) != len(pred_ids):
        raise AlignmentError("duplicate sentence ids in predictions")
    if set(pred_ids) != set(gold_by_id):
        raise AlignmentError(
            f"prediction ids do not match gold ids "
            f"(e.g. {sorted(set(pred_ids) ^ set(gold_by_id))[:5]})"
        )

    num_pred = num_gold = num_correct = 0
    for prediction in predictions:
        gold_set = set(prediction_items(gold_by_id[prediction.sid], mode))
        num_gold += len(gold_set)
        seen = set()
        for item in prediction_items(prediction, mode):
            if item in seen:
                continue
            seen.add(item)
            num_pred += 1
            if item in gold_set:
                num_correct += 1
    precision, recall, f1 = prf(num_pred, num_gold, num_correct)
    return EvalReport(mode, precision, recall, f1, num_pred, num_gold, num_correct)


def evaluate(
    predictions: Sequence[SentencePrediction],
    gold: Sequence[AnnotatedSentence] | dict[int, AnnotatedSentence],
    mode: str,
) -> EvalReport:
    """Evaluate against gold annotated sentences, aligned by sentence id."""
    gold_by_id = gold if isinstance(gold, dict) else dict(enumerate(gold))
    gold_preds = [SentencePrediction.from_gold(sid, s) for sid, s in gold_by_id.items()]
    return evaluate_predictions(predictions, gold_preds, mode)


def evaluate_all(
    predictions: Sequence[SentencePrediction],
    gold: Sequence[AnnotatedSentence] | dict[int, AnnotatedSentence],
    modes: Sequence[str] = MODES,
) -> list[EvalReport]:
    return [evaluate(predictions, gold, mode) for mode in modes]

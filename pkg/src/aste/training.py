"""Training loops, estimator wrappers, checkpoints, and the full pipeline.

Both stages share one recipe: plain SGD with a per-epoch inverse-time
learning rate ``lr / (1 + decay * epoch)`` (weight decay selectable
instead), dropout only at training time, and checkpoint selection by the
best validation score across at most ``epochs`` epochs.

The estimators follow the scikit-learn protocol: hyperparameters are
constructor arguments mirrored by ``get_params``/``set_params``, fitted
state lives in trailing-underscore attributes, and ``fit`` returns self.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import AnnotatedSentence, split_validation
from .errors import CompatibilityError, ConfigError
from .evaluation import SentencePrediction, evaluate, prf
from .stage1 import Stage1Output, TaggerNetwork, gold_tag_ids, stage1_decode, stage1_loss_from_ids
from .stage2 import PairNetwork, build_training_pairs, generate_candidates, pair_decode, pair_loss
from .stage2 import assemble_triplets
from .tags import SCHEMA
from .validation import check_sentences, token_ids
from .vectors import EmbeddingTable, Vocabulary

CHECKPOINT_VERSION = 1
_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass
class TrainConfig:
    """The shared optimizer recipe."""

    lr: float = 0.1
    lr_decay: float = 0.001
    decay_mode: str = "inverse_time"
    dropout: float = 0.5
    epochs: int = 40
    batch_size: int = 1
    seed: int = 1
    epsilon: float = 0.5
    device: str = "cpu"

    def validate(self) -> "TrainConfig":
        for name in ("lr", "dropout"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name}={value} not in (0, 1]")
        if self.lr_decay < 0.0:
            raise ConfigError(f"lr_decay={self.lr_decay} is negative")
        if self.epochs < 1:
            raise ConfigError(f"epochs={self.epochs} must be at least 1")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size={self.batch_size} must be at least 1")
        if self.decay_mode not in ("inverse_time", "weight_decay"):
            raise ConfigError(f"unknown decay_mode {self.decay_mode!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon={self.epsilon} not in (0, 1)")
        return self

    def learning_rate(self, epoch: int) -> float:
        if self.decay_mode == "inverse_time":
            return self.lr / (1.0 + self.lr_decay * epoch)
        return self.lr


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def _run_sgd(
    network: torch.nn.Module,
    items: Sequence,
    loss_of: Callable,
    validation_score: Callable[[], float],
    config: TrainConfig,
    verbose: bool = False,
    log: Optional[Callable[[str], None]] = None,
) -> tuple[list[dict], int, float]:
    """Shared epoch loop; restores the best-validation parameters in place."""
    trainable = [p for p in network.parameters() if p.requires_grad]
    weight_decay = config.lr_decay if config.decay_mode == "weight_decay" else 0.0
    optimizer = torch.optim.SGD(trainable, lr=config.lr, weight_decay=weight_decay)
    shuffler = random.Random(config.seed)

    history: list[dict] = []
    best_metric = float("-inf")
    best_epoch = -1
    best_state: Optional[dict] = None

    for epoch in range(config.epochs):
        lr = config.learning_rate(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr

        order = list(range(len(items)))
        shuffler.shuffle(order)
        network.train()
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            loss = sum(loss_of(items[i]) for i in batch) / len(batch)
            loss.backward()
            optimizer.step()
            total_loss += loss.item() * len(batch)

        network.eval()
        metric = validation_score()
        history.append(
            {
                "epoch": epoch,
                "lr": lr,
                "train_loss": total_loss / len(items),
                "val_metric": metric,
            }
        )
        if verbose and log is not None:
            row = history[-1]
            log(
                f"epoch={row['epoch']} lr={row['lr']:.6f} "
                f"train_loss={row['train_loss']:.6f} val_metric={row['val_metric']:.6f}"
            )
        if metric > best_metric:
            best_metric = metric
            best_epoch = epoch
            best_state = copy.deepcopy(network.state_dict())

    if best_state is not None:
        network.load_state_dict(best_state)
    network.eval()
    return history, best_epoch, best_metric


def _save_checkpoint(
    path: str | Path, kind: str, params: dict, vocab: Vocabulary, state: dict
) -> None:
    torch.save(
        {
            "schema_version": CHECKPOINT_VERSION,
            "kind": kind,
            "params": params,
            "vocab_tokens": vocab.tokens,
            "vocab_hash": vocab.content_hash(),
            "state": state,
        },
        path,
    )


def _load_checkpoint(path: str | Path, kind: str) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("schema_version") != CHECKPOINT_VERSION:
        raise CompatibilityError(
            f"{path}: checkpoint schema {payload.get('schema_version')} "
            f"is not {CHECKPOINT_VERSION}"
        )
    if payload.get("kind") != kind:
        raise CompatibilityError(f"{path}: checkpoint holds a {payload.get('kind')} model")
    vocab = Vocabulary.from_tokens(payload["vocab_tokens"])
    if vocab.content_hash() != payload["vocab_hash"]:
        raise CompatibilityError(f"{path}: vocabulary hash mismatch")
    payload["vocab"] = vocab
    return payload


class JointTagger(BaseEstimator):
    """Estimator around :class:`TaggerNetwork` with the shared SGD recipe.

    ``selection`` picks the validation score that chooses the checkpoint:
    the mean of unified and opinion F1 (default), or either alone.
    """

    def __init__(
        self,
        hidden_size: int = 50,
        gcn_size: Optional[int] = None,
        gcn_layers: int = 1,
        dropout: float = 0.5,
        epsilon: float = 0.5,
        lr: float = 0.1,
        lr_decay: float = 0.001,
        decay_mode: str = "inverse_time",
        epochs: int = 40,
        batch_size: int = 1,
        seed: int = 1,
        freeze_embeddings: bool = True,
        selection: str = "mean_f1",
        dtype: str = "float32",
        device: str = "cpu",
        verbose: bool = False,
    ) -> None:
        self.hidden_size = hidden_size
        self.gcn_size = gcn_size
        self.gcn_layers = gcn_layers
        self.dropout = dropout
        self.epsilon = epsilon
        self.lr = lr
        self.lr_decay = lr_decay
        self.decay_mode = decay_mode
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.freeze_embeddings = freeze_embeddings
        self.selection = selection
        self.dtype = dtype
        self.device = device
        self.verbose = verbose

    def _config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            lr_decay=self.lr_decay,
            decay_mode=self.decay_mode,
            dropout=self.dropout,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            epsilon=self.epsilon,
            device=self.device,
        ).validate()

    def _build(self, embeddings: EmbeddingTable) -> TaggerNetwork:
        return TaggerNetwork(
            embeddings.vectors,
            hidden_size=self.hidden_size,
            gcn_size=self.gcn_size,
            gcn_layers=self.gcn_layers,
            dropout=self.dropout,
            epsilon=self.epsilon,
            freeze_embeddings=self.freeze_embeddings,
            dtype=_DTYPES[self.dtype],
        ).to(self.device)

    def fit(
        self,
        sentences: Sequence[AnnotatedSentence],
        embeddings: EmbeddingTable,
        validation: Optional[Sequence[AnnotatedSentence]] = None,
    ) -> "JointTagger":
        config = self._config()
        sentences = check_sentences(sentences)
        if validation is None:
            sentences, validation = split_validation(sentences, 0.2, config.seed)
        validation = check_sentences(validation, "validation set")
        if self.selection not in ("mean_f1", "unified_f1", "opinion_f1"):
            raise ConfigError(f"unknown selection metric {self.selection!r}")

        _seed_everything(config.seed)
        self.embeddings_ = embeddings
        self.network_ = self._build(embeddings)

        prepared = [
            (token_ids(embeddings, s.tokens), self._adjacency(s), gold_tag_ids(s)) for s in sentences
        ]

        def loss_of(item) -> torch.Tensor:
            ids, adjacency, (boundary, unified, opinion) = item
            output = self.network_(ids, adjacency)
            return stage1_loss_from_ids(output, boundary, unified, opinion)

        def validation_score() -> float:
            return self.score(validation)

        self.history_, self.best_epoch_, self.best_metric_ = _run_sgd(
            self.network_, prepared, loss_of, validation_score, config,
            verbose=self.verbose, log=print,
        )
        return self

    def _adjacency(self, sentence: AnnotatedSentence) -> torch.Tensor:
        return torch.as_tensor(sentence.dep_graph.adjacency)

    def forward(self, sentence: AnnotatedSentence, train_mode: bool = False) -> Stage1Output:
        """Run the network on one sentence; dropout only when ``train_mode``."""
        check_is_fitted(self, "network_")
        self.network_.train(train_mode)
        ids = token_ids(self.embeddings_, sentence.tokens)
        adjacency = self._adjacency(
            check_sentences([sentence], "input")[0]
        )
        if train_mode:
            return self.network_(ids, adjacency)
        with torch.no_grad():
            output = self.network_(ids, adjacency)
        return output

    def loss(self, sentence: AnnotatedSentence) -> float:
        output = self.forward(sentence, train_mode=False)
        boundary, unified, opinion = gold_tag_ids(sentence)
        return float(stage1_loss_from_ids(output, boundary, unified, opinion))

    def predict(self, sentences: Sequence[AnnotatedSentence]) -> list[SentencePrediction]:
        check_is_fitted(self, "network_")
        predictions = []
        for sid, sentence in enumerate(sentences):
            output = self.forward(sentence)
            aspects, opinions = stage1_decode(output.unified_probs, output.opinion_probs)
            predictions.append(
                SentencePrediction(
                    sid=sid, tokens=list(sentence.tokens), aspects=aspects, opinions=opinions
                )
            )
        return predictions

    def score(self, sentences: Sequence[AnnotatedSentence]) -> float:
        """The configured validation selection metric on a corpus."""
        predictions = self.predict(sentences)
        unified = evaluate(predictions, list(sentences), "unified").f1
        opinion = evaluate(predictions, list(sentences), "opinion").f1
        if self.selection == "unified_f1":
            return unified
        if self.selection == "opinion_f1":
            return opinion
        return (unified + opinion) / 2.0

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "network_")
        _save_checkpoint(
            path, "stage1", self.get_params(), self.embeddings_.vocab, self.network_.state_dict()
        )

    @staticmethod
    def load(path: str | Path) -> "JointTagger":
        payload = _load_checkpoint(path, "stage1")
        estimator = JointTagger(**payload["params"])
        vectors = payload["state"]["embedding.weight"].cpu().numpy()
        estimator.embeddings_ = EmbeddingTable(payload["vocab"], vectors)
        estimator.network_ = estimator._build(estimator.embeddings_)
        estimator.network_.load_state_dict(payload["state"])
        estimator.network_.eval()
        estimator.history_ = []
        return estimator


class PairClassifier(BaseEstimator):
    """Estimator around :class:`PairNetwork`, trained on gold pairs.

    Checkpoint selection uses binary F1 of the valid class on the
    validation gold-pair pool; the classifier is frozen afterwards.
    """

    def __init__(
        self,
        hidden_size: int = 50,
        position_dim: int = 25,
        position_cap: int = 50,
        dropout: float = 0.5,
        threshold: float = 0.5,
        lr: float = 0.1,
        lr_decay: float = 0.001,
        decay_mode: str = "inverse_time",
        epochs: int = 40,
        batch_size: int = 1,
        seed: int = 1,
        freeze_embeddings: bool = True,
        dtype: str = "float32",
        device: str = "cpu",
        verbose: bool = False,
    ) -> None:
        self.hidden_size = hidden_size
        self.position_dim = position_dim
        self.position_cap = position_cap
        self.dropout = dropout
        self.threshold = threshold
        self.lr = lr
        self.lr_decay = lr_decay
        self.decay_mode = decay_mode
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.freeze_embeddings = freeze_embeddings
        self.dtype = dtype
        self.device = device
        self.verbose = verbose

    def _config(self) -> TrainConfig:
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold={self.threshold} not in (0, 1)")
        return TrainConfig(
            lr=self.lr,
            lr_decay=self.lr_decay,
            decay_mode=self.decay_mode,
            dropout=self.dropout,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            device=self.device,
        ).validate()

    def _build(self, embeddings: EmbeddingTable) -> PairNetwork:
        return PairNetwork(
            embeddings.vectors,
            hidden_size=self.hidden_size,
            position_dim=self.position_dim,
            position_cap=self.position_cap,
            dropout=self.dropout,
            freeze_embeddings=self.freeze_embeddings,
            dtype=_DTYPES[self.dtype],
        ).to(self.device)

    def _pair_pool(self, sentences: Sequence[AnnotatedSentence]) -> list[tuple]:
        pool = []
        for sentence in sentences:
            ids = token_ids(self.embeddings_, sentence.tokens)
            for pair, label in build_training_pairs(sentence, self.position_cap):
                pool.append((ids, pair, label))
        return pool

    def fit(
        self,
        sentences: Sequence[AnnotatedSentence],
        embeddings: EmbeddingTable,
        validation: Optional[Sequence[AnnotatedSentence]] = None,
    ) -> "PairClassifier":
        config = self._config()
        sentences = check_sentences(sentences)
        if validation is None:
            sentences, validation = split_validation(sentences, 0.2, config.seed)
        validation = check_sentences(validation, "validation set")

        _seed_everything(config.seed)
        self.embeddings_ = embeddings
        self.network_ = self._build(embeddings)

        train_pool = self._pair_pool(sentences)
        if not any(label for _, _, label in train_pool):
            raise ConfigError("training corpus yields no positive pairs")
        validation_pool = self._pair_pool(validation)

        def loss_of(item) -> torch.Tensor:
            ids, pair, label = item
            return pair_loss(self.network_(ids, pair), label)

        def validation_score() -> float:
            return self._pool_f1(validation_pool)

        self.history_, self.best_epoch_, self.best_metric_ = _run_sgd(
            self.network_, train_pool, loss_of, validation_score, config,
            verbose=self.verbose, log=print,
        )
        return self

    def _pool_f1(self, pool: Sequence[tuple]) -> float:
        num_pred = num_gold = num_correct = 0
        with torch.no_grad():
            for ids, pair, label in pool:
                predicted = pair_decode(
                    float(self.network_.pair_probability(ids, pair)), self.threshold
                )
                num_pred += predicted
                num_gold += label
                num_correct += predicted and label
        return prf(num_pred, num_gold, num_correct)[2]

    def classifier_f1(self, sentences: Sequence[AnnotatedSentence]) -> float:
        """Binary F1 on the gold-pair pool of a corpus."""
        check_is_fitted(self, "network_")
        self.network_.eval()
        return self._pool_f1(self._pair_pool(check_sentences(sentences, "input")))

    def predict_proba(self, tokens: Sequence[str], pairs: Sequence) -> np.ndarray:
        """Valid-class probability for each candidate pair."""
        check_is_fitted(self, "network_")
        self.network_.eval()
        ids = token_ids(self.embeddings_, tokens)
        with torch.no_grad():
            return np.array(
                [float(self.network_.pair_probability(ids, pair)) for pair in pairs]
            )

    def predict(self, tokens: Sequence[str], pairs: Sequence) -> list[bool]:
        return [pair_decode(p, self.threshold) for p in self.predict_proba(tokens, pairs)]

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "network_")
        _save_checkpoint(
            path, "stage2", self.get_params(), self.embeddings_.vocab, self.network_.state_dict()
        )

    @staticmethod
    def load(path: str | Path) -> "PairClassifier":
        payload = _load_checkpoint(path, "stage2")
        estimator = PairClassifier(**payload["params"])
        vectors = payload["state"]["embedding.weight"].cpu().numpy()
        estimator.embeddings_ = EmbeddingTable(payload["vocab"], vectors)
        estimator.network_ = estimator._build(estimator.embeddings_)
        estimator.network_.load_state_dict(payload["state"])
        estimator.network_.eval()
        estimator.history_ = []
        return estimator


class TripletExtractor:
    """The full two-stage pipeline over fitted stage estimators."""

    def __init__(self, tagger: JointTagger, pair_classifier: PairClassifier) -> None:
        check_is_fitted(tagger, "network_")
        check_is_fitted(pair_classifier, "network_")
        tagger_hash = tagger.embeddings_.vocab.content_hash()
        classifier_hash = pair_classifier.embeddings_.vocab.content_hash()
        if tagger_hash != classifier_hash:
            raise CompatibilityError("stage checkpoints use different vocabularies")
        self.tagger = tagger
        self.pair_classifier = pair_classifier
        self.dropped_candidates_ = 0

    @staticmethod
    def from_checkpoints(tagger_path: str | Path, classifier_path: str | Path) -> "TripletExtractor":
        return TripletExtractor(
            JointTagger.load(tagger_path), PairClassifier.load(classifier_path)
        )

    def predict(self, sentences: Sequence[AnnotatedSentence]) -> list[SentencePrediction]:
        sentences = check_sentences(sentences, "input")
        predictions = self.tagger.predict(sentences)
        self.dropped_candidates_ = 0
        for sentence, prediction in zip(sentences, predictions):
            candidates = generate_candidates(
                prediction.aspects,
                prediction.opinions,
                sentence.length,
                self.pair_classifier.position_cap,
            )
            self.dropped_candidates_ += (
                len(prediction.aspects) * len(prediction.opinions) - len(candidates)
            )
            scores = self.pair_classifier.predict_proba(sentence.tokens, candidates)
            kept = [
                (pair, float(score))
                for pair, score in zip(candidates, scores)
                if pair_decode(float(score), self.pair_classifier.threshold)
            ]
            prediction.triplets = assemble_triplets(kept)
        return predictions


def predict_pipeline(
    tagger: JointTagger,
    pair_classifier: PairClassifier,
    sentences: Sequence[AnnotatedSentence],
) -> list[SentencePrediction]:
    return TripletExtractor(tagger, pair_classifier).predict(sentences)

"""Two-stage aspect sentiment triplet extraction.

Stage one jointly tags aspect spans with sentiment and opinion spans;
stage two classifies aspect-opinion candidate pairs and emits
(aspect, sentiment, opinion) triplets.
"""

from .corpus import (
    AnnotatedSentence,
    CorpusStats,
    Triplet,
    corpus_stats,
    load_corpus,
    parse_corpus,
    parse_sample,
    sample_to_lines,
    split_validation,
    write_corpus,
)
from .errors import (
    AlignmentError,
    AsteError,
    CompatibilityError,
    ConfigError,
    DanglingGroupError,
    DimensionError,
    EmptyAnnotationError,
    FormatError,
    OverlapError,
    ShapeError,
)
from .evaluation import (
    MODES,
    EvalReport,
    SentencePrediction,
    evaluate,
    evaluate_all,
    evaluate_predictions,
)
from .graph import DependencyGraph, build_adjacency, edgeless, heads_to_edges
from .stage1 import Stage1Output, TaggerNetwork, stage1_decode, stage1_loss
from .stage2 import (
    CandidatePair,
    PairNetwork,
    assemble_triplets,
    build_training_pairs,
    generate_candidates,
    pair_decode,
    position_indices,
)
from .tags import SCHEMA, Polarity, Span, TagSchema, spans_to_tags, tags_to_spans, transition_matrix
from .training import (
    JointTagger,
    PairClassifier,
    TrainConfig,
    TripletExtractor,
    predict_pipeline,
)
from .vectors import EmbeddingTable, Vocabulary, load_embeddings

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSentence",
    "AlignmentError",
    "AsteError",
    "CandidatePair",
    "CompatibilityError",
    "ConfigError",
    "CorpusStats",
    "DanglingGroupError",
    "DependencyGraph",
    "DimensionError",
    "EmbeddingTable",
    "EmptyAnnotationError",
    "EvalReport",
    "FormatError",
    "JointTagger",
    "MODES",
    "OverlapError",
    "PairClassifier",
    "PairNetwork",
    "Polarity",
    "SCHEMA",
    "SentencePrediction",
    "ShapeError",
    "Span",
    "Stage1Output",
    "TagSchema",
    "TaggerNetwork",
    "TrainConfig",
    "Triplet",
    "TripletExtractor",
    "Vocabulary",
    "assemble_triplets",
    "build_adjacency",
    "build_training_pairs",
    "corpus_stats",
    "edgeless",
    "evaluate",
    "evaluate_all",
    "evaluate_predictions",
    "generate_candidates",
    "heads_to_edges",
    "load_corpus",
    "load_embeddings",
    "pair_decode",
    "parse_corpus",
    "parse_sample",
    "position_indices",
    "predict_pipeline",
    "sample_to_lines",
    "spans_to_tags",
    "split_validation",
    "stage1_decode",
    "stage1_loss",
    "tags_to_spans",
    "transition_matrix",
    "write_corpus",
]

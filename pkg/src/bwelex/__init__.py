"""Bilingual lexicon induction from monolingual word embeddings.

Learns a bilinear mapping between two embedding spaces from a small seed
dictionary, ranks candidate translations by a softmax over the target
vocabulary, exports aligned low-rank embeddings, and annotates OOV tokens
in a corpus with translation options for a downstream decoder.
"""

from .embeddings import (
    EmbeddingFormatError,
    EmbeddingStore,
    load_cache,
    load_embeddings,
    save_cache,
    save_embeddings,
)
from .evaluation import (
    CompressedEmbeddings,
    EvalResult,
    compress,
    export_compressed,
    numerical_rank,
    precision_at_k,
    rank_of,
    write_eval_report,
)
from .lexicon import (
    FilterReport,
    LexiconFormatError,
    SeedLexicon,
    filter_pairs,
    load_lexicon,
    split_lexicon,
)
from .model import (
    BilinearModel,
    ModelFormatError,
    TranslationDistribution,
    load_model,
    save_model,
)
from .oov import (
    DEFAULT_BOUNDARY_PUNCT,
    MarkupPolicy,
    MarkupSummary,
    OovReport,
    SystemVocabulary,
    TokenFlag,
    annotate_corpus,
    build_options,
    classify_named_entity,
    emit_markup,
    flag_sentence,
    format_probability,
    load_system_vocabulary,
    parse_markup,
    read_corpus,
    scan_oov,
    write_corpus,
    write_oov_report,
)
from .optim import (
    DivergenceError,
    GridCell,
    TrainConfig,
    TrainReport,
    fobos_step,
    objective_value,
    penalty_norm,
    prox_frobenius,
    prox_frobenius_squared,
    prox_trace,
    select_model,
    train,
    write_grid_table,
    write_train_log,
)

__version__ = "0.1.0"

__all__ = [
    "BilinearModel",
    "CompressedEmbeddings",
    "DEFAULT_BOUNDARY_PUNCT",
    "DivergenceError",
    "EmbeddingFormatError",
    "EmbeddingStore",
    "EvalResult",
    "FilterReport",
    "GridCell",
    "LexiconFormatError",
    "MarkupPolicy",
    "MarkupSummary",
    "ModelFormatError",
    "OovReport",
    "SeedLexicon",
    "SystemVocabulary",
    "TokenFlag",
    "TrainConfig",
    "TrainReport",
    "TranslationDistribution",
    "annotate_corpus",
    "build_options",
    "classify_named_entity",
    "compress",
    "emit_markup",
    "export_compressed",
    "filter_pairs",
    "flag_sentence",
    "fobos_step",
    "format_probability",
    "load_cache",
    "load_embeddings",
    "load_lexicon",
    "load_model",
    "load_system_vocabulary",
    "numerical_rank",
    "objective_value",
    "parse_markup",
    "penalty_norm",
    "precision_at_k",
    "prox_frobenius",
    "prox_frobenius_squared",
    "prox_trace",
    "rank_of",
    "read_corpus",
    "save_cache",
    "save_embeddings",
    "save_model",
    "scan_oov",
    "select_model",
    "split_lexicon",
    "train",
    "write_corpus",
    "write_eval_report",
    "write_grid_table",
    "write_oov_report",
    "write_train_log",
]

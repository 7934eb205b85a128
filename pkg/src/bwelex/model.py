"""Log-bilinear softmax translation model.

A source word e and target word f are scored by the bilinear form
``phi_s(e)^T W phi_t(f)``; the conditional translation distribution is a
softmax of these scores over a fixed candidate set of target words. All
math runs in float64; the softmax subtracts the maximum score before
exponentiating, so scores of any magnitude normalize stably.
"""

from __future__ import annotations

import copy
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingStore
from .fileio import atomic_write

MODEL_MAGIC = b"BWEM"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file cannot be parsed."""


@dataclass
class TranslationDistribution:
    """Ranked candidate translations for one source word.

    Entries are (target token, probability), descending; equal scores are
    ordered lexicographically by target token, so the ranking is fully
    deterministic. Over the complete candidate set the probabilities sum
    to 1.
    """

    source_token: str
    entries: list[tuple[str, float]]

    def tokens(self) -> list[str]:
        return [t for t, _ in self.entries]

    def probabilities(self) -> list[float]:
        return [p for _, p in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


class BilinearModel:
    """Bilinear scorer W between a source and a target embedding store.

    ``candidate_tokens`` is the ordered target-vocabulary subset over which
    softmax distributions are normalized; it defaults to the entire target
    vocabulary.
    """

    def __init__(self, W, source_store: EmbeddingStore, target_store: EmbeddingStore,
                 candidate_tokens=None):
        W = np.array(W, dtype=np.float64, order="C", copy=True)
        expected = (source_store.dimension, target_store.dimension)
        if W.shape != expected:
            raise ValueError(f"W has shape {W.shape}, stores require {expected}")
        if not np.isfinite(W).all():
            raise ValueError("W contains non-finite entries")
        if candidate_tokens is None:
            candidate_tokens = list(target_store.tokens)
        else:
            candidate_tokens = list(candidate_tokens)
        if not candidate_tokens:
            raise ValueError("candidate set must be non-empty")
        if len(set(candidate_tokens)) != len(candidate_tokens):
            raise ValueError("candidate set contains duplicates")
        rows = [target_store.row_index(t) for t in candidate_tokens]

        self.W = W
        self.source_store = source_store
        self.target_store = target_store
        self.candidate_tokens = candidate_tokens
        self._candidate_index = {t: i for i, t in enumerate(candidate_tokens)}
        self._candidate_matrix = np.ascontiguousarray(
            target_store.matrix[rows], dtype=np.float64
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape

    def with_weights(self, W) -> "BilinearModel":
        """Copy of this model with new weights, sharing stores/candidates."""
        W = np.array(W, dtype=np.float64, order="C", copy=True)
        if W.shape != self.W.shape:
            raise ValueError(f"W has shape {W.shape}, expected {self.W.shape}")
        if not np.isfinite(W).all():
            raise ValueError("W contains non-finite entries")
        clone = copy.copy(self)
        clone.W = W
        return clone

    def candidate_position(self, token: str) -> int:
        """Index of *token* in the candidate set; ValueError if absent."""
        i = self._candidate_index.get(token)
        if i is None:
            raise ValueError(f"token {token!r} is not in the candidate set")
        return i

    def is_candidate(self, token: str) -> bool:
        return token in self._candidate_index

    def _source_vector(self, token: str) -> np.ndarray:
        return self.source_store.matrix[self.source_store.row_index(token)]

    def _target_vector(self, token: str) -> np.ndarray:
        return self.target_store.matrix[self.target_store.row_index(token)]

    def score(self, source_token: str, target_token: str) -> float:
        """Bilinear score phi_s(e)^T W phi_t(f) (the pre-softmax logit)."""
        vs = self._source_vector(source_token)
        vt = self._target_vector(target_token)
        return float(vs @ self.W @ vt)

    def candidate_scores(self, source_token: str) -> np.ndarray:
        """Scores of every candidate target for *source_token*."""
        vs = self._source_vector(source_token)
        return (vs @ self.W) @ self._candidate_matrix.T

    def _ranked_order(self, scores: np.ndarray) -> list[int]:
        return sorted(
            range(len(scores)),
            key=lambda i: (-scores[i], self.candidate_tokens[i]),
        )

    def distribution(self, source_token: str) -> TranslationDistribution:
        """Full softmax distribution over the candidate set."""
        scores = self.candidate_scores(source_token)
        shifted = np.exp(scores - scores.max())
        probs = shifted / shifted.sum()
        order = self._ranked_order(scores)
        entries = [(self.candidate_tokens[i], float(probs[i])) for i in order]
        return TranslationDistribution(source_token, entries)

    def top_n(self, source_token: str, n: int) -> TranslationDistribution:
        """First *n* entries of the distribution; not renormalized."""
        if n < 1:
            raise ValueError("n must be a positive integer")
        full = self.distribution(source_token)
        return TranslationDistribution(source_token, full.entries[:n])

    def _pair_batches(self, pairs, chunk_size: int):
        pairs = list(pairs)
        if not pairs:
            raise ValueError("pair list is empty")
        src_rows = np.array(
            [self.source_store.row_index(e) for e, _ in pairs], dtype=np.intp
        )
        gold_cols = np.array(
            [self.candidate_position(f) for _, f in pairs], dtype=np.intp
        )
        for start in range(0, len(pairs), chunk_size):
            stop = start + chunk_size
            yield src_rows[start:stop], gold_cols[start:stop]

    def nll(self, pairs, chunk_size: int = 1024) -> float:
        """Negative log-likelihood, summed over (source, target) pairs.

        Each pair's target must lie inside the candidate set. Every term
        is a -log probability and therefore non-negative.
        """
        total = 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            for rows, cols in self._pair_batches(pairs, chunk_size):
                scores = (self.source_store.matrix[rows] @ self.W) \
                    @ self._candidate_matrix.T
                mx = scores.max(axis=1)
                lse = mx + np.log(np.exp(scores - mx[:, None]).sum(axis=1))
                gold = scores[np.arange(len(rows)), cols]
                total += float((lse - gold).sum())
        return total

    def nll_gradient(self, pairs, chunk_size: int = 1024) -> np.ndarray:
        """Exact gradient of :meth:`nll` with respect to W.

        Per pair: outer(phi_s(e), E[phi_t(f')] - phi_t(f)) with the
        expectation under the model's current distribution. Accumulated
        over chunks of pairs; the result matches any chunking up to
        floating-point reassociation.
        """
        grad = np.zeros_like(self.W)
        with np.errstate(over="ignore", invalid="ignore"):
            for rows, cols in self._pair_batches(pairs, chunk_size):
                xs = self.source_store.matrix[rows]
                scores = (xs @ self.W) @ self._candidate_matrix.T
                shifted = np.exp(scores - scores.max(axis=1)[:, None])
                probs = shifted / shifted.sum(axis=1)[:, None]
                expected = probs @ self._candidate_matrix
                gold = self._candidate_matrix[cols]
                grad += xs.T @ (expected - gold)
        return grad


def save_model(model: BilinearModel, path) -> None:
    """Persist dimensions, candidate tokens, and W (float64 LE); bit-exact."""
    n_s, n_t = model.shape
    with atomic_write(path, mode="wb") as handle:
        handle.write(MODEL_MAGIC)
        handle.write(struct.pack("<B", MODEL_VERSION))
        handle.write(struct.pack("<III", n_s, n_t, len(model.candidate_tokens)))
        for token in model.candidate_tokens:
            raw = token.encode("utf-8")
            handle.write(struct.pack("<H", len(raw)))
            handle.write(raw)
        handle.write(model.W.astype("<f8").tobytes(order="C"))


def load_model(path, source_store: EmbeddingStore,
               target_store: EmbeddingStore) -> BilinearModel:
    """Load a model written by :func:`save_model` against the given stores."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    offset = 4
    (version,) = struct.unpack_from("<B", data, offset)
    offset += 1
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported model version {version}")
    n_s, n_t, count = struct.unpack_from("<III", data, offset)
    offset += 12
    tokens = []
    try:
        for _ in range(count):
            (length,) = struct.unpack_from("<H", data, offset)
            offset += 2
            tokens.append(data[offset : offset + length].decode("utf-8"))
            offset += length
        W = np.frombuffer(data, dtype="<f8", count=n_s * n_t, offset=offset)
        offset += n_s * n_t * 8
    except (struct.error, ValueError) as exc:
        raise ModelFormatError(f"{path}: truncated model file ({exc})") from None
    if offset != len(data):
        raise ModelFormatError(f"{path}: trailing bytes in model file")
    if (n_s, n_t) != (source_store.dimension, target_store.dimension):
        raise ModelFormatError(
            f"{path}: model is {n_s}x{n_t} but stores are "
            f"{source_store.dimension}x{target_store.dimension}"
        )
    return BilinearModel(
        W.reshape(n_s, n_t), source_store, target_store, candidate_tokens=tokens
    )

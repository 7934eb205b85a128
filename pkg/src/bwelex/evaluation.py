"""Model evaluation and low-rank embedding export.

Precision@k is computed over deduplicated source types: a type scores a
hit at k when any of its gold targets lands in the model's top k. The
compression path factors W through its SVD and pushes sqrt(Sigma) into
both sides, producing aligned k-dimensional embeddings whose plain dot
products reproduce bilinear scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingStore, save_embeddings
from .fileio import atomic_write
from .model import BilinearModel

RANK_RELATIVE_CUTOFF = 1e-8


def numerical_rank(W: np.ndarray, rel_cutoff: float = RANK_RELATIVE_CUTOFF) -> int:
    """Count of singular values above rel_cutoff times the largest one."""
    s = np.linalg.svd(W, compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int((s > rel_cutoff * s[0]).sum())


@dataclass
class EvalResult:
    """Precision@k figures plus per-type rank detail.

    ``per_word_ranks`` maps each evaluated source type to the rank of its
    best (highest-ranked) gold target. Types whose gold targets all fall
    outside the candidate set are listed in ``gold_uncovered`` and do not
    count toward the precision denominator.
    """

    k_values: list[int]
    precision_at_k: dict[int, float]
    per_word_ranks: dict[str, int]
    gold_uncovered: list[str] = field(default_factory=list)

    @property
    def evaluated_types(self) -> int:
        return len(self.per_word_ranks)


def rank_of(model: BilinearModel, source_token: str, target_token: str) -> int:
    """1-based rank of *target_token* for *source_token*.

    Agrees with the position in :meth:`BilinearModel.distribution`: ties
    on score resolve lexicographically by target token.
    """
    position = model.candidate_position(target_token)
    scores = model.candidate_scores(source_token)
    mine = scores[position]
    ahead = int((scores > mine).sum())
    for i in np.flatnonzero(scores == mine):
        if model.candidate_tokens[i] < target_token:
            ahead += 1
    return ahead + 1


def _gold_by_source(pairs) -> dict[str, list[str]]:
    grouped: dict[str, list[str]] = {}
    for e, f in pairs:
        grouped.setdefault(e, [])
        if f not in grouped[e]:
            grouped[e].append(f)
    return grouped


def precision_at_k(model: BilinearModel, pairs, ks) -> EvalResult:
    """Evaluate type-level precision at each k in *ks*.

    ``pairs`` is a list of (source, gold target) tuples; a source type may
    appear with several golds. Raises ValueError on an empty pair list or
    an empty/invalid ks.
    """
    ks = list(ks)
    if not ks:
        raise ValueError("ks must be non-empty")
    if any(k < 1 for k in ks):
        raise ValueError("every k must be a positive integer")
    pairs = list(pairs)
    if not pairs:
        raise ValueError("evaluation pair list is empty")

    per_word_ranks: dict[str, int] = {}
    uncovered: list[str] = []
    for source, golds in _gold_by_source(pairs).items():
        in_set = [f for f in golds if model.is_candidate(f)]
        if not in_set:
            uncovered.append(source)
            continue
        per_word_ranks[source] = min(
            rank_of(model, source, f) for f in in_set
        )

    n = len(per_word_ranks)
    precision = {}
    for k in ks:
        hits = sum(1 for r in per_word_ranks.values() if r <= k)
        precision[k] = hits / n if n else 0.0
    return EvalResult(
        k_values=ks,
        precision_at_k=precision,
        per_word_ranks=per_word_ranks,
        gold_uncovered=uncovered,
    )


@dataclass
class CompressedEmbeddings:
    """Aligned k-dimensional projections of both vocabularies."""

    rank_k: int
    source_tokens: list[str]
    source_compressed: np.ndarray
    target_tokens: list[str]
    target_compressed: np.ndarray

    def score(self, i: int, j: int) -> float:
        """Dot product of source row i and target row j."""
        return float(self.source_compressed[i] @ self.target_compressed[j])


def compress(model: BilinearModel, k: int | None = None) -> CompressedEmbeddings:
    """Project both vocabularies through the rank-k SVD of W.

    With W = U Sigma V^T, source rows become Phi_s U_k sqrt(Sigma_k) and
    target rows Phi_t V_k sqrt(Sigma_k), so compressed dot products equal
    phi_s^T W_k phi_t for the best rank-k approximation W_k. Defaults to
    k = numerical rank of W.
    """
    n_s, n_t = model.shape
    max_k = min(n_s, n_t)
    if k is None:
        k = numerical_rank(model.W)
        if k == 0:
            raise ValueError("W has numerical rank 0; pass k explicitly")
    if not 1 <= k <= max_k:
        raise ValueError(f"k must be in [1, {max_k}], got {k}")

    U, s, Vt = np.linalg.svd(model.W, full_matrices=False)
    root = np.sqrt(s[:k])
    src_proj = U[:, :k] * root
    tgt_proj = Vt[:k].T * root
    return CompressedEmbeddings(
        rank_k=k,
        source_tokens=list(model.source_store.tokens),
        source_compressed=model.source_store.matrix @ src_proj,
        target_tokens=list(model.target_store.tokens),
        target_compressed=model.target_store.matrix @ tgt_proj,
    )


def _suffixed_path(base, k: int) -> Path:
    base = Path(base)
    return base.with_name(f"{base.stem}-cmp-k{k}{base.suffix}")


def export_compressed(comp: CompressedEmbeddings, source_base,
                      target_base) -> tuple[Path, Path]:
    """Write both compressed sides as embedding text files.

    Output names take the originals with a ``-cmp-k{K}`` suffix before the
    extension (emb.txt -> emb-cmp-k3.txt). Returns the two paths written.
    """
    src_path = _suffixed_path(source_base, comp.rank_k)
    tgt_path = _suffixed_path(target_base, comp.rank_k)
    save_embeddings(
        EmbeddingStore(src_path.stem, comp.source_tokens,
                       comp.source_compressed),
        src_path,
    )
    save_embeddings(
        EmbeddingStore(tgt_path.stem, comp.target_tokens,
                       comp.target_compressed),
        tgt_path,
    )
    return src_path, tgt_path


def write_eval_report(result: EvalResult, path, include_ranks: bool = False) -> None:
    """Tab-delimited (k, precision) rows, optionally plus per-type ranks."""
    with atomic_write(path) as handle:
        handle.write("k\tprecision\n")
        for k in result.k_values:
            handle.write(f"{k}\t{result.precision_at_k[k]:.6f}\n")
        handle.write(
            f"# evaluated_types={result.evaluated_types} "
            f"gold_uncovered={len(result.gold_uncovered)}\n"
        )
        if include_ranks:
            handle.write("token\tbest_gold_rank\n")
            for token in sorted(result.per_word_ranks):
                handle.write(f"{token}\t{result.per_word_ranks[token]}\n")
            for token in sorted(result.gold_uncovered):
                handle.write(f"{token}\tuncovered\n")

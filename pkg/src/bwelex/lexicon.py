"""Seed bilingual dictionary: loading, coverage filtering, train/dev split."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .embeddings import EmbeddingStore


class LexiconFormatError(ValueError):
    """Raised for unparseable or empty dictionary files."""


@dataclass(frozen=True)
class FilterReport:
    """Counts from coverage filtering of raw dictionary pairs."""

    kept: int
    dropped_uncovered: int
    duplicates: int
    dropped_multiword: int


class SeedLexicon:
    """Word-to-word dictionary with a disjoint train/dev partition.

    Until :func:`split_lexicon` is applied, every pair sits in the train
    partition. Pairs are unique; several targets per source are allowed
    and each (source, target) pair is an independent training example.
    """

    def __init__(self, pairs, train_indices=None, dev_indices=None, split_seed=None):
        pairs = [tuple(p) for p in pairs]
        if not pairs:
            raise ValueError("lexicon must contain at least one pair")
        if len(set(pairs)) != len(pairs):
            raise ValueError("lexicon pairs must be unique")
        n = len(pairs)
        if train_indices is None and dev_indices is None:
            train_indices, dev_indices = list(range(n)), []
        train = sorted(train_indices)
        dev = sorted(dev_indices)
        if set(train) & set(dev):
            raise ValueError("train and dev partitions overlap")
        if sorted(train + dev) != list(range(n)):
            raise ValueError("train and dev partitions must cover all pairs")
        self.pairs = pairs
        self.train_indices = train
        self.dev_indices = dev
        self.split_seed = split_seed

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def train_pairs(self) -> list[tuple[str, str]]:
        return [self.pairs[i] for i in self.train_indices]

    @property
    def dev_pairs(self) -> list[tuple[str, str]]:
        return [self.pairs[i] for i in self.dev_indices]


def filter_pairs(pairs, src: EmbeddingStore, tgt: EmbeddingStore):
    """Drop duplicates, multiword entries, and pairs without embeddings.

    Returns ``(kept_pairs, FilterReport)``. Filtering is idempotent:
    running it on already-filtered pairs drops nothing.
    """
    kept: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    duplicates = uncovered = multiword = 0
    for source, target in pairs:
        pair = (source, target)
        if pair in seen:
            duplicates += 1
            continue
        seen.add(pair)
        if len(source.split()) != 1 or len(target.split()) != 1:
            multiword += 1
            continue
        if source not in src or target not in tgt:
            uncovered += 1
            continue
        kept.append(pair)
    report = FilterReport(
        kept=len(kept),
        dropped_uncovered=uncovered,
        duplicates=duplicates,
        dropped_multiword=multiword,
    )
    return kept, report


def _parse_pair_line(line: str, path, lineno: int) -> tuple[str, str]:
    # Tab-separated fields may hold multiword phrases (filtered later);
    # without a tab the line must be exactly two whitespace-separated tokens.
    if "\t" in line:
        fields = [f.strip() for f in line.split("\t") if f.strip()]
    else:
        fields = line.split()
    if len(fields) != 2:
        raise LexiconFormatError(
            f"{path}:{lineno}: expected 2 fields, got {len(fields)}"
        )
    return fields[0], fields[1]


def load_lexicon(path, src: EmbeddingStore, tgt: EmbeddingStore):
    """Load a dictionary file and filter it to embedding coverage.

    One pair per line, tab- or whitespace-separated; ``#`` comment lines
    and blank lines are skipped. Returns ``(SeedLexicon, FilterReport)``.
    """
    path = Path(path)
    raw: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            raw.append(_parse_pair_line(stripped, path, lineno))
    kept, report = filter_pairs(raw, src, tgt)
    if not kept:
        raise LexiconFormatError(f"{path}: no usable pairs after filtering")
    return SeedLexicon(kept), report


def split_lexicon(lex: SeedLexicon, train_fraction: float, seed: int) -> SeedLexicon:
    """Partition pairs into train/dev, keeping each source's pairs together.

    Source-token groups are shuffled with the given seed and assigned to
    the train partition until it holds ``round(train_fraction * n_pairs)``
    pairs; grouping prevents a source word from leaking into both
    partitions. Deterministic in (pairs, train_fraction, seed).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    groups: dict[str, list[int]] = {}
    for i, (source, _) in enumerate(lex.pairs):
        groups.setdefault(source, []).append(i)
    order = list(groups)
    random.Random(seed).shuffle(order)

    target_size = round(train_fraction * len(lex.pairs))
    train: list[int] = []
    dev: list[int] = []
    for source in order:
        bucket = train if len(train) < target_size else dev
        bucket.extend(groups[source])
    return SeedLexicon(lex.pairs, train, dev, split_seed=seed)

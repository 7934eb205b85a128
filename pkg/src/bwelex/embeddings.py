"""Monolingual word embeddings: loading, validation, lookup, and caching.

Two on-disk formats are supported:

* the common text format: a header line ``"<vocab_size> <dimension>"``
  followed by one ``token v1 v2 ... vn`` line per word, whitespace
  delimited;
* a native binary cache for fast reload (magic + version + dimension +
  vocab count + length-prefixed UTF-8 tokens + row-major little-endian
  float32 matrix).

Vectors are held in float64 in memory so downstream math (normalization,
gradients) runs at full double precision; the cache stores float32, so a
store that has been through one cache round-trip reloads bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fileio import atomic_write

CACHE_MAGIC = b"BWEC"
CACHE_VERSION = 1


class EmbeddingFormatError(ValueError):
    """Raised when an embedding file cannot be parsed."""


class EmbeddingStore:
    """Immutable vocabulary -> dense vector table for one language.

    Tokens are stored verbatim (no case folding: downstream named-entity
    detection relies on surface capitalization) and must be unique. The
    matrix holds one row per token; all entries must be finite.
    """

    def __init__(self, language_tag: str, tokens, matrix, duplicates_dropped: int = 0):
        matrix = np.array(matrix, dtype=np.float64, copy=True)
        tokens = list(tokens)
        if matrix.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
        if not tokens:
            raise ValueError("empty vocabulary")
        if matrix.shape[0] != len(tokens):
            raise ValueError(
                f"matrix has {matrix.shape[0]} rows for {len(tokens)} tokens"
            )
        if matrix.shape[1] < 1:
            raise ValueError("embedding dimension must be positive")
        if not np.isfinite(matrix).all():
            raise ValueError("embedding matrix contains non-finite components")
        index: dict[str, int] = {}
        for i, token in enumerate(tokens):
            if token in index:
                raise ValueError(f"duplicate token {token!r}")
            index[token] = i
        matrix.setflags(write=False)
        self.language_tag = language_tag
        self.tokens = tokens
        self.matrix = matrix
        self.duplicates_dropped = duplicates_dropped
        self._index = index

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __repr__(self) -> str:
        return (
            f"EmbeddingStore({self.language_tag!r}, {len(self)} tokens, "
            f"dim={self.dimension})"
        )

    def row_index(self, token: str) -> int:
        """Position of *token* in the vocabulary; KeyError if absent."""
        try:
            return self._index[token]
        except KeyError:
            raise KeyError(
                f"token {token!r} not in {self.language_tag!r} embeddings"
            ) from None

    def lookup(self, token: str):
        """Vector for *token*, or None when the token is out of vocabulary."""
        i = self._index.get(token)
        return None if i is None else self.matrix[i]

    def coverage(self, tokens) -> float:
        """Fraction of *tokens* present in the vocabulary (empty list -> 1.0)."""
        tokens = list(tokens)
        if not tokens:
            return 1.0
        present = sum(1 for t in tokens if t in self._index)
        return present / len(tokens)


def _normalized_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    out = matrix.copy()
    nonzero = norms > 0.0
    out[nonzero] /= norms[nonzero, None]
    return out


def load_embeddings(
    path,
    limit: int | None = None,
    normalize: bool = False,
    language_tag: str | None = None,
) -> EmbeddingStore:
    """Load a text-format embedding file.

    ``limit`` keeps only the first ``limit`` data rows (embedding files are
    conventionally frequency-sorted). Duplicate tokens after the first are
    dropped and counted in ``store.duplicates_dropped``. With
    ``normalize=True`` every vector is scaled to unit Euclidean length.
    """
    path = Path(path)
    if limit is not None and limit < 1:
        raise ValueError("limit must be a positive integer")
    tag = language_tag if language_tag is not None else path.stem

    with open(path, encoding="utf-8") as handle:
        header = handle.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(
                f"{path}: malformed header {header.strip()!r} "
                "(expected 'vocab_size dimension')"
            )
        try:
            declared, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(
                f"{path}: non-integer header fields {header.strip()!r}"
            ) from None
        if declared < 1 or dim < 1:
            raise EmbeddingFormatError(
                f"{path}: header must declare positive vocab_size and dimension"
            )

        want = declared if limit is None else min(declared, limit)
        tokens: list[str] = []
        rows: list[np.ndarray] = []
        seen: set[str] = set()
        duplicates = 0
        read = 0
        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            if read == want:
                if limit is None:
                    raise EmbeddingFormatError(
                        f"{path}: more data rows than the declared "
                        f"vocab_size {declared}"
                    )
                break
            fields = line.split()
            token, values = fields[0], fields[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: row has {len(values)} components, "
                    f"expected {dim}"
                )
            try:
                vector = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: non-numeric component"
                ) from None
            read += 1
            if token in seen:
                duplicates += 1
                continue
            seen.add(token)
            tokens.append(token)
            rows.append(vector)
        if read < want:
            raise EmbeddingFormatError(
                f"{path}: expected {want} data rows, found {read}"
            )

    if not tokens:
        raise EmbeddingFormatError(f"{path}: empty vocabulary")
    matrix = np.vstack(rows)
    if normalize:
        matrix = _normalized_rows(matrix)
    return EmbeddingStore(tag, tokens, matrix, duplicates_dropped=duplicates)


def save_embeddings(store: EmbeddingStore, path) -> None:
    """Write *store* in the text format (values with 6 decimal places)."""
    with atomic_write(path) as handle:
        handle.write(f"{len(store)} {store.dimension}\n")
        for token, row in zip(store.tokens, store.matrix):
            values = " ".join(f"{v:.6f}" for v in row)
            handle.write(f"{token} {values}\n")


def save_cache(store: EmbeddingStore, path) -> None:
    """Write the native binary cache (float32 rows)."""
    with atomic_write(path, mode="wb") as handle:
        handle.write(CACHE_MAGIC)
        handle.write(struct.pack("<B", CACHE_VERSION))
        handle.write(struct.pack("<II", store.dimension, len(store)))
        for token in store.tokens:
            raw = token.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"token too long for cache format: {token[:32]!r}...")
            handle.write(struct.pack("<H", len(raw)))
            handle.write(raw)
        handle.write(store.matrix.astype("<f4").tobytes(order="C"))


def load_cache(path, language_tag: str | None = None) -> EmbeddingStore:
    """Load a binary cache written by :func:`save_cache`."""
    path = Path(path)
    tag = language_tag if language_tag is not None else path.stem
    data = path.read_bytes()
    if data[:4] != CACHE_MAGIC:
        raise EmbeddingFormatError(f"{path}: not an embedding cache (bad magic)")
    offset = 4
    (version,) = struct.unpack_from("<B", data, offset)
    offset += 1
    if version != CACHE_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported cache version {version}")
    dim, count = struct.unpack_from("<II", data, offset)
    offset += 8
    tokens = []
    try:
        for _ in range(count):
            (length,) = struct.unpack_from("<H", data, offset)
            offset += 2
            tokens.append(data[offset : offset + length].decode("utf-8"))
            offset += length
        matrix = np.frombuffer(
            data, dtype="<f4", count=count * dim, offset=offset
        ).reshape(count, dim)
        offset += count * dim * 4
    except (struct.error, ValueError) as exc:
        raise EmbeddingFormatError(f"{path}: truncated cache ({exc})") from None
    if offset != len(data):
        raise EmbeddingFormatError(f"{path}: trailing bytes in cache")
    return EmbeddingStore(tag, tokens, matrix.astype(np.float64))

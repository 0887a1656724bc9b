"""Aligned cross-lingual word embeddings and cosine similarity matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, EmptyAfterOov, LengthMismatch, MalformedRow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray]
    language: str = "und"
    duplicates_skipped: int = 0

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __getitem__(self, token: str) -> np.ndarray:
        return self.entries[token]

    def get(self, token: str, default=None):
        return self.entries.get(token, default)

    def vector_or_zero(self, token: str) -> np.ndarray:
        """OOV policy for the neural input path: zero vector keeps positions."""
        vec = self.entries.get(token)
        return vec if vec is not None else np.zeros(self.dim)


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray  # (N, M), entries in [-1, 1]
    row_tokens: tuple[str, ...]
    col_tokens: tuple[str, ...]
    oov_rows: int = 0
    oov_cols: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def load_embeddings(stream, expected_dim: int | None = None,
                    language: str = "und") -> EmbeddingTable:
    """Load a word2vec-style text table: header "<count> <dim>", then rows.

    Duplicate tokens keep the first occurrence.
    """
    header = stream.readline().split()
    if len(header) != 2:
        raise MalformedRow(f"bad header {header!r}")
    _, dim = int(header[0]), int(header[1])
    if expected_dim is not None and dim != expected_dim:
        raise DimMismatch(f"header dim {dim} != expected {expected_dim}")
    entries: dict[str, np.ndarray] = {}
    duplicates = 0
    for lineno, line in enumerate(stream, start=2):
        parts = line.rstrip("\n").split(" ")
        if len(parts) < 2:
            continue
        if len(parts) != dim + 1:
            raise MalformedRow(f"line {lineno}: expected {dim} values, got {len(parts) - 1}")
        token = parts[0]
        if token in entries:
            duplicates += 1
            continue
        try:
            entries[token] = np.array([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise MalformedRow(f"line {lineno}: {exc}") from exc
    if duplicates:
        logger.info("skipped %d duplicate embedding rows", duplicates)
    return EmbeddingTable(dim=dim, entries=entries, language=language,
                          duplicates_skipped=duplicates)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 if either vector has zero norm."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise LengthMismatch(f"{u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def similarity_matrix(
    src_tokens: list[str],
    tgt_tokens: list[str],
    src_table: EmbeddingTable,
    tgt_table: EmbeddingTable,
) -> SimilarityMatrix:
    """Cosine matrix over in-vocabulary tokens; OOV tokens are dropped."""
    if src_table.dim != tgt_table.dim:
        raise DimMismatch(f"{src_table.dim} vs {tgt_table.dim}")
    rows = [t for t in src_tokens if t in src_table]
    cols = [t for t in tgt_tokens if t in tgt_table]
    oov_rows = len(src_tokens) - len(rows)
    oov_cols = len(tgt_tokens) - len(cols)
    if not rows or not cols:
        raise EmptyAfterOov(
            f"no in-vocabulary tokens (src kept {len(rows)}, tgt kept {len(cols)})"
        )
    a = np.stack([src_table[t] for t in rows])
    b = np.stack([tgt_table[t] for t in cols])
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = (a @ b.T) / (na * nb.T)
    values = np.where(np.isfinite(values), values, 0.0)
    values = np.clip(values, -1.0, 1.0)
    return SimilarityMatrix(
        values=values,
        row_tokens=tuple(rows),
        col_tokens=tuple(cols),
        oov_rows=oov_rows,
        oov_cols=oov_cols,
    )

"""273-dimension feature vector describing one translation pair.

Layout:
  slot 0        cosine of the average word vectors of the two sentences
  slots 1-126   for each n in 1..6: row maxima of the n-gram cosine matrix
                (padded/truncated to 10), column maxima (10), matrix mean
  slots 127-270 n-gram probabilities: source unigrams (25), bigrams (24),
                trigrams (23); then the same for the target
  slots 271-272 source and target word counts
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable, cosine
from .subtitles import BilingualPair, tokenize

FEATURE_DIM = 273
_SIM_PAD = 10
_NGRAM_RANGE = range(1, 7)
_FREQ_PADS = (25, 24, 23)


class NgramFrequencies:
    """Unigram/bigram/trigram occurrence probabilities over a corpus."""

    def __init__(self, counts: tuple[Counter, Counter, Counter]):
        self.counts = counts
        self.totals = tuple(max(1, sum(c.values())) for c in counts)

    @classmethod
    def from_sentences(cls, sentences) -> "NgramFrequencies":
        counts = (Counter(), Counter(), Counter())
        for sent in sentences:
            for n in (1, 2, 3):
                for i in range(len(sent) - n + 1):
                    counts[n - 1][tuple(sent[i:i + n])] += 1
        return cls(counts)

    def probability(self, ngram: tuple[str, ...]) -> float:
        n = len(ngram)
        return self.counts[n - 1].get(ngram, 0) / self.totals[n - 1]


def _pad(values: list[float], size: int) -> list[float]:
    return (values + [0.0] * size)[:size]


def _ngram_vectors(tokens: list[str], table: EmbeddingTable, n: int) -> np.ndarray:
    """Mean-of-member vectors per n-gram; OOV members contribute zeros."""
    if len(tokens) < n:
        return np.zeros((0, table.dim))
    vecs = np.stack([table.vector_or_zero(t) for t in tokens])
    grams = np.stack([vecs[i:i + n].mean(axis=0) for i in range(len(tokens) - n + 1)])
    return grams


def _cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = (a @ b.T) / (na * nb.T)
    return np.clip(np.where(np.isfinite(values), values, 0.0), -1.0, 1.0)


def extract_features(
    pair: BilingualPair,
    src_table: EmbeddingTable,
    tgt_table: EmbeddingTable,
    src_freqs: NgramFrequencies,
    tgt_freqs: NgramFrequencies,
) -> np.ndarray:
    src_tokens = tokenize(pair.source_text)
    tgt_tokens = tokenize(pair.target_text)
    features: list[float] = []

    # average vector similarity
    if src_tokens and tgt_tokens:
        src_avg = np.mean([src_table.vector_or_zero(t) for t in src_tokens], axis=0)
        tgt_avg = np.mean([tgt_table.vector_or_zero(t) for t in tgt_tokens], axis=0)
        features.append(cosine(src_avg, tgt_avg))
    else:
        features.append(0.0)

    # similarity block
    for n in _NGRAM_RANGE:
        a = _ngram_vectors(src_tokens, src_table, n)
        b = _ngram_vectors(tgt_tokens, tgt_table, n)
        if a.shape[0] and b.shape[0]:
            S = _cosine_matrix(a, b)
            features.extend(_pad(S.max(axis=1).tolist(), _SIM_PAD))
            features.extend(_pad(S.max(axis=0).tolist(), _SIM_PAD))
            features.append(float(S.mean()))
        else:
            features.extend([0.0] * (2 * _SIM_PAD + 1))

    # n-gram frequency block
    for tokens, freqs in ((src_tokens, src_freqs), (tgt_tokens, tgt_freqs)):
        for n, pad in zip((1, 2, 3), _FREQ_PADS):
            probs = [
                freqs.probability(tuple(tokens[i:i + n]))
                for i in range(max(0, len(tokens) - n + 1))
            ]
            features.extend(_pad(probs, pad))

    # structural: raw word counts
    features.append(float(len(pair.source_text.split())))
    features.append(float(len(pair.target_text.split())))

    out = np.array(features)
    assert out.shape == (FEATURE_DIM,)
    return out


@dataclass(frozen=True)
class FeatureSlot:
    index: int
    family: str
    description: str


def feature_layout() -> list[FeatureSlot]:
    """Slot-by-slot description of the feature vector, for model sidecars."""
    slots = [FeatureSlot(0, "average_similarity", "cosine of average word vectors")]
    i = 1
    for n in _NGRAM_RANGE:
        for k in range(_SIM_PAD):
            slots.append(FeatureSlot(i, "similarity", f"{n}-gram row max {k}"))
            i += 1
        for k in range(_SIM_PAD):
            slots.append(FeatureSlot(i, "similarity", f"{n}-gram col max {k}"))
            i += 1
        slots.append(FeatureSlot(i, "similarity", f"{n}-gram matrix mean"))
        i += 1
    for side in ("source", "target"):
        for n, pad in zip((1, 2, 3), _FREQ_PADS):
            for k in range(pad):
                slots.append(FeatureSlot(i, "ngram_frequency",
                                         f"{side} {n}-gram prob {k}"))
                i += 1
    slots.append(FeatureSlot(i, "structural", "source word count"))
    slots.append(FeatureSlot(i + 1, "structural", "target word count"))
    assert len(slots) == FEATURE_DIM
    return slots

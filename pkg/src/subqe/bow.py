"""Two-parameter bag-of-words translation scorer.

The similarity matrix is clipped below at 0, entries under theta1 are zeroed
(not binarized), then each side's score is the mean of its per-row (per-column)
maxima; the final score is the minimum of the two sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import SimilarityMatrix
from .errors import EmptyMatrix

# per-language (theta1, theta2) optima
DEFAULT_THETAS = {
    "fr": (0.6, 0.30),
    "de": (0.6, 0.35),
    "it": (0.5, 0.40),
    "pt": (0.6, 0.30),
    "es": (0.6, 0.30),
}


@dataclass(frozen=True)
class BowParams:
    theta1: float = 0.6
    theta2: float = 0.30
    language: str = "und"

    def __post_init__(self):
        if not (0.0 <= self.theta1 <= 1.0 and 0.0 <= self.theta2 <= 1.0):
            raise ValueError("thetas must lie in [0, 1]")

    @classmethod
    def for_language(cls, language: str) -> "BowParams":
        t1, t2 = DEFAULT_THETAS.get(language.split("-")[0].lower(), (0.6, 0.30))
        return cls(theta1=t1, theta2=t2, language=language)


def _values(S) -> np.ndarray:
    values = S.values if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=float)
    if values.size == 0:
        raise EmptyMatrix("similarity matrix has no entries")
    return np.clip(values, 0.0, 1.0)


def bow_sentence_scores(S, theta1: float) -> tuple[float, float]:
    """Per-side scores: mean over rows (cols) of the max over cols (rows)."""
    values = _values(S)
    thresholded = np.where(values >= theta1, values, 0.0)
    s_src = float(thresholded.max(axis=1).mean())
    s_tgt = float(thresholded.max(axis=0).mean())
    return s_src, s_tgt


def bow_score(S, params: BowParams) -> float:
    s_src, s_tgt = bow_sentence_scores(S, params.theta1)
    return min(s_src, s_tgt)


def bow_binary_label(s_bow: float, params: BowParams) -> bool:
    """Binary acceptance: strictly above theta2."""
    return s_bow > params.theta2

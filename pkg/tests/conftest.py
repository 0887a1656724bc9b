import numpy as np
import pytest

from subqe.embeddings import EmbeddingTable


@pytest.fixture
def ortho_tables():
    """Toy orthonormal vocab shared by both languages: a->e1, b->e2, c->e3."""
    entries = {
        "a": np.array([1.0, 0.0, 0.0]),
        "b": np.array([0.0, 1.0, 0.0]),
        "c": np.array([0.0, 0.0, 1.0]),
    }
    src = EmbeddingTable(3, dict(entries), "en")
    tgt = EmbeddingTable(3, dict(entries), "de")
    return src, tgt


SRT_SAMPLE = (
    "1\n00:00:01,000 --> 00:00:02,500\nHello.\n\n"
    "2\n00:00:03,000 --> 00:00:04,000\nHow are you?\nFine.\n"
)

"""Deterministic desk-scale synthetic bilingual corpora.

A toy "language pair" is a 1:1 word dictionary with perfectly aligned random
embeddings on both sides: each source word and its translation share one unit
vector. Sentences are zipf-weighted word draws, translations are word-by-word
dictionary lookups.
"""

from __future__ import annotations

import random
import string

import numpy as np

from .embeddings import EmbeddingTable
from .subtitles import BilingualPair, Provenance

CAPTION_WORDS = (
    "[", "]", "whispers", "sighs", "laughs", "screams", "gasps", "groans",
    "chuckles", "coughs", "grunts", "sobs", "music", "playing", "door",
    "closes", "phone", "ringing", "applause", "thunder", "rumbling",
    "engine", "revving", "dog", "barking", "indistinct", "chatter",
    "speaking", "foreign", "language", "birds", "chirping",
)


def _random_word(rng: random.Random, taken: set[str]) -> str:
    while True:
        word = "".join(rng.choices(string.ascii_lowercase, k=rng.randint(4, 8)))
        if word not in taken:
            taken.add(word)
            return word


def toy_dictionary(n_words: int, seed: int = 0) -> dict[str, str]:
    """Bijective source-to-target word mapping with disjoint vocabularies."""
    rng = random.Random(seed)
    taken: set[str] = set()
    return {
        _random_word(rng, taken): _random_word(rng, taken)
        for _ in range(n_words)
    }


def toy_embeddings(
    dictionary: dict[str, str],
    dim: int = 32,
    seed: int = 0,
    source_lang: str = "en",
    target_lang: str = "de",
) -> tuple[EmbeddingTable, EmbeddingTable]:
    """Aligned tables: a word and its translation share one unit vector.

    Caption-marker words get their own source-side vectors so added captions
    are visible to the models.
    """
    rng = np.random.default_rng(seed)

    def unit() -> np.ndarray:
        v = rng.normal(size=dim)
        return v / np.linalg.norm(v)

    src_entries, tgt_entries = {}, {}
    for src_word, tgt_word in dictionary.items():
        vec = unit()
        src_entries[src_word] = vec
        tgt_entries[tgt_word] = vec
    for word in CAPTION_WORDS:
        src_entries.setdefault(word, unit())
    return (
        EmbeddingTable(dim, src_entries, source_lang),
        EmbeddingTable(dim, tgt_entries, target_lang),
    )


def zipf_weights(n: int, exponent: float = 1.1) -> list[float]:
    return [1.0 / (rank + 1) ** exponent for rank in range(n)]


def toy_parallel_corpus(
    n_pairs: int,
    dictionary: dict[str, str],
    seed: int = 0,
    length_range: tuple[int, int] = (4, 12),
    source_lang: str = "en",
    target_lang: str = "de",
) -> list[BilingualPair]:
    """Dictionary-translated sentence pairs with zipf word frequencies."""
    rng = random.Random(seed)
    words = list(dictionary)
    weights = zipf_weights(len(words))
    pairs = []
    for _ in range(n_pairs):
        length = rng.randint(*length_range)
        sentence = rng.choices(words, weights=weights, k=length)
        pairs.append(
            BilingualPair(
                " ".join(sentence),
                " ".join(dictionary[w] for w in sentence),
                source_lang,
                target_lang,
                Provenance.ALIGNED,
            )
        )
    return pairs


def write_embeddings_file(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.entries)} {table.dim}\n")
        for token, vec in table.entries.items():
            fh.write(token + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")

"""Corruption and augmentation generators for weak-label training data.

Subtitle-side generators (added captions, scrambled text, random alignment,
drifted alignment) plus the parallel-corpus corruptions used for the random
forest training set (rare-word substitution, random sentence swap, trigram
substitution).
"""

from __future__ import annotations

import logging
import random
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass, replace

from .errors import (
    CorpusTooSmall,
    EmptyLexicon,
    NoEligibleTrigram,
    TooShort,
)
from .subtitles import BilingualPair, Provenance, SubtitleFile

logger = logging.getLogger(__name__)

# negatives per positive in the forest training corpus
RFC_NEGATIVE_RATIO = 1.2

DEFAULT_CAPTIONS = [
    "[whispers]", "[sighs]", "[laughs]", "[screams]", "[gasps]",
    "[groans]", "[chuckles]", "[coughs]", "[grunts]", "[sobs]",
    "[music playing]", "[door closes]", "[phone ringing]", "[applause]",
    "[thunder rumbling]", "[engine revving]", "[dog barking]",
    "[indistinct chatter]", "[speaking foreign language]", "[birds chirping]",
]


def derive_seed(seed: int, tag: str) -> int:
    """Stage seed derivation: base seed XOR a stable hash of the stage tag."""
    return (seed ^ zlib.crc32(tag.encode("utf-8"))) & 0xFFFFFFFFFFFFFFFF


def make_rng(seed: int, tag: str = "") -> random.Random:
    return random.Random(derive_seed(seed, tag) if tag else seed)


@dataclass(frozen=True)
class CaptionLexicon:
    captions: tuple[str, ...] = tuple(DEFAULT_CAPTIONS)

    def __post_init__(self):
        if not self.captions:
            raise EmptyLexicon("caption lexicon is empty")
        for c in self.captions:
            if not (c.startswith("[") and c.endswith("]") and c.strip("[] ").strip()):
                raise ValueError(f"caption must be bracketed and non-blank: {c!r}")

    @classmethod
    def load(cls, path) -> "CaptionLexicon":
        with open(path, encoding="utf-8") as fh:
            captions = tuple(line.strip() for line in fh if line.strip())
        return cls(captions)


class FrequencyTable:
    """Unigram counts with a normalized sampling distribution."""

    def __init__(self, counts: Counter):
        self.counts = Counter(counts)
        self.total = sum(self.counts.values())
        if self.total <= 0:
            raise ValueError("frequency table needs at least one count")
        self._words = sorted(self.counts)
        self._weights = [self.counts[w] / self.total for w in self._words]

    @classmethod
    def from_sentences(cls, sentences) -> "FrequencyTable":
        counts = Counter()
        for sent in sentences:
            counts.update(sent)
        return cls(counts)

    def probability(self, word: str) -> float:
        return self.counts.get(word, 0) / self.total

    def sample(self, rng: random.Random) -> str:
        return rng.choices(self._words, weights=self._weights, k=1)[0]


class TrigramTable:
    """Conditional distribution of the third word given a leading bigram."""

    def __init__(self, counts: dict[tuple[str, str], Counter]):
        self.counts = counts
        self._cache = {}
        for bigram, c in counts.items():
            words = sorted(c)
            total = sum(c.values())
            self._cache[bigram] = (words, [c[w] / total for w in words])

    @classmethod
    def from_sentences(cls, sentences) -> "TrigramTable":
        counts: dict[tuple[str, str], Counter] = defaultdict(Counter)
        for sent in sentences:
            for a, b, c in zip(sent, sent[1:], sent[2:]):
                counts[(a, b)][c] += 1
        return cls(dict(counts))

    def __contains__(self, bigram: tuple[str, str]) -> bool:
        return bigram in self.counts

    def sample(self, bigram: tuple[str, str], rng: random.Random) -> str:
        words, weights = self._cache[bigram]
        return rng.choices(words, weights=weights, k=1)[0]


def add_captions(pair: BilingualPair, lexicon: CaptionLexicon,
                 rng: random.Random) -> BilingualPair:
    """Insert one caption marker into the source; target unchanged."""
    caption = rng.choice(lexicon.captions)
    return replace(
        pair,
        source_text=f"{caption} {pair.source_text}",
        provenance=Provenance.ADDED_CAPTIONS,
    )


def scramble_target(pair: BilingualPair, rng: random.Random) -> BilingualPair:
    """Permute target word order uniformly, avoiding identity when possible."""
    words = pair.target_text.split()
    if len(words) < 2:
        raise TooShort(f"target too short to scramble: {pair.target_text!r}")
    shuffled = words[:]
    if len(set(words)) >= 2:
        while shuffled == words:
            rng.shuffle(shuffled)
    else:
        rng.shuffle(shuffled)
    return replace(
        pair,
        target_text=" ".join(shuffled),
        provenance=Provenance.SCRAMBLED_TEXT,
    )


def random_align(pairs: list[BilingualPair],
                 rng: random.Random) -> list[BilingualPair]:
    """Give each source the target of a uniformly random *other* pair."""
    if len(pairs) < 2:
        raise CorpusTooSmall("need at least 2 pairs to misalign")
    out = []
    for i, pair in enumerate(pairs):
        j = rng.randrange(len(pairs) - 1)
        if j >= i:
            j += 1
        out.append(
            replace(
                pair,
                target_text=pairs[j].target_text,
                target_block_id=pairs[j].target_block_id,
                provenance=Provenance.RANDOMLY_ALIGNED,
            )
        )
    return out


def random_sentence_swap(pairs: list[BilingualPair],
                         rng: random.Random) -> list[BilingualPair]:
    """Parallel-corpus variant of random_align, same contract."""
    return random_align(pairs, rng)


def drift_align(
    src_file: SubtitleFile,
    tgt_file: SubtitleFile,
    aligned: list[BilingualPair],
    window: int = 3,
    rng: random.Random | None = None,
) -> list[BilingualPair]:
    """Replace each target with a temporally close wrong block (hard negatives).

    The drifted block position j' satisfies 1 <= |j - j'| <= window. Pairs
    with no neighbor in range are skipped and counted.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    rng = rng or random.Random(0)
    pos_by_index = {b.index: p for p, b in enumerate(tgt_file.blocks)}
    out = []
    skipped = 0
    for pair in aligned:
        j = pos_by_index.get(pair.target_block_id)
        if j is None:
            skipped += 1
            continue
        lo = max(0, j - window)
        hi = min(len(tgt_file.blocks) - 1, j + window)
        neighbors = [p for p in range(lo, hi + 1) if p != j]
        if not neighbors:
            skipped += 1
            continue
        jp = rng.choice(neighbors)
        block = tgt_file.blocks[jp]
        out.append(
            replace(
                pair,
                target_text=block.text,
                target_block_id=block.index,
                provenance=Provenance.DRIFTED_ALIGNED,
            )
        )
    if skipped:
        logger.info("drift_align skipped %d pairs with no neighbor in window", skipped)
    return out


def substitute_rare_words(sentence: list[str], freq: FrequencyTable,
                          rng: random.Random) -> list[str]:
    """Drop the two least frequent words, insert two sampled words at random spots."""
    if len(sentence) < 3:
        raise TooShort("need at least 3 tokens")
    order = sorted(range(len(sentence)),
                   key=lambda i: (freq.probability(sentence[i]), i))
    drop = set(order[:2])
    kept = [w for i, w in enumerate(sentence) if i not in drop]
    for _ in range(2):
        kept.insert(rng.randrange(len(kept) + 1), freq.sample(rng))
    return kept


def trigram_substitute(sentence: list[str], table: TrigramTable,
                       rng: random.Random) -> list[str]:
    """Replace the third word of one eligible trigram with a conditional draw.

    A draw equal to the original is re-drawn once, then accepted.
    """
    if len(sentence) < 3:
        raise TooShort("need at least 3 tokens")
    eligible = [i for i in range(len(sentence) - 2)
                if (sentence[i], sentence[i + 1]) in table]
    if not eligible:
        raise NoEligibleTrigram("no trigram prefix present in the table")
    i = rng.choice(eligible)
    bigram = (sentence[i], sentence[i + 1])
    word = table.sample(bigram, rng)
    if word == sentence[i + 2]:
        word = table.sample(bigram, rng)
    out = sentence[:]
    out[i + 2] = word
    return out


def build_rfc_corpus(
    parallel: list[BilingualPair],
    rng: random.Random,
    freq: FrequencyTable | None = None,
    trigrams: TrigramTable | None = None,
) -> list[tuple[BilingualPair, bool]]:
    """Positives plus 1.2x corrupted negatives, the three corruptions in equal thirds.

    Negatives carry label False. Per-sentence corruption failures are skipped
    and counted; the quota is filled from other draws.
    """
    if not parallel:
        return []
    source_sentences = [p.source_text.split() for p in parallel]
    freq = freq or FrequencyTable.from_sentences(source_sentences)
    trigrams = trigrams or TrigramTable.from_sentences(source_sentences)

    labeled: list[tuple[BilingualPair, bool]] = [(p, True) for p in parallel]
    n_negatives = round(RFC_NEGATIVE_RATIO * len(parallel))
    base = n_negatives // 3
    quotas = [base + (1 if r < n_negatives % 3 else 0) for r in range(3)]
    skipped = 0

    def corrupt_source(fn, quota):
        nonlocal skipped
        produced = 0
        attempts = 0
        while produced < quota and attempts < 50 * quota + 100:
            attempts += 1
            pair = parallel[rng.randrange(len(parallel))]
            try:
                words = fn(pair.source_text.split())
            except (TooShort, NoEligibleTrigram):
                skipped += 1
                continue
            labeled.append(
                (replace(pair, source_text=" ".join(words)), False)
            )
            produced += 1

    corrupt_source(lambda w: substitute_rare_words(w, freq, rng), quotas[0])
    corrupt_source(lambda w: trigram_substitute(w, trigrams, rng), quotas[1])

    # random sentence swap fills its quota from whole-corpus draws
    if len(parallel) >= 2:
        produced = 0
        while produced < quotas[2]:
            take = min(quotas[2] - produced, len(parallel))
            swapped = random_sentence_swap(parallel, rng)
            rng.shuffle(swapped)
            for pair in swapped[:take]:
                labeled.append((pair, False))
            produced += take
    if skipped:
        logger.info("build_rfc_corpus skipped %d failed corruption draws", skipped)
    return labeled

"""Fuse the two statistical scores into Good/Loose/Bad labels and assemble
the training dataset from all enabled sources."""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import OutOfRangeScore, TooShort
from .subtitles import BilingualPair, Provenance, SubtitleFile
from .synth import (
    CaptionLexicon,
    add_captions,
    drift_align,
    random_align,
    scramble_target,
)

logger = logging.getLogger(__name__)


class QeLabel(str, Enum):
    GOOD = "good"
    LOOSE = "loose"
    BAD = "bad"


#: sentinel returned when the two scorers disagree
DISCARD = "discard"

#: label implied by each synthetic provenance
PROVENANCE_LABELS = {
    Provenance.GOOD_PAIRS_FILE: QeLabel.GOOD,
    Provenance.ADDED_CAPTIONS: QeLabel.LOOSE,
    Provenance.SCRAMBLED_TEXT: QeLabel.LOOSE,
    Provenance.DRIFTED_ALIGNED: QeLabel.BAD,
    Provenance.RANDOMLY_ALIGNED: QeLabel.BAD,
}

#: per-language source sampling weights (percent): statistical classification,
#: good-pairs ingestion (stand-in for MT-generated positives), added captions,
#: scrambled text, drifted aligned, randomly aligned
DEFAULT_SOURCE_WEIGHTS = {
    "fr": (18.83, 33.76, 6.58, 6.58, 17.13, 17.13),
    "de": (17.26, 32.14, 7.07, 7.07, 18.23, 18.23),
    "it": (16.44, 32.95, 6.57, 6.57, 18.74, 18.74),
    "pt": (16.47, 33.09, 6.59, 6.59, 18.63, 18.63),
    "es": (17.82, 29.15, 7.01, 7.01, 19.50, 19.50),
}

SOURCE_ORDER = (
    Provenance.STATISTICAL_CLASSIFICATION,
    Provenance.GOOD_PAIRS_FILE,
    Provenance.ADDED_CAPTIONS,
    Provenance.SCRAMBLED_TEXT,
    Provenance.DRIFTED_ALIGNED,
    Provenance.RANDOMLY_ALIGNED,
)


@dataclass(frozen=True)
class FusionThresholds:
    delta1: float = 0.25
    delta2: float = 0.4
    delta3: float = 0.7
    delta4: float = 0.8

    def __post_init__(self):
        if not (0 <= self.delta1 < self.delta2 <= self.delta3 < self.delta4 <= 1):
            raise ValueError("need 0 <= d1 < d2 <= d3 < d4 <= 1")


@dataclass(frozen=True)
class LabeledPair:
    pair: BilingualPair
    label: QeLabel
    s_bow: float | None = None
    s_rfc: float | None = None

    def __post_init__(self):
        implied = PROVENANCE_LABELS.get(self.pair.provenance)
        if implied is not None and implied != self.label:
            raise ValueError(
                f"label {self.label} inconsistent with provenance {self.pair.provenance}"
            )


def fuse_labels(
    s_bow: float,
    s_rfc: float,
    t: FusionThresholds = FusionThresholds(),
    strict_loose: bool = False,
):
    """Three-way label from the two scorer outputs, or DISCARD on disagreement.

    strict_loose additionally requires s_bow >= delta2 for the Loose band
    (off by default).
    """
    for name, s in (("s_bow", s_bow), ("s_rfc", s_rfc)):
        if not 0.0 <= s <= 1.0:
            raise OutOfRangeScore(f"{name}={s} outside [0, 1]")
    if s_bow <= t.delta1 and s_rfc <= t.delta1:
        return QeLabel.BAD
    if t.delta2 <= s_rfc <= t.delta3 and (not strict_loose or s_bow >= t.delta2):
        return QeLabel.LOOSE
    if s_bow >= t.delta4 and s_rfc >= t.delta4:
        return QeLabel.GOOD
    return DISCARD


@dataclass
class DistributionReport:
    """Per-source and per-label sample percentages of an assembled dataset."""

    source_counts: dict[Provenance, int] = field(default_factory=dict)
    label_counts: dict[QeLabel, int] = field(default_factory=dict)
    discarded: int = 0

    @property
    def total(self) -> int:
        return sum(self.source_counts.values())

    def source_percentages(self) -> dict[Provenance, float]:
        total = self.total or 1
        return {p: 100.0 * c / total for p, c in self.source_counts.items()}

    def label_percentages(self) -> dict[QeLabel, float]:
        total = sum(self.label_counts.values()) or 1
        return {l: 100.0 * c / total for l, c in self.label_counts.items()}

    def source_table(self) -> str:
        pcts = self.source_percentages()
        header = "  ".join(f"{p.value:>26s}" for p in SOURCE_ORDER)
        row = "  ".join(f"{pcts.get(p, 0.0):>26.2f}" for p in SOURCE_ORDER)
        return f"Data distribution from different sources (in %)\n{header}\n{row}"

    def label_table(self) -> str:
        pcts = self.label_percentages()
        order = (QeLabel.BAD, QeLabel.GOOD, QeLabel.LOOSE)
        header = "  ".join(f"{l.value:>8s}" for l in order)
        row = "  ".join(f"{pcts.get(l, 0.0):>8.2f}" for l in order)
        return f"Dataset label distribution (in %)\n{header}\n{row}"


def _quota(weights: dict[Provenance, float], n_samples: int) -> dict[Provenance, int]:
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("at least one source weight must be positive")
    quotas = {p: int(round(w / total * n_samples)) for p, w in weights.items() if w > 0}
    return quotas


def default_weights(language: str) -> dict[Provenance, float]:
    row = DEFAULT_SOURCE_WEIGHTS.get(language.split("-")[0].lower(),
                                     DEFAULT_SOURCE_WEIGHTS["de"])
    return dict(zip(SOURCE_ORDER, row))


def build_dataset(
    aligned: list[BilingualPair],
    n_samples: int,
    rng: random.Random,
    weights: dict[Provenance, float] | None = None,
    scored: list[tuple[BilingualPair, float, float]] | None = None,
    good_pairs: list[BilingualPair] | None = None,
    lexicon: CaptionLexicon | None = None,
    src_file: SubtitleFile | None = None,
    tgt_file: SubtitleFile | None = None,
    thresholds: FusionThresholds = FusionThresholds(),
    drift_window: int = 3,
    strict_loose: bool = False,
) -> tuple[list[LabeledPair], DistributionReport, list[tuple[BilingualPair, float, float]]]:
    """Assemble a labeled dataset by sampling each enabled source to its weight.

    Returns (labeled pairs, distribution report, discarded scored pairs).
    Sources whose inputs are missing are skipped with a log line, never fatal.
    """
    weights = dict(weights) if weights else default_weights(
        aligned[0].target_lang if aligned else "de")
    report = DistributionReport()
    out: list[LabeledPair] = []
    discards: list[tuple[BilingualPair, float, float]] = []

    def emit(pair: BilingualPair, label: QeLabel, s_bow=None, s_rfc=None):
        out.append(LabeledPair(pair, label, s_bow, s_rfc))
        report.source_counts[pair.provenance] = (
            report.source_counts.get(pair.provenance, 0) + 1)
        report.label_counts[label] = report.label_counts.get(label, 0) + 1

    quotas = _quota(weights, n_samples)
    for prov, quota in quotas.items():
        try:
            if prov is Provenance.STATISTICAL_CLASSIFICATION:
                if not scored:
                    logger.warning("no scored pairs; skipping statistical source")
                    continue
                produced = 0
                i = 0
                while produced < quota and i < 50 * quota:
                    pair, s_bow, s_rfc = scored[i % len(scored)]
                    i += 1
                    label = fuse_labels(s_bow, s_rfc, thresholds, strict_loose)
                    if label == DISCARD:
                        discards.append((pair, s_bow, s_rfc))
                        report.discarded += 1
                        continue
                    emit(pair, label, s_bow, s_rfc)
                    produced += 1
            elif prov is Provenance.GOOD_PAIRS_FILE:
                if not good_pairs:
                    logger.warning("no good-pairs file; skipping source")
                    continue
                for k in range(quota):
                    pair = good_pairs[k % len(good_pairs)]
                    emit(pair, QeLabel.GOOD)
            elif prov is Provenance.ADDED_CAPTIONS:
                lex = lexicon or CaptionLexicon()
                for _ in range(quota):
                    pair = aligned[rng.randrange(len(aligned))]
                    emit(add_captions(pair, lex, rng), QeLabel.LOOSE)
            elif prov is Provenance.SCRAMBLED_TEXT:
                produced = 0
                attempts = 0
                while produced < quota and attempts < 50 * quota + 100:
                    attempts += 1
                    pair = aligned[rng.randrange(len(aligned))]
                    try:
                        emit(scramble_target(pair, rng), QeLabel.LOOSE)
                    except TooShort:
                        continue
                    produced += 1
            elif prov is Provenance.DRIFTED_ALIGNED:
                if src_file is None or tgt_file is None:
                    logger.warning("no subtitle files; skipping drifted source")
                    continue
                pool = drift_align(src_file, tgt_file, aligned, drift_window, rng)
                if not pool:
                    continue
                for _ in range(quota):
                    emit(pool[rng.randrange(len(pool))], QeLabel.BAD)
            elif prov is Provenance.RANDOMLY_ALIGNED:
                pool = random_align(aligned, rng)
                for _ in range(quota):
                    emit(pool[rng.randrange(len(pool))], QeLabel.BAD)
        except Exception:
            logger.exception("source %s failed; continuing", prov.value)
    rng.shuffle(out)
    return out, report, discards


_WS = re.compile(r"[\t\n\r]")


def write_labeled_tsv(labeled: list[LabeledPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lp in labeled:
            fh.write("\t".join([
                _WS.sub(" ", lp.pair.source_text),
                _WS.sub(" ", lp.pair.target_text),
                lp.label.value,
                lp.pair.provenance.value,
                "NA" if lp.s_bow is None else f"{lp.s_bow:.6f}",
                "NA" if lp.s_rfc is None else f"{lp.s_rfc:.6f}",
            ]) + "\n")


def read_labeled_tsv(path, source_lang="en", target_lang="de") -> list[LabeledPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            src, tgt, label, prov, s_bow, s_rfc = line.split("\t")
            pair = BilingualPair(src, tgt, source_lang, target_lang, Provenance(prov))
            out.append(LabeledPair(
                pair, QeLabel(label),
                None if s_bow == "NA" else float(s_bow),
                None if s_rfc == "NA" else float(s_rfc),
            ))
    return out

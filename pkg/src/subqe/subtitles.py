"""SRT parsing/serialization, timestamp alignment and tokenization."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import EmptyBlock, MalformedTimestamp, MissingIndex

logger = logging.getLogger(__name__)

MAX_TOKENS = 25

_TIMESTAMP_RE = re.compile(r"^(\d{2}):(\d{2}):(\d{2}),(\d{3})$")
_ARROW = "-->"
_MARKUP_RE = re.compile(r"<[^>]*>")
# digit runs stay whole, letter runs stay whole, any other non-space char
# becomes its own token
_TOKEN_RE = re.compile(r"\d+|[^\W\d_]+|[^\w\s]|_")


@dataclass(frozen=True, order=True)
class Timestamp:
    """Subtitle time as integer milliseconds since file start."""

    millis: int

    def __post_init__(self):
        if self.millis < 0:
            raise MalformedTimestamp(f"negative timestamp: {self.millis}")
        if self.millis >= 100 * 3600_000:
            raise MalformedTimestamp(f"timestamp beyond 99 hours: {self.millis}")

    @classmethod
    def parse(cls, text: str) -> "Timestamp":
        m = _TIMESTAMP_RE.match(text.strip())
        if not m:
            raise MalformedTimestamp(f"bad timestamp {text!r}")
        h, mi, s, ms = (int(g) for g in m.groups())
        if mi >= 60 or s >= 60:
            raise MalformedTimestamp(f"bad timestamp {text!r}")
        return cls(((h * 60 + mi) * 60 + s) * 1000 + ms)

    def __str__(self) -> str:
        ms = self.millis
        h, ms = divmod(ms, 3600_000)
        mi, ms = divmod(ms, 60_000)
        s, ms = divmod(ms, 1000)
        return f"{h:02d}:{mi:02d}:{s:02d},{ms:03d}"


@dataclass(frozen=True)
class TextBlock:
    index: int
    start: Timestamp
    end: Timestamp
    lines: tuple[str, ...]

    def __post_init__(self):
        if self.index <= 0:
            raise MissingIndex(f"block index must be positive, got {self.index}")
        if not self.start < self.end:
            raise MalformedTimestamp(
                f"block {self.index}: start {self.start} not before end {self.end}"
            )
        if not self.lines:
            raise EmptyBlock(f"block {self.index} has no text")
        object.__setattr__(self, "lines", tuple(self.lines))

    @property
    def text(self) -> str:
        return " ".join(self.lines)


@dataclass(frozen=True)
class SubtitleFile:
    language: str
    blocks: tuple[TextBlock, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def __len__(self) -> int:
        return len(self.blocks)


class Provenance(str, Enum):
    ALIGNED = "aligned"
    STATISTICAL_CLASSIFICATION = "statistical_classification"
    GOOD_PAIRS_FILE = "good_pairs_file"
    ADDED_CAPTIONS = "added_captions"
    SCRAMBLED_TEXT = "scrambled_text"
    DRIFTED_ALIGNED = "drifted_aligned"
    RANDOMLY_ALIGNED = "randomly_aligned"


@dataclass(frozen=True)
class BilingualPair:
    """One source/target sentence pair, the atomic QE input."""

    source_text: str
    target_text: str
    source_lang: str
    target_lang: str
    provenance: Provenance = Provenance.ALIGNED
    source_block_id: int | None = None
    target_block_id: int | None = None

    def __post_init__(self):
        if not self.source_text.strip() or not self.target_text.strip():
            raise ValueError("pair texts must be non-empty after trimming")
        if self.source_lang == self.target_lang:
            raise ValueError("source and target language codes must differ")


def tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation/numbers into standalone tokens, cap at 25.

    Angle-bracketed styling markup is stripped; square-bracket caption
    markers are kept (their brackets become tokens).
    """
    text = _MARKUP_RE.sub(" ", text)
    return _TOKEN_RE.findall(text.lower())[:MAX_TOKENS]


def parse_srt(text: str, language: str = "und") -> SubtitleFile:
    """Parse SRT text into a SubtitleFile.

    Blocks arriving out of start-time order are sorted with a warning.
    """
    text = text.removeprefix("﻿").replace("\r\n", "\n").replace("\r", "\n")
    blocks: list[TextBlock] = []
    stanzas = [s for s in re.split(r"\n\s*\n", text) if s.strip()]
    for stanza in stanzas:
        lines = stanza.strip("\n").split("\n")
        if not lines[0].strip().isdigit():
            raise MissingIndex(f"expected numeric index line, got {lines[0]!r}")
        index = int(lines[0].strip())
        if len(lines) < 2 or _ARROW not in lines[1]:
            raise MalformedTimestamp(f"block {index}: missing timing line")
        left, _, right = lines[1].partition(_ARROW)
        start = Timestamp.parse(left)
        end = Timestamp.parse(right)
        body = [ln for ln in lines[2:] if ln.strip()]
        if not body:
            raise EmptyBlock(f"block {index} has no text lines")
        if not start < end:
            raise MalformedTimestamp(
                f"block {index}: start {start} not before end {end}"
            )
        blocks.append(TextBlock(index, start, end, tuple(body)))

    if any(blocks[i].start > blocks[i + 1].start for i in range(len(blocks) - 1)):
        logger.warning("non-monotonic block start times; sorting")
        blocks.sort(key=lambda b: (b.start, b.index))
        blocks = [replace(b, index=i + 1) for i, b in enumerate(blocks)]
    return SubtitleFile(language=language, blocks=tuple(blocks))


def serialize_srt(file: SubtitleFile) -> str:
    stanzas = []
    for block in file.blocks:
        stanzas.append(
            f"{block.index}\n{block.start} {_ARROW} {block.end}\n"
            + "\n".join(block.lines)
        )
    return "\n\n".join(stanzas) + "\n" if stanzas else ""


@dataclass
class AlignmentResult:
    pairs: list[BilingualPair] = field(default_factory=list)
    unmatched_source: int = 0
    unmatched_target: int = 0


def _iou(a: TextBlock, b: TextBlock) -> float:
    inter = min(a.end.millis, b.end.millis) - max(a.start.millis, b.start.millis)
    if inter <= 0:
        return 0.0
    union = max(a.end.millis, b.end.millis) - min(a.start.millis, b.start.millis)
    return inter / union


def align_by_timestamp(
    src: SubtitleFile,
    tgt: SubtitleFile,
    min_overlap_ratio: float = 0.5,
) -> AlignmentResult:
    """Greedy one-to-one matching of blocks by temporal intersection-over-union.

    A pair is emitted iff IoU >= min_overlap_ratio; candidates are taken in
    descending IoU order, each block used at most once. Unmatched blocks are
    dropped and counted.
    """
    if not 0 < min_overlap_ratio <= 1:
        raise ValueError("min_overlap_ratio must be in (0, 1]")
    candidates = []
    for i, a in enumerate(src.blocks):
        for j, b in enumerate(tgt.blocks):
            iou = _iou(a, b)
            if iou >= min_overlap_ratio:
                candidates.append((iou, i, j))
    # descending IoU, ties broken by block order for determinism
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_src: set[int] = set()
    used_tgt: set[int] = set()
    result = AlignmentResult()
    for _, i, j in candidates:
        if i in used_src or j in used_tgt:
            continue
        used_src.add(i)
        used_tgt.add(j)
        result.pairs.append(
            BilingualPair(
                source_text=src.blocks[i].text,
                target_text=tgt.blocks[j].text,
                source_lang=src.language,
                target_lang=tgt.language,
                provenance=Provenance.ALIGNED,
                source_block_id=src.blocks[i].index,
                target_block_id=tgt.blocks[j].index,
            )
        )
    result.pairs.sort(key=lambda p: p.source_block_id or 0)
    result.unmatched_source = len(src.blocks) - len(used_src)
    result.unmatched_target = len(tgt.blocks) - len(used_tgt)
    return result


def _tsv_safe(text: str) -> str:
    return re.sub(r"[\t\n\r]", " ", text)


def write_pairs_tsv(pairs: list[BilingualPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(
                "\t".join(
                    [
                        _tsv_safe(p.source_text),
                        _tsv_safe(p.target_text),
                        p.source_lang,
                        p.target_lang,
                        p.provenance.value,
                    ]
                )
                + "\n"
            )


def read_pairs_tsv(path) -> list[BilingualPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            src, tgt, sl, tl, prov = line.split("\t")
            pairs.append(BilingualPair(src, tgt, sl, tl, Provenance(prov)))
    return pairs

"""Vocabulary agreement across organizations.

Each organization proposes its most frequent words above a count threshold as
a bare, unordered word set; counts and ranks never leave the organization.
Proposals merge into one shared vocabulary (union by default, intersection
optional) with dense indices assigned lexicographically, so every participant
derives the identical index from the same word sets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import WordCounts
from .ioutil import atomic_write_text

MERGE_MODES = ("union", "intersection")

_HEADER_RE = re.compile(
    r"^fedvec-vocab v1 mode=(union|intersection) cap=(\d+) threshold=(\d+)$"
)


@dataclass(frozen=True)
class VocabProposal:
    """One organization's word-set offer: no counts, no ordering."""

    words: frozenset[str]
    origin: str = ""
    cap: int = 200_000
    threshold: int = 10

    def __post_init__(self) -> None:
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")
        if len(self.words) > self.cap:
            raise ValueError("proposal exceeds its cap")


@dataclass(frozen=True)
class GlobalVocabulary:
    """Shared word index: dense ids 0..V-1 in lexicographic word order."""

    words: tuple[str, ...]
    merge_mode: str = "union"
    cap: int = 200_000
    threshold: int = 10

    def __post_init__(self) -> None:
        if self.merge_mode not in MERGE_MODES:
            raise ValueError(f"unknown merge mode: {self.merge_mode!r}")
        if self.cap < 1 or self.threshold < 1:
            raise ValueError("cap and threshold must be >= 1")
        if list(self.words) != sorted(set(self.words)):
            raise ValueError("words must be unique and lexicographically sorted")

    @cached_property
    def index_of(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    def word_of(self, index: int) -> str:
        return self.words[index]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index_of


def build_proposal(
    counts: WordCounts, cap: int, threshold: int, origin: str = ""
) -> VocabProposal:
    """Top ``cap`` words with at least ``threshold`` occurrences.

    Ties at the cap boundary go to the lexicographically smaller word. The
    returned proposal carries only the word set.
    """
    if cap < 1 or threshold < 1:
        raise ValueError("cap and threshold must be >= 1")
    ranked = sorted(
        (w for w, c in counts.entries.items() if c >= threshold),
        key=lambda w: (-counts.entries[w], w),
    )
    return VocabProposal(
        frozenset(ranked[:cap]), origin=origin, cap=cap, threshold=threshold
    )


def merge_proposals(
    proposals: Sequence[VocabProposal], mode: str = "union"
) -> GlobalVocabulary:
    """Merge word sets from all organizations into the shared vocabulary.

    The result is independent of proposal order. Intersection mode fails when
    no word is common to every proposal.
    """
    if not proposals:
        raise ValueError("need at least one proposal")
    if mode not in MERGE_MODES:
        raise ValueError(f"unknown merge mode: {mode!r}")
    caps = {p.cap for p in proposals}
    thresholds = {p.threshold for p in proposals}
    if len(caps) != 1 or len(thresholds) != 1:
        raise ValueError("all proposals must share cap and threshold")
    sets = [set(p.words) for p in proposals]
    merged = set.union(*sets) if mode == "union" else set.intersection(*sets)
    if mode == "intersection" and not merged:
        raise ValueError("intersection produced an empty vocabulary")
    return GlobalVocabulary(
        tuple(sorted(merged)), merge_mode=mode, cap=caps.pop(), threshold=thresholds.pop()
    )


def save_vocabulary(vocab: GlobalVocabulary, path: str | Path) -> None:
    lines = [
        f"fedvec-vocab v1 mode={vocab.merge_mode} cap={vocab.cap} "
        f"threshold={vocab.threshold}"
    ]
    lines.extend(f"{i}\t{w}" for i, w in enumerate(vocab.words))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_vocabulary(path: str | Path) -> GlobalVocabulary:
    """Parse a vocabulary file, rejecting anything save_vocabulary cannot emit."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError("empty vocabulary file")
    m = _HEADER_RE.match(lines[0])
    if m is None:
        raise ValueError("malformed vocabulary header")
    mode, cap, threshold = m.group(1), int(m.group(2)), int(m.group(3))
    words: list[str] = []
    for row, line in enumerate(lines[1:]):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1]:
            raise ValueError(f"malformed vocabulary row {row}")
        try:
            idx = int(parts[0])
        except ValueError as exc:
            raise ValueError(f"malformed vocabulary index in row {row}") from exc
        if idx != row:
            raise ValueError(f"vocabulary indices must be dense and ascending (row {row})")
        words.append(parts[1])
    if len(set(words)) != len(words):
        raise ValueError("duplicate word in vocabulary file")
    try:
        return GlobalVocabulary(tuple(words), mode, cap, threshold)
    except ValueError as exc:
        raise ValueError(f"invalid vocabulary file: {exc}") from exc


def save_proposal(proposal: VocabProposal, path: str | Path) -> None:
    """Words only, one per line, lexicographic order: no counts, no ranks."""
    atomic_write_text(path, "".join(f"{w}\n" for w in sorted(proposal.words)))


def load_proposal(
    path: str | Path, cap: int, threshold: int, origin: str | None = None
) -> VocabProposal:
    path = Path(path)
    seen: set[str] = set()
    for row, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line or line != line.strip() or any(ch.isspace() for ch in line):
            raise ValueError(f"malformed proposal line {row}")
        if line in seen:
            raise ValueError(f"duplicate proposal word {line!r}")
        seen.add(line)
    sid = path.stem if origin is None else origin
    return VocabProposal(frozenset(seen), origin=sid, cap=cap, threshold=threshold)

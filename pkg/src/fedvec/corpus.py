"""Corpus ingestion: tokenization, word counting, index encoding, and
skip-gram pair streams."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .ioutil import atomic_write_text

if TYPE_CHECKING:
    from .vocab import GlobalVocabulary

# Maximal runs of letters and digits; underscore is punctuation here.
_TOKEN_RE = re.compile(r"[^\W_]+")


class TrainingPair(NamedTuple):
    center: int
    context: int


@dataclass
class TokenStream:
    """Ordered lowercase tokens from one organization's corpus."""

    tokens: list[str]
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class WordCounts:
    """Word to occurrence-count map plus the total token count."""

    entries: dict[str, int]
    total: int


def tokenize(text: str, source_id: str = "") -> TokenStream:
    """Split text into maximal alphanumeric runs, lowercased, in document order."""
    return TokenStream(_TOKEN_RE.findall(text.lower()), source_id)


def read_corpus(path: str | Path, source_id: str | None = None) -> TokenStream:
    """Tokenize a UTF-8 plain-text file (one document per line)."""
    path = Path(path)
    sid = path.stem if source_id is None else source_id
    return tokenize(path.read_text(encoding="utf-8"), sid)


def count_words(stream: TokenStream) -> WordCounts:
    counts = Counter(stream.tokens)
    return WordCounts(dict(counts), total=len(stream.tokens))


def save_counts(counts: WordCounts, path: str | Path) -> None:
    """Write counts as TSV, most frequent first, ties lexicographic."""
    rows = sorted(counts.entries.items(), key=lambda kv: (-kv[1], kv[0]))
    atomic_write_text(path, "".join(f"{w}\t{c}\n" for w, c in rows))


def encode(stream: TokenStream, vocab: "GlobalVocabulary") -> np.ndarray:
    """Map tokens to vocabulary indices, dropping out-of-vocabulary tokens."""
    index_of = vocab.index_of
    ids = [index_of[t] for t in stream.tokens if t in index_of]
    return np.asarray(ids, dtype=np.int64)


def enumerate_pairs(
    indices: np.ndarray,
    window: int,
    rng: np.random.Generator | None = None,
    dynamic: bool = True,
    center_mask: np.ndarray | None = None,
) -> np.ndarray:
    """One full pass of (center, context) pairs in center-position order.

    Each unmasked position i gets a reach w_i, drawn uniformly from
    {1..window} when dynamic (else exactly window), and pairs with every
    position j != i within |i - j| <= w_i. Returns an (n, 2) int64 array;
    sequences shorter than two tokens yield no pairs.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    idx = np.asarray(indices, dtype=np.int64)
    n = idx.size
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    if center_mask is None:
        center_mask = np.ones(n, dtype=bool)
    n_centers = int(center_mask.sum())
    if n_centers == 0:
        return np.empty((0, 2), dtype=np.int64)
    reach = np.zeros(n, dtype=np.int64)
    if dynamic:
        if rng is None:
            raise ValueError("dynamic windows need a random generator")
        reach[center_mask] = rng.integers(1, window + 1, size=n_centers)
    else:
        reach[center_mask] = window
    ci, cj = [], []
    for k in range(1, window + 1):
        left = np.nonzero(reach[k:] >= k)[0] + k
        ci.append(left)
        cj.append(left - k)
        right = np.nonzero(reach[: n - k] >= k)[0]
        ci.append(right)
        cj.append(right + k)
    i = np.concatenate(ci)
    j = np.concatenate(cj)
    order = np.lexsort((j, i))
    return np.column_stack((idx[i[order]], idx[j[order]]))


class PairStream:
    """Endless skip-gram pair stream over one encoded corpus.

    Serves one pass after another; each pass redraws the per-position dynamic
    windows. ``epoch`` counts completed passes and increments during the call
    that produces the first pair of the following pass. Positions named in
    ``exclude`` never act as centers (they can still appear as contexts),
    which keeps held-out pairs out of the training stream by construction.
    """

    def __init__(
        self,
        indices,
        window: int,
        rng: np.random.Generator | None = None,
        dynamic: bool = True,
        exclude=None,
    ) -> None:
        if window < 1:
            raise ValueError("window must be >= 1")
        self._indices = np.asarray(indices, dtype=np.int64)
        self._window = int(window)
        self._rng = rng
        self._dynamic = bool(dynamic)
        mask = np.ones(self._indices.size, dtype=bool)
        if exclude is not None and self._indices.size:
            excl = np.asarray(exclude, dtype=np.int64)
            if excl.size:
                mask[excl] = False
        self._mask = mask
        self._pairs = np.empty((0, 2), dtype=np.int64)
        self._cursor = 0
        self._epoch = 0
        self._started = False

    @property
    def epoch(self) -> int:
        return self._epoch

    def _advance_pass(self) -> bool:
        if self._started:
            self._epoch += 1
        self._pairs = enumerate_pairs(
            self._indices, self._window, self._rng, self._dynamic, self._mask
        )
        self._cursor = 0
        if self._pairs.shape[0]:
            self._started = True
            return True
        return False

    def __iter__(self) -> "PairStream":
        return self

    def __next__(self) -> TrainingPair:
        if self._cursor >= self._pairs.shape[0]:
            if not self._advance_pass():
                raise StopIteration
        c, x = self._pairs[self._cursor]
        self._cursor += 1
        return TrainingPair(int(c), int(x))

    def next_batch(self, size: int) -> np.ndarray:
        """Next ``size`` pairs as a (size, 2) array, wrapping across passes."""
        if size < 1:
            raise ValueError("batch size must be >= 1")
        out = np.empty((size, 2), dtype=np.int64)
        filled = 0
        while filled < size:
            avail = self._pairs.shape[0] - self._cursor
            if avail == 0:
                if not self._advance_pass():
                    raise ValueError("sequence yields no training pairs")
                continue
            take = min(size - filled, avail)
            out[filled : filled + take] = self._pairs[self._cursor : self._cursor + take]
            self._cursor += take
            filled += take
        return out


def generate_pairs(
    indices,
    window: int,
    rng: np.random.Generator | None = None,
    dynamic: bool = True,
    exclude=None,
) -> PairStream:
    """Skip-gram pair stream over an encoded sequence; see PairStream."""
    return PairStream(indices, window, rng=rng, dynamic=dynamic, exclude=exclude)

# TODO: frequent-word subsampling as an opt-in preprocessing step.

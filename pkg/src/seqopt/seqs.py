"""Discrete sequence primitives: vocabulary, tokenization, one-hot encoding,
and Levenshtein edit distance (scalar and vectorized batch form)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# The 20 canonical amino acids, alphabetical one-letter codes.
AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"


@dataclass(frozen=True)
class Vocabulary:
    """Ordered symbol set with mutually inverse index<->symbol maps."""

    tokens: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary symbols must be unique")
        if any(len(t) != 1 for t in self.tokens):
            raise ValueError("vocabulary symbols must be single characters")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def amino_acids(cls) -> "Vocabulary":
        return cls(tuple(AMINO_ACIDS))

    @property
    def size(self) -> int:
        return len(self.tokens)

    def index(self, symbol: str) -> int:
        return self._index[symbol]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index


def tokenize(text: str, vocab: Vocabulary) -> np.ndarray:
    """Map a symbol string to an int index array. Unknown symbols are rejected
    with their 0-based position."""
    idx = np.empty(len(text), dtype=np.int64)
    for pos, ch in enumerate(text):
        if ch not in vocab:
            raise ValueError(f"unknown symbol {ch!r} at position {pos}")
        idx[pos] = vocab.index(ch)
    return idx


def detokenize(seq: np.ndarray, vocab: Vocabulary) -> str:
    seq = np.asarray(seq)
    if seq.size and (seq.min() < 0 or seq.max() >= vocab.size):
        raise ValueError("token index out of vocabulary range")
    return "".join(vocab.tokens[i] for i in seq)


def validate_sequence(seq: np.ndarray, vocab: Vocabulary, length: int | None = None) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.int64)
    if seq.ndim != 1:
        raise ValueError(f"sequence must be 1-D, got shape {seq.shape}")
    if length is not None and seq.size != length:
        raise ValueError(f"sequence length {seq.size} != expected {length}")
    if seq.size and (seq.min() < 0 or seq.max() >= vocab.size):
        raise ValueError("token index out of vocabulary range")
    return seq


def one_hot(seq: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """(d,) index array -> (d, |V|) matrix of exact basis rows."""
    seq = validate_sequence(seq, vocab)
    out = np.zeros((seq.size, vocab.size), dtype=np.float64)
    out[np.arange(seq.size), seq] = 1.0
    return out


def one_hot_batch(seqs: np.ndarray, vocab_size: int) -> np.ndarray:
    """(n, d) index matrix -> (n, d, |V|)."""
    seqs = np.asarray(seqs, dtype=np.int64)
    n, d = seqs.shape
    out = np.zeros((n, d, vocab_size), dtype=np.float64)
    out[np.arange(n)[:, None], np.arange(d)[None, :], seqs] = 1.0
    return out


def levenshtein(a, b) -> int:
    """Unit-cost edit distance (insert/delete/substitute) between two token
    arrays or strings."""
    a = np.asarray(list(a) if isinstance(a, str) else a)
    b = np.asarray(list(b) if isinstance(b, str) else b)
    if a.size == 0:
        return int(b.size)
    if b.size == 0:
        return int(a.size)
    return int(levenshtein_one_to_many(a, b[None, :])[0])


def levenshtein_one_to_many(query: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Edit distance from one query to each row of a (m, d) target matrix.

    Row-by-row Wagner-Fischer where each DP row is vectorized over all m
    targets; the insert dependency within a row is resolved by a running
    prefix minimum: cur[j] = j + min_{i<=j}(tent[i] - i).
    """
    query = np.asarray(query)
    targets = np.asarray(targets)
    if targets.ndim != 2:
        raise ValueError("targets must be a 2-D (m, d) matrix")
    m, d = targets.shape
    if query.size == 0:
        return np.full(m, d, dtype=np.int64)
    if d == 0:
        return np.full(m, query.size, dtype=np.int64)
    offsets = np.arange(d + 1, dtype=np.int64)
    prev = np.broadcast_to(offsets, (m, d + 1)).copy()
    cur = np.empty_like(prev)
    for i in range(1, query.size + 1):
        cost = (targets != query[i - 1]).astype(np.int64)
        tent = np.minimum(prev[:, 1:] + 1, prev[:, :-1] + cost)
        cur[:, 0] = i
        cur[:, 1:] = tent - offsets[1:]
        np.minimum.accumulate(cur, axis=1, out=cur)
        cur += offsets
        prev, cur = cur, prev
    return prev[:, -1].copy()


def min_distance_to_set(seqs: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Per row of (n, d) seqs, the minimum edit distance to any row of refs."""
    seqs = np.atleast_2d(np.asarray(seqs))
    refs = np.atleast_2d(np.asarray(refs))
    best = np.full(seqs.shape[0], np.iinfo(np.int64).max, dtype=np.int64)
    for ref in refs:
        best = np.minimum(best, levenshtein_one_to_many(ref, seqs))
    return best


def pairwise_distances(seqs: np.ndarray) -> np.ndarray:
    """Flat array of edit distances over all unordered distinct pairs."""
    seqs = np.atleast_2d(np.asarray(seqs))
    n = seqs.shape[0]
    chunks = [levenshtein_one_to_many(seqs[i], seqs[i + 1:]) for i in range(n - 1)]
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)

"""Corpus ingestion and vocabulary construction.

Corpus files are UTF-8, one sentence per line, tokens separated by spaces.
Vocabulary files hold one token per line in canonical order (reserved
tokens, then descending frequency, ties broken lexicographically); ids are
implicit line numbers.
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .errors import AlignmentError, FormatError

log = logging.getLogger(__name__)

UNK_ID = 0
EOS_ID = 1
PAD_ID = 2
UNK_TOKEN = "UNK"
EOS_TOKEN = "<EOS>"
PAD_TOKEN = "<PAD>"
RESERVED_TOKENS = (UNK_TOKEN, EOS_TOKEN, PAD_TOKEN)


class Vocabulary:
    """Bijective token<->id map with UNK/EOS/PAD reserved at ids 0/1/2."""

    __slots__ = ("tokens", "_ids")

    def __init__(self, tokens: list[str]):
        if tuple(tokens[:3]) != RESERVED_TOKENS:
            raise FormatError(f"vocabulary must start with {RESERVED_TOKENS}")
        self._ids = {}
        for idx, tok in enumerate(tokens):
            if tok in self._ids:
                raise FormatError(f"duplicate vocabulary token {tok!r}")
            self._ids[tok] = idx
        self.tokens = list(tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def id(self, token: str) -> int:
        """Id of a token; unknown strings map to UNK."""
        return self._ids.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    def content_hash(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens


def build_vocab(token_stream: Iterable[str], max_size: int) -> Vocabulary:
    """Keep the most frequent tokens, ties broken lexicographically.

    ``max_size`` caps the total size including the three reserved tokens,
    which are always present.
    """
    if max_size < 1:
        raise ValueError(f"max_size must be >= 1, got {max_size}")
    counts = Counter(token_stream)
    for reserved in RESERVED_TOKENS:
        counts.pop(reserved, None)
    room = max(0, max_size - len(RESERVED_TOKENS))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [tok for tok, _ in ranked[:room]]
    return Vocabulary(list(RESERVED_TOKENS) + kept)


@dataclass
class SentencePair:
    """Token-id sequences; neither side carries an explicit EOS."""

    source: list[int]
    target: list[int]


@dataclass
class ParallelCorpus:
    pairs: list[SentencePair]
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    dropped_sources: int = field(default=0)

    def __len__(self) -> int:
        return len(self.pairs)


def read_token_lines(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().splitlines()]


def write_token_lines(path, sentences: Iterable[Iterable[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(" ".join(sent) + "\n")


def load_parallel_corpus(src_path, tgt_path, src_vocab: Vocabulary,
                         tgt_vocab: Vocabulary) -> ParallelCorpus:
    """Pair line i of both files; OOV becomes UNK; empty sources are dropped."""
    src_lines = read_token_lines(src_path)
    tgt_lines = read_token_lines(tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise AlignmentError(
            f"line count mismatch: {src_path} has {len(src_lines)}, "
            f"{tgt_path} has {len(tgt_lines)}")
    pairs = []
    dropped = 0
    for src, tgt in zip(src_lines, tgt_lines):
        if not src:
            dropped += 1
            continue
        pairs.append(SentencePair(src_vocab.encode(src), tgt_vocab.encode(tgt)))
    if dropped:
        log.warning("dropped %d empty-source line(s)", dropped)
    return ParallelCorpus(pairs, src_vocab, tgt_vocab, dropped)


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok in vocab.tokens:
            fh.write(tok + "\n")


def load_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        tokens = fh.read().splitlines()
    return Vocabulary(tokens)

"""Deterministic synthetic corpora for desk-scale experiments.

Three tasks stand in for a real parallel corpus: ``copy`` (target equals
source), ``reverse`` (target is the source reversed) and ``toy_translate``
(a bijective token substitution into a separate target alphabet, composed
with local reordering inside windows of ``reorder_window`` positions).
toy_translate keeps the alignment roughly monotone, so feeding the source
reversed shortens the earliest input-output dependencies exactly the way it
does in real translation, which is what makes the reversal comparison
meaningful at toy scale.

Generation is a pure function of the spec; pairs split 90/10 into
train/held-out by a hash of the pair index.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .corpus import ParallelCorpus, RESERVED_TOKENS, SentencePair, Vocabulary
from .errors import ConfigError

TASKS = ("copy", "reverse", "toy_translate")


@dataclass(frozen=True)
class TaskSpec:
    task: str
    vocab_size: int  # content tokens, reserved ones excluded
    min_len: int
    max_len: int
    num_pairs: int
    seed: int
    reorder_window: int = 1

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.vocab_size < 2:
            raise ConfigError("vocab_size must be >= 2")
        if not (1 <= self.min_len <= self.max_len):
            raise ConfigError("need 1 <= min_len <= max_len")
        if self.num_pairs < 1:
            raise ConfigError("num_pairs must be >= 1")
        if self.reorder_window < 1:
            raise ConfigError("reorder_window must be >= 1")


def _content_vocab(size: int, prefix: str) -> Vocabulary:
    width = len(str(size - 1))
    return Vocabulary(list(RESERVED_TOKENS)
                      + [f"{prefix}{i:0{width}d}" for i in range(size)])


def _is_heldout(index: int) -> bool:
    digest = hashlib.sha256(str(index).encode("ascii")).hexdigest()
    return int(digest[:8], 16) >= 0.9 * 0x100000000


def generate(spec: TaskSpec) -> tuple[ParallelCorpus, ParallelCorpus]:
    """Build (train, heldout) corpora; regeneration is bit-identical."""
    spec.validate()
    rng = random.Random(spec.seed)
    reserved = len(RESERVED_TOKENS)

    src_vocab = _content_vocab(spec.vocab_size, "s" if spec.task == "toy_translate" else "w")
    if spec.task == "toy_translate":
        tgt_vocab = _content_vocab(spec.vocab_size, "t")
        mapping = list(range(spec.vocab_size))
        rng.shuffle(mapping)  # bijection: source word i -> target word mapping[i]
    else:
        tgt_vocab = src_vocab
        mapping = None

    train_pairs, heldout_pairs = [], []
    for index in range(spec.num_pairs):
        length = rng.randint(spec.min_len, spec.max_len)
        source = [reserved + rng.randrange(spec.vocab_size) for _ in range(length)]
        if spec.task == "copy":
            target = list(source)
        elif spec.task == "reverse":
            target = source[::-1]
        else:
            positions = list(range(length))
            for start in range(0, length, spec.reorder_window):
                window = positions[start:start + spec.reorder_window]
                rng.shuffle(window)
                positions[start:start + spec.reorder_window] = window
            target = [reserved + mapping[source[pos] - reserved]
                      for pos in positions]
        pair = SentencePair(source, target)
        (heldout_pairs if _is_heldout(index) else train_pairs).append(pair)

    train = ParallelCorpus(train_pairs, src_vocab, tgt_vocab)
    heldout = ParallelCorpus(heldout_pairs, src_vocab, tgt_vocab)
    return train, heldout


def token_mapping(spec: TaskSpec) -> dict[str, str] | None:
    """The source->target word bijection of a toy_translate spec (None for
    the other tasks); reproduces the generator's draw order."""
    spec.validate()
    if spec.task != "toy_translate":
        return None
    rng = random.Random(spec.seed)
    mapping = list(range(spec.vocab_size))
    rng.shuffle(mapping)
    src_vocab = _content_vocab(spec.vocab_size, "s")
    tgt_vocab = _content_vocab(spec.vocab_size, "t")
    reserved = len(RESERVED_TOKENS)
    return {src_vocab.tokens[reserved + i]: tgt_vocab.tokens[reserved + mapping[i]]
            for i in range(spec.vocab_size)}

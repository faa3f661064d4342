"""Left-to-right beam search, ensemble decoding and n-best rescoring.

The beam keeps the B most likely partial hypotheses.  Every step extends
each of them with every vocabulary word; extensions ending in EOS leave the
beam for the complete set without consuming one of the B slots.  Scores are
raw cumulative log-probabilities (no length normalization).  Ensembles
combine members by averaging per-step log-probabilities, i.e. a geometric
mean of the member distributions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import EOS_ID, SentencePair
from .errors import ConfigError, EmptySourceError, InputError
from .model import Seq2SeqModel, encode, sequence_logprob, _gather, _output_logprobs
from .recurrent import CellState, stack_forward


@dataclass
class Hypothesis:
    """A beam entry: generated ids (EOS-terminated once complete), the
    cumulative log-probability and per-ensemble-member decoder states."""

    tokens: tuple[int, ...]
    logprob: float
    states: list[list[CellState]]
    complete: bool = False


@dataclass
class NBestEntry:
    sentence_id: int
    tokens: list[str]
    smt_score: float


@dataclass
class RescoredEntry:
    entry: NBestEntry
    lstm_logprob: float
    final_score: float


def _check_ensemble(models: list[Seq2SeqModel]) -> None:
    if not models:
        raise ConfigError("ensemble needs at least one model")
    first = models[0]
    for m in models[1:]:
        if m.tgt_vocab is not first.tgt_vocab and m.tgt_vocab != first.tgt_vocab:
            raise ConfigError("ensemble members use different target vocabularies")
        if m.src_vocab is not first.src_vocab and m.src_vocab != first.src_vocab:
            raise ConfigError("ensemble members use different source vocabularies")


def ensemble_step_logprobs(models: list[Seq2SeqModel], states, prev_token: int):
    """Advance every member one decoder step on ``prev_token``.

    Returns (combined log-prob row over the target vocabulary, new states);
    the combination is the arithmetic mean of the members' log-probs.
    """
    _check_ensemble(models)
    vocab_size = len(models[0].tgt_vocab)
    combined = [0.0] * vocab_size
    new_states = []
    for model, member_states in zip(models, states):
        x = _gather(model.tgt_embeddings, [prev_token])
        outputs, finals, _ = stack_forward([x], model.decoder_layers,
                                           init=member_states)
        logp = _output_logprobs(model, outputs[0])
        row = logp.row(0)
        for w in range(vocab_size):
            combined[w] += row[w]
        new_states.append(finals)
    if len(models) > 1:
        inv = 1.0 / len(models)
        combined = [v * inv for v in combined]
    return combined, new_states


def beam_search(models: list[Seq2SeqModel], source: list[int], beam_size: int,
                max_len: int | None = None) -> list[Hypothesis]:
    """All complete hypotheses found for ``source``, best first.

    ``max_len`` caps the number of generated tokens before the terminating
    EOS; survivors at the cap are completed with a scored EOS.  The search
    also stops when the best partial already scores below the best complete
    hypothesis (extensions only lower a score).
    """
    _check_ensemble(models)
    if beam_size < 1:
        raise ConfigError(f"beam size must be >= 1, got {beam_size}")
    if not source:
        raise EmptySourceError("cannot translate an empty source sentence")
    if max_len is None:
        max_len = 2 * len(source) + 10

    init_states = [encode(m, source) for m in models]
    beam = [Hypothesis((), 0.0, init_states)]
    complete: list[Hypothesis] = []

    for length in range(max_len + 1):
        force_eos = length == max_len
        candidates = []  # (score, token, beam position, states)
        for pos, hyp in enumerate(beam):
            prev = hyp.tokens[-1] if hyp.tokens else EOS_ID
            row, new_states = ensemble_step_logprobs(models, hyp.states, prev)
            if force_eos:
                candidates.append((hyp.logprob + row[EOS_ID], EOS_ID, pos,
                                   new_states))
            else:
                for token, logp in enumerate(row):
                    candidates.append((hyp.logprob + logp, token, pos, new_states))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

        next_beam = []
        for score, token, pos, new_states in candidates:
            if token == EOS_ID:
                complete.append(Hypothesis(beam[pos].tokens + (EOS_ID,), score,
                                           new_states, complete=True))
            else:
                next_beam.append(Hypothesis(beam[pos].tokens + (token,), score,
                                            new_states))
                if len(next_beam) == beam_size:
                    break
        beam = next_beam
        if not beam:
            break
        if complete:
            best_complete = max(h.logprob for h in complete)
            best_partial = max(h.logprob for h in beam)
            if best_partial < best_complete:
                break

    complete.sort(key=lambda h: -h.logprob)
    return complete


def greedy_decode(models: list[Seq2SeqModel], source: list[int],
                  max_len: int | None = None) -> Hypothesis:
    """Stepwise argmax decoding; the reference behavior for beam size 1."""
    _check_ensemble(models)
    if not source:
        raise EmptySourceError("cannot translate an empty source sentence")
    if max_len is None:
        max_len = 2 * len(source) + 10
    states = [encode(m, source) for m in models]
    tokens: tuple[int, ...] = ()
    logprob = 0.0
    for length in range(max_len + 1):
        prev = tokens[-1] if tokens else EOS_ID
        row, states = ensemble_step_logprobs(models, states, prev)
        if length == max_len:
            best = EOS_ID
        else:
            best = min(range(len(row)), key=lambda w: (-row[w], w))
        logprob += row[best]
        tokens += (best,)
        if best == EOS_ID:
            break
    return Hypothesis(tokens, logprob, states, complete=True)


def rescore_nbest(models: list[Seq2SeqModel], sources, entries: list[NBestEntry],
                  weight: float = 0.5) -> list[RescoredEntry]:
    """Combine SMT scores with ensemble-mean sequence log-probabilities:
    final = (1-weight)*smt + weight*lstm.  Entries are re-ranked within each
    sentence id by final score, stably, best first."""
    _check_ensemble(models)
    tgt_vocab = models[0].tgt_vocab
    rescored = []
    for entry in entries:
        if entry.sentence_id not in sources:
            raise InputError(f"no source sentence for id {entry.sentence_id}")
        pair = SentencePair(list(sources[entry.sentence_id]),
                            tgt_vocab.encode(entry.tokens))
        member_sum = 0.0
        for m in models:
            member_sum += sequence_logprob(m, pair)
        lstm = member_sum / len(models)
        final = (1.0 - weight) * entry.smt_score + weight * lstm
        rescored.append(RescoredEntry(entry, lstm, final))
    rescored.sort(key=lambda r: (r.entry.sentence_id, -r.final_score))
    return rescored


def read_nbest(path) -> list[NBestEntry]:
    """Parse `<id> ||| <tokens> ||| <score>` lines."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split("|||")]
            if len(fields) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 `|||` fields")
            try:
                sid = int(fields[0])
                score = float(fields[2])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            entries.append(NBestEntry(sid, fields[1].split(), score))
    return entries


def write_nbest(path, entries) -> None:
    """Write entries (NBestEntry or RescoredEntry) in the same format."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in entries:
            entry = item.entry if isinstance(item, RescoredEntry) else item
            score = item.final_score if isinstance(item, RescoredEntry) else entry.smt_score
            fh.write(f"{entry.sentence_id} ||| {' '.join(entry.tokens)} ||| "
                     f"{score!r}\n")

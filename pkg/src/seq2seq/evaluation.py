"""Corpus BLEU (pooled modified n-gram precisions, brevity penalty,
case-sensitive, single reference), perplexity, and per-bucket breakdowns by
sentence length and word rarity."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import InputError
from .model import sequence_logprob


@dataclass
class BleuReport:
    bleu: float
    per_n_precisions: list[float]
    brevity_penalty: float
    hyp_length: int
    ref_length: int


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses, references, max_n: int = 4) -> BleuReport:
    """Corpus-level BLEU: clipped n-gram matches pooled over all sentences
    before division, geometric mean over n = 1..max_n, brevity penalty
    exp(1 - ref/hyp) when the hypothesis side is shorter.  Any n with zero
    matches zeroes the score."""
    if len(hypotheses) != len(references):
        raise InputError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references")
    matched = [0] * max_n
    total = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp = list(hyp)
        ref = list(ref)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngram_counts(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            total[n - 1] += sum(hyp_counts.values())
            matched[n - 1] += sum(min(count, ref_counts[gram])
                                  for gram, count in hyp_counts.items())
    precisions = [matched[i] / total[i] if total[i] > 0 else 0.0
                  for i in range(max_n)]
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0
    if min(precisions) > 0.0:
        log_mean = math.fsum(math.log(p) for p in precisions) / max_n
        bleu = bp * math.exp(log_mean) * 100.0
    else:
        bleu = 0.0
    return BleuReport(bleu, precisions, bp, hyp_len, ref_len)


def perplexity(models, corpus) -> float:
    """exp of the mean negative log-probability per predicted token; the
    terminating EOS counts as a token, ensembles average member
    log-probabilities."""
    pairs = list(getattr(corpus, "pairs", corpus))
    if not pairs:
        raise InputError("perplexity over an empty corpus")
    total_logprob = 0.0
    total_tokens = 0
    for pair in pairs:
        member_sum = 0.0
        for model in models:
            member_sum += sequence_logprob(model, pair)
        total_logprob += member_sum / len(models)
        total_tokens += len(pair.target) + 1
    return math.exp(-total_logprob / total_tokens)


def _bucket_bounds(count: int, num_buckets: int):
    for b in range(num_buckets):
        yield (b * count) // num_buckets, ((b + 1) * count) // num_buckets


def _bucketed_bleu(hyps, refs, order, num_buckets: int) -> list[BleuReport]:
    reports = []
    for lo, hi in _bucket_bounds(len(order), num_buckets):
        idx = order[lo:hi]
        reports.append(corpus_bleu([hyps[i] for i in idx], [refs[i] for i in idx]))
    return reports


def bleu_by_length(hyps, refs, sources, num_buckets: int) -> list[BleuReport]:
    """BLEU per bucket of test sentences sorted by source length."""
    if not (len(hyps) == len(refs) == len(sources)):
        raise InputError("hypothesis/reference/source lists must align")
    order = sorted(range(len(sources)), key=lambda i: (len(sources[i]), i))
    return _bucketed_bleu(hyps, refs, order, num_buckets)


def bleu_by_rarity(hyps, refs, sources, vocab_freq_ranks, num_buckets: int,
                   unk_rank: int | None = None) -> list[BleuReport]:
    """BLEU per bucket of test sentences sorted by the mean frequency rank
    of their source words (rank 1 = most frequent; unknown words get
    ``unk_rank``, default = vocabulary size)."""
    if not (len(hyps) == len(refs) == len(sources)):
        raise InputError("hypothesis/reference/source lists must align")
    if unk_rank is None:
        unk_rank = len(vocab_freq_ranks)

    def mean_rank(sent):
        if not sent:
            return float(unk_rank)
        ranks = [vocab_freq_ranks.get(tok, unk_rank) for tok in sent]
        return math.fsum(ranks) / len(ranks)

    order = sorted(range(len(sources)), key=lambda i: (mean_rank(sources[i]), i))
    return _bucketed_bleu(hyps, refs, order, num_buckets)


def format_report(report: BleuReport) -> str:
    precisions = "/".join(f"{100.0 * p:.1f}" for p in report.per_n_precisions)
    ratio = report.hyp_length / report.ref_length if report.ref_length else 0.0
    return (f"BLEU = {report.bleu:.2f}, {precisions} "
            f"(BP={report.brevity_penalty:.3f}, ratio={ratio:.3f}, "
            f"hyp_len={report.hyp_length}, ref_len={report.ref_length})")

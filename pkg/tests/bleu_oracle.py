"""Independent BLEU oracle for the test suite.

A from-first-principles transcription of the classic corpus-BLEU recipe
(pooled clipped n-gram counts, geometric mean of four precisions, brevity
penalty exp(1 - ref/hyp) for short hypotheses, case-sensitive tokens).
Deliberately written without the package's data structures so it can pin
the expected fixture scores.
"""

import math


def _grams(words, n):
    table = {}
    for i in range(len(words) - n + 1):
        key = " ".join(words[i:i + n])
        table[key] = table.get(key, 0) + 1
    return table


def oracle_bleu(hyp_lines, ref_lines):
    """hyp_lines/ref_lines: lists of whitespace-tokenized strings."""
    assert len(hyp_lines) == len(ref_lines)
    match = [0, 0, 0, 0]
    total = [0, 0, 0, 0]
    hyp_words_total = 0
    ref_words_total = 0
    for hyp, ref in zip(hyp_lines, ref_lines):
        hyp_words = hyp.split()
        ref_words = ref.split()
        hyp_words_total += len(hyp_words)
        ref_words_total += len(ref_words)
        for n in (1, 2, 3, 4):
            hyp_grams = _grams(hyp_words, n)
            ref_grams = _grams(ref_words, n)
            total[n - 1] += sum(hyp_grams.values())
            for gram, count in hyp_grams.items():
                match[n - 1] += min(count, ref_grams.get(gram, 0))
    if hyp_words_total == 0:
        return 0.0
    log_sum = 0.0
    for n in (1, 2, 3, 4):
        if total[n - 1] == 0 or match[n - 1] == 0:
            return 0.0
        log_sum += 0.25 * math.log(match[n - 1] / total[n - 1])
    if hyp_words_total < ref_words_total:
        bp = math.exp(1.0 - ref_words_total / hyp_words_total)
    else:
        bp = 1.0
    return 100.0 * bp * math.exp(log_sum)

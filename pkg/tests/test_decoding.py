import itertools
import math

import pytest

from seq2seq.corpus import EOS_ID, SentencePair
from seq2seq.decoding import (
    NBestEntry,
    beam_search,
    ensemble_step_logprobs,
    greedy_decode,
    read_nbest,
    rescore_nbest,
    write_nbest,
)
from seq2seq.errors import ConfigError, EmptySourceError, InputError
from seq2seq.model import ModelConfig, build_model, encode, init_params, sequence_logprob
from seq2seq.training import TrainConfig, train
from test_model import make_vocab


def exhaustive_best(models, source, max_len):
    """Brute-force argmax over every target sequence up to max_len tokens."""
    vocab_size = len(models[0].tgt_vocab)
    best_seq, best_lp = None, -math.inf
    for length in range(max_len + 1):
        for seq in itertools.product(range(vocab_size), repeat=length):
            member_sum = 0.0
            for m in models:
                member_sum += sequence_logprob(m, SentencePair(source, list(seq)))
            lp = member_sum / len(models)
            if lp > best_lp:
                best_seq, best_lp = list(seq), lp
    return best_seq, best_lp


@pytest.fixture(scope="module")
def trained_tiny():
    """V_tgt = 5 (two content tokens): trained enough to be non-degenerate."""
    src_vocab = make_vocab(2)
    tgt_vocab = make_vocab(2, "t")
    pairs = []
    for a in (3, 4):
        for b in (3, 4):
            pairs.append(SentencePair([a, b], [a, b]))
            pairs.append(SentencePair([a], [a]))
            pairs.append(SentencePair([b, a, b], [b, a, b]))
    model = init_params(ModelConfig(1, 6, 4), src_vocab, tgt_vocab, seed=3)
    config = TrainConfig(lr0=0.5, schedule_start_epoch=8.0, total_epochs=6.0,
                         batch_size=4, seed=3, bucket_width=-1)
    train(model, pairs, config)
    return model


class TestEnsembleStep:
    def test_single_model_row_is_log_softmax(self, trained_tiny):
        states = [encode(trained_tiny, [3, 4])]
        row, _ = ensemble_step_logprobs([trained_tiny], states, EOS_ID)
        assert abs(math.fsum(math.exp(v) for v in row) - 1.0) < 1e-12

    def test_identical_members_equal_single(self, trained_tiny):
        single_states = [encode(trained_tiny, [4, 3])]
        row1, _ = ensemble_step_logprobs([trained_tiny], single_states, EOS_ID)
        duo_states = [encode(trained_tiny, [4, 3]) for _ in range(2)]
        row2, _ = ensemble_step_logprobs([trained_tiny] * 2, duo_states, EOS_ID)
        assert row1 == row2  # (x + x) / 2 is exact

    def test_combination_is_arithmetic_mean_of_member_rows(self, trained_tiny):
        other = init_params(trained_tiny.config, trained_tiny.src_vocab,
                            trained_tiny.tgt_vocab, seed=99)
        source = [3, 4, 4]
        rows = []
        for m in (trained_tiny, other):
            row, _ = ensemble_step_logprobs([m], [encode(m, source)], EOS_ID)
            rows.append(row)
        combined, _ = ensemble_step_logprobs(
            [trained_tiny, other],
            [encode(trained_tiny, source), encode(other, source)], EOS_ID)
        for w, value in enumerate(combined):
            assert abs(value - (rows[0][w] + rows[1][w]) / 2.0) < 1e-15

    def test_argmax_matches_product_of_probabilities(self, trained_tiny):
        other = init_params(trained_tiny.config, trained_tiny.src_vocab,
                            trained_tiny.tgt_vocab, seed=123)
        source = [4, 4]
        combined, _ = ensemble_step_logprobs(
            [trained_tiny, other],
            [encode(trained_tiny, source), encode(other, source)], EOS_ID)
        rows = []
        for m in (trained_tiny, other):
            row, _ = ensemble_step_logprobs([m], [encode(m, source)], EOS_ID)
            rows.append(row)
        product_log = [a + b for a, b in zip(rows[0], rows[1])]
        assert combined.index(max(combined)) == product_log.index(max(product_log))

    def test_empty_ensemble_rejected(self):
        with pytest.raises(ConfigError):
            ensemble_step_logprobs([], [], EOS_ID)

    def test_vocab_mismatch_rejected(self, trained_tiny):
        other = init_params(ModelConfig(1, 6, 4), make_vocab(3), make_vocab(3, "t"),
                            seed=1)
        with pytest.raises(ConfigError):
            ensemble_step_logprobs([trained_tiny, other], [None, None], EOS_ID)


class TestBeamSearch:
    def test_eos_biased_model_stops_immediately(self):
        model = build_model(ModelConfig(1, 2, 2), make_vocab(2), make_vocab(2, "t"))
        model.output_b[0, EOS_ID] = 50.0
        hyps = beam_search([model], [3], beam_size=3)
        assert hyps[0].tokens == (EOS_ID,)
        assert abs(hyps[0].logprob) < 1e-9

    def test_oracle_equivalence_with_wide_beam(self, trained_tiny):
        for source in ([3, 4], [4], [4, 3, 3]):
            want_seq, want_lp = exhaustive_best([trained_tiny], source, max_len=4)
            hyps = beam_search([trained_tiny], source, beam_size=625, max_len=4)
            got = hyps[0]
            assert list(got.tokens[:-1]) == want_seq
            assert got.tokens[-1] == EOS_ID
            assert abs(got.logprob - want_lp) < 1e-9

    def test_beam_one_equals_stepwise_greedy(self, trained_tiny):
        for source in ([3, 4], [4, 4, 3], [3]):
            beam = beam_search([trained_tiny], source, beam_size=1, max_len=6)
            greedy = greedy_decode([trained_tiny], source, max_len=6)
            assert beam[0].tokens == greedy.tokens
            assert abs(beam[0].logprob - greedy.logprob) < 1e-12

    def test_logprob_reverifies_against_sequence_logprob(self, trained_tiny):
        hyps = beam_search([trained_tiny], [3, 4, 3], beam_size=4)
        assert hyps
        for hyp in hyps:
            assert hyp.complete and hyp.tokens[-1] == EOS_ID
            pair = SentencePair([3, 4, 3], list(hyp.tokens[:-1]))
            assert abs(hyp.logprob - sequence_logprob(trained_tiny, pair)) < 1e-9

    def test_results_sorted_descending(self, trained_tiny):
        hyps = beam_search([trained_tiny], [4, 3], beam_size=8)
        scores = [h.logprob for h in hyps]
        assert scores == sorted(scores, reverse=True)

    def test_max_len_caps_content_length(self, trained_tiny):
        hyps = beam_search([trained_tiny], [3, 4, 3, 4], beam_size=4, max_len=2)
        for hyp in hyps:
            assert len(hyp.tokens) <= 3  # 2 content tokens + EOS

    def test_deterministic(self, trained_tiny):
        a = beam_search([trained_tiny], [3, 4], beam_size=5)
        b = beam_search([trained_tiny], [3, 4], beam_size=5)
        assert [(h.tokens, h.logprob) for h in a] == [(h.tokens, h.logprob) for h in b]

    def test_empty_source_rejected(self, trained_tiny):
        with pytest.raises(EmptySourceError):
            beam_search([trained_tiny], [], beam_size=2)

    def test_no_models_rejected(self):
        with pytest.raises(ConfigError):
            beam_search([], [3], beam_size=2)

    def test_ensemble_of_identical_checkpoints_matches_single(self, trained_tiny):
        single = beam_search([trained_tiny], [4, 3, 4], beam_size=3)
        for k in (2, 5):
            multi = beam_search([trained_tiny] * k, [4, 3, 4], beam_size=3)
            assert [h.tokens for h in multi] == [h.tokens for h in single]
            for a, b in zip(multi, single):
                assert abs(a.logprob - b.logprob) < 1e-12


class TestRescoring:
    def _entries(self):
        return [
            NBestEntry(0, ["t0", "t1"], -2.0),
            NBestEntry(0, ["t1"], -3.0),
            NBestEntry(0, ["t0"], -4.5),
            NBestEntry(1, ["t1", "t1"], -1.0),
            NBestEntry(1, ["t0", "t0"], -1.5),
        ]

    def test_weight_zero_preserves_smt_order(self, trained_tiny):
        sources = {0: [3, 4], 1: [4]}
        out = rescore_nbest([trained_tiny], sources, self._entries(), weight=0.0)
        assert [(r.entry.sentence_id, r.entry.tokens) for r in out] == [
            (0, ["t0", "t1"]), (0, ["t1"]), (0, ["t0"]),
            (1, ["t1", "t1"]), (1, ["t0", "t0"])]
        for r in out:
            assert r.final_score == r.entry.smt_score

    def test_even_average_is_midpoint(self, trained_tiny, monkeypatch):
        monkeypatch.setattr("seq2seq.decoding.sequence_logprob",
                            lambda model, pair: -20.0)
        sources = {0: [3, 4]}
        out = rescore_nbest([trained_tiny], sources,
                            [NBestEntry(0, ["t0"], -10.0)], weight=0.5)
        assert out[0].final_score == -15.0
        assert out[0].lstm_logprob == -20.0

    def test_final_score_formula(self, trained_tiny):
        sources = {0: [3, 4], 1: [4]}
        for weight in (0.25, 0.5, 0.9):
            out = rescore_nbest([trained_tiny], sources, self._entries(), weight)
            for r in out:
                want = (1 - weight) * r.entry.smt_score + weight * r.lstm_logprob
                assert abs(r.final_score - want) < 1e-12

    def test_equal_lstm_scores_keep_smt_order(self, trained_tiny, monkeypatch):
        monkeypatch.setattr("seq2seq.decoding.sequence_logprob",
                            lambda model, pair: -7.0)
        sources = {0: [3, 4], 1: [4]}
        out = rescore_nbest([trained_tiny], sources, self._entries(), weight=0.5)
        assert [(r.entry.sentence_id, r.entry.tokens) for r in out] == [
            (0, ["t0", "t1"]), (0, ["t1"]), (0, ["t0"]),
            (1, ["t1", "t1"]), (1, ["t0", "t0"])]

    def test_missing_source_rejected(self, trained_tiny):
        with pytest.raises(InputError):
            rescore_nbest([trained_tiny], {0: [3]},
                          [NBestEntry(7, ["t0"], -1.0)])

    def test_ensemble_mean_logprob(self, trained_tiny):
        other = init_params(trained_tiny.config, trained_tiny.src_vocab,
                            trained_tiny.tgt_vocab, seed=55)
        sources = {0: [3, 4]}
        entry = NBestEntry(0, ["t0"], -1.0)
        solo = [rescore_nbest([m], sources, [entry])[0].lstm_logprob
                for m in (trained_tiny, other)]
        duo = rescore_nbest([trained_tiny, other], sources, [entry])[0].lstm_logprob
        assert abs(duo - (solo[0] + solo[1]) / 2.0) < 1e-12


class TestNBestFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cands.nbest"
        entries = [NBestEntry(0, ["a", "b"], -1.25),
                   NBestEntry(0, ["c"], -0.3333333333333333),
                   NBestEntry(2, ["d", "e", "f"], -7.0)]
        write_nbest(path, entries)
        back = read_nbest(path)
        assert back == entries

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.nbest"
        path.write_text("0 ||| only two fields\n", encoding="utf-8")
        with pytest.raises(InputError, match="bad.nbest:1"):
            read_nbest(path)

    def test_non_numeric_score_rejected(self, tmp_path):
        path = tmp_path / "bad2.nbest"
        path.write_text("0 ||| a b ||| not-a-number\n", encoding="utf-8")
        with pytest.raises(InputError):
            read_nbest(path)

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seq2seq.corpus import SentencePair
from seq2seq.errors import InputError, NumericalDivergenceError
from seq2seq.model import named_parameters
from seq2seq.numerics import Matrix2D, global_norm
from seq2seq.training import (
    INFINITE_WIDTH,
    TrainConfig,
    bucket_batches,
    clip_by_global_norm,
    lr_at,
    sgd_step,
    train,
)
from util import rand_matrix

from test_model import tiny_model


CFG = TrainConfig()


class TestLearningRateSchedule:
    def test_flat_phase(self):
        assert lr_at(CFG, 0.0) == 0.7
        assert lr_at(CFG, 3.0) == 0.7
        assert lr_at(CFG, 4.999) == 0.7

    def test_first_halving_at_boundary(self):
        assert lr_at(CFG, 5.0) == 0.35
        assert lr_at(CFG, 5.49) == 0.35
        assert lr_at(CFG, 5.5) == 0.175

    def test_late_schedule_hand_derived(self):
        # floor((7.49-5)/0.5)+1 = 5 halvings: 0.7 / 32
        assert lr_at(CFG, 7.49) == 0.7 / 32
        assert lr_at(CFG, 7.49) == 0.021875

    @given(st.floats(0, 20), st.floats(0, 20))
    @settings(max_examples=50)
    def test_non_increasing(self, a, b):
        lo, hi = sorted((a, b))
        assert lr_at(CFG, lo) >= lr_at(CFG, hi)

    def test_negative_progress_rejected(self):
        with pytest.raises(InputError):
            lr_at(CFG, -0.1)


class TestClipping:
    def test_norm_ten_halves_entries(self):
        mats = [Matrix2D.from_rows([[6.0]]), Matrix2D.from_rows([[8.0]])]
        clipped = clip_by_global_norm(mats, 5.0)
        assert abs(global_norm(clipped) - 5.0) < 1e-12
        assert clipped[0][0, 0] == 3.0
        assert clipped[1][0, 0] == 4.0

    def test_below_threshold_untouched_bitwise(self):
        mats = [rand_matrix(2, 2, 1, -0.5, 0.5)]
        before = mats[0].data.tobytes()
        out = clip_by_global_norm(mats, 5.0)
        assert out[0] is mats[0]
        assert out[0].data.tobytes() == before

    def test_zero_gradients_unchanged(self):
        mats = [Matrix2D.zeros(3, 3)]
        out = clip_by_global_norm(mats, 5.0)
        assert all(v == 0.0 for v in out[0].data)

    @given(st.integers(0, 500))
    @settings(max_examples=30)
    def test_idempotent_and_bounded(self, seed):
        mats = [rand_matrix(3, 4, seed, -3, 3), rand_matrix(2, 2, seed + 1, -3, 3)]
        clip_by_global_norm(mats, 5.0)
        norm_once = global_norm(mats)
        assert norm_once <= 5.0 + 1e-9
        once = [list(m.data) for m in mats]
        clip_by_global_norm(mats, 5.0)
        # the second clip may rescale by 1 +/- one ulp of norm error, no more
        for before, mat in zip(once, mats):
            for u, v in zip(before, mat.data):
                assert abs(u - v) <= 1e-14 * abs(u)


class TestSgdStep:
    def test_zero_lr_is_identity(self):
        p = rand_matrix(2, 2, 3)
        before = p.data.tobytes()
        sgd_step([p], [rand_matrix(2, 2, 4)], 0.0)
        assert p.data.tobytes() == before

    def test_basic_arithmetic(self):
        p = Matrix2D.from_rows([[1.0]])
        g = Matrix2D.from_rows([[0.5]])
        sgd_step([p], [g], 0.7)
        assert abs(p[0, 0] - 0.65) < 1e-15

    def test_monotone_descent_on_quadratic(self):
        # loss(theta) = 0.5 * theta^2, gradient = theta; closed form:
        # theta_k = theta_0 * (1 - lr)^k, so loss decreases monotonically
        theta = Matrix2D.from_rows([[2.0]])
        lr = 0.1
        losses = []
        for _ in range(100):
            losses.append(0.5 * theta[0, 0] ** 2)
            sgd_step([theta], [Matrix2D.from_rows([[theta[0, 0]]])], lr)
        assert all(b < a for a, b in zip(losses, losses[1:]))
        assert abs(theta[0, 0] - 2.0 * (1 - lr) ** 100) < 1e-12


def _pairs_with_lengths(lengths):
    return [SentencePair([3] * n, [3] * n) for n in lengths]


class TestBucketing:
    def test_uniform_lengths_full_batches(self):
        pairs = _pairs_with_lengths([7] * 50)
        batches = bucket_batches(pairs, 8, 4, seed=1)
        sizes = sorted(len(b) for b in batches)
        assert sizes == [2, 8, 8, 8, 8, 8, 8]

    def test_infinite_width_plain_shuffled(self):
        pairs = _pairs_with_lengths(list(range(2, 42)))
        batches = bucket_batches(pairs, 8, INFINITE_WIDTH, seed=2)
        assert sorted(len(b) for b in batches) == [8, 8, 8, 8, 8]
        flat = [len(p.source) for b in batches for p in b]
        assert sorted(flat) == list(range(2, 42))

    def test_spread_bound_holds_for_every_batch(self):
        import random

        rng = random.Random(9)
        pairs = _pairs_with_lengths([rng.randint(2, 40) for _ in range(300)])
        for width in (0, 2, 4):
            batches = bucket_batches(pairs, 16, width, seed=3)
            for batch in batches:
                lengths = [len(p.source) for p in batch]
                assert max(lengths) - min(lengths) <= width

    def test_every_pair_exactly_once(self):
        pairs = _pairs_with_lengths([i % 11 + 1 for i in range(97)])
        batches = bucket_batches(pairs, 10, 3, seed=4)
        seen = [id(p) for b in batches for p in b]
        assert sorted(seen) == sorted(id(p) for p in pairs)

    def test_seed_changes_order_not_content(self):
        pairs = _pairs_with_lengths([i % 5 + 1 for i in range(64)])
        a = bucket_batches(pairs, 8, 2, seed=1)
        b = bucket_batches(pairs, 8, 2, seed=2)
        assert [len(x) for x in a] == [len(x) for x in b] or True
        flat = lambda bs: sorted(id(p) for batch in bs for p in batch)
        assert flat(a) == flat(b)

    def test_empty_corpus_rejected(self):
        with pytest.raises(InputError):
            bucket_batches([], 8, 2, seed=0)


def _toy_corpus(n=12):
    # short copy-style pairs over the tiny test vocabulary
    pairs = []
    for i in range(n):
        seq = [3 + (i + j) % 3 for j in range(1 + i % 3)]
        pairs.append(SentencePair(seq, seq))
    return pairs


def small_train_config(**kw):
    defaults = dict(lr0=0.5, schedule_start_epoch=2.0, halving_period=0.5,
                    total_epochs=1.0, batch_size=4, clip_threshold=5.0,
                    init_range=0.08, seed=7, bucket_width=INFINITE_WIDTH)
    defaults.update(kw)
    return TrainConfig(**defaults)


class TestTrainLoop:
    def test_zero_epochs_leaves_model_unchanged(self):
        model = tiny_model(seed=21)
        before = [m.data.tobytes() for _, m in named_parameters(model)]
        result = train(model, _toy_corpus(), small_train_config(total_epochs=0.0))
        after = [m.data.tobytes() for _, m in named_parameters(result.model)]
        assert before == after
        assert result.metric_log == []

    def test_identical_seeds_identical_logs(self):
        logs = []
        for _ in range(2):
            model = tiny_model(seed=22)
            result = train(model, _toy_corpus(), small_train_config(),
                           heldout=_toy_corpus(4))
            logs.append(result.metric_log)
        assert logs[0] == logs[1]
        assert len(logs[0]) == 2  # half-epoch cadence over one epoch

    def test_metric_record_format(self):
        model = tiny_model(seed=23)
        result = train(model, _toy_corpus(), small_train_config(),
                       heldout=_toy_corpus(4))
        for record in result.metric_log:
            fields = record.split()
            assert [f.split("=")[0] for f in fields] == [
                "epoch", "lr", "train_nll", "heldout_ppl"]
            float(fields[0].split("=")[1])
            float(fields[2].split("=")[1])

    def test_loss_decreases_on_toy_data(self):
        model = tiny_model(seed=24)
        config = small_train_config(total_epochs=6.0, lr0=0.7,
                                    schedule_start_epoch=4.0)
        result = train(model, _toy_corpus(), config)
        first = float(result.metric_log[0].split()[2].split("=")[1])
        last = float(result.metric_log[-1].split()[2].split("=")[1])
        assert last < first

    def test_divergence_aborts_with_batch_index(self):
        # a poisoned weight makes the very first loss NaN
        model = tiny_model(seed=25)
        model.output_w.data[0] = math.nan
        with pytest.raises(NumericalDivergenceError, match=r"step 0"):
            train(model, _toy_corpus(), small_train_config())

    def test_checkpoints_written_each_half_epoch(self, tmp_path):
        model = tiny_model(seed=26)
        # 16 pairs / batch 4 = 4 steps per epoch, so the half-epoch boundary
        # lands exactly on a step
        train(model, _toy_corpus(16), small_train_config(),
              checkpoint_dir=str(tmp_path))
        names = sorted(p.name for p in tmp_path.iterdir())
        assert "final.s2s" in names
        assert any(n.startswith("checkpoint-0.5") for n in names)
        assert any(n.startswith("checkpoint-1.0") for n in names)

"""SGD training loop with the fixed recipe: constant learning rate that
halves every half epoch after a warm phase, gradient-norm clipping on the
batch-mean gradient, length-bucketed minibatches and half-epoch
checkpoints/metrics.

The per-batch gradient is the mean over the batch (short final batches
divide by their actual size), the clip threshold applies to the global
Euclidean norm across all parameter tensors, and the update is plain SGD
without momentum.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import InputError, NumericalDivergenceError
from .model import Seq2SeqModel, batch_loss_and_grads, parameters
from .numerics import Matrix2D, axpy_inplace, global_norm, scale_inplace

INFINITE_WIDTH = -1  # bucket_width sentinel: no length restriction


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 0.7
    schedule_start_epoch: float = 5.0
    halving_period: float = 0.5
    total_epochs: float = 7.5
    batch_size: int = 128
    clip_threshold: float = 5.0
    init_range: float = 0.08
    seed: int = 0
    bucket_width: int = 4

    def validate(self) -> None:
        if min(self.lr0, self.schedule_start_epoch, self.halving_period,
               self.batch_size, self.clip_threshold, self.init_range) <= 0:
            raise InputError(f"non-positive training setting in {self}")
        if self.total_epochs < 0:
            raise InputError("total_epochs must be >= 0")


def lr_at(config: TrainConfig, epoch_progress: float) -> float:
    """Learning rate at a fractional epoch: lr0 until the schedule starts,
    then halved once per half-epoch period (first halving exactly at the
    start boundary)."""
    if epoch_progress < 0:
        raise InputError("epoch_progress must be >= 0")
    if epoch_progress < config.schedule_start_epoch:
        return config.lr0
    periods = math.floor((epoch_progress - config.schedule_start_epoch)
                         / config.halving_period) + 1
    return config.lr0 * 2.0 ** (-periods)


def clip_by_global_norm(grads: list[Matrix2D], threshold: float) -> list[Matrix2D]:
    """Rescale all gradients to global norm == threshold when it is
    exceeded; otherwise return them untouched (same objects)."""
    norm = global_norm(grads)
    if norm <= threshold:
        return grads
    factor = threshold / norm
    for g in grads:
        scale_inplace(g, factor)
    return grads


def sgd_step(params: list[Matrix2D], grads: list[Matrix2D], lr: float) -> None:
    """theta <- theta - lr * g, in place, canonical parameter order."""
    if len(params) != len(grads):
        raise InputError(f"{len(params)} params vs {len(grads)} grads")
    for p, g in zip(params, grads):
        axpy_inplace(-lr, g, p)


def bucket_batches(pairs, batch_size: int, bucket_width: int, seed: int):
    """Shuffled minibatches whose source lengths differ by at most
    ``bucket_width`` within a batch; every pair appears exactly once.

    ``bucket_width=INFINITE_WIDTH`` disables the length restriction, giving
    plain shuffled batching.
    """
    if not pairs:
        raise InputError("cannot batch an empty corpus")
    rng = random.Random(seed)
    order = sorted(range(len(pairs)), key=lambda i: (len(pairs[i].source), i))
    buckets = []
    current = [order[0]]
    base_len = len(pairs[order[0]].source)
    for idx in order[1:]:
        length = len(pairs[idx].source)
        if bucket_width != INFINITE_WIDTH and length - base_len > bucket_width:
            buckets.append(current)
            current = [idx]
            base_len = length
        else:
            current.append(idx)
    buckets.append(current)

    batches = []
    for bucket in buckets:
        rng.shuffle(bucket)
        for start in range(0, len(bucket), batch_size):
            batches.append([pairs[i] for i in bucket[start:start + batch_size]])
    rng.shuffle(batches)
    return batches


@dataclass
class TrainProgress:
    epoch: float = 0.0
    step: int = 0
    lr: float = 0.0


@dataclass
class TrainResult:
    model: Seq2SeqModel
    metric_log: list[str] = field(default_factory=list)
    progress: TrainProgress = field(default_factory=TrainProgress)


def _format_record(epoch, lr, train_nll, heldout_ppl) -> str:
    ppl = "nan" if heldout_ppl is None else f"{heldout_ppl:.10g}"
    return (f"epoch={epoch:.4f} lr={lr:.10g} train_nll={train_nll:.10g} "
            f"heldout_ppl={ppl}")


def train(model: Seq2SeqModel, corpus, config: TrainConfig, heldout=None,
          callbacks=None, checkpoint_dir=None) -> TrainResult:
    """Run the full recipe over ``corpus`` (a ParallelCorpus or pair list).

    Emits one metric record per half epoch (`epoch= lr= train_nll=
    heldout_ppl=`), writes a checkpoint at the same cadence when
    ``checkpoint_dir`` is set, and aborts with NumericalDivergenceError on a
    non-finite loss.  Runs ``config.total_epochs`` epochs, fractional counts
    included; two runs with identical seeds produce identical logs.

    ``callbacks(record)`` runs once per interval; a truthy return value
    stops training early (after the interval's checkpoint is written).
    """
    from .checkpoint import save_checkpoint  # local import, cycle-free
    from .evaluation import perplexity

    config.validate()
    pairs = list(getattr(corpus, "pairs", corpus))
    heldout_pairs = list(getattr(heldout, "pairs", heldout)) if heldout is not None else None
    if not pairs:
        raise InputError("training corpus is empty")

    rng = random.Random(config.seed)
    params = parameters(model)
    result = TrainResult(model)

    probe = bucket_batches(pairs, config.batch_size, config.bucket_width,
                           seed=rng.randrange(2 ** 30))
    steps_per_epoch = len(probe)
    total_steps = round(config.total_epochs * steps_per_epoch)
    interval_steps = max(1, round(config.halving_period * steps_per_epoch))

    def emit(progress_epochs, lr, interval_losses):
        nll = (math.fsum(interval_losses) / len(interval_losses)
               if interval_losses else float("nan"))
        ppl = (perplexity([model], heldout_pairs)
               if heldout_pairs else None)
        record = _format_record(progress_epochs, lr, nll, ppl)
        result.metric_log.append(record)
        stop = callbacks(record) if callbacks is not None else None
        if checkpoint_dir is not None:
            save_checkpoint(model, result.progress,
                            f"{checkpoint_dir}/checkpoint-{progress_epochs:.4f}.s2s")
        return bool(stop)

    step = 0
    batches = probe
    interval_losses: list[float] = []
    lr = lr_at(config, 0.0)
    while step < total_steps:
        if step > 0 and step % steps_per_epoch == 0:
            batches = bucket_batches(pairs, config.batch_size, config.bucket_width,
                                     seed=rng.randrange(2 ** 30))
        batch = batches[step % steps_per_epoch]
        progress = step / steps_per_epoch
        lr = lr_at(config, progress)
        loss, grads = batch_loss_and_grads(model, batch)
        if not math.isfinite(loss):
            raise NumericalDivergenceError(
                f"non-finite loss at step {step} (epoch {progress:.3f})")
        grad_list = parameters(grads)
        clip_by_global_norm(grad_list, config.clip_threshold)
        sgd_step(params, grad_list, lr)
        interval_losses.append(loss)
        step += 1
        result.progress = TrainProgress(step / steps_per_epoch, step, lr)
        if step % interval_steps == 0 or step == total_steps:
            stop = emit(step / steps_per_epoch, lr, interval_losses)
            interval_losses = []
            if stop:
                break

    if checkpoint_dir is not None:
        save_checkpoint(model, result.progress, f"{checkpoint_dir}/final.s2s")
    return result

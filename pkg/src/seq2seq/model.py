"""Encoder-decoder model: embed, encode the (reversed) source into a fixed
state, decode the target autoregressively; loss and exact gradients.

The source sentence is fed through the encoder stack (reversed by default;
the whole point of the reversal is to shorten the input-output dependency
distance).  The final (h, c) of every encoder layer initializes the same
decoder layer.  The decoder is teacher-forced: its first input is EOS, then
the gold target tokens; it predicts the target shifted by one plus a final
EOS, so every sentence contributes |target| + 1 softmax terms.

Encoder and decoder are fully disjoint parameter sets, with separate
embedding tables and a linear + log-softmax output projection.
"""

from __future__ import annotations

import random
from array import array
from dataclasses import dataclass, replace

from .backend import kernels
from .corpus import EOS_ID, PAD_ID, SentencePair, Vocabulary
from .errors import ConfigError, EmptySourceError, InputError
from .numerics import Matrix2D, log_softmax_rows, matmul_nt, matmul_tn
from .recurrent import (
    CellState,
    LstmLayerParams,
    stack_backward,
    stack_forward,
    zeros_like_lstm_params,
)


@dataclass(frozen=True)
class ModelConfig:
    num_layers: int
    hidden_size: int
    embed_size: int
    peepholes: bool = True
    reverse_source: bool = True
    append_source_eos: bool = False
    precision: str = "double"


@dataclass
class Seq2SeqModel:
    config: ModelConfig
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    src_embeddings: Matrix2D
    tgt_embeddings: Matrix2D
    encoder_layers: list[LstmLayerParams]
    decoder_layers: list[LstmLayerParams]
    output_w: Matrix2D
    output_b: Matrix2D


def _layer_param_names(layer: LstmLayerParams) -> list[str]:
    names = ["w_gates", "r_gates", "b_gates"]
    if layer.peepholes:
        names += ["peep_i", "peep_f", "peep_o"]
    return names


def named_parameters(model: Seq2SeqModel) -> list[tuple[str, Matrix2D]]:
    """All parameter tensors in the one canonical order used for init,
    clipping, SGD updates and checkpoint serialization."""
    out = [("src_embeddings", model.src_embeddings)]
    for side, layers in (("encoder", model.encoder_layers),
                         ("decoder", model.decoder_layers)):
        if side == "decoder":
            out.append(("tgt_embeddings", model.tgt_embeddings))
        for depth, layer in enumerate(layers):
            for attr in _layer_param_names(layer):
                out.append((f"{side}.{depth}.{attr}", getattr(layer, attr)))
    out.append(("output_w", model.output_w))
    out.append(("output_b", model.output_b))
    return out


def parameters(model: Seq2SeqModel) -> list[Matrix2D]:
    return [m for _, m in named_parameters(model)]


def zeros_like_model(model: Seq2SeqModel) -> Seq2SeqModel:
    """A parameter-shaped container of zeros (used to accumulate gradients)."""
    return Seq2SeqModel(
        model.config, model.src_vocab, model.tgt_vocab,
        model.src_embeddings.zeros_like(), model.tgt_embeddings.zeros_like(),
        [zeros_like_lstm_params(layer) for layer in model.encoder_layers],
        [zeros_like_lstm_params(layer) for layer in model.decoder_layers],
        model.output_w.zeros_like(), model.output_b.zeros_like(),
    )


def _empty_layer(hidden: int, inputs: int, peepholes: bool,
                 precision: str) -> LstmLayerParams:
    peep = (lambda: Matrix2D.zeros(1, hidden, precision)) if peepholes else (lambda: None)
    return LstmLayerParams(
        Matrix2D.zeros(4 * hidden, inputs, precision),
        Matrix2D.zeros(4 * hidden, hidden, precision),
        Matrix2D.zeros(1, 4 * hidden, precision),
        peep(), peep(), peep(),
    )


def build_model(config: ModelConfig, src_vocab: Vocabulary,
                tgt_vocab: Vocabulary) -> Seq2SeqModel:
    """Allocate an all-zero model with the configured shapes."""
    if config.num_layers < 1 or config.hidden_size < 1 or config.embed_size < 1:
        raise ConfigError(f"invalid model dimensions: {config}")
    if config.precision not in ("double", "single"):
        raise ConfigError(f"unknown precision {config.precision!r}")
    mk = config
    layers = lambda: [
        _empty_layer(mk.hidden_size,
                     mk.embed_size if depth == 0 else mk.hidden_size,
                     mk.peepholes, mk.precision)
        for depth in range(mk.num_layers)
    ]
    return Seq2SeqModel(
        config, src_vocab, tgt_vocab,
        Matrix2D.zeros(len(src_vocab), mk.embed_size, mk.precision),
        Matrix2D.zeros(len(tgt_vocab), mk.embed_size, mk.precision),
        layers(), layers(),
        Matrix2D.zeros(len(tgt_vocab), mk.hidden_size, mk.precision),
        Matrix2D.zeros(1, len(tgt_vocab), mk.precision),
    )


def init_params(config: ModelConfig, src_vocab: Vocabulary, tgt_vocab: Vocabulary,
                seed: int, init_range: float = 0.08) -> Seq2SeqModel:
    """Every parameter i.i.d. uniform on [-init_range, init_range], drawn in
    canonical parameter order from one seeded generator."""
    model = build_model(config, src_vocab, tgt_vocab)
    rng = random.Random(seed)
    for _, mat in named_parameters(model):
        data = mat.data
        for idx in range(len(data)):
            data[idx] = rng.uniform(-init_range, init_range)
    return model


def reverse_source(tokens):
    """Reversed copy; content untouched."""
    return list(tokens)[::-1]


def encoder_input_ids(model: Seq2SeqModel, source: list[int],
                      reverse: bool | None = None) -> list[int]:
    """Token ids actually fed to the encoder (reversal + optional EOS)."""
    if reverse is None:
        reverse = model.config.reverse_source
    ids = reverse_source(source) if reverse else list(source)
    if model.config.append_source_eos:
        ids.append(EOS_ID)
    return ids


def _gather(table: Matrix2D, ids: list[int]) -> Matrix2D:
    out = Matrix2D.zeros(len(ids), table.cols, table.precision)
    kernels.gather_rows(table.cols, table.data, array("q", ids), out.data)
    return out


def encode(model: Seq2SeqModel, source: list[int],
           reverse: bool | None = None) -> list[CellState]:
    """Encode one sentence; returns the final (h, c) of every encoder layer,
    which is used verbatim as the decoder's initial state."""
    if not source:
        raise EmptySourceError("cannot encode an empty source sentence")
    ids = encoder_input_ids(model, source, reverse)
    inputs = [_gather(model.src_embeddings, [tok]) for tok in ids]
    _, finals, _ = stack_forward(inputs, model.encoder_layers)
    return finals


def _output_logprobs(model: Seq2SeqModel, hidden: Matrix2D) -> Matrix2D:
    logits = matmul_nt(hidden, model.output_w)
    kernels.add_bias_rows(logits.rows, logits.cols, logits.data,
                          model.output_b.data)
    return log_softmax_rows(logits)


def sequence_logprob(model: Seq2SeqModel, pair: SentencePair) -> float:
    """log p(target | source): teacher-forced sum over |target| + 1 steps,
    EOS included; the decoder's first input is EOS itself."""
    finals = encode(model, pair.source)
    dec_ids = [EOS_ID] + list(pair.target)
    labels = list(pair.target) + [EOS_ID]
    inputs = [_gather(model.tgt_embeddings, [tok]) for tok in dec_ids]
    outputs, _, _ = stack_forward(inputs, model.decoder_layers, init=finals)
    total = 0.0
    for step, label in enumerate(labels):
        logp = _output_logprobs(model, outputs[step])
        total += logp[0, label]
    return total


def _pad_batch(token_rows: list[list[int]]):
    """Right-pad with PAD; per-step ids and 0/1 masks, batch-major."""
    width = max(len(row) for row in token_rows)
    steps_ids, masks = [], []
    for t in range(width):
        steps_ids.append([row[t] if t < len(row) else PAD_ID for row in token_rows])
        masks.append(array("d", [1.0 if t < len(row) else 0.0 for row in token_rows]))
    return steps_ids, masks


def batch_loss_and_grads(model: Seq2SeqModel, batch: list[SentencePair]):
    """Mean negative log-likelihood over the batch and gradients for every
    parameter.  Padded positions contribute exactly zero loss and gradient.
    """
    if not batch:
        raise InputError("batch must be non-empty")
    for pair in batch:
        if not pair.source:
            raise EmptySourceError("cannot encode an empty source sentence")
    bsz = len(batch)
    inv_bsz = 1.0 / bsz
    precision = model.config.precision
    vocab_size = len(model.tgt_vocab)

    enc_rows = [encoder_input_ids(model, pair.source) for pair in batch]
    enc_ids, enc_masks = _pad_batch(enc_rows)
    enc_inputs = [_gather(model.src_embeddings, ids) for ids in enc_ids]
    _, enc_finals, enc_caches = stack_forward(enc_inputs, model.encoder_layers,
                                              masks=enc_masks)

    dec_rows = [[EOS_ID] + list(pair.target) for pair in batch]
    label_rows = [list(pair.target) + [EOS_ID] for pair in batch]
    dec_ids, loss_masks = _pad_batch(label_rows)  # mask: real prediction steps
    dec_in_ids, _ = _pad_batch(dec_rows)
    dec_inputs = [_gather(model.tgt_embeddings, ids) for ids in dec_in_ids]
    dec_outputs, _, dec_caches = stack_forward(dec_inputs, model.decoder_layers,
                                               init=enc_finals)

    grads = zeros_like_model(model)
    loss = 0.0
    d_outputs = []
    zero_row_block = None
    for step, hidden in enumerate(dec_outputs):
        labels = dec_ids[step]
        mask = loss_masks[step]
        logp = _output_logprobs(model, hidden)
        for b in range(bsz):
            if mask[b] != 0.0:
                loss -= logp[b, labels[b]]
        # d/dlogits of -mean logp: (softmax - onehot) / batch, masked rows zero
        d_logits = logp.zeros_like()
        kernels.exp_(bsz * vocab_size, logp.data, d_logits.data)
        kernels.scale(bsz * vocab_size, d_logits.data, inv_bsz, d_logits.data)
        for b in range(bsz):
            d_logits.data[b * vocab_size + labels[b]] -= inv_bsz
        if zero_row_block is None:
            zero_row_block = d_logits.zeros_like()
        masked = d_logits.zeros_like()
        kernels.select_rows(bsz, vocab_size, mask, d_logits.data,
                            zero_row_block.data, masked.data)
        d_logits = masked

        d_hidden = Matrix2D.zeros(bsz, model.config.hidden_size, precision)
        kernels.matmul_nn(bsz, model.config.hidden_size, vocab_size,
                          d_logits.data, model.output_w.data, d_hidden.data)
        matmul_tn(d_logits, hidden, out=grads.output_w, accumulate=True)
        kernels.col_sums(bsz, vocab_size, d_logits.data, grads.output_b.data, True)
        d_outputs.append(d_hidden)
    loss *= inv_bsz

    _, d_dec_inputs, d_init = stack_backward(model.decoder_layers, dec_caches,
                                             d_outputs=d_outputs,
                                             grads=grads.decoder_layers)
    for step, d_x in enumerate(d_dec_inputs):
        kernels.scatter_add_rows(model.config.embed_size,
                                 grads.tgt_embeddings.data,
                                 array("q", dec_in_ids[step]), d_x.data)

    _, d_enc_inputs, _ = stack_backward(model.encoder_layers, enc_caches,
                                        d_finals=d_init,
                                        grads=grads.encoder_layers,
                                        masks=enc_masks)
    for step, d_x in enumerate(d_enc_inputs):
        kernels.scatter_add_rows(model.config.embed_size,
                                 grads.src_embeddings.data,
                                 array("q", enc_ids[step]), d_x.data)
    return loss, grads


def clone_config(config: ModelConfig, **overrides) -> ModelConfig:
    return replace(config, **overrides)

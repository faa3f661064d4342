"""LSTM / vanilla-RNN cells and deep-stack propagation with exact backward.

Cells are batched: a "vector" argument is a ``Matrix2D`` with one row per
batch element.  The LSTM follows the peephole formulation: input/forget
gates peek at the previous cell state, the output gate at the new one;
a flag drops the peepholes entirely.  Gate blocks are ordered
input, forget, candidate, output everywhere (weights, biases, gradients,
serialization).

Backward passes are hand-derived inverses of the forward computations and
accumulate parameter gradients in a fixed order, so results are exactly
reproducible.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

from .backend import kernels
from .errors import ConfigError, DimensionError
from .numerics import (
    Matrix2D,
    add,
    matmul_nt,
    matmul_tn,
    mul,
    sigmoid,
    tanh,
)

GATE_ORDER = ("input", "forget", "candidate", "output")


@dataclass
class LstmLayerParams:
    """One LSTM layer: stacked gate weights (4H x I), recurrent weights
    (4H x H), bias (1 x 4H) and optional peephole vectors (1 x H each)."""

    w_gates: Matrix2D
    r_gates: Matrix2D
    b_gates: Matrix2D
    peep_i: Matrix2D | None = None
    peep_f: Matrix2D | None = None
    peep_o: Matrix2D | None = None

    @property
    def hidden_size(self) -> int:
        return self.r_gates.cols

    @property
    def input_size(self) -> int:
        return self.w_gates.cols

    @property
    def peepholes(self) -> bool:
        return self.peep_i is not None

    def check_shapes(self) -> None:
        h, i = self.hidden_size, self.input_size
        if self.w_gates.rows != 4 * h or self.r_gates.rows != 4 * h:
            raise DimensionError(
                f"gate blocks expect {4 * h} rows, got "
                f"{self.w_gates.rows}/{self.r_gates.rows}")
        if self.b_gates.shape() != (1, 4 * h):
            raise DimensionError(f"bias must be 1x{4 * h}")
        for p in (self.peep_i, self.peep_f, self.peep_o):
            if p is not None and p.shape() != (1, h):
                raise DimensionError(f"peephole must be 1x{h}")


@dataclass
class RnnLayerParams:
    """Vanilla RNN: h = sigmoid(W_hx x + W_hh h_prev), y = W_yh h."""

    w_hx: Matrix2D
    w_hh: Matrix2D
    w_yh: Matrix2D

    @property
    def hidden_size(self) -> int:
        return self.w_hh.cols


@dataclass
class CellState:
    """Batched recurrent state: h (B x H) and, for LSTM, c (B x H)."""

    h: Matrix2D
    c: Matrix2D | None = None

    def copy(self) -> "CellState":
        return CellState(self.h.copy(), None if self.c is None else self.c.copy())


def zero_state(batch: int, hidden: int, precision: str = "double",
               with_cell: bool = True) -> CellState:
    h = Matrix2D.zeros(batch, hidden, precision)
    c = Matrix2D.zeros(batch, hidden, precision) if with_cell else None
    return CellState(h, c)


@dataclass
class LstmStepCache:
    """Forward intermediates needed for the exact backward pass."""

    x: Matrix2D
    h_prev: Matrix2D
    c_prev: Matrix2D
    i: Matrix2D
    f: Matrix2D
    g: Matrix2D
    o: Matrix2D
    c: Matrix2D
    tc: Matrix2D
    peepholes: bool


@dataclass
class RnnStepCache:
    x: Matrix2D
    h_prev: Matrix2D
    h: Matrix2D


def zeros_like_lstm_params(params: LstmLayerParams) -> LstmLayerParams:
    return LstmLayerParams(
        params.w_gates.zeros_like(),
        params.r_gates.zeros_like(),
        params.b_gates.zeros_like(),
        params.peep_i.zeros_like() if params.peep_i is not None else None,
        params.peep_f.zeros_like() if params.peep_f is not None else None,
        params.peep_o.zeros_like() if params.peep_o is not None else None,
    )


def zeros_like_rnn_params(params: RnnLayerParams) -> RnnLayerParams:
    return RnnLayerParams(params.w_hx.zeros_like(), params.w_hh.zeros_like(),
                          params.w_yh.zeros_like())


def _resolve_peepholes(params: LstmLayerParams, peepholes) -> bool:
    if peepholes is None:
        return params.peepholes
    if peepholes and not params.peepholes:
        raise ConfigError("peepholes requested but the layer has no peephole vectors")
    return bool(peepholes)


def _split_gates(a: Matrix2D, hidden: int) -> tuple[Matrix2D, ...]:
    blocks = []
    for b in range(4):
        out = Matrix2D.zeros(a.rows, hidden, a.precision)
        kernels.copy_cols(a.rows, a.cols, a.data, b * hidden, hidden, out.data)
        blocks.append(out)
    return tuple(blocks)


def _join_gates(blocks, hidden: int) -> Matrix2D:
    rows = blocks[0].rows
    out = Matrix2D.zeros(rows, 4 * hidden, blocks[0].precision)
    for b, blk in enumerate(blocks):
        kernels.add_into_cols(rows, out.cols, out.data, b * hidden, hidden, blk.data)
    return out


def lstm_cell_forward(x: Matrix2D, prev: CellState, params: LstmLayerParams,
                      peepholes=None) -> tuple[CellState, LstmStepCache]:
    """One LSTM step for a batch; returns the new state and backward cache."""
    use_peep = _resolve_peepholes(params, peepholes)
    h_size = params.hidden_size
    if x.cols != params.input_size:
        raise DimensionError(
            f"cell input ({x.rows}x{x.cols}) does not match weights "
            f"({params.w_gates.rows}x{params.w_gates.cols})")
    if prev.h.cols != h_size or prev.c is None or prev.c.cols != h_size:
        raise DimensionError(f"previous state must be B x {h_size} with a cell part")

    pre = matmul_nt(x, params.w_gates)
    matmul_nt(prev.h, params.r_gates, out=pre, accumulate=True)
    kernels.add_bias_rows(pre.rows, pre.cols, pre.data, params.b_gates.data)
    ai, af, ag, ao = _split_gates(pre, h_size)
    if use_peep:
        kernels.addcmul_rows(ai.rows, h_size, ai.data, prev.c.data, params.peep_i.data)
        kernels.addcmul_rows(af.rows, h_size, af.data, prev.c.data, params.peep_f.data)
    i = sigmoid(ai)
    f = sigmoid(af)
    g = tanh(ag)
    c = add(mul(f, prev.c), mul(i, g))
    if use_peep:
        kernels.addcmul_rows(ao.rows, h_size, ao.data, c.data, params.peep_o.data)
    o = sigmoid(ao)
    tc = tanh(c)
    h = mul(o, tc)
    cache = LstmStepCache(x, prev.h, prev.c, i, f, g, o, c, tc, use_peep)
    return CellState(h, c), cache


def _dsigmoid(y: Matrix2D, dy: Matrix2D) -> Matrix2D:
    out = y.zeros_like()
    kernels.dsigmoid(y.rows * y.cols, y.data, dy.data, out.data)
    return out


def _dtanh(y: Matrix2D, dy: Matrix2D) -> Matrix2D:
    out = y.zeros_like()
    kernels.dtanh(y.rows * y.cols, y.data, dy.data, out.data)
    return out


def lstm_cell_backward(cache: LstmStepCache, d_h: Matrix2D,
                       d_c: Matrix2D | None, params: LstmLayerParams,
                       grads: LstmLayerParams | None = None,
                       ) -> tuple[LstmLayerParams, Matrix2D, CellState]:
    """Backward through one LSTM step.

    ``d_h``/``d_c`` are loss gradients w.r.t. the step's outputs; returns
    (accumulated parameter gradients, d_input, gradient w.r.t. the previous
    state).  Pass ``grads`` to accumulate across steps/batches.
    """
    if grads is None:
        grads = zeros_like_lstm_params(params)
    h_size = params.hidden_size
    rows = d_h.rows

    d_o = mul(d_h, cache.tc)
    d_ao = _dsigmoid(cache.o, d_o)
    d_tc = mul(d_h, cache.o)
    d_cell = _dtanh(cache.tc, d_tc)
    if d_c is not None:
        d_cell = add(d_c, d_cell)
    if cache.peepholes:
        kernels.addcmul_rows(rows, h_size, d_cell.data, d_ao.data, params.peep_o.data)

    d_i = mul(d_cell, cache.g)
    d_ai = _dsigmoid(cache.i, d_i)
    d_f = mul(d_cell, cache.c_prev)
    d_af = _dsigmoid(cache.f, d_f)
    d_g = mul(d_cell, cache.i)
    d_ag = _dtanh(cache.g, d_g)

    d_c_prev = mul(d_cell, cache.f)
    if cache.peepholes:
        kernels.addcmul_rows(rows, h_size, d_c_prev.data, d_ai.data, params.peep_i.data)
        kernels.addcmul_rows(rows, h_size, d_c_prev.data, d_af.data, params.peep_f.data)

    d_pre = _join_gates((d_ai, d_af, d_ag, d_ao), h_size)
    d_x = Matrix2D.zeros(rows, params.input_size, d_h.precision)
    kernels.matmul_nn(rows, params.input_size, 4 * h_size,
                      d_pre.data, params.w_gates.data, d_x.data)
    d_h_prev = Matrix2D.zeros(rows, h_size, d_h.precision)
    kernels.matmul_nn(rows, h_size, 4 * h_size,
                      d_pre.data, params.r_gates.data, d_h_prev.data)

    matmul_tn(d_pre, cache.x, out=grads.w_gates, accumulate=True)
    matmul_tn(d_pre, cache.h_prev, out=grads.r_gates, accumulate=True)
    kernels.col_sums(rows, 4 * h_size, d_pre.data, grads.b_gates.data, True)
    if cache.peepholes:
        kernels.col_sums(rows, h_size, mul(d_ai, cache.c_prev).data,
                         grads.peep_i.data, True)
        kernels.col_sums(rows, h_size, mul(d_af, cache.c_prev).data,
                         grads.peep_f.data, True)
        kernels.col_sums(rows, h_size, mul(d_ao, cache.c).data,
                         grads.peep_o.data, True)

    return grads, d_x, CellState(d_h_prev, d_c_prev)


def rnn_cell_forward(x: Matrix2D, h_prev: Matrix2D, params: RnnLayerParams,
                     ) -> tuple[Matrix2D, Matrix2D, RnnStepCache]:
    """One vanilla-RNN step: returns (h, y, cache)."""
    pre = matmul_nt(x, params.w_hx)
    matmul_nt(h_prev, params.w_hh, out=pre, accumulate=True)
    h = sigmoid(pre)
    y = matmul_nt(h, params.w_yh)
    return h, y, RnnStepCache(x, h_prev, h)


def rnn_cell_backward(cache: RnnStepCache, d_h: Matrix2D | None,
                      d_y: Matrix2D | None, params: RnnLayerParams,
                      grads: RnnLayerParams | None = None,
                      ) -> tuple[RnnLayerParams, Matrix2D, Matrix2D]:
    """Backward through one RNN step; returns (grads, d_x, d_h_prev)."""
    if grads is None:
        grads = zeros_like_rnn_params(params)
    h = cache.h
    d_h_total = d_h.copy() if d_h is not None else h.zeros_like()
    if d_y is not None:
        kernels.matmul_nn(d_y.rows, h.cols, params.w_yh.rows,
                          d_y.data, params.w_yh.data, d_h_total.data, True)
        matmul_tn(d_y, h, out=grads.w_yh, accumulate=True)
    d_pre = _dsigmoid(h, d_h_total)
    matmul_tn(d_pre, cache.x, out=grads.w_hx, accumulate=True)
    matmul_tn(d_pre, cache.h_prev, out=grads.w_hh, accumulate=True)
    d_x = Matrix2D.zeros(d_pre.rows, params.w_hx.cols, h.precision)
    kernels.matmul_nn(d_pre.rows, params.w_hx.cols, h.cols,
                      d_pre.data, params.w_hx.data, d_x.data)
    d_h_prev = Matrix2D.zeros(d_pre.rows, h.cols, h.precision)
    kernels.matmul_nn(d_pre.rows, h.cols, h.cols,
                      d_pre.data, params.w_hh.data, d_h_prev.data)
    return grads, d_x, d_h_prev


def _check_chain(inputs, layers) -> None:
    expect = inputs[0].cols if inputs else layers[0].input_size
    for depth, layer in enumerate(layers):
        if layer.input_size != expect:
            raise DimensionError(
                f"layer {depth} expects input size {layer.input_size}, "
                f"previous layer provides {expect}")
        expect = layer.hidden_size


def _select(mask: array, a: Matrix2D, b: Matrix2D) -> Matrix2D:
    out = a.zeros_like()
    kernels.select_rows(a.rows, a.cols, mask, a.data, b.data, out.data)
    return out


def stack_forward(inputs: list[Matrix2D], layers: list[LstmLayerParams],
                  init: list[CellState] | None = None,
                  masks: list[array] | None = None):
    """Run a deep LSTM over a sequence of batched inputs.

    Layer l consumes layer l-1's hidden output at the same timestep.  When
    ``masks`` is given (one 0/1 array per step, one entry per batch row),
    masked-out rows carry their state through unchanged, which makes
    right-padded batches encode exactly like the unpadded sentences.

    Returns (per-step top-layer outputs, final states per layer, caches).
    """
    if not layers:
        raise ConfigError("stack needs at least one layer")
    _check_chain(inputs, layers)
    if inputs:
        batch = inputs[0].rows
        precision = inputs[0].precision
    elif init:
        batch = init[0].h.rows
        precision = init[0].h.precision
    else:
        batch, precision = 1, "double"
    if init is None:
        init = [zero_state(batch, layer.hidden_size, precision) for layer in layers]
    if len(init) != len(layers):
        raise DimensionError(f"{len(init)} init states for {len(layers)} layers")

    states = list(init)
    outputs = []
    caches = []
    for t, x in enumerate(inputs):
        mask = masks[t] if masks is not None else None
        step_caches = []
        layer_in = x
        for depth, layer in enumerate(layers):
            new_state, cache = lstm_cell_forward(layer_in, states[depth], layer)
            if mask is not None:
                new_state = CellState(_select(mask, new_state.h, states[depth].h),
                                      _select(mask, new_state.c, states[depth].c))
            step_caches.append(cache)
            states[depth] = new_state
            layer_in = new_state.h
        caches.append(step_caches)
        outputs.append(states[-1].h)
    return outputs, states, caches


def stack_backward(layers: list[LstmLayerParams], caches,
                   d_outputs: list[Matrix2D | None] | None = None,
                   d_finals: list[CellState] | None = None,
                   grads: list[LstmLayerParams] | None = None,
                   masks: list[array] | None = None):
    """Backward through ``stack_forward``.

    ``d_outputs`` holds per-step gradients on the top layer's hidden output,
    ``d_finals`` gradients on every layer's final (h, c).  Returns
    (per-layer parameter gradients, per-step input gradients, gradients
    w.r.t. the initial states).
    """
    if grads is None:
        grads = [zeros_like_lstm_params(layer) for layer in layers]
    steps = len(caches)
    depth = len(layers)
    if steps == 0:
        if d_finals is not None:
            return grads, [], [s.copy() for s in d_finals]
        return grads, [], None

    batch = caches[0][0].h_prev.rows
    precision = caches[0][0].h_prev.precision
    if d_finals is not None:
        d_h = [s.h.copy() for s in d_finals]
        d_c = [s.c.copy() for s in d_finals]
    else:
        d_h = [Matrix2D.zeros(batch, layer.hidden_size, precision) for layer in layers]
        d_c = [Matrix2D.zeros(batch, layer.hidden_size, precision) for layer in layers]

    d_inputs: list[Matrix2D | None] = [None] * steps
    for t in range(steps - 1, -1, -1):
        if d_outputs is not None and d_outputs[t] is not None:
            d_h[-1] = add(d_h[-1], d_outputs[t])
        mask = masks[t] if masks is not None else None
        for level in range(depth - 1, -1, -1):
            cache = caches[t][level]
            if mask is not None:
                zero = d_h[level].zeros_like()
                dh_cell = _select(mask, d_h[level], zero)
                dc_cell = _select(mask, d_c[level], zero)
                dh_carry = _select(mask, zero, d_h[level])
                dc_carry = _select(mask, zero, d_c[level])
            else:
                dh_cell, dc_cell = d_h[level], d_c[level]
                dh_carry = dc_carry = None
            _, d_x, d_prev = lstm_cell_backward(cache, dh_cell, dc_cell,
                                                layers[level], grads[level])
            d_h[level] = add(d_prev.h, dh_carry) if dh_carry is not None else d_prev.h
            d_c[level] = add(d_prev.c, dc_carry) if dc_carry is not None else d_prev.c
            if level > 0:
                d_h[level - 1] = add(d_h[level - 1], d_x)
            else:
                d_inputs[t] = d_x
    d_init = [CellState(d_h[level], d_c[level]) for level in range(depth)]
    return grads, d_inputs, d_init

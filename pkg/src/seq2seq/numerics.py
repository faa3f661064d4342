"""Deterministic dense linear algebra and stable nonlinearities.

``Matrix2D`` is the one numeric carrier used everywhere: a dense row-major
2-D array in either double (default) or single precision.  Single-precision
matrices still compute in double internally and round on store, so both
precisions share one accumulation contract: reductions run over the inner
index ascending and are never reassociated.  Identical inputs therefore give
bit-identical outputs, on either kernel backend.
"""

from __future__ import annotations

import math
from array import array

from .backend import kernels
from .errors import DimensionError

_TYPECODES = {"double": "d", "single": "f"}


class Matrix2D:
    """Dense rows x cols matrix over a flat row-major buffer."""

    __slots__ = ("rows", "cols", "data", "precision")

    def __init__(self, rows: int, cols: int, data=None, precision: str = "double"):
        if rows < 1 or cols < 1:
            raise DimensionError(f"matrix dims must be positive, got {rows}x{cols}")
        if precision not in _TYPECODES:
            raise ValueError(f"unknown precision: {precision!r}")
        tc = _TYPECODES[precision]
        if data is None:
            buf = array(tc, bytes(rows * cols * array(tc).itemsize))
        elif isinstance(data, array) and data.typecode == tc:
            buf = data
        else:
            buf = array(tc, data)
        if len(buf) != rows * cols:
            raise DimensionError(
                f"{rows}x{cols} matrix needs {rows * cols} values, got {len(buf)}"
            )
        self.rows = rows
        self.cols = cols
        self.data = buf
        self.precision = precision

    @classmethod
    def from_rows(cls, rows_of_values, precision: str = "double") -> "Matrix2D":
        rows = list(rows_of_values)
        if not rows:
            raise DimensionError("from_rows needs at least one row")
        ncols = len(rows[0])
        flat = []
        for r in rows:
            if len(r) != ncols:
                raise DimensionError("ragged rows in from_rows")
            flat.extend(float(v) for v in r)
        return cls(len(rows), ncols, flat, precision)

    @classmethod
    def zeros(cls, rows: int, cols: int, precision: str = "double") -> "Matrix2D":
        return cls(rows, cols, None, precision)

    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def copy(self) -> "Matrix2D":
        return Matrix2D(self.rows, self.cols, array(self.data.typecode, self.data),
                        self.precision)

    def zeros_like(self) -> "Matrix2D":
        return Matrix2D.zeros(self.rows, self.cols, self.precision)

    def __getitem__(self, key):
        i, j = key
        return self.data[i * self.cols + j]

    def __setitem__(self, key, value):
        i, j = key
        self.data[i * self.cols + j] = value

    def row(self, i: int) -> list[float]:
        return list(self.data[i * self.cols:(i + 1) * self.cols])

    def tolist(self) -> list[list[float]]:
        return [self.row(i) for i in range(self.rows)]

    def all_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.data)

    def __repr__(self):
        return f"Matrix2D({self.rows}x{self.cols}, {self.precision})"


def _shape_str(m: Matrix2D) -> str:
    return f"({m.rows}x{m.cols})"


def _check_same(a: Matrix2D, b: Matrix2D, op: str) -> None:
    if a.shape() != b.shape():
        raise DimensionError(f"{op}: shapes {_shape_str(a)} and {_shape_str(b)} differ")
    _check_precision(a, b, op)


def _check_precision(a: Matrix2D, b: Matrix2D, op: str) -> None:
    if a.precision != b.precision:
        raise ValueError(f"{op}: mixed precisions {a.precision}/{b.precision}")


def matmul(a: Matrix2D, b: Matrix2D) -> Matrix2D:
    """Matrix product with deterministic left-to-right inner accumulation."""
    if a.cols != b.rows:
        raise DimensionError(f"matmul: {_shape_str(a)} x {_shape_str(b)}")
    _check_precision(a, b, "matmul")
    out = Matrix2D.zeros(a.rows, b.cols, a.precision)
    kernels.matmul_nn(a.rows, b.cols, a.cols, a.data, b.data, out.data)
    return out


def matmul_nt(a: Matrix2D, b: Matrix2D, out: Matrix2D | None = None,
              accumulate: bool = False) -> Matrix2D:
    """a @ b^T; with ``accumulate`` adds into ``out``."""
    if a.cols != b.cols:
        raise DimensionError(f"matmul_nt: {_shape_str(a)} x {_shape_str(b)}^T")
    _check_precision(a, b, "matmul_nt")
    if out is None:
        out = Matrix2D.zeros(a.rows, b.rows, a.precision)
    kernels.matmul_nt(a.rows, b.rows, a.cols, a.data, b.data, out.data, accumulate)
    return out


def matmul_tn(a: Matrix2D, b: Matrix2D, out: Matrix2D | None = None,
              accumulate: bool = False) -> Matrix2D:
    """a^T @ b; with ``accumulate`` adds into ``out``."""
    if a.rows != b.rows:
        raise DimensionError(f"matmul_tn: {_shape_str(a)}^T x {_shape_str(b)}")
    _check_precision(a, b, "matmul_tn")
    if out is None:
        out = Matrix2D.zeros(a.cols, b.cols, a.precision)
    kernels.matmul_tn(a.cols, b.cols, a.rows, a.data, b.data, out.data, accumulate)
    return out


_UNARY = {"sigmoid", "tanh"}
_BINARY = {"add", "mul"}


def elementwise(kind: str, a: Matrix2D, b: Matrix2D | None = None) -> Matrix2D:
    """Elementwise sigmoid/tanh (unary) or add/mul (binary)."""
    out = a.zeros_like()
    n = a.rows * a.cols
    if kind in _UNARY:
        if b is not None:
            raise ValueError(f"{kind} takes one operand")
        if kind == "sigmoid":
            kernels.sigmoid(n, a.data, out.data)
        else:
            kernels.tanh_(n, a.data, out.data)
        return out
    if kind in _BINARY:
        if b is None:
            raise ValueError(f"{kind} takes two operands")
        _check_same(a, b, kind)
        if kind == "add":
            kernels.add(n, a.data, b.data, out.data)
        else:
            kernels.mul(n, a.data, b.data, out.data)
        return out
    raise ValueError(f"unknown elementwise kind: {kind!r}")


def sigmoid(a: Matrix2D) -> Matrix2D:
    return elementwise("sigmoid", a)


def tanh(a: Matrix2D) -> Matrix2D:
    return elementwise("tanh", a)


def add(a: Matrix2D, b: Matrix2D) -> Matrix2D:
    return elementwise("add", a, b)


def mul(a: Matrix2D, b: Matrix2D) -> Matrix2D:
    return elementwise("mul", a, b)


def sub(a: Matrix2D, b: Matrix2D) -> Matrix2D:
    _check_same(a, b, "sub")
    out = a.zeros_like()
    kernels.sub(a.rows * a.cols, a.data, b.data, out.data)
    return out


def log_softmax_rows(logits: Matrix2D) -> Matrix2D:
    """Row-wise log-softmax via max subtraction; exp of a row sums to 1."""
    out = logits.zeros_like()
    kernels.log_softmax_rows(logits.rows, logits.cols, logits.data, out.data)
    return out


def global_norm(tensors: list[Matrix2D]) -> float:
    """Euclidean norm of all entries of all tensors, in list order."""
    if not tensors:
        raise ValueError("global_norm of an empty list")
    acc = 0.0
    for t in tensors:
        acc += kernels.sumsq(t.rows * t.cols, t.data)
    return math.sqrt(acc)


def scale(a: Matrix2D, alpha: float) -> Matrix2D:
    out = a.zeros_like()
    kernels.scale(a.rows * a.cols, a.data, alpha, out.data)
    return out


def scale_inplace(a: Matrix2D, alpha: float) -> None:
    kernels.scale(a.rows * a.cols, a.data, alpha, a.data)


def axpy_inplace(alpha: float, x: Matrix2D, y: Matrix2D) -> None:
    """y += alpha * x."""
    _check_same(x, y, "axpy")
    kernels.axpy(x.rows * x.cols, alpha, x.data, y.data)

"""Pure-Python numeric kernels over flat row-major buffers.

This is the fallback for the compiled extension in ``_ckernels.pyx``.  Both
modules implement the same contract and must stay bit-identical:

* buffers are ``array.array`` of typecode ``'d'`` or ``'f'``,
* all arithmetic happens in double precision; results are rounded to the
  buffer's precision only when stored,
* every reduction accumulates in a fixed order (inner index ascending),
  never reassociated, so results are reproducible bit for bit.

Python floats are IEEE doubles and ``math.exp``/``math.tanh``/``math.log``
call the platform libm, the same functions the C kernels use.
"""

from math import exp, log, tanh


def matmul_nn(m, n, k, a, b, out, accumulate=False):
    """out[m,n] (+)= a[m,k] @ b[k,n], inner index ascending."""
    for i in range(m):
        ai = i * k
        for j in range(n):
            acc = out[i * n + j] if accumulate else 0.0
            for p in range(k):
                acc += a[ai + p] * b[p * n + j]
            out[i * n + j] = acc


def matmul_nt(m, n, k, a, b, out, accumulate=False):
    """out[m,n] (+)= a[m,k] @ b[n,k]^T."""
    for i in range(m):
        ai = i * k
        for j in range(n):
            bj = j * k
            acc = out[i * n + j] if accumulate else 0.0
            for p in range(k):
                acc += a[ai + p] * b[bj + p]
            out[i * n + j] = acc


def matmul_tn(m, n, k, a, b, out, accumulate=False):
    """out[m,n] (+)= a[k,m]^T @ b[k,n]."""
    for i in range(m):
        for j in range(n):
            acc = out[i * n + j] if accumulate else 0.0
            for p in range(k):
                acc += a[p * m + i] * b[p * n + j]
            out[i * n + j] = acc


def add(n, a, b, out):
    for i in range(n):
        out[i] = a[i] + b[i]


def sub(n, a, b, out):
    for i in range(n):
        out[i] = a[i] - b[i]


def mul(n, a, b, out):
    for i in range(n):
        out[i] = a[i] * b[i]


def sigmoid(n, a, out):
    """Logistic function in the overflow-safe branch form."""
    for i in range(n):
        x = a[i]
        if x >= 0.0:
            out[i] = 1.0 / (1.0 + exp(-x))
        else:
            e = exp(x)
            out[i] = e / (1.0 + e)


def tanh_(n, a, out):
    for i in range(n):
        out[i] = tanh(a[i])


def exp_(n, a, out):
    for i in range(n):
        out[i] = exp(a[i])


def dsigmoid(n, y, dy, out):
    """out = dy * y * (1 - y) for y = sigmoid(x)."""
    for i in range(n):
        yv = y[i]
        out[i] = dy[i] * yv * (1.0 - yv)


def dtanh(n, y, dy, out):
    """out = dy * (1 - y^2) for y = tanh(x)."""
    for i in range(n):
        yv = y[i]
        out[i] = dy[i] * (1.0 - yv * yv)


def log_softmax_rows(rows, cols, a, out):
    """Per-row log-softmax with max subtraction; sums exp left to right."""
    for r in range(rows):
        base = r * cols
        m = a[base]
        for c in range(1, cols):
            v = a[base + c]
            if v > m:
                m = v
        s = 0.0
        for c in range(cols):
            s += exp(a[base + c] - m)
        ls = log(s)
        for c in range(cols):
            out[base + c] = (a[base + c] - m) - ls


def sumsq(n, a):
    """Sum of squares, index ascending; returns a double."""
    acc = 0.0
    for i in range(n):
        v = a[i]
        acc += v * v
    return acc


def scale(n, a, alpha, out):
    for i in range(n):
        out[i] = a[i] * alpha


def axpy(n, alpha, x, y):
    """y += alpha * x."""
    for i in range(n):
        y[i] = y[i] + alpha * x[i]


def add_bias_rows(rows, cols, m, bias):
    """m[i,j] += bias[j] in place."""
    for i in range(rows):
        base = i * cols
        for j in range(cols):
            m[base + j] = m[base + j] + bias[j]


def addcmul_rows(rows, cols, dst, src, vec):
    """dst[i,j] += src[i,j] * vec[j] in place."""
    for i in range(rows):
        base = i * cols
        for j in range(cols):
            dst[base + j] = dst[base + j] + src[base + j] * vec[j]


def col_sums(rows, cols, a, out, accumulate=False):
    """out[j] (+)= sum_i a[i,j], row index ascending."""
    for j in range(cols):
        acc = out[j] if accumulate else 0.0
        for i in range(rows):
            acc += a[i * cols + j]
        out[j] = acc


def copy_cols(rows, cols, src, j0, width, out):
    """out[rows,width] = src[:, j0:j0+width]."""
    for i in range(rows):
        base = i * cols + j0
        ob = i * width
        for j in range(width):
            out[ob + j] = src[base + j]


def add_into_cols(rows, cols, dst, j0, width, src):
    """dst[:, j0:j0+width] += src[rows,width] in place."""
    for i in range(rows):
        base = i * cols + j0
        sb = i * width
        for j in range(width):
            dst[base + j] = dst[base + j] + src[sb + j]


def select_rows(rows, cols, mask, a, b, out):
    """out[i,:] = a[i,:] where mask[i] != 0 else b[i,:]."""
    for i in range(rows):
        base = i * cols
        src = a if mask[i] != 0.0 else b
        for j in range(cols):
            out[base + j] = src[base + j]


def gather_rows(cols, table, ids, out):
    """out[i,:] = table[ids[i],:]."""
    for i in range(len(ids)):
        tb = ids[i] * cols
        ob = i * cols
        for j in range(cols):
            out[ob + j] = table[tb + j]


def scatter_add_rows(cols, table, ids, src):
    """table[ids[i],:] += src[i,:], i ascending (fixed duplicate order)."""
    for i in range(len(ids)):
        tb = ids[i] * cols
        sb = i * cols
        for j in range(cols):
            table[tb + j] = table[tb + j] + src[sb + j]

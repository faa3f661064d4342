# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled numeric kernels; the fast twin of ``_pykernels``.

Same contract as the pure-Python module: double-precision arithmetic with
rounding to the buffer precision on store, fixed left-to-right accumulation.
Compiled with -ffp-contract=off so no FMA fusion changes the roundings; libm
exp/tanh/log match the ones the math module uses.  The two backends produce
bit-identical results.
"""

from libc.math cimport exp, log, tanh

ctypedef fused real:
    float
    double


def matmul_nn(Py_ssize_t m, Py_ssize_t n, Py_ssize_t k,
              real[::1] a, real[::1] b, real[::1] out, bint accumulate=False):
    """out[m,n] (+)= a[m,k] @ b[k,n], inner index ascending."""
    cdef Py_ssize_t i, j, p, ai
    cdef double acc
    for i in range(m):
        ai = i * k
        for j in range(n):
            acc = <double>out[i * n + j] if accumulate else 0.0
            for p in range(k):
                acc += <double>a[ai + p] * <double>b[p * n + j]
            out[i * n + j] = <real>acc


def matmul_nt(Py_ssize_t m, Py_ssize_t n, Py_ssize_t k,
              real[::1] a, real[::1] b, real[::1] out, bint accumulate=False):
    """out[m,n] (+)= a[m,k] @ b[n,k]^T."""
    cdef Py_ssize_t i, j, p, ai, bj
    cdef double acc
    for i in range(m):
        ai = i * k
        for j in range(n):
            bj = j * k
            acc = <double>out[i * n + j] if accumulate else 0.0
            for p in range(k):
                acc += <double>a[ai + p] * <double>b[bj + p]
            out[i * n + j] = <real>acc


def matmul_tn(Py_ssize_t m, Py_ssize_t n, Py_ssize_t k,
              real[::1] a, real[::1] b, real[::1] out, bint accumulate=False):
    """out[m,n] (+)= a[k,m]^T @ b[k,n]."""
    cdef Py_ssize_t i, j, p
    cdef double acc
    for i in range(m):
        for j in range(n):
            acc = <double>out[i * n + j] if accumulate else 0.0
            for p in range(k):
                acc += <double>a[p * m + i] * <double>b[p * n + j]
            out[i * n + j] = <real>acc


def add(Py_ssize_t n, real[::1] a, real[::1] b, real[::1] out):
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = <real>(<double>a[i] + <double>b[i])


def sub(Py_ssize_t n, real[::1] a, real[::1] b, real[::1] out):
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = <real>(<double>a[i] - <double>b[i])


def mul(Py_ssize_t n, real[::1] a, real[::1] b, real[::1] out):
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = <real>(<double>a[i] * <double>b[i])


def sigmoid(Py_ssize_t n, real[::1] a, real[::1] out):
    """Logistic function in the overflow-safe branch form."""
    cdef Py_ssize_t i
    cdef double x, e
    for i in range(n):
        x = <double>a[i]
        if x >= 0.0:
            out[i] = <real>(1.0 / (1.0 + exp(-x)))
        else:
            e = exp(x)
            out[i] = <real>(e / (1.0 + e))


def tanh_(Py_ssize_t n, real[::1] a, real[::1] out):
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = <real>tanh(<double>a[i])


def exp_(Py_ssize_t n, real[::1] a, real[::1] out):
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = <real>exp(<double>a[i])


def dsigmoid(Py_ssize_t n, real[::1] y, real[::1] dy, real[::1] out):
    """out = dy * y * (1 - y) for y = sigmoid(x)."""
    cdef Py_ssize_t i
    cdef double yv
    for i in range(n):
        yv = <double>y[i]
        out[i] = <real>(<double>dy[i] * yv * (1.0 - yv))


def dtanh(Py_ssize_t n, real[::1] y, real[::1] dy, real[::1] out):
    """out = dy * (1 - y^2) for y = tanh(x)."""
    cdef Py_ssize_t i
    cdef double yv
    for i in range(n):
        yv = <double>y[i]
        out[i] = <real>(<double>dy[i] * (1.0 - yv * yv))


def log_softmax_rows(Py_ssize_t rows, Py_ssize_t cols, real[::1] a, real[::1] out):
    """Per-row log-softmax with max subtraction; sums exp left to right."""
    cdef Py_ssize_t r, c, base
    cdef double m, v, s, ls
    for r in range(rows):
        base = r * cols
        m = <double>a[base]
        for c in range(1, cols):
            v = <double>a[base + c]
            if v > m:
                m = v
        s = 0.0
        for c in range(cols):
            s += exp(<double>a[base + c] - m)
        ls = log(s)
        for c in range(cols):
            out[base + c] = <real>((<double>a[base + c] - m) - ls)


def sumsq(Py_ssize_t n, real[::1] a):
    """Sum of squares, index ascending; returns a double."""
    cdef Py_ssize_t i
    cdef double acc = 0.0, v
    for i in range(n):
        v = <double>a[i]
        acc += v * v
    return acc


def scale(Py_ssize_t n, real[::1] a, double alpha, real[::1] out):
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = <real>(<double>a[i] * alpha)


def axpy(Py_ssize_t n, double alpha, real[::1] x, real[::1] y):
    """y += alpha * x."""
    cdef Py_ssize_t i
    for i in range(n):
        y[i] = <real>(<double>y[i] + alpha * <double>x[i])


def add_bias_rows(Py_ssize_t rows, Py_ssize_t cols, real[::1] m, real[::1] bias):
    """m[i,j] += bias[j] in place."""
    cdef Py_ssize_t i, j, base
    for i in range(rows):
        base = i * cols
        for j in range(cols):
            m[base + j] = <real>(<double>m[base + j] + <double>bias[j])


def addcmul_rows(Py_ssize_t rows, Py_ssize_t cols,
                 real[::1] dst, real[::1] src, real[::1] vec):
    """dst[i,j] += src[i,j] * vec[j] in place."""
    cdef Py_ssize_t i, j, base
    for i in range(rows):
        base = i * cols
        for j in range(cols):
            dst[base + j] = <real>(<double>dst[base + j]
                                   + <double>src[base + j] * <double>vec[j])


def col_sums(Py_ssize_t rows, Py_ssize_t cols, real[::1] a, real[::1] out,
             bint accumulate=False):
    """out[j] (+)= sum_i a[i,j], row index ascending."""
    cdef Py_ssize_t i, j
    cdef double acc
    for j in range(cols):
        acc = <double>out[j] if accumulate else 0.0
        for i in range(rows):
            acc += <double>a[i * cols + j]
        out[j] = <real>acc


def copy_cols(Py_ssize_t rows, Py_ssize_t cols, real[::1] src,
              Py_ssize_t j0, Py_ssize_t width, real[::1] out):
    """out[rows,width] = src[:, j0:j0+width]."""
    cdef Py_ssize_t i, j, base, ob
    for i in range(rows):
        base = i * cols + j0
        ob = i * width
        for j in range(width):
            out[ob + j] = src[base + j]


def add_into_cols(Py_ssize_t rows, Py_ssize_t cols, real[::1] dst,
                  Py_ssize_t j0, Py_ssize_t width, real[::1] src):
    """dst[:, j0:j0+width] += src[rows,width] in place."""
    cdef Py_ssize_t i, j, base, sb
    for i in range(rows):
        base = i * cols + j0
        sb = i * width
        for j in range(width):
            dst[base + j] = <real>(<double>dst[base + j] + <double>src[sb + j])


def select_rows(Py_ssize_t rows, Py_ssize_t cols, double[::1] mask,
                real[::1] a, real[::1] b, real[::1] out):
    """out[i,:] = a[i,:] where mask[i] != 0 else b[i,:]."""
    cdef Py_ssize_t i, j, base
    for i in range(rows):
        base = i * cols
        if mask[i] != 0.0:
            for j in range(cols):
                out[base + j] = a[base + j]
        else:
            for j in range(cols):
                out[base + j] = b[base + j]


def gather_rows(Py_ssize_t cols, real[::1] table, long long[::1] ids, real[::1] out):
    """out[i,:] = table[ids[i],:]."""
    cdef Py_ssize_t i, j, tb, ob
    for i in range(ids.shape[0]):
        tb = <Py_ssize_t>ids[i] * cols
        ob = i * cols
        for j in range(cols):
            out[ob + j] = table[tb + j]


def scatter_add_rows(Py_ssize_t cols, real[::1] table, long long[::1] ids, real[::1] src):
    """table[ids[i],:] += src[i,:], i ascending (fixed duplicate order)."""
    cdef Py_ssize_t i, j, tb, sb
    for i in range(ids.shape[0]):
        tb = <Py_ssize_t>ids[i] * cols
        sb = i * cols
        for j in range(cols):
            table[tb + j] = <real>(<double>table[tb + j] + <double>src[sb + j])

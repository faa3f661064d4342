"""Shared helpers for the test suite: random fills and finite differences."""

import random

from seq2seq.numerics import Matrix2D


def fill_random(mat, seed, lo=-0.5, hi=0.5):
    rng = random.Random(seed)
    for idx in range(len(mat.data)):
        mat.data[idx] = rng.uniform(lo, hi)
    return mat


def rand_matrix(rows, cols, seed, lo=-0.5, hi=0.5):
    return fill_random(Matrix2D.zeros(rows, cols), seed, lo, hi)


def central_difference(loss_fn, mat, idx, step=1e-5):
    """Two-sided difference of a scalar loss w.r.t. one stored entry."""
    saved = mat.data[idx]
    mat.data[idx] = saved + step
    plus = loss_fn()
    mat.data[idx] = saved - step
    minus = loss_fn()
    mat.data[idx] = saved
    return (plus - minus) / (2.0 * step)


def relative_error(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def check_grad_matrix(loss_fn, param, analytic, step=1e-5, tol=1e-6, name=""):
    """Assert every entry of an analytic gradient matrix against finite
    differences of ``loss_fn`` (which must re-run the forward pass)."""
    worst = 0.0
    for idx in range(len(param.data)):
        numeric = central_difference(loss_fn, param, idx, step)
        err = relative_error(analytic.data[idx], numeric)
        worst = max(worst, err)
        assert err < tol, (
            f"{name}[{idx}]: analytic={analytic.data[idx]!r} numeric={numeric!r} "
            f"rel_err={err:.3e}")
    return worst

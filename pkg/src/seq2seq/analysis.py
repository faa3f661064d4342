"""Sentence-representation extraction and 2-D PCA projection.

A phrase's representation is the concatenated (h, c) of every encoder layer
after encoding it, so D = 2 * layers * hidden.  PCA runs on the Gram matrix
when there are fewer points than dimensions (the usual case for a handful
of phrases) and on the covariance matrix otherwise; the symmetric
eigenproblem is solved with cyclic Jacobi rotations.  Components follow a
fixed sign convention: the entry of largest magnitude is made positive.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import EmptySourceError, InputError
from .model import Seq2SeqModel, encode
from .numerics import Matrix2D

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass
class RepresentationSet:
    labels: list[str]
    vectors: Matrix2D  # N x (2 * layers * hidden)


def extract_representations(model: Seq2SeqModel, phrases,
                            labels=None) -> RepresentationSet:
    """Encode each phrase (token-id sequence) into one representation row."""
    phrases = list(phrases)
    if not phrases:
        raise InputError("need at least one phrase")
    if labels is None:
        labels = [" ".join(model.src_vocab.decode(p)) for p in phrases]
    cfg = model.config
    dim = 2 * cfg.num_layers * cfg.hidden_size
    out = Matrix2D.zeros(len(phrases), dim, cfg.precision)
    for row, phrase in enumerate(phrases):
        if not phrase:
            raise EmptySourceError(f"phrase {row} is empty")
        states = encode(model, list(phrase))
        flat = []
        for state in states:
            flat.extend(state.h.row(0))
            flat.extend(state.c.row(0))
        for col, value in enumerate(flat):
            out[row, col] = value
    return RepresentationSet(list(labels), out)


def jacobi_eigh(matrix: list[list[float]], tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigenvalues/vectors of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues descending, eigenvectors as rows, paired).
    """
    n = len(matrix)
    a = [list(map(float, row)) for row in matrix]
    vecs = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = math.sqrt(math.fsum(a[i][j] ** 2 for i in range(n) for j in range(n)))
    threshold = tol * max(scale, 1.0)

    for _ in range(max_sweeps):
        off = math.sqrt(math.fsum(a[p][q] ** 2
                                  for p in range(n) for q in range(p + 1, n)) * 2.0)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) <= threshold / max(n, 1) * 1e-3:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta)
                                                 + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = vecs[k][p], vecs[k][q]
                    vecs[k][p] = c * vkp - s * vkq
                    vecs[k][q] = s * vkp + c * vkq

    pairs = sorted(((a[i][i], [vecs[k][i] for k in range(n)]) for i in range(n)),
                   key=lambda ev: -ev[0])
    return [ev for ev, _ in pairs], [vec for _, vec in pairs]


def _center_columns(vectors: Matrix2D):
    n, d = vectors.rows, vectors.cols
    means = []
    for j in range(d):
        total = 0.0
        for i in range(n):
            total += vectors[i, j]
        means.append(total / n)
    centered = [[vectors[i, j] - means[j] for j in range(d)] for i in range(n)]
    return centered


def _orthonormal_fallback(existing: list[list[float]], dim: int) -> list[float]:
    """A deterministic unit vector orthogonal to ``existing`` components
    (used when an eigenvalue is numerically zero)."""
    for axis in range(dim):
        candidate = [1.0 if j == axis else 0.0 for j in range(dim)]
        for comp in existing:
            dot = math.fsum(c * e for c, e in zip(candidate, comp))
            candidate = [c - dot * e for c, e in zip(candidate, comp)]
        norm = math.sqrt(math.fsum(c * c for c in candidate))
        if norm > 1e-9:
            return [c / norm for c in candidate]
    raise InputError("could not build an orthonormal component")


def pca_2d(vectors: Matrix2D):
    """Top-2 principal components of the rows.

    Returns (projections N x 2, components 2 x D, explained variances); the
    explained variance of component k is the k-th eigenvalue of the sample
    covariance (1/(N-1) normalization).
    """
    n, d = vectors.rows, vectors.cols
    if n < 2:
        raise InputError("PCA needs at least two points")
    centered = _center_columns(vectors)
    denom = n - 1

    components: list[list[float]] = []
    explained: list[float] = []
    if n < d:
        gram = [[math.fsum(centered[a][j] * centered[b][j] for j in range(d))
                 for b in range(n)] for a in range(n)]
        eigvals, eigvecs = jacobi_eigh(gram)
        for k in range(2):
            lam = max(eigvals[k], 0.0) if k < len(eigvals) else 0.0
            if lam > 1e-12:
                u = eigvecs[k]
                comp = [math.fsum(u[i] * centered[i][j] for i in range(n))
                        / math.sqrt(lam) for j in range(d)]
                components.append(comp)
            else:
                components.append(_orthonormal_fallback(components, d))
            explained.append(lam / denom)
    else:
        cov = [[math.fsum(centered[i][a] * centered[i][b] for i in range(n)) / denom
                for b in range(d)] for a in range(d)]
        eigvals, eigvecs = jacobi_eigh(cov)
        for k in range(2):
            lam = max(eigvals[k], 0.0)
            if lam > 1e-12:
                components.append(eigvecs[k])
            else:
                components.append(_orthonormal_fallback(components, d))
            explained.append(lam)

    # sign convention: largest-magnitude entry positive
    for comp in components:
        pivot = max(range(d), key=lambda j: (abs(comp[j]), -j))
        if comp[pivot] < 0:
            for j in range(d):
                comp[j] = -comp[j]

    projections = Matrix2D.zeros(n, 2, vectors.precision)
    for i in range(n):
        for k in range(2):
            projections[i, k] = math.fsum(centered[i][j] * components[k][j]
                                          for j in range(d))
    comp_matrix = Matrix2D.from_rows(components, vectors.precision)
    return projections, comp_matrix, (explained[0], explained[1])


def export_scatter(projections, labels: list[str], path_prefix) -> tuple[str, str]:
    """Write `<prefix>.csv` (label,x,y) and a self-contained SVG scatter
    plot at `<prefix>.svg`; returns both paths.

    ``projections`` is an N x 2 Matrix2D or a plain list of (x, y) pairs
    (which may be empty)."""
    if isinstance(projections, Matrix2D):
        points = [(projections[i, 0], projections[i, 1])
                  for i in range(projections.rows)]
    else:
        points = [(float(x), float(y)) for x, y in projections]
    if len(points) != len(labels):
        raise InputError(f"{len(points)} points but {len(labels)} labels")
    csv_path = f"{path_prefix}.csv"
    svg_path = f"{path_prefix}.svg"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "x", "y"])
        for (x, y), label in zip(points, labels):
            writer.writerow([label, repr(x), repr(y)])

    width, height, margin = 640, 480, 50
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
    else:
        x_lo = x_hi = y_lo = y_hi = 0.0
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def to_px(x, y):
        px = margin + (x - x_lo) / x_span * (width - 2 * margin)
        py = height - margin - (y - y_lo) / y_span * (height - 2 * margin)
        return px, py

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for (x, y), label in zip(points, labels):
        px, py = to_px(x, y)
        safe = (label.replace("&", "&amp;").replace("<", "&lt;")
                .replace(">", "&gt;"))
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="steelblue"/>')
        parts.append(f'<text x="{px + 5:.2f}" y="{py - 5:.2f}" '
                     f'font-size="10">{safe}</text>')
    parts.append("</svg>")
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    return csv_path, svg_path

"""Classical (Torgerson) scaling of the code vectors and string-layout checks."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class MdsEmbedding:
    coordinates: np.ndarray  # (n, dims)
    eigenvalues: np.ndarray  # (dims,), descending


def pairwise_distances(code_vectors) -> np.ndarray:
    X = np.asarray(code_vectors, dtype=float)
    diff = X[:, None, :] - X[None, :, :]
    D = np.sqrt((diff ** 2).sum(axis=2))
    # exact symmetry regardless of summation order
    return np.triu(D, 1) + np.triu(D, 1).T


def check_distance_matrix(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.array_equal(D, D.T):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diag(D) != 0) or np.any(D < 0):
        raise ValueError("distance matrix needs a zero diagonal and non-negative entries")
    return D


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit the pairs ``(p, q)``, ``p < q``, in row order until the
    off-diagonal Frobenius norm drops below ``tol * max(1, ||A||_F)``.

    Returns
    -------
    w : (n,) array
        Eigenvalues in descending order.
    V : (n, n) array
        Matching unit eigenvectors in the columns.
    """
    A = np.array(A, dtype=float)
    n = len(A)
    V = np.eye(n)
    limit = tol * max(1.0, float(np.linalg.norm(A)))

    def off(M):
        return float(np.linalg.norm(M - np.diag(np.diag(M))))

    for _ in range(max_sweeps):
        if off(A) <= limit:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        warnings.warn("Jacobi iteration hit the sweep limit before converging")

    w = np.diag(A).copy()
    order = sorted(range(n), key=lambda i: (-w[i], i))
    return w[order], V[:, order]


def classical_mds(dist, dims: int = 2) -> MdsEmbedding:
    """Torgerson scaling: double-centre the squared distances and keep the
    leading ``dims`` eigenpairs.

    Each axis is oriented so that the first point's coordinate does not
    exceed the last point's.
    """
    D = check_distance_matrix(dist)
    n = len(D)
    if dims not in (1, 2):
        raise ValueError("dims must be 1 or 2")
    if n < dims + 1:
        raise ValueError(f"need at least {dims + 1} points for {dims} dimensions")
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (D ** 2) @ J
    B = (B + B.T) / 2.0
    w, V = jacobi_eigh(B)
    w, V = w[:dims], V[:, :dims]
    if np.any(w < 0):
        warnings.warn("negative leading eigenvalue clamped to zero (non-Euclidean distances)")
    coords = V * np.sqrt(np.maximum(w, 0.0))
    for axis in range(dims):
        if coords[0, axis] > coords[-1, axis]:
            coords[:, axis] = -coords[:, axis]
    coords = coords + 0.0  # drop negative zeros
    return MdsEmbedding(coords, w)


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _proper_cross(p1, p2, p3, p4) -> bool:
    d1, d2 = _orient(p3, p4, p1), _orient(p3, p4, p2)
    d3, d4 = _orient(p1, p2, p3), _orient(p1, p2, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


def _planar(embedding) -> np.ndarray:
    P = np.asarray(getattr(embedding, "coordinates", embedding), dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[1] == 1:
        P = np.column_stack([P[:, 0], np.zeros(len(P))])
    return P[:, :2]


def crossing_count(embedding, order: Sequence[int]) -> int:
    """Number of properly intersecting pairs of non-adjacent string segments."""
    P = _planar(embedding)
    pts = [P[i] for i in order]
    segs = [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    count = 0
    for i in range(len(segs)):
        for j in range(i + 2, len(segs)):
            if _proper_cross(*segs[i], *segs[j]):
                count += 1
    return count


def _average_ranks(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    rx, ry = _average_ranks(x), _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx ** 2).sum() * (ry ** 2).sum())
    return float((rx * ry).sum() / denom) if denom else 0.0


def ordering_monotone(embedding, order: Sequence[int]) -> Tuple[bool, float]:
    """Strict monotonicity of the first axis along ``order`` plus Spearman's rho."""
    first = _planar(embedding)[list(order), 0]
    steps = np.diff(first)
    monotone = bool(np.all(steps > 0) or np.all(steps < 0))
    return monotone, spearman(np.arange(len(first)), first)


def write_embedding(embedding: MdsEmbedding, units: Sequence[int], path) -> None:
    P = _planar(embedding)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "x", "y"])
        for u, (x, y) in zip(units, P):
            w.writerow([u, repr(float(x)), repr(float(y))])

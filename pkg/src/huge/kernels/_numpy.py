"""Pure-numpy implementations of the hot kernels.

These are the reference semantics for the numba twins in ``_numba``;
``kernels/__init__`` picks one backend at import time. Every function takes
C-contiguous float64 / int64 arrays and is deterministic for fixed inputs.
"""
import numpy as np

from huge.numerics import sigmoid, softplus_neg


def _row_sum_seq(M):
    # sequential left-to-right row sums (cumsum is order-pinned), so results
    # are bitwise equal to the scalar loops in _numba and heterophily
    if M.shape[1] == 0:
        return np.zeros(M.shape[0], dtype=np.float64)
    return np.cumsum(M, axis=1)[:, -1]


def halo_edge_values(X, src, dst, eps):
    """Heterophily metric per edge slot: rescale both endpoints by the
    absolute attribute gap, then a normalized distance between the
    rescaled vectors."""
    A = X[src]
    B = X[dst]
    W = np.abs(A - B)
    XA = W * A
    XB = W * B
    D = XA - XB
    num = _row_sum_seq(D * D)
    den = _row_sum_seq(XA * XA + XB * XB)
    return np.sqrt(num / (den + eps))


def euclidean_edge_values(X, src, dst):
    D = X[src] - X[dst]
    return np.sqrt(_row_sum_seq(D * D))


def cosine_edge_values(X, src, dst, eps):
    """Negated cosine similarity per edge slot, in [-1, 1]."""
    A = X[src]
    B = X[dst]
    na = np.maximum(np.sqrt(_row_sum_seq(A * A)), eps)
    nb = np.maximum(np.sqrt(_row_sum_seq(B * B)), eps)
    c = _row_sum_seq(A * B) / (na * nb)
    return -np.clip(c, -1.0, 1.0)


def ahr_edge_values(X, src, dst):
    """Fraction of disagreeing attributes per edge slot."""
    return np.mean(X[src] != X[dst], axis=1)


def segment_mean(values, offsets):
    """Mean of ``values`` within each CSR row; empty rows give 0."""
    counts = np.diff(offsets)
    n = counts.shape[0]
    rows = np.repeat(np.arange(n, dtype=np.int64), counts)
    sums = np.bincount(rows, weights=values, minlength=n)
    return np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)


def self_plus_neighbor_sum(E, offsets, cols):
    """Row i of the result is E[i] plus the sum of E over row i's columns."""
    n = offsets.shape[0] - 1
    counts = np.diff(offsets)
    rows = np.repeat(np.arange(n, dtype=np.int64), counts)
    out = E.copy()
    np.add.at(out, rows, E[cols])
    return out


def slot_cos(Ehat, src, dst):
    """Dot products of (already normalized) embedding rows per slot."""
    return np.einsum("ij,ij->i", Ehat[src], Ehat[dst])


def scatter_pair_grads(dEhat, Ehat, src, dst, w):
    """In place: dEhat[src[t]] += w[t]*Ehat[dst[t]] and symmetrically.

    Gradient of a weighted sum of pairwise dots w.r.t. the rows, with the
    normalization chain applied by the caller afterwards.
    """
    np.add.at(dEhat, src, w[:, None] * Ehat[dst])
    np.add.at(dEhat, dst, w[:, None] * Ehat[src])


def rank_plus_value_grad(s, h, chunk=1024):
    """Pairwise ranking loss over all ordered pairs and its gradient in s.

    value = mean over (i, j) of 1[h_j > h_i]*(s_i - s_j) + softplus_neg(s_i - s_j)
    grad_p = mean over r of cmp(h_r, h_p) + 2*sigmoid(s_p - s_r) - 1
    where cmp is +1 / -1 / 0 for h_r greater / smaller / tied.

    Chunked over rows to bound the n^2 intermediates.
    """
    n = s.shape[0]
    val = 0.0
    grad = np.empty(n, dtype=np.float64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        X = s[lo:hi, None] - s[None, :]
        gt = h[None, :] > h[lo:hi, None]
        lt = h[None, :] < h[lo:hi, None]
        val += np.sum(np.where(gt, X, 0.0)) + np.sum(softplus_neg(X))
        grad[lo:hi] = np.sum(
            gt.astype(np.float64) - lt.astype(np.float64) + 2.0 * sigmoid(X) - 1.0,
            axis=1,
        )
    inv = 1.0 / (n * n)
    return val * inv, grad * inv
